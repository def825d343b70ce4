#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "arithlab/report.hpp"
#include "arithlab/rng.hpp"
#include "oracle_helpers.hpp"

using namespace arithlab;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_SUITE_BEGIN("report");

TEST_CASE("uniform grids use the palette endpoints") {
    GridFile grid;
    grid.m1_values = {1, 2};
    grid.m2_values = {1, 2};
    grid.rates = {1.0, 1.0, 1.0, 1.0};
    const std::string path = "heatmap_test.svg";
    write_heatmap_svg(path, grid, "seed=1 config_hash=2");
    std::string svg = slurp(path);
    CHECK(svg.find("rgb(224,224,255)") != std::string::npos);  // blue endpoint
    CHECK(svg.find("rgb(255,224,224)") == std::string::npos);
    CHECK(svg.find(">1.00<") != std::string::npos);
    CHECK(svg.find("seed=1") != std::string::npos);

    grid.rates = {0.0, 0.0, 0.0, 0.0};
    write_heatmap_svg(path, grid, "seed=1 config_hash=2");
    svg = slurp(path);
    CHECK(svg.find("rgb(255,224,224)") != std::string::npos);  // red endpoint
    CHECK(svg.find(">0.00<") != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("random grids render well-formed XML") {
    Rng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        GridFile grid;
        const int rows = 1 + static_cast<int>(rng.below(5));
        const int cols = 1 + static_cast<int>(rng.below(5));
        for (int i = 0; i < rows; ++i) grid.m1_values.push_back(i + 1);
        for (int j = 0; j < cols; ++j) grid.m2_values.push_back(j + 1);
        for (int k = 0; k < rows * cols; ++k) grid.rates.push_back(rng.real01());
        const std::string path = "heatmap_xml_test.svg";
        write_heatmap_svg(path, grid, "seed=0 config_hash=0");
        std::string err;
        const bool ok = oracle::xml_well_formed(slurp(path), &err);
        INFO(err);
        CHECK(ok);
        std::filesystem::remove(path);
    }
}

TEST_CASE("dimension mismatches are rejected") {
    GridFile grid;
    grid.m1_values = {1};
    grid.m2_values = {1, 2};
    grid.rates = {0.5};  // wrong size
    CHECK_THROWS_AS(write_heatmap_svg("bad.svg", grid, ""), std::invalid_argument);
}

TEST_SUITE_END();
