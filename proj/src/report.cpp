#include "arithlab/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace arithlab {

namespace {

// Accuracy 0 -> rgb(255,224,224), accuracy 1 -> rgb(224,224,255), linear.
void cell_color(double a, int& r, int& g, int& b) {
    a = std::clamp(a, 0.0, 1.0);
    r = static_cast<int>(255.0 - 31.0 * a + 0.5);
    g = 224;
    b = static_cast<int>(224.0 + 31.0 * a + 0.5);
}

}  // namespace

void write_heatmap_svg(const std::string& path, const GridFile& grid, const std::string& provenance) {
    const int rows = static_cast<int>(grid.m1_values.size());
    const int cols = static_cast<int>(grid.m2_values.size());
    if (rows == 0 || cols == 0 || grid.rates.size() != static_cast<size_t>(rows) * cols)
        throw std::invalid_argument("write_heatmap_svg: grid dimensions do not match rates");

    const int cell_w = 56, cell_h = 36, left = 70, top = 56;
    const int width = left + cols * cell_w + 20;
    const int height = top + rows * cell_h + 20;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_heatmap_svg: cannot write " + path);

    char buf[256];
    f << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    f << "<!-- " << provenance << " -->\n";
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                  "viewBox=\"0 0 %d %d\">\n",
                  width, height, width, height);
    f << buf;
    f << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">m2 (multiplicand "
                  "digits)</text>\n",
                  left);
    f << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"14\" y=\"%d\" font-family=\"sans-serif\" font-size=\"13\" "
                  "transform=\"rotate(-90 14 %d)\">m1 (multiplier digits)</text>\n",
                  top + rows * cell_h / 2, top + rows * cell_h / 2);
    f << buf;

    for (int j = 0; j < cols; ++j) {
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"12\" "
                      "text-anchor=\"middle\">%d</text>\n",
                      left + j * cell_w + cell_w / 2, top - 8, grid.m2_values[static_cast<size_t>(j)]);
        f << buf;
    }
    for (int i = 0; i < rows; ++i) {
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"12\" "
                      "text-anchor=\"end\">%d</text>\n",
                      left - 8, top + i * cell_h + cell_h / 2 + 4, grid.m1_values[static_cast<size_t>(i)]);
        f << buf;
    }

    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const double a = grid.rates[static_cast<size_t>(i) * cols + j];
            int r, g, b;
            cell_color(a, r, g, b);
            const int x = left + j * cell_w, y = top + i * cell_h;
            std::snprintf(buf, sizeof(buf),
                          "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"rgb(%d,%d,%d)\" "
                          "stroke=\"#888\" stroke-width=\"0.5\"/>\n",
                          x, y, cell_w, cell_h, r, g, b);
            f << buf;
            std::snprintf(buf, sizeof(buf),
                          "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"12\" "
                          "text-anchor=\"middle\">%.2f</text>\n",
                          x + cell_w / 2, y + cell_h / 2 + 4, a);
            f << buf;
        }
    }
    f << "</svg>\n";
    if (!f) throw std::runtime_error("write_heatmap_svg: I/O failure on " + path);
}

}  // namespace arithlab
