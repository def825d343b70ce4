#include <doctest.h>

#include <vector>

#include "arithlab/kernels.hpp"
#include "arithlab/rng.hpp"

using namespace arithlab;

namespace {

std::vector<float> random_vec(size_t n, Rng& rng) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.gauss());
    return v;
}

}  // namespace

TEST_SUITE_BEGIN("kernels");

TEST_CASE("parallel kernels match the serial reference bitwise") {
    Rng rng(101);
    const int R = 37, K = 29, O = 23;
    const auto x = random_vec(static_cast<size_t>(R) * K, rng);
    const auto w = random_vec(static_cast<size_t>(O) * K, rng);
    const auto bias = random_vec(static_cast<size_t>(O), rng);
    const auto dy = random_vec(static_cast<size_t>(R) * O, rng);

    // the OpenMP dot kernel vectorizes its reduction, so compare numerically
    std::vector<float> y1(static_cast<size_t>(R) * O), y2 = y1;
    kernels::serial::matmul_xwt(x.data(), w.data(), bias.data(), y1.data(), R, K, O);
    kernels::omp::matmul_xwt(x.data(), w.data(), bias.data(), y2.data(), R, K, O);
    for (size_t i = 0; i < y1.size(); ++i)
        CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-5));

    std::vector<float> dx1(static_cast<size_t>(R) * K), dx2 = dx1;
    kernels::serial::matmul_xw(dy.data(), w.data(), dx1.data(), R, O, K);
    kernels::omp::matmul_xw(dy.data(), w.data(), dx2.data(), R, O, K);
    CHECK(dx1 == dx2);

    std::vector<float> dw1(static_cast<size_t>(O) * K, 0.f), dw2 = dw1;
    std::vector<float> db1(static_cast<size_t>(O), 0.f), db2 = db1;
    kernels::serial::matmul_dw(dy.data(), x.data(), dw1.data(), db1.data(), R, O, K);
    kernels::omp::matmul_dw(dy.data(), x.data(), dw2.data(), db2.data(), R, O, K);
    CHECK(dw1 == dw2);
    CHECK(db1 == db2);

    std::vector<float> s1 = dy, s2 = dy;
    kernels::serial::softmax_rows(s1.data(), R, O);
    kernels::omp::softmax_rows(s2.data(), R, O);
    CHECK(s1 == s2);

    const auto gain = random_vec(static_cast<size_t>(K), rng);
    const auto lnb = random_vec(static_cast<size_t>(K), rng);
    std::vector<float> ln1(static_cast<size_t>(R) * K), ln2 = ln1;
    std::vector<float> mean1(static_cast<size_t>(R)), mean2 = mean1, rstd1 = mean1, rstd2 = mean1;
    kernels::serial::layernorm_fwd(x.data(), gain.data(), lnb.data(), ln1.data(), mean1.data(),
                                   rstd1.data(), R, K, 1e-5f);
    kernels::omp::layernorm_fwd(x.data(), gain.data(), lnb.data(), ln2.data(), mean2.data(),
                                rstd2.data(), R, K, 1e-5f);
    CHECK(ln1 == ln2);
    CHECK(mean1 == mean2);
    CHECK(rstd1 == rstd2);
}

TEST_CASE("matmul agrees with a plain triple loop in double") {
    Rng rng(103);
    const int R = 11, K = 17, O = 13;
    const auto x = random_vec(static_cast<size_t>(R) * K, rng);
    const auto w = random_vec(static_cast<size_t>(O) * K, rng);
    std::vector<float> y(static_cast<size_t>(R) * O);
    kernels::matmul_xwt(x.data(), w.data(), static_cast<const float*>(nullptr), y.data(), R, K, O);
    for (int r = 0; r < R; ++r) {
        for (int o = 0; o < O; ++o) {
            double acc = 0.0;
            for (int k = 0; k < K; ++k)
                acc += static_cast<double>(x[static_cast<size_t>(r) * K + k]) *
                       w[static_cast<size_t>(o) * K + k];
            CHECK(y[static_cast<size_t>(r) * O + o] == doctest::Approx(acc).epsilon(1e-4));
        }
    }
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(107);
    const int R = 64, C = 23;
    auto x = random_vec(static_cast<size_t>(R) * C, rng);
    kernels::softmax_rows(x.data(), R, C);
    for (int r = 0; r < R; ++r) {
        double sum = 0.0;
        for (int c = 0; c < C; ++c) sum += x[static_cast<size_t>(r) * C + c];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("gelu gradient matches central differences") {
    for (double v : {-3.0, -1.0, -0.1, 0.0, 0.3, 1.7, 4.0}) {
        const double h = 1e-6;
        const double fd =
            (kernels::serial::gelu_scalar(v + h) - kernels::serial::gelu_scalar(v - h)) / (2 * h);
        CHECK(kernels::serial::gelu_grad_scalar(v) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("layernorm backward matches central differences") {
    Rng rng(109);
    const int R = 3, C = 7;
    std::vector<double> x(static_cast<size_t>(R) * C), gain(C), bias(C), dy(static_cast<size_t>(R) * C);
    for (auto& v : x) v = rng.gauss();
    for (auto& v : gain) v = 1.0 + 0.1 * rng.gauss();
    for (auto& v : bias) v = 0.1 * rng.gauss();
    for (auto& v : dy) v = rng.gauss();

    std::vector<double> y(x.size()), mean(R), rstd(R);
    kernels::serial::layernorm_fwd(x.data(), gain.data(), bias.data(), y.data(), mean.data(),
                                   rstd.data(), R, C, 1e-5);

    std::vector<double> dx(x.size(), 0.0), dgain(C, 0.0), dbias(C, 0.0);
    kernels::serial::layernorm_bwd_input(dy.data(), x.data(), gain.data(), mean.data(), rstd.data(),
                                         dx.data(), R, C);
    kernels::serial::layernorm_bwd_params(dy.data(), x.data(), mean.data(), rstd.data(), dgain.data(),
                                          dbias.data(), R, C);

    const auto objective = [&](const std::vector<double>& xv, const std::vector<double>& gv,
                               const std::vector<double>& bv) {
        std::vector<double> yy(xv.size()), mm(R), rr(R);
        kernels::serial::layernorm_fwd(xv.data(), gv.data(), bv.data(), yy.data(), mm.data(), rr.data(),
                                       R, C, 1e-5);
        double acc = 0.0;
        for (size_t i = 0; i < yy.size(); ++i) acc += yy[i] * dy[i];
        return acc;
    };

    const double h = 1e-6;
    for (size_t i = 0; i < x.size(); i += 5) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double fd = (objective(xp, gain, bias) - objective(xm, gain, bias)) / (2 * h);
        CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-5));
    }
    for (int c = 0; c < C; ++c) {
        auto gp = gain, gm = gain;
        gp[static_cast<size_t>(c)] += h;
        gm[static_cast<size_t>(c)] -= h;
        const double fd = (objective(x, gp, bias) - objective(x, gm, bias)) / (2 * h);
        CHECK(dgain[static_cast<size_t>(c)] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("adamw with zero gradients and zero decay is a no-op") {
    Rng rng(113);
    auto p = random_vec(100, rng);
    const auto before = p;
    std::vector<float> g(100, 0.f), m(100, 0.f), v(100, 0.f);
    kernels::adamw_update(p.data(), g.data(), m.data(), v.data(), p.size(), 1e-3f, 0.9f, 0.999f, 1e-8f,
                          0.0f, 1.0f, 1);
    CHECK(p == before);
}

TEST_SUITE_END();
