#include "arithlab/kernels.hpp"

#include <omp.h>

#include <algorithm>

namespace arithlab::kernels {

namespace {
int g_threads = 0;  // 0 = uninitialized, resolve lazily from OpenMP
}

void set_threads(int n) { g_threads = n > 0 ? n : 0; }

int threads() {
    if (g_threads == 0) g_threads = std::max(1, omp_get_max_threads());
    return g_threads;
}

namespace omp {

template <typename T>
void matmul_xwt(const T* x, const T* w, const T* bias, T* y, int R, int K, int O) {
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int r = 0; r < R; ++r) {
        const T* xr = x + static_cast<size_t>(r) * K;
        T* yr = y + static_cast<size_t>(r) * O;
        int o = 0;
        for (; o + 4 <= O; o += 4) {
            const T* w0 = w + static_cast<size_t>(o) * K;
            const T* w1 = w0 + K;
            const T* w2 = w1 + K;
            const T* w3 = w2 + K;
            T a0 = bias ? bias[o] : T(0);
            T a1 = bias ? bias[o + 1] : T(0);
            T a2 = bias ? bias[o + 2] : T(0);
            T a3 = bias ? bias[o + 3] : T(0);
#pragma omp simd reduction(+ : a0, a1, a2, a3)
            for (int k = 0; k < K; ++k) {
                const T xv = xr[k];
                a0 += xv * w0[k];
                a1 += xv * w1[k];
                a2 += xv * w2[k];
                a3 += xv * w3[k];
            }
            yr[o] = a0;
            yr[o + 1] = a1;
            yr[o + 2] = a2;
            yr[o + 3] = a3;
        }
        for (; o < O; ++o) {
            const T* wo = w + static_cast<size_t>(o) * K;
            T acc = bias ? bias[o] : T(0);
#pragma omp simd reduction(+ : acc)
            for (int k = 0; k < K; ++k) acc += xr[k] * wo[k];
            yr[o] = acc;
        }
    }
}

template <typename T>
void matmul_xw(const T* dy, const T* w, T* dx, int R, int O, int K) {
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int r = 0; r < R; ++r) {
        const T* dyr = dy + static_cast<size_t>(r) * O;
        T* dxr = dx + static_cast<size_t>(r) * K;
        for (int k = 0; k < K; ++k) dxr[k] = T(0);
        for (int o = 0; o < O; ++o) {
            const T g = dyr[o];
            if (g == T(0)) continue;
            const T* wo = w + static_cast<size_t>(o) * K;
#pragma omp simd
            for (int k = 0; k < K; ++k) dxr[k] += g * wo[k];
        }
    }
}

template <typename T>
void matmul_dw(const T* dy, const T* x, T* dw, T* db, int R, int O, int K) {
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int o = 0; o < O; ++o) {
        T* dwo = dw + static_cast<size_t>(o) * K;
        T acc_b = T(0);
        for (int r = 0; r < R; ++r) {
            const T g = dy[static_cast<size_t>(r) * O + o];
            acc_b += g;
            if (g == T(0)) continue;
            const T* xr = x + static_cast<size_t>(r) * K;
#pragma omp simd
            for (int k = 0; k < K; ++k) dwo[k] += g * xr[k];
        }
        if (db) db[o] += acc_b;
    }
}

template <typename T>
void softmax_rows(T* x, int R, int C) {
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int r = 0; r < R; ++r) serial::softmax_rows(x + static_cast<size_t>(r) * C, 1, C);
}

template <typename T>
void layernorm_fwd(const T* x, const T* gain, const T* bias, T* y, T* mean, T* rstd, int R, int C,
                   T eps) {
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int r = 0; r < R; ++r) {
        const size_t off = static_cast<size_t>(r) * C;
        serial::layernorm_fwd(x + off, gain, bias, y + off, mean + r, rstd + r, 1, C, eps);
    }
}

template <typename T>
void layernorm_bwd_input(const T* dy, const T* x, const T* gain, const T* mean, const T* rstd, T* dx,
                         int R, int C) {
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int r = 0; r < R; ++r) {
        const size_t off = static_cast<size_t>(r) * C;
        serial::layernorm_bwd_input(dy + off, x + off, gain, mean + r, rstd + r, dx + off, 1, C);
    }
}

template <typename T>
void layernorm_bwd_params(const T* dy, const T* x, const T* mean, const T* rstd, T* dgain, T* dbias,
                          int R, int C) {
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int c = 0; c < C; ++c) {
        T dg = T(0), db = T(0);
        for (int r = 0; r < R; ++r) {
            const T g = dy[static_cast<size_t>(r) * C + c];
            dg += g * (x[static_cast<size_t>(r) * C + c] - mean[r]) * rstd[r];
            db += g;
        }
        dgain[c] += dg;
        dbias[c] += db;
    }
}

template <typename T>
void gelu_fwd(const T* x, T* y, size_t n) {
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) y[i] = serial::gelu_scalar(x[i]);
}

template <typename T>
void gelu_bwd(const T* x, const T* dy, T* dx, size_t n) {
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) dx[i] = dy[i] * serial::gelu_grad_scalar(x[i]);
}

template <typename T>
void add_inplace(T* a, const T* b, size_t n) {
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) a[i] += b[i];
}

template <typename T>
void adamw_update(T* p, const T* g, T* m, T* v, size_t n, T lr, T beta1, T beta2, T eps, T decay,
                  T scale, int step) {
    const T bc1 = T(1) - std::pow(beta1, T(step));
    const T bc2 = T(1) - std::pow(beta2, T(step));
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
        const T gi = g[i] * scale;
        m[i] = beta1 * m[i] + (T(1) - beta1) * gi;
        v[i] = beta2 * v[i] + (T(1) - beta2) * gi * gi;
        const T mhat = m[i] / bc1;
        const T vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps) + decay * p[i];
    }
}

#define ARITHLAB_INSTANTIATE(T)                                                                        \
    template void matmul_xwt<T>(const T*, const T*, const T*, T*, int, int, int);                      \
    template void matmul_xw<T>(const T*, const T*, T*, int, int, int);                                 \
    template void matmul_dw<T>(const T*, const T*, T*, T*, int, int, int);                             \
    template void softmax_rows<T>(T*, int, int);                                                       \
    template void layernorm_fwd<T>(const T*, const T*, const T*, T*, T*, T*, int, int, T);             \
    template void layernorm_bwd_input<T>(const T*, const T*, const T*, const T*, const T*, T*, int,    \
                                         int);                                                         \
    template void layernorm_bwd_params<T>(const T*, const T*, const T*, const T*, T*, T*, int, int);   \
    template void gelu_fwd<T>(const T*, T*, size_t);                                                   \
    template void gelu_bwd<T>(const T*, const T*, T*, size_t);                                         \
    template void add_inplace<T>(T*, const T*, size_t);                                                \
    template void adamw_update<T>(T*, const T*, T*, T*, size_t, T, T, T, T, T, T, int);

ARITHLAB_INSTANTIATE(float)
ARITHLAB_INSTANTIATE(double)

#undef ARITHLAB_INSTANTIATE

}  // namespace omp

}  // namespace arithlab::kernels
