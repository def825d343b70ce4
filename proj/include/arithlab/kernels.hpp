#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace arithlab::kernels {

// Worker threads used by the parallel kernels. 1 selects the serial
// reference path. Parallel kernels assign each output element to exactly one
// thread and keep per-element reduction order identical to the serial
// implementation, so results do not depend on the thread count; the
// documented determinism contract nevertheless only covers threads == 1.
void set_threads(int n);
int threads();

// ---------------------------------------------------------------------------
// Serial reference implementations. Row-major throughout.
// ---------------------------------------------------------------------------
namespace serial {

// y[r,o] = sum_k x[r,k] * w[o,k] (+ bias[o])
template <typename T>
void matmul_xwt(const T* x, const T* w, const T* bias, T* y, int R, int K, int O) {
    for (int r = 0; r < R; ++r) {
        const T* xr = x + static_cast<size_t>(r) * K;
        T* yr = y + static_cast<size_t>(r) * O;
        for (int o = 0; o < O; ++o) {
            const T* wo = w + static_cast<size_t>(o) * K;
            T acc = bias ? bias[o] : T(0);
            for (int k = 0; k < K; ++k) acc += xr[k] * wo[k];
            yr[o] = acc;
        }
    }
}

// dx[r,k] = sum_o dy[r,o] * w[o,k]
template <typename T>
void matmul_xw(const T* dy, const T* w, T* dx, int R, int O, int K) {
    for (int r = 0; r < R; ++r) {
        const T* dyr = dy + static_cast<size_t>(r) * O;
        T* dxr = dx + static_cast<size_t>(r) * K;
        for (int k = 0; k < K; ++k) dxr[k] = T(0);
        for (int o = 0; o < O; ++o) {
            const T g = dyr[o];
            if (g == T(0)) continue;
            const T* wo = w + static_cast<size_t>(o) * K;
            for (int k = 0; k < K; ++k) dxr[k] += g * wo[k];
        }
    }
}

// dw[o,k] += sum_r dy[r,o] * x[r,k]; db[o] += sum_r dy[r,o]
template <typename T>
void matmul_dw(const T* dy, const T* x, T* dw, T* db, int R, int O, int K) {
    for (int o = 0; o < O; ++o) {
        T* dwo = dw + static_cast<size_t>(o) * K;
        T acc_b = T(0);
        for (int r = 0; r < R; ++r) {
            const T g = dy[static_cast<size_t>(r) * O + o];
            acc_b += g;
            if (g == T(0)) continue;
            const T* xr = x + static_cast<size_t>(r) * K;
            for (int k = 0; k < K; ++k) dwo[k] += g * xr[k];
        }
        if (db) db[o] += acc_b;
    }
}

// In-place row softmax with max subtraction.
template <typename T>
void softmax_rows(T* x, int R, int C) {
    for (int r = 0; r < R; ++r) {
        T* row = x + static_cast<size_t>(r) * C;
        T mx = row[0];
        for (int c = 1; c < C; ++c) mx = row[c] > mx ? row[c] : mx;
        T sum = T(0);
        for (int c = 0; c < C; ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
        }
        const T inv = T(1) / sum;
        for (int c = 0; c < C; ++c) row[c] *= inv;
    }
}

template <typename T>
void layernorm_fwd(const T* x, const T* gain, const T* bias, T* y, T* mean, T* rstd, int R, int C,
                   T eps) {
    for (int r = 0; r < R; ++r) {
        const T* xr = x + static_cast<size_t>(r) * C;
        T* yr = y + static_cast<size_t>(r) * C;
        T m = T(0);
        for (int c = 0; c < C; ++c) m += xr[c];
        m /= T(C);
        T v = T(0);
        for (int c = 0; c < C; ++c) {
            const T d = xr[c] - m;
            v += d * d;
        }
        v /= T(C);
        const T rs = T(1) / std::sqrt(v + eps);
        for (int c = 0; c < C; ++c) yr[c] = (xr[c] - m) * rs * gain[c] + bias[c];
        mean[r] = m;
        rstd[r] = rs;
    }
}

// dx[r,:] += layernorm backward; parameter gradients accumulated serially by
// the caller (dgain/dbias) to keep reduction order fixed.
template <typename T>
void layernorm_bwd_input(const T* dy, const T* x, const T* gain, const T* mean, const T* rstd, T* dx,
                         int R, int C) {
    for (int r = 0; r < R; ++r) {
        const T* dyr = dy + static_cast<size_t>(r) * C;
        const T* xr = x + static_cast<size_t>(r) * C;
        T* dxr = dx + static_cast<size_t>(r) * C;
        const T m = mean[r], rs = rstd[r];
        T sum_g = T(0), sum_gx = T(0);
        for (int c = 0; c < C; ++c) {
            const T g = dyr[c] * gain[c];
            sum_g += g;
            sum_gx += g * (xr[c] - m) * rs;
        }
        sum_g /= T(C);
        sum_gx /= T(C);
        for (int c = 0; c < C; ++c) {
            const T g = dyr[c] * gain[c];
            const T xhat = (xr[c] - m) * rs;
            dxr[c] += (g - sum_g - xhat * sum_gx) * rs;
        }
    }
}

template <typename T>
void layernorm_bwd_params(const T* dy, const T* x, const T* mean, const T* rstd, T* dgain, T* dbias,
                          int R, int C) {
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

// tanh-approximation GELU, the GPT-2 nonlinearity.
template <typename T>
inline T gelu_scalar(T x) {
    const T k = T(0.7978845608028654);  // sqrt(2/pi)
    const T inner = k * (x + T(0.044715) * x * x * x);
    return T(0.5) * x * (T(1) + std::tanh(inner));
}

template <typename T>
inline T gelu_grad_scalar(T x) {
    const T k = T(0.7978845608028654);
    const T x3 = x * x * x;
    const T inner = k * (x + T(0.044715) * x3);
    const T th = std::tanh(inner);
    const T sech2 = T(1) - th * th;
    return T(0.5) * (T(1) + th) + T(0.5) * x * sech2 * k * (T(1) + T(3) * T(0.044715) * x * x);
}

template <typename T>
void gelu_fwd(const T* x, T* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = gelu_scalar(x[i]);
}

template <typename T>
void gelu_bwd(const T* x, const T* dy, T* dx, size_t n) {
    for (size_t i = 0; i < n; ++i) dx[i] = dy[i] * gelu_grad_scalar(x[i]);
}

template <typename T>
void add_inplace(T* a, const T* b, size_t n) {
    for (size_t i = 0; i < n; ++i) a[i] += b[i];
}

// Decoupled weight decay step with bias-corrected moments. `decay` is already
// lr*wd (0 for undecayed tensors); `scale` rescales gradients (grad clip).
template <typename T>
void adamw_update(T* p, const T* g, T* m, T* v, size_t n, T lr, T beta1, T beta2, T eps, T decay,
                  T scale, int step) {
    const T bc1 = T(1) - std::pow(beta1, T(step));
    const T bc2 = T(1) - std::pow(beta2, T(step));
    for (size_t i = 0; i < n; ++i) {
        const T gi = g[i] * scale;
        m[i] = beta1 * m[i] + (T(1) - beta1) * gi;
        v[i] = beta2 * v[i] + (T(1) - beta2) * gi * gi;
        const T mhat = m[i] / bc1;
        const T vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps) + decay * p[i];
    }
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP kernels. Each output element is owned by one thread; per-element
// reduction order matches the serial reference.
// ---------------------------------------------------------------------------
namespace omp {

template <typename T>
void matmul_xwt(const T* x, const T* w, const T* bias, T* y, int R, int K, int O);
template <typename T>
void matmul_xw(const T* dy, const T* w, T* dx, int R, int O, int K);
template <typename T>
void matmul_dw(const T* dy, const T* x, T* dw, T* db, int R, int O, int K);
template <typename T>
void softmax_rows(T* x, int R, int C);
template <typename T>
void layernorm_fwd(const T* x, const T* gain, const T* bias, T* y, T* mean, T* rstd, int R, int C, T eps);
template <typename T>
void layernorm_bwd_input(const T* dy, const T* x, const T* gain, const T* mean, const T* rstd, T* dx,
                         int R, int C);
template <typename T>
void layernorm_bwd_params(const T* dy, const T* x, const T* mean, const T* rstd, T* dgain, T* dbias,
                          int R, int C);
template <typename T>
void gelu_fwd(const T* x, T* y, size_t n);
template <typename T>
void gelu_bwd(const T* x, const T* dy, T* dx, size_t n);
template <typename T>
void add_inplace(T* a, const T* b, size_t n);
template <typename T>
void adamw_update(T* p, const T* g, T* m, T* v, size_t n, T lr, T beta1, T beta2, T eps, T decay,
                  T scale, int step);

}  // namespace omp

// ---------------------------------------------------------------------------
// Dispatchers.
// ---------------------------------------------------------------------------

template <typename T>
void matmul_xwt(const T* x, const T* w, const T* bias, T* y, int R, int K, int O) {
    if (threads() == 1) serial::matmul_xwt(x, w, bias, y, R, K, O);
    else omp::matmul_xwt(x, w, bias, y, R, K, O);
}

template <typename T>
void matmul_xw(const T* dy, const T* w, T* dx, int R, int O, int K) {
    if (threads() == 1) serial::matmul_xw(dy, w, dx, R, O, K);
    else omp::matmul_xw(dy, w, dx, R, O, K);
}

template <typename T>
void matmul_dw(const T* dy, const T* x, T* dw, T* db, int R, int O, int K) {
    if (threads() == 1) serial::matmul_dw(dy, x, dw, db, R, O, K);
    else omp::matmul_dw(dy, x, dw, db, R, O, K);
}

template <typename T>
void softmax_rows(T* x, int R, int C) {
    if (threads() == 1) serial::softmax_rows(x, R, C);
    else omp::softmax_rows(x, R, C);
}

template <typename T>
void layernorm_fwd(const T* x, const T* gain, const T* bias, T* y, T* mean, T* rstd, int R, int C,
                   T eps) {
    if (threads() == 1) serial::layernorm_fwd(x, gain, bias, y, mean, rstd, R, C, eps);
    else omp::layernorm_fwd(x, gain, bias, y, mean, rstd, R, C, eps);
}

template <typename T>
void layernorm_bwd_input(const T* dy, const T* x, const T* gain, const T* mean, const T* rstd, T* dx,
                         int R, int C) {
    if (threads() == 1) serial::layernorm_bwd_input(dy, x, gain, mean, rstd, dx, R, C);
    else omp::layernorm_bwd_input(dy, x, gain, mean, rstd, dx, R, C);
}

template <typename T>
void layernorm_bwd_params(const T* dy, const T* x, const T* mean, const T* rstd, T* dgain, T* dbias,
                          int R, int C) {
    if (threads() == 1) serial::layernorm_bwd_params(dy, x, mean, rstd, dgain, dbias, R, C);
    else omp::layernorm_bwd_params(dy, x, mean, rstd, dgain, dbias, R, C);
}

template <typename T>
void gelu_fwd(const T* x, T* y, size_t n) {
    if (threads() == 1) serial::gelu_fwd(x, y, n);
    else omp::gelu_fwd(x, y, n);
}

template <typename T>
void gelu_bwd(const T* x, const T* dy, T* dx, size_t n) {
    if (threads() == 1) serial::gelu_bwd(x, dy, dx, n);
    else omp::gelu_bwd(x, dy, dx, n);
}

template <typename T>
void add_inplace(T* a, const T* b, size_t n) {
    if (threads() == 1) serial::add_inplace(a, b, n);
    else omp::add_inplace(a, b, n);
}

template <typename T>
void adamw_update(T* p, const T* g, T* m, T* v, size_t n, T lr, T beta1, T beta2, T eps, T decay,
                  T scale, int step) {
    if (threads() == 1) serial::adamw_update(p, g, m, v, n, lr, beta1, beta2, eps, decay, scale, step);
    else omp::adamw_update(p, g, m, v, n, lr, beta1, beta2, eps, decay, scale, step);
}

}  // namespace arithlab::kernels
