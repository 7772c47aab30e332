#include "devrec/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace devrec::kernels {

namespace {
Backend g_backend = Backend::OpenMP;
}

Backend backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

namespace serial {

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        std::fill(ci, ci + n, 0.0);
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void matmul_at_b(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
    // c[k x n], a[m x k], b[m x n]
    for (std::size_t i = 0; i < k; ++i) {
        double* ci = c + i * n;
        std::fill(ci, ci + n, 0.0);
        for (std::size_t r = 0; r < m; ++r) {
            const double av = a[r * k + i];
            const double* br = b + r * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * br[j];
        }
    }
}

void matmul_a_bt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k) {
    // c[m x k], a[m x n], b[k x n]
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * n;
        double* ci = c + i * k;
        for (std::size_t j = 0; j < k; ++j) {
            const double* bj = b + j * n;
            double acc = 0.0;
            for (std::size_t p = 0; p < n; ++p) acc += ai[p] * bj[p];
            ci[j] = acc;
        }
    }
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void scale(const double* a, double s, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_bias_rows(const double* a, const double* bias, double* out, std::size_t rows,
                   std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* ai = a + i * cols;
        double* oi = out + i * cols;
        for (std::size_t j = 0; j < cols; ++j) oi[j] = ai[j] + bias[j];
    }
}

void relu(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_backward(const double* a, const double* grad_out, double* grad_in, std::size_t n) {
    // subgradient 0 at the kink
    for (std::size_t i = 0; i < n; ++i) grad_in[i] = a[i] > 0.0 ? grad_out[i] : 0.0;
}

void tanh(const double* a, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(a[i]);
}

void tanh_backward(const double* y, const double* grad_out, double* grad_in, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) grad_in[i] = grad_out[i] * (1.0 - y[i] * y[i]);
}

void softmax_rows(const double* a, double* out, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* ai = a + i * cols;
        double* oi = out + i * cols;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cols; ++j) mx = std::max(mx, ai[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            oi[j] = std::exp(ai[j] - mx);
            sum += oi[j];
        }
        for (std::size_t j = 0; j < cols; ++j) oi[j] /= sum;
    }
}

void softmax_rows_backward(const double* y, const double* grad_out, double* grad_in,
                           std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* yi = y + i * cols;
        const double* gi = grad_out + i * cols;
        double dot = 0.0;
        for (std::size_t j = 0; j < cols; ++j) dot += yi[j] * gi[j];
        double* out = grad_in + i * cols;
        for (std::size_t j = 0; j < cols; ++j) out[j] = yi[j] * (gi[j] - dot);
    }
}

void segment_mean(const double* a, const std::uint32_t* offsets, std::size_t segments,
                  double* out, std::size_t cols) {
    for (std::size_t s = 0; s < segments; ++s) {
        const std::uint32_t lo = offsets[s], hi = offsets[s + 1];
        double* os = out + s * cols;
        std::fill(os, os + cols, 0.0);
        for (std::uint32_t r = lo; r < hi; ++r) {
            const double* ar = a + static_cast<std::size_t>(r) * cols;
            for (std::size_t j = 0; j < cols; ++j) os[j] += ar[j];
        }
        if (hi > lo) {
            const double inv = 1.0 / static_cast<double>(hi - lo);
            for (std::size_t j = 0; j < cols; ++j) os[j] *= inv;
        }
    }
}

void segment_mean_backward(const double* grad_out, const std::uint32_t* offsets,
                           std::size_t segments, double* grad_in, std::size_t cols) {
    for (std::size_t s = 0; s < segments; ++s) {
        const std::uint32_t lo = offsets[s], hi = offsets[s + 1];
        if (hi == lo) continue;
        const double inv = 1.0 / static_cast<double>(hi - lo);
        const double* gs = grad_out + s * cols;
        for (std::uint32_t r = lo; r < hi; ++r) {
            double* gr = grad_in + static_cast<std::size_t>(r) * cols;
            for (std::size_t j = 0; j < cols; ++j) gr[j] = gs[j] * inv;
        }
    }
}

void segment_sum(const double* a, const std::uint32_t* offsets, std::size_t segments, double* out,
                 std::size_t cols) {
    for (std::size_t s = 0; s < segments; ++s) {
        const std::uint32_t lo = offsets[s], hi = offsets[s + 1];
        double* os = out + s * cols;
        std::fill(os, os + cols, 0.0);
        for (std::uint32_t r = lo; r < hi; ++r) {
            const double* ar = a + static_cast<std::size_t>(r) * cols;
            for (std::size_t j = 0; j < cols; ++j) os[j] += ar[j];
        }
    }
}

void segment_sum_backward(const double* grad_out, const std::uint32_t* offsets,
                          std::size_t segments, double* grad_in, std::size_t cols) {
    for (std::size_t s = 0; s < segments; ++s) {
        const std::uint32_t lo = offsets[s], hi = offsets[s + 1];
        const double* gs = grad_out + s * cols;
        for (std::uint32_t r = lo; r < hi; ++r) {
            double* gr = grad_in + static_cast<std::size_t>(r) * cols;
            std::memcpy(gr, gs, cols * sizeof(double));
        }
    }
}

void segment_softmax(const double* a, const std::uint32_t* offsets, std::size_t segments,
                     double* out) {
    for (std::size_t s = 0; s < segments; ++s) {
        const std::uint32_t lo = offsets[s], hi = offsets[s + 1];
        if (hi == lo) continue;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::uint32_t r = lo; r < hi; ++r) mx = std::max(mx, a[r]);
        double sum = 0.0;
        for (std::uint32_t r = lo; r < hi; ++r) {
            out[r] = std::exp(a[r] - mx);
            sum += out[r];
        }
        for (std::uint32_t r = lo; r < hi; ++r) out[r] /= sum;
    }
}

void segment_softmax_backward(const double* y, const double* grad_out,
                              const std::uint32_t* offsets, std::size_t segments,
                              double* grad_in) {
    for (std::size_t s = 0; s < segments; ++s) {
        const std::uint32_t lo = offsets[s], hi = offsets[s + 1];
        double dot = 0.0;
        for (std::uint32_t r = lo; r < hi; ++r) dot += y[r] * grad_out[r];
        for (std::uint32_t r = lo; r < hi; ++r) grad_in[r] = y[r] * (grad_out[r] - dot);
    }
}

void gather_rows(const double* a, const std::uint32_t* idx, std::size_t n_idx, double* out,
                 std::size_t cols) {
    for (std::size_t i = 0; i < n_idx; ++i) {
        std::memcpy(out + i * cols, a + static_cast<std::size_t>(idx[i]) * cols,
                    cols * sizeof(double));
    }
}

void gather_rows_backward(const double* grad_out, const std::uint32_t* inv_offsets,
                          const std::uint32_t* inv_list, std::size_t n_src, double* grad_in,
                          std::size_t cols) {
    for (std::size_t r = 0; r < n_src; ++r) {
        double* gr = grad_in + r * cols;
        std::fill(gr, gr + cols, 0.0);
        for (std::uint32_t p = inv_offsets[r]; p < inv_offsets[r + 1]; ++p) {
            const double* go = grad_out + static_cast<std::size_t>(inv_list[p]) * cols;
            for (std::size_t j = 0; j < cols; ++j) gr[j] += go[j];
        }
    }
}

void scale_rows(const double* a, const double* s, double* out, std::size_t rows,
                std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double si = s[i];
        const double* ai = a + i * cols;
        double* oi = out + i * cols;
        for (std::size_t j = 0; j < cols; ++j) oi[j] = si * ai[j];
    }
}

void scale_rows_backward_a(const double* s, const double* grad_out, double* grad_a,
                           std::size_t rows, std::size_t cols) {
    scale_rows(grad_out, s, grad_a, rows, cols);
}

void scale_rows_backward_s(const double* a, const double* grad_out, double* grad_s,
                           std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* ai = a + i * cols;
        const double* gi = grad_out + i * cols;
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += ai[j] * gi[j];
        grad_s[i] = acc;
    }
}

void row_inner_product(const double* a, const double* b, double* out, std::size_t rows,
                       std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* ai = a + i * cols;
        const double* bi = b + i * cols;
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += ai[j] * bi[j];
        out[i] = acc;
    }
}

void apply_mask(const double* a, const double* mask, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * mask[i];
}

double sum_all(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

}  // namespace serial

namespace omp {

using I = std::int64_t;  // OpenMP index type

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
#pragma omp parallel for if (m >= kParallelRowThreshold) schedule(static)
    for (I i = 0; i < static_cast<I>(m); ++i) {
        double* ci = c + i * static_cast<I>(n);
        std::fill(ci, ci + n, 0.0);
        const double* ai = a + i * static_cast<I>(k);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void matmul_at_b(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
#pragma omp parallel for if (k >= kParallelRowThreshold) schedule(static)
    for (I i = 0; i < static_cast<I>(k); ++i) {
        double* ci = c + i * static_cast<I>(n);
        std::fill(ci, ci + n, 0.0);
        for (std::size_t r = 0; r < m; ++r) {
            const double av = a[r * k + static_cast<std::size_t>(i)];
            const double* br = b + r * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * br[j];
        }
    }
}

void matmul_a_bt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k) {
#pragma omp parallel for if (m >= kParallelRowThreshold) schedule(static)
    for (I i = 0; i < static_cast<I>(m); ++i) {
        const double* ai = a + i * static_cast<I>(n);
        double* ci = c + i * static_cast<I>(k);
        for (std::size_t j = 0; j < k; ++j) {
            const double* bj = b + j * n;
            double acc = 0.0;
            for (std::size_t p = 0; p < n; ++p) acc += ai[p] * bj[p];
            ci[j] = acc;
        }
    }
}

void add(const double* a, const double* b, double* out, std::size_t n) {
#pragma omp parallel for if (n >= kParallelRowThreshold * 32) schedule(static)
    for (I i = 0; i < static_cast<I>(n); ++i) out[i] = a[i] + b[i];
}

void scale(const double* a, double s, double* out, std::size_t n) {
#pragma omp parallel for if (n >= kParallelRowThreshold * 32) schedule(static)
    for (I i = 0; i < static_cast<I>(n); ++i) out[i] = a[i] * s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
#pragma omp parallel for if (n >= kParallelRowThreshold * 32) schedule(static)
    for (I i = 0; i < static_cast<I>(n); ++i) y[i] += alpha * x[i];
}

void add_bias_rows(const double* a, const double* bias, double* out, std::size_t rows,
                   std::size_t cols) {
#pragma omp parallel for if (rows >= kParallelRowThreshold) schedule(static)
    for (I i = 0; i < static_cast<I>(rows); ++i) {
        const double* ai = a + i * static_cast<I>(cols);
        double* oi = out + i * static_cast<I>(cols);
        for (std::size_t j = 0; j < cols; ++j) oi[j] = ai[j] + bias[j];
    }
}

void relu(const double* a, double* out, std::size_t n) {
#pragma omp parallel for if (n >= kParallelRowThreshold * 32) schedule(static)
    for (I i = 0; i < static_cast<I>(n); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_backward(const double* a, const double* grad_out, double* grad_in, std::size_t n) {
#pragma omp parallel for if (n >= kParallelRowThreshold * 32) schedule(static)
    for (I i = 0; i < static_cast<I>(n); ++i) grad_in[i] = a[i] > 0.0 ? grad_out[i] : 0.0;
}

void tanh(const double* a, double* out, std::size_t n) {
#pragma omp parallel for if (n >= kParallelRowThreshold * 8) schedule(static)
    for (I i = 0; i < static_cast<I>(n); ++i) out[i] = std::tanh(a[i]);
}

void tanh_backward(const double* y, const double* grad_out, double* grad_in, std::size_t n) {
#pragma omp parallel for if (n >= kParallelRowThreshold * 32) schedule(static)
    for (I i = 0; i < static_cast<I>(n); ++i) grad_in[i] = grad_out[i] * (1.0 - y[i] * y[i]);
}

void softmax_rows(const double* a, double* out, std::size_t rows, std::size_t cols) {
#pragma omp parallel for if (rows >= kParallelRowThreshold) schedule(static)
    for (I i = 0; i < static_cast<I>(rows); ++i) {
        serial::softmax_rows(a + i * static_cast<I>(cols), out + i * static_cast<I>(cols), 1,
                             cols);
    }
}

void softmax_rows_backward(const double* y, const double* grad_out, double* grad_in,
                           std::size_t rows, std::size_t cols) {
#pragma omp parallel for if (rows >= kParallelRowThreshold) schedule(static)
    for (I i = 0; i < static_cast<I>(rows); ++i) {
        serial::softmax_rows_backward(y + i * static_cast<I>(cols),
                                      grad_out + i * static_cast<I>(cols),
                                      grad_in + i * static_cast<I>(cols), 1, cols);
    }
}

void segment_mean(const double* a, const std::uint32_t* offsets, std::size_t segments,
                  double* out, std::size_t cols) {
#pragma omp parallel for if (segments >= kParallelRowThreshold) schedule(static)
    for (I s = 0; s < static_cast<I>(segments); ++s) {
        serial::segment_mean(a, offsets + s, 1, out + s * static_cast<I>(cols), cols);
    }
}

void segment_mean_backward(const double* grad_out, const std::uint32_t* offsets,
                           std::size_t segments, double* grad_in, std::size_t cols) {
#pragma omp parallel for if (segments >= kParallelRowThreshold) schedule(static)
    for (I s = 0; s < static_cast<I>(segments); ++s) {
        serial::segment_mean_backward(grad_out + s * static_cast<I>(cols), offsets + s, 1,
                                      grad_in, cols);
    }
}

void segment_sum(const double* a, const std::uint32_t* offsets, std::size_t segments, double* out,
                 std::size_t cols) {
#pragma omp parallel for if (segments >= kParallelRowThreshold) schedule(static)
    for (I s = 0; s < static_cast<I>(segments); ++s) {
        serial::segment_sum(a, offsets + s, 1, out + s * static_cast<I>(cols), cols);
    }
}

void segment_sum_backward(const double* grad_out, const std::uint32_t* offsets,
                          std::size_t segments, double* grad_in, std::size_t cols) {
#pragma omp parallel for if (segments >= kParallelRowThreshold) schedule(static)
    for (I s = 0; s < static_cast<I>(segments); ++s) {
        serial::segment_sum_backward(grad_out + s * static_cast<I>(cols), offsets + s, 1, grad_in,
                                     cols);
    }
}

void segment_softmax(const double* a, const std::uint32_t* offsets, std::size_t segments,
                     double* out) {
#pragma omp parallel for if (segments >= kParallelRowThreshold) schedule(static)
    for (I s = 0; s < static_cast<I>(segments); ++s) {
        serial::segment_softmax(a, offsets + s, 1, out);
    }
}

void segment_softmax_backward(const double* y, const double* grad_out,
                              const std::uint32_t* offsets, std::size_t segments,
                              double* grad_in) {
#pragma omp parallel for if (segments >= kParallelRowThreshold) schedule(static)
    for (I s = 0; s < static_cast<I>(segments); ++s) {
        serial::segment_softmax_backward(y, grad_out, offsets + s, 1, grad_in);
    }
}

void gather_rows(const double* a, const std::uint32_t* idx, std::size_t n_idx, double* out,
                 std::size_t cols) {
#pragma omp parallel for if (n_idx >= kParallelRowThreshold) schedule(static)
    for (I i = 0; i < static_cast<I>(n_idx); ++i) {
        std::memcpy(out + i * static_cast<I>(cols),
                    a + static_cast<std::size_t>(idx[i]) * cols, cols * sizeof(double));
    }
}

void gather_rows_backward(const double* grad_out, const std::uint32_t* inv_offsets,
                          const std::uint32_t* inv_list, std::size_t n_src, double* grad_in,
                          std::size_t cols) {
#pragma omp parallel for if (n_src >= kParallelRowThreshold) schedule(static)
    for (I r = 0; r < static_cast<I>(n_src); ++r) {
        double* gr = grad_in + r * static_cast<I>(cols);
        std::fill(gr, gr + cols, 0.0);
        for (std::uint32_t p = inv_offsets[r]; p < inv_offsets[r + 1]; ++p) {
            const double* go = grad_out + static_cast<std::size_t>(inv_list[p]) * cols;
            for (std::size_t j = 0; j < cols; ++j) gr[j] += go[j];
        }
    }
}

void scale_rows(const double* a, const double* s, double* out, std::size_t rows,
                std::size_t cols) {
#pragma omp parallel for if (rows >= kParallelRowThreshold) schedule(static)
    for (I i = 0; i < static_cast<I>(rows); ++i) {
        const double si = s[i];
        const double* ai = a + i * static_cast<I>(cols);
        double* oi = out + i * static_cast<I>(cols);
        for (std::size_t j = 0; j < cols; ++j) oi[j] = si * ai[j];
    }
}

void scale_rows_backward_a(const double* s, const double* grad_out, double* grad_a,
                           std::size_t rows, std::size_t cols) {
    scale_rows(grad_out, s, grad_a, rows, cols);
}

void scale_rows_backward_s(const double* a, const double* grad_out, double* grad_s,
                           std::size_t rows, std::size_t cols) {
#pragma omp parallel for if (rows >= kParallelRowThreshold) schedule(static)
    for (I i = 0; i < static_cast<I>(rows); ++i) {
        const double* ai = a + i * static_cast<I>(cols);
        const double* gi = grad_out + i * static_cast<I>(cols);
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += ai[j] * gi[j];
        grad_s[i] = acc;
    }
}

void row_inner_product(const double* a, const double* b, double* out, std::size_t rows,
                       std::size_t cols) {
#pragma omp parallel for if (rows >= kParallelRowThreshold) schedule(static)
    for (I i = 0; i < static_cast<I>(rows); ++i) {
        const double* ai = a + i * static_cast<I>(cols);
        const double* bi = b + i * static_cast<I>(cols);
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += ai[j] * bi[j];
        out[i] = acc;
    }
}

void apply_mask(const double* a, const double* mask, double* out, std::size_t n) {
#pragma omp parallel for if (n >= kParallelRowThreshold * 32) schedule(static)
    for (I i = 0; i < static_cast<I>(n); ++i) out[i] = a[i] * mask[i];
}

double sum_all(const double* a, std::size_t n) {
    // kept serial: a fixed-order scalar reduction, and never the hot path
    return serial::sum_all(a, n);
}

}  // namespace omp

#define DEVREC_DISPATCH(fn, ...)                     \
    do {                                             \
        if (g_backend == Backend::Serial)            \
            serial::fn(__VA_ARGS__);                 \
        else                                         \
            omp::fn(__VA_ARGS__);                    \
    } while (0)

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
    DEVREC_DISPATCH(matmul, a, b, c, m, k, n);
}
void matmul_at_b(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
    DEVREC_DISPATCH(matmul_at_b, a, b, c, m, k, n);
}
void matmul_a_bt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k) {
    DEVREC_DISPATCH(matmul_a_bt, a, b, c, m, n, k);
}
void add(const double* a, const double* b, double* out, std::size_t n) {
    DEVREC_DISPATCH(add, a, b, out, n);
}
void scale(const double* a, double s, double* out, std::size_t n) {
    DEVREC_DISPATCH(scale, a, s, out, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
    DEVREC_DISPATCH(axpy, alpha, x, y, n);
}
void add_bias_rows(const double* a, const double* bias, double* out, std::size_t rows,
                   std::size_t cols) {
    DEVREC_DISPATCH(add_bias_rows, a, bias, out, rows, cols);
}
void relu(const double* a, double* out, std::size_t n) { DEVREC_DISPATCH(relu, a, out, n); }
void relu_backward(const double* a, const double* grad_out, double* grad_in, std::size_t n) {
    DEVREC_DISPATCH(relu_backward, a, grad_out, grad_in, n);
}
void tanh(const double* a, double* out, std::size_t n) { DEVREC_DISPATCH(tanh, a, out, n); }
void tanh_backward(const double* y, const double* grad_out, double* grad_in, std::size_t n) {
    DEVREC_DISPATCH(tanh_backward, y, grad_out, grad_in, n);
}
void softmax_rows(const double* a, double* out, std::size_t rows, std::size_t cols) {
    DEVREC_DISPATCH(softmax_rows, a, out, rows, cols);
}
void softmax_rows_backward(const double* y, const double* grad_out, double* grad_in,
                           std::size_t rows, std::size_t cols) {
    DEVREC_DISPATCH(softmax_rows_backward, y, grad_out, grad_in, rows, cols);
}
void segment_mean(const double* a, const std::uint32_t* offsets, std::size_t segments,
                  double* out, std::size_t cols) {
    DEVREC_DISPATCH(segment_mean, a, offsets, segments, out, cols);
}
void segment_mean_backward(const double* grad_out, const std::uint32_t* offsets,
                           std::size_t segments, double* grad_in, std::size_t cols) {
    DEVREC_DISPATCH(segment_mean_backward, grad_out, offsets, segments, grad_in, cols);
}
void segment_sum(const double* a, const std::uint32_t* offsets, std::size_t segments, double* out,
                 std::size_t cols) {
    DEVREC_DISPATCH(segment_sum, a, offsets, segments, out, cols);
}
void segment_sum_backward(const double* grad_out, const std::uint32_t* offsets,
                          std::size_t segments, double* grad_in, std::size_t cols) {
    DEVREC_DISPATCH(segment_sum_backward, grad_out, offsets, segments, grad_in, cols);
}
void segment_softmax(const double* a, const std::uint32_t* offsets, std::size_t segments,
                     double* out) {
    DEVREC_DISPATCH(segment_softmax, a, offsets, segments, out);
}
void segment_softmax_backward(const double* y, const double* grad_out,
                              const std::uint32_t* offsets, std::size_t segments,
                              double* grad_in) {
    DEVREC_DISPATCH(segment_softmax_backward, y, grad_out, offsets, segments, grad_in);
}
void gather_rows(const double* a, const std::uint32_t* idx, std::size_t n_idx, double* out,
                 std::size_t cols) {
    DEVREC_DISPATCH(gather_rows, a, idx, n_idx, out, cols);
}
void gather_rows_backward(const double* grad_out, const std::uint32_t* inv_offsets,
                          const std::uint32_t* inv_list, std::size_t n_src, double* grad_in,
                          std::size_t cols) {
    DEVREC_DISPATCH(gather_rows_backward, grad_out, inv_offsets, inv_list, n_src, grad_in, cols);
}
void scale_rows(const double* a, const double* s, double* out, std::size_t rows,
                std::size_t cols) {
    DEVREC_DISPATCH(scale_rows, a, s, out, rows, cols);
}
void scale_rows_backward_a(const double* s, const double* grad_out, double* grad_a,
                           std::size_t rows, std::size_t cols) {
    DEVREC_DISPATCH(scale_rows_backward_a, s, grad_out, grad_a, rows, cols);
}
void scale_rows_backward_s(const double* a, const double* grad_out, double* grad_s,
                           std::size_t rows, std::size_t cols) {
    DEVREC_DISPATCH(scale_rows_backward_s, a, grad_out, grad_s, rows, cols);
}
void row_inner_product(const double* a, const double* b, double* out, std::size_t rows,
                       std::size_t cols) {
    DEVREC_DISPATCH(row_inner_product, a, b, out, rows, cols);
}
void apply_mask(const double* a, const double* mask, double* out, std::size_t n) {
    DEVREC_DISPATCH(apply_mask, a, mask, out, n);
}
double sum_all(const double* a, std::size_t n) {
    return g_backend == Backend::Serial ? serial::sum_all(a, n) : omp::sum_all(a, n);
}

#undef DEVREC_DISPATCH

void build_gather_inverse(std::span<const std::uint32_t> idx, std::size_t n_src,
                          std::vector<std::uint32_t>& inv_offsets,
                          std::vector<std::uint32_t>& inv_list) {
    inv_offsets.assign(n_src + 1, 0);
    for (std::uint32_t r : idx) inv_offsets[r + 1]++;
    for (std::size_t i = 1; i <= n_src; ++i) inv_offsets[i] += inv_offsets[i - 1];
    inv_list.resize(idx.size());
    std::vector<std::uint32_t> cursor(inv_offsets.begin(), inv_offsets.end() - 1);
    for (std::uint32_t i = 0; i < idx.size(); ++i) {
        inv_list[cursor[idx[i]]++] = i;
    }
}

}  // namespace devrec::kernels
