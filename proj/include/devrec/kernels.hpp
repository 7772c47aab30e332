#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

// Dense row-major kernels behind the autograd ops. Each kernel exists twice:
// a plain serial reference in kernels::serial and an OpenMP version in
// kernels::omp. The OpenMP versions parallelize only across independent
// output rows and keep the per-element accumulation order of the reference,
// so both backends produce bit-identical results at any thread count. Tests
// assert exact equality; tools/bench_kernels compares their throughput.
namespace devrec::kernels {

enum class Backend { Serial, OpenMP };

Backend backend();
void set_backend(Backend b);

// Below this many output rows the OpenMP versions stay serial; spawning a
// team costs more than the loop.
inline constexpr std::size_t kParallelRowThreshold = 64;

namespace serial {

// c[m x n] = a[m x k] * b[k x n]
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n);
// c[k x n] = a^T[k x m] * b[m x n], a stored m x k
void matmul_at_b(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n);
// c[m x k] = a[m x n] * b^T[n x k]... b stored k x n
void matmul_a_bt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k);
void add(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double s, double* out, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);  // y += alpha*x
void add_bias_rows(const double* a, const double* bias, double* out, std::size_t rows,
                   std::size_t cols);
void relu(const double* a, double* out, std::size_t n);
void relu_backward(const double* a, const double* grad_out, double* grad_in, std::size_t n);
void tanh(const double* a, double* out, std::size_t n);
void tanh_backward(const double* y, const double* grad_out, double* grad_in, std::size_t n);
void softmax_rows(const double* a, double* out, std::size_t rows, std::size_t cols);
// grad_in = (grad_out - rowdot(grad_out, y)) .* y, y = softmax output
void softmax_rows_backward(const double* y, const double* grad_out, double* grad_in,
                           std::size_t rows, std::size_t cols);
// out[s] = mean of rows a[offsets[s]..offsets[s+1])
void segment_mean(const double* a, const std::uint32_t* offsets, std::size_t segments,
                  double* out, std::size_t cols);
void segment_mean_backward(const double* grad_out, const std::uint32_t* offsets,
                           std::size_t segments, double* grad_in, std::size_t cols);
// out[s] = sum of rows in segment
void segment_sum(const double* a, const std::uint32_t* offsets, std::size_t segments, double* out,
                 std::size_t cols);
void segment_sum_backward(const double* grad_out, const std::uint32_t* offsets,
                          std::size_t segments, double* grad_in, std::size_t cols);
// per-segment softmax over a column vector a[rows x 1]
void segment_softmax(const double* a, const std::uint32_t* offsets, std::size_t segments,
                     double* out);
void segment_softmax_backward(const double* y, const double* grad_out,
                              const std::uint32_t* offsets, std::size_t segments,
                              double* grad_in);
void gather_rows(const double* a, const std::uint32_t* idx, std::size_t n_idx, double* out,
                 std::size_t cols);
// adjoint of gather: grad_in[idx[i]] += grad_out[i]. inv_offsets/inv_list map
// each source row to the gathered positions referencing it so rows can be
// accumulated independently (deterministic under OpenMP).
void gather_rows_backward(const double* grad_out, const std::uint32_t* inv_offsets,
                          const std::uint32_t* inv_list, std::size_t n_src, double* grad_in,
                          std::size_t cols);
// out[i] = s[i] * a[i], s is rows x 1
void scale_rows(const double* a, const double* s, double* out, std::size_t rows,
                std::size_t cols);
void scale_rows_backward_a(const double* s, const double* grad_out, double* grad_a,
                           std::size_t rows, std::size_t cols);
void scale_rows_backward_s(const double* a, const double* grad_out, double* grad_s,
                           std::size_t rows, std::size_t cols);
// out[i] = dot(a_row_i, b_row_i), out is rows x 1
void row_inner_product(const double* a, const double* b, double* out, std::size_t rows,
                       std::size_t cols);
void apply_mask(const double* a, const double* mask, double* out, std::size_t n);
double sum_all(const double* a, std::size_t n);

}  // namespace serial

namespace omp {

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n);
void matmul_at_b(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n);
void matmul_a_bt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k);
void add(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double s, double* out, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void add_bias_rows(const double* a, const double* bias, double* out, std::size_t rows,
                   std::size_t cols);
void relu(const double* a, double* out, std::size_t n);
void relu_backward(const double* a, const double* grad_out, double* grad_in, std::size_t n);
void tanh(const double* a, double* out, std::size_t n);
void tanh_backward(const double* y, const double* grad_out, double* grad_in, std::size_t n);
void softmax_rows(const double* a, double* out, std::size_t rows, std::size_t cols);
void softmax_rows_backward(const double* y, const double* grad_out, double* grad_in,
                           std::size_t rows, std::size_t cols);
void segment_mean(const double* a, const std::uint32_t* offsets, std::size_t segments,
                  double* out, std::size_t cols);
void segment_mean_backward(const double* grad_out, const std::uint32_t* offsets,
                           std::size_t segments, double* grad_in, std::size_t cols);
void segment_sum(const double* a, const std::uint32_t* offsets, std::size_t segments, double* out,
                 std::size_t cols);
void segment_sum_backward(const double* grad_out, const std::uint32_t* offsets,
                          std::size_t segments, double* grad_in, std::size_t cols);
void segment_softmax(const double* a, const std::uint32_t* offsets, std::size_t segments,
                     double* out);
void segment_softmax_backward(const double* y, const double* grad_out,
                              const std::uint32_t* offsets, std::size_t segments,
                              double* grad_in);
void gather_rows(const double* a, const std::uint32_t* idx, std::size_t n_idx, double* out,
                 std::size_t cols);
void gather_rows_backward(const double* grad_out, const std::uint32_t* inv_offsets,
                          const std::uint32_t* inv_list, std::size_t n_src, double* grad_in,
                          std::size_t cols);
void scale_rows(const double* a, const double* s, double* out, std::size_t rows,
                std::size_t cols);
void scale_rows_backward_a(const double* s, const double* grad_out, double* grad_a,
                           std::size_t rows, std::size_t cols);
void scale_rows_backward_s(const double* a, const double* grad_out, double* grad_s,
                           std::size_t rows, std::size_t cols);
void row_inner_product(const double* a, const double* b, double* out, std::size_t rows,
                       std::size_t cols);
void apply_mask(const double* a, const double* mask, double* out, std::size_t n);
double sum_all(const double* a, std::size_t n);

}  // namespace omp

// Dispatchers used by the autograd ops; route to the active backend.
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n);
void matmul_at_b(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n);
void matmul_a_bt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k);
void add(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double s, double* out, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void add_bias_rows(const double* a, const double* bias, double* out, std::size_t rows,
                   std::size_t cols);
void relu(const double* a, double* out, std::size_t n);
void relu_backward(const double* a, const double* grad_out, double* grad_in, std::size_t n);
void tanh(const double* a, double* out, std::size_t n);
void tanh_backward(const double* y, const double* grad_out, double* grad_in, std::size_t n);
void softmax_rows(const double* a, double* out, std::size_t rows, std::size_t cols);
void softmax_rows_backward(const double* y, const double* grad_out, double* grad_in,
                           std::size_t rows, std::size_t cols);
void segment_mean(const double* a, const std::uint32_t* offsets, std::size_t segments,
                  double* out, std::size_t cols);
void segment_mean_backward(const double* grad_out, const std::uint32_t* offsets,
                           std::size_t segments, double* grad_in, std::size_t cols);
void segment_sum(const double* a, const std::uint32_t* offsets, std::size_t segments, double* out,
                 std::size_t cols);
void segment_sum_backward(const double* grad_out, const std::uint32_t* offsets,
                          std::size_t segments, double* grad_in, std::size_t cols);
void segment_softmax(const double* a, const std::uint32_t* offsets, std::size_t segments,
                     double* out);
void segment_softmax_backward(const double* y, const double* grad_out,
                              const std::uint32_t* offsets, std::size_t segments,
                              double* grad_in);
void gather_rows(const double* a, const std::uint32_t* idx, std::size_t n_idx, double* out,
                 std::size_t cols);
void gather_rows_backward(const double* grad_out, const std::uint32_t* inv_offsets,
                          const std::uint32_t* inv_list, std::size_t n_src, double* grad_in,
                          std::size_t cols);
void scale_rows(const double* a, const double* s, double* out, std::size_t rows,
                std::size_t cols);
void scale_rows_backward_a(const double* s, const double* grad_out, double* grad_a,
                           std::size_t rows, std::size_t cols);
void scale_rows_backward_s(const double* a, const double* grad_out, double* grad_s,
                           std::size_t rows, std::size_t cols);
void row_inner_product(const double* a, const double* b, double* out, std::size_t rows,
                       std::size_t cols);
void apply_mask(const double* a, const double* mask, double* out, std::size_t n);
double sum_all(const double* a, std::size_t n);

// Builds the source-row -> gathered-positions inverse map consumed by
// gather_rows_backward.
void build_gather_inverse(std::span<const std::uint32_t> idx, std::size_t n_src,
                          std::vector<std::uint32_t>& inv_offsets,
                          std::vector<std::uint32_t>& inv_list);

}  // namespace devrec::kernels
