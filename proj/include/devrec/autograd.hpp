#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "devrec/rng.hpp"

namespace devrec::autograd {

// Row-major 64-bit dense matrix. The model is tiny (hidden dim 32), so
// doubles everywhere: gradient checks need the headroom.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
    DenseMatrix(std::size_t r, std::size_t c, std::vector<double> v);

    static DenseMatrix zeros(std::size_t r, std::size_t c) { return DenseMatrix(r, c); }
    static DenseMatrix filled(std::size_t r, std::size_t c, double v);
    static DenseMatrix identity(std::size_t n);
    static DenseMatrix uniform(std::size_t r, std::size_t c, double lo, double hi, Rng& rng);

    double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    std::size_t size() const { return values.size(); }
    double* data() { return values.data(); }
    const double* data() const { return values.data(); }

    bool all_finite() const;
    void fill(double v);
};

// A trainable parameter; the tape accumulates into grad.
struct Param {
    std::string name;
    DenseMatrix value;
    DenseMatrix grad;

    Param() = default;
    Param(std::string n, DenseMatrix v)
        : name(std::move(n)), value(std::move(v)), grad(value.rows, value.cols) {}

    void zero_grad() { grad.fill(0.0); }
};

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using NodeId = std::int32_t;

enum class OpKind : std::uint8_t {
    Leaf,        // constant input, no gradient
    ParamLeaf,   // references an external Param
    MatMul,
    Add,
    AddBias,
    Scale,
    Relu,
    Tanh,
    SoftmaxRows,
    SegmentMean,
    SegmentSum,
    SegmentSoftmax,
    ScaleRows,
    ConcatRows,
    GatherRows,
    RowInnerProduct,
    Dropout,
    SumAll,
};

// One recorded operation: output value plus what backward needs.
struct TapeNode {
    OpKind kind = OpKind::Leaf;
    NodeId inputs[2] = {-1, -1};
    DenseMatrix value;
    DenseMatrix grad;               // allocated lazily per backward pass
    double scalar = 0.0;            // Scale factor / dropout rate
    std::vector<std::uint32_t> indices;   // segment offsets or gather indices
    std::vector<std::uint32_t> inv_offsets;  // gather adjoint map
    std::vector<std::uint32_t> inv_list;
    std::vector<double> mask;       // dropout mask
    Param* param = nullptr;         // ParamLeaf only
};

// Single-writer reverse-mode tape over dense matrices. Nodes are appended in
// topological order by construction; backward walks them in reverse.
class Tape {
public:
    NodeId constant(DenseMatrix value);
    NodeId param(Param& p);

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId add_bias(NodeId a, NodeId bias);  // bias is 1 x cols
    NodeId scale(NodeId a, double s);
    NodeId relu(NodeId a);
    NodeId tanh(NodeId a);
    NodeId softmax_rows(NodeId a);
    // rows grouped contiguously by segment: offsets has segments+1 entries,
    // offsets.front() == 0, offsets.back() == rows(a)
    NodeId segment_mean(NodeId a, std::vector<std::uint32_t> offsets);
    NodeId segment_sum(NodeId a, std::vector<std::uint32_t> offsets);
    NodeId segment_softmax(NodeId a, std::vector<std::uint32_t> offsets);  // a is rows x 1
    NodeId scale_rows(NodeId a, NodeId s);  // s is rows x 1
    NodeId concat_rows(NodeId a, NodeId b);
    NodeId gather_rows(NodeId a, std::vector<std::uint32_t> idx);
    NodeId row_inner_product(NodeId a, NodeId b);
    // Inverted dropout on the rate-p mask; identity when training is false.
    NodeId dropout(NodeId a, double p, bool training, Rng& rng);
    NodeId sum_all(NodeId a);  // 1x1

    const DenseMatrix& value(NodeId id) const { return nodes_[id].value; }
    const DenseMatrix& grad(NodeId id) const { return nodes_[id].grad; }
    std::size_t size() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss)=1 and accumulates exact gradients into every
    // registered Param's grad. loss must be 1x1.
    void backward(NodeId loss);

private:
    NodeId push(TapeNode node);
    TapeNode& node(NodeId id) { return nodes_[id]; }

    std::vector<TapeNode> nodes_;
};

// Adam with decoupled weight decay; moments keyed by parameter identity.
struct AdamConfig {
    double lr = 5e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 5e-4;
};

class AdamState {
public:
    explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

    const AdamConfig& config() const { return cfg_; }
    std::int64_t step_count() const { return step_; }

    // Decay first (p -= lr*wd*p), then the bias-corrected Adam update from
    // p.grad. Throws on non-finite gradients, naming the parameter.
    void step(std::vector<Param*>& params);

private:
    struct Moments {
        DenseMatrix m;
        DenseMatrix v;
    };
    AdamConfig cfg_;
    std::int64_t step_ = 0;
    std::vector<Moments> moments_;
};

// Central-difference check of d(f)/d(params) against the analytic gradients
// already present in params[i]->grad. Samples up to max_coords_per_param
// coordinates per parameter; returns max over samples of
// |analytic - numeric| / max(1, |analytic|, |numeric|).
double finite_diff_check(const std::function<double()>& f, std::vector<Param*> params,
                         double h = 1e-5, std::size_t max_coords_per_param = 0,
                         std::uint64_t sample_seed = 12345);

}  // namespace devrec::autograd
