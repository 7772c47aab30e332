#include "devrec/autograd.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "devrec/kernels.hpp"

namespace devrec::autograd {

namespace k = devrec::kernels;

DenseMatrix::DenseMatrix(std::size_t r, std::size_t c, std::vector<double> v)
    : rows(r), cols(c), values(std::move(v)) {
    if (values.size() != r * c) throw ShapeError("DenseMatrix: values length != rows*cols");
}

DenseMatrix DenseMatrix::filled(std::size_t r, std::size_t c, double v) {
    DenseMatrix m(r, c);
    m.fill(v);
    return m;
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::uniform(std::size_t r, std::size_t c, double lo, double hi, Rng& rng) {
    DenseMatrix m(r, c);
    for (double& v : m.values) v = rng.uniform(lo, hi);
    return m;
}

bool DenseMatrix::all_finite() const {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void DenseMatrix::fill(double v) { std::fill(values.begin(), values.end(), v); }

namespace {

[[noreturn]] void shape_fail(const char* op, const DenseMatrix& a, const DenseMatrix& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + std::to_string(a.rows) + "x" +
                     std::to_string(a.cols) + " and " + std::to_string(b.rows) + "x" +
                     std::to_string(b.cols));
}

void check_offsets(const char* op, const std::vector<std::uint32_t>& offsets, std::size_t rows) {
    if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != rows) {
        throw ShapeError(std::string(op) + ": segment offsets must cover all " +
                         std::to_string(rows) + " rows");
    }
    for (std::size_t i = 1; i < offsets.size(); ++i) {
        if (offsets[i] < offsets[i - 1]) {
            throw ShapeError(std::string(op) + ": segment offsets not monotone");
        }
    }
}

}  // namespace

NodeId Tape::push(TapeNode node) {
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::constant(DenseMatrix value) {
    TapeNode n;
    n.kind = OpKind::Leaf;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Tape::param(Param& p) {
    TapeNode n;
    n.kind = OpKind::ParamLeaf;
    n.value = p.value;  // snapshot; params are not mutated during a tape's life
    n.param = &p;
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const auto& va = node(a).value;
    const auto& vb = node(b).value;
    if (va.cols != vb.rows) shape_fail("matmul", va, vb);
    TapeNode n;
    n.kind = OpKind::MatMul;
    n.inputs[0] = a;
    n.inputs[1] = b;
    n.value = DenseMatrix(va.rows, vb.cols);
    k::matmul(va.data(), vb.data(), n.value.data(), va.rows, va.cols, vb.cols);
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    const auto& va = node(a).value;
    const auto& vb = node(b).value;
    if (va.rows != vb.rows || va.cols != vb.cols) shape_fail("add", va, vb);
    TapeNode n;
    n.kind = OpKind::Add;
    n.inputs[0] = a;
    n.inputs[1] = b;
    n.value = DenseMatrix(va.rows, va.cols);
    k::add(va.data(), vb.data(), n.value.data(), va.size());
    return push(std::move(n));
}

NodeId Tape::add_bias(NodeId a, NodeId bias) {
    const auto& va = node(a).value;
    const auto& vb = node(bias).value;
    if (vb.rows != 1 || vb.cols != va.cols) shape_fail("add_bias", va, vb);
    TapeNode n;
    n.kind = OpKind::AddBias;
    n.inputs[0] = a;
    n.inputs[1] = bias;
    n.value = DenseMatrix(va.rows, va.cols);
    k::add_bias_rows(va.data(), vb.data(), n.value.data(), va.rows, va.cols);
    return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double s) {
    const auto& va = node(a).value;
    TapeNode n;
    n.kind = OpKind::Scale;
    n.inputs[0] = a;
    n.scalar = s;
    n.value = DenseMatrix(va.rows, va.cols);
    k::scale(va.data(), s, n.value.data(), va.size());
    return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
    const auto& va = node(a).value;
    TapeNode n;
    n.kind = OpKind::Relu;
    n.inputs[0] = a;
    n.value = DenseMatrix(va.rows, va.cols);
    k::relu(va.data(), n.value.data(), va.size());
    return push(std::move(n));
}

NodeId Tape::tanh(NodeId a) {
    const auto& va = node(a).value;
    TapeNode n;
    n.kind = OpKind::Tanh;
    n.inputs[0] = a;
    n.value = DenseMatrix(va.rows, va.cols);
    k::tanh(va.data(), n.value.data(), va.size());
    return push(std::move(n));
}

NodeId Tape::softmax_rows(NodeId a) {
    const auto& va = node(a).value;
    TapeNode n;
    n.kind = OpKind::SoftmaxRows;
    n.inputs[0] = a;
    n.value = DenseMatrix(va.rows, va.cols);
    k::softmax_rows(va.data(), n.value.data(), va.rows, va.cols);
    return push(std::move(n));
}

NodeId Tape::segment_mean(NodeId a, std::vector<std::uint32_t> offsets) {
    const auto& va = node(a).value;
    check_offsets("segment_mean", offsets, va.rows);
    TapeNode n;
    n.kind = OpKind::SegmentMean;
    n.inputs[0] = a;
    n.value = DenseMatrix(offsets.size() - 1, va.cols);
    k::segment_mean(va.data(), offsets.data(), offsets.size() - 1, n.value.data(), va.cols);
    n.indices = std::move(offsets);
    return push(std::move(n));
}

NodeId Tape::segment_sum(NodeId a, std::vector<std::uint32_t> offsets) {
    const auto& va = node(a).value;
    check_offsets("segment_sum", offsets, va.rows);
    TapeNode n;
    n.kind = OpKind::SegmentSum;
    n.inputs[0] = a;
    n.value = DenseMatrix(offsets.size() - 1, va.cols);
    k::segment_sum(va.data(), offsets.data(), offsets.size() - 1, n.value.data(), va.cols);
    n.indices = std::move(offsets);
    return push(std::move(n));
}

NodeId Tape::segment_softmax(NodeId a, std::vector<std::uint32_t> offsets) {
    const auto& va = node(a).value;
    if (va.cols != 1) throw ShapeError("segment_softmax: input must be a column vector");
    check_offsets("segment_softmax", offsets, va.rows);
    TapeNode n;
    n.kind = OpKind::SegmentSoftmax;
    n.inputs[0] = a;
    n.value = DenseMatrix(va.rows, 1);
    k::segment_softmax(va.data(), offsets.data(), offsets.size() - 1, n.value.data());
    n.indices = std::move(offsets);
    return push(std::move(n));
}

NodeId Tape::scale_rows(NodeId a, NodeId s) {
    const auto& va = node(a).value;
    const auto& vs = node(s).value;
    if (vs.cols != 1 || vs.rows != va.rows) shape_fail("scale_rows", va, vs);
    TapeNode n;
    n.kind = OpKind::ScaleRows;
    n.inputs[0] = a;
    n.inputs[1] = s;
    n.value = DenseMatrix(va.rows, va.cols);
    k::scale_rows(va.data(), vs.data(), n.value.data(), va.rows, va.cols);
    return push(std::move(n));
}

NodeId Tape::concat_rows(NodeId a, NodeId b) {
    const auto& va = node(a).value;
    const auto& vb = node(b).value;
    if (va.cols != vb.cols) shape_fail("concat_rows", va, vb);
    TapeNode n;
    n.kind = OpKind::ConcatRows;
    n.inputs[0] = a;
    n.inputs[1] = b;
    n.value = DenseMatrix(va.rows + vb.rows, va.cols);
    std::memcpy(n.value.data(), va.data(), va.size() * sizeof(double));
    std::memcpy(n.value.data() + va.size(), vb.data(), vb.size() * sizeof(double));
    return push(std::move(n));
}

NodeId Tape::gather_rows(NodeId a, std::vector<std::uint32_t> idx) {
    const auto& va = node(a).value;
    for (std::uint32_t i : idx) {
        if (i >= va.rows) throw ShapeError("gather_rows: index out of range");
    }
    TapeNode n;
    n.kind = OpKind::GatherRows;
    n.inputs[0] = a;
    n.value = DenseMatrix(idx.size(), va.cols);
    k::gather_rows(va.data(), idx.data(), idx.size(), n.value.data(), va.cols);
    k::build_gather_inverse(idx, va.rows, n.inv_offsets, n.inv_list);
    n.indices = std::move(idx);
    return push(std::move(n));
}

NodeId Tape::row_inner_product(NodeId a, NodeId b) {
    const auto& va = node(a).value;
    const auto& vb = node(b).value;
    if (va.rows != vb.rows || va.cols != vb.cols) shape_fail("row_inner_product", va, vb);
    TapeNode n;
    n.kind = OpKind::RowInnerProduct;
    n.inputs[0] = a;
    n.inputs[1] = b;
    n.value = DenseMatrix(va.rows, 1);
    k::row_inner_product(va.data(), vb.data(), n.value.data(), va.rows, va.cols);
    return push(std::move(n));
}

NodeId Tape::dropout(NodeId a, double p, bool training, Rng& rng) {
    const auto& va = node(a).value;
    TapeNode n;
    n.kind = OpKind::Dropout;
    n.inputs[0] = a;
    n.scalar = p;
    n.value = DenseMatrix(va.rows, va.cols);
    if (!training || p <= 0.0) {
        n.value = va;
        n.mask.assign(va.size(), 1.0);
    } else {
        const double keep = 1.0 - p;
        n.mask.resize(va.size());
        for (double& m : n.mask) m = rng.next_double() < keep ? 1.0 / keep : 0.0;
        k::apply_mask(va.data(), n.mask.data(), n.value.data(), va.size());
    }
    return push(std::move(n));
}

NodeId Tape::sum_all(NodeId a) {
    const auto& va = node(a).value;
    TapeNode n;
    n.kind = OpKind::SumAll;
    n.inputs[0] = a;
    n.value = DenseMatrix(1, 1);
    n.value.values[0] = k::sum_all(va.data(), va.size());
    return push(std::move(n));
}

void Tape::backward(NodeId loss) {
    if (loss < 0 || static_cast<std::size_t>(loss) >= nodes_.size()) {
        throw std::runtime_error("backward: bad loss node");
    }
    if (nodes_[loss].value.rows != 1 || nodes_[loss].value.cols != 1) {
        throw std::runtime_error("backward: loss must be scalar (1x1)");
    }

    for (TapeNode& n : nodes_) {
        n.grad = DenseMatrix(n.value.rows, n.value.cols);
    }
    nodes_[loss].grad.values[0] = 1.0;

    DenseMatrix scratch;
    auto accumulate = [&](NodeId target, const DenseMatrix& contrib) {
        k::axpy(1.0, contrib.data(), nodes_[target].grad.data(), contrib.size());
    };

    for (NodeId id = loss; id >= 0; --id) {
        TapeNode& n = nodes_[id];
        const DenseMatrix& g = n.grad;
        bool has_grad = false;
        for (double v : g.values) {
            if (v != 0.0) {
                has_grad = true;
                break;
            }
        }
        if (!has_grad) continue;

        switch (n.kind) {
            case OpKind::Leaf:
                break;
            case OpKind::ParamLeaf:
                k::axpy(1.0, g.data(), n.param->grad.data(), g.size());
                break;
            case OpKind::MatMul: {
                const auto& va = nodes_[n.inputs[0]].value;
                const auto& vb = nodes_[n.inputs[1]].value;
                scratch = DenseMatrix(va.rows, va.cols);
                k::matmul_a_bt(g.data(), vb.data(), scratch.data(), g.rows, g.cols, vb.rows);
                accumulate(n.inputs[0], scratch);
                scratch = DenseMatrix(vb.rows, vb.cols);
                k::matmul_at_b(va.data(), g.data(), scratch.data(), va.rows, va.cols, g.cols);
                accumulate(n.inputs[1], scratch);
                break;
            }
            case OpKind::Add:
                accumulate(n.inputs[0], g);
                accumulate(n.inputs[1], g);
                break;
            case OpKind::AddBias: {
                accumulate(n.inputs[0], g);
                DenseMatrix& bg = nodes_[n.inputs[1]].grad;
                for (std::size_t i = 0; i < g.rows; ++i) {
                    for (std::size_t j = 0; j < g.cols; ++j) bg.values[j] += g.at(i, j);
                }
                break;
            }
            case OpKind::Scale: {
                scratch = DenseMatrix(g.rows, g.cols);
                k::scale(g.data(), n.scalar, scratch.data(), g.size());
                accumulate(n.inputs[0], scratch);
                break;
            }
            case OpKind::Relu: {
                const auto& va = nodes_[n.inputs[0]].value;
                scratch = DenseMatrix(g.rows, g.cols);
                k::relu_backward(va.data(), g.data(), scratch.data(), g.size());
                accumulate(n.inputs[0], scratch);
                break;
            }
            case OpKind::Tanh: {
                scratch = DenseMatrix(g.rows, g.cols);
                k::tanh_backward(n.value.data(), g.data(), scratch.data(), g.size());
                accumulate(n.inputs[0], scratch);
                break;
            }
            case OpKind::SoftmaxRows: {
                scratch = DenseMatrix(g.rows, g.cols);
                k::softmax_rows_backward(n.value.data(), g.data(), scratch.data(), g.rows,
                                         g.cols);
                accumulate(n.inputs[0], scratch);
                break;
            }
            case OpKind::SegmentMean: {
                const auto& va = nodes_[n.inputs[0]].value;
                scratch = DenseMatrix(va.rows, va.cols);
                k::segment_mean_backward(g.data(), n.indices.data(), n.indices.size() - 1,
                                         scratch.data(), va.cols);
                accumulate(n.inputs[0], scratch);
                break;
            }
            case OpKind::SegmentSum: {
                const auto& va = nodes_[n.inputs[0]].value;
                scratch = DenseMatrix(va.rows, va.cols);
                k::segment_sum_backward(g.data(), n.indices.data(), n.indices.size() - 1,
                                        scratch.data(), va.cols);
                accumulate(n.inputs[0], scratch);
                break;
            }
            case OpKind::SegmentSoftmax: {
                const auto& va = nodes_[n.inputs[0]].value;
                scratch = DenseMatrix(va.rows, 1);
                k::segment_softmax_backward(n.value.data(), g.data(), n.indices.data(),
                                            n.indices.size() - 1, scratch.data());
                accumulate(n.inputs[0], scratch);
                break;
            }
            case OpKind::ScaleRows: {
                const auto& va = nodes_[n.inputs[0]].value;
                const auto& vs = nodes_[n.inputs[1]].value;
                scratch = DenseMatrix(va.rows, va.cols);
                k::scale_rows_backward_a(vs.data(), g.data(), scratch.data(), va.rows, va.cols);
                accumulate(n.inputs[0], scratch);
                scratch = DenseMatrix(va.rows, 1);
                k::scale_rows_backward_s(va.data(), g.data(), scratch.data(), va.rows, va.cols);
                accumulate(n.inputs[1], scratch);
                break;
            }
            case OpKind::ConcatRows: {
                const auto& va = nodes_[n.inputs[0]].value;
                const auto& vb = nodes_[n.inputs[1]].value;
                k::axpy(1.0, g.data(), nodes_[n.inputs[0]].grad.data(), va.size());
                k::axpy(1.0, g.data() + va.size(), nodes_[n.inputs[1]].grad.data(), vb.size());
                break;
            }
            case OpKind::GatherRows: {
                const auto& va = nodes_[n.inputs[0]].value;
                scratch = DenseMatrix(va.rows, va.cols);
                k::gather_rows_backward(g.data(), n.inv_offsets.data(), n.inv_list.data(),
                                        va.rows, scratch.data(), va.cols);
                accumulate(n.inputs[0], scratch);
                break;
            }
            case OpKind::RowInnerProduct: {
                const auto& va = nodes_[n.inputs[0]].value;
                const auto& vb = nodes_[n.inputs[1]].value;
                scratch = DenseMatrix(va.rows, va.cols);
                k::scale_rows(vb.data(), g.data(), scratch.data(), va.rows, va.cols);
                accumulate(n.inputs[0], scratch);
                k::scale_rows(va.data(), g.data(), scratch.data(), va.rows, va.cols);
                accumulate(n.inputs[1], scratch);
                break;
            }
            case OpKind::Dropout: {
                scratch = DenseMatrix(g.rows, g.cols);
                k::apply_mask(g.data(), n.mask.data(), scratch.data(), g.size());
                accumulate(n.inputs[0], scratch);
                break;
            }
            case OpKind::SumAll: {
                const auto& va = nodes_[n.inputs[0]].value;
                scratch = DenseMatrix::filled(va.rows, va.cols, g.values[0]);
                accumulate(n.inputs[0], scratch);
                break;
            }
        }
    }
}

void AdamState::step(std::vector<Param*>& params) {
    if (moments_.empty()) {
        moments_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            moments_[i].m = DenseMatrix(params[i]->value.rows, params[i]->value.cols);
            moments_[i].v = DenseMatrix(params[i]->value.rows, params[i]->value.cols);
        }
    }
    if (moments_.size() != params.size()) {
        throw std::runtime_error("AdamState: parameter set changed between steps");
    }
    for (Param* p : params) {
        if (!p->grad.all_finite()) {
            throw std::runtime_error("adam_step: non-finite gradient in parameter '" + p->name +
                                     "' at step " + std::to_string(step_ + 1));
        }
    }
    step_ += 1;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Param& p = *params[i];
        Moments& mo = moments_[i];
        if (cfg_.weight_decay != 0.0) {
            k::scale(p.value.data(), 1.0 - cfg_.lr * cfg_.weight_decay, p.value.data(),
                     p.value.size());
        }
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double gj = p.grad.values[j];
            mo.m.values[j] = cfg_.beta1 * mo.m.values[j] + (1.0 - cfg_.beta1) * gj;
            mo.v.values[j] = cfg_.beta2 * mo.v.values[j] + (1.0 - cfg_.beta2) * gj * gj;
            const double mhat = mo.m.values[j] / bc1;
            const double vhat = mo.v.values[j] / bc2;
            p.value.values[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

double finite_diff_check(const std::function<double()>& f, std::vector<Param*> params, double h,
                         std::size_t max_coords_per_param, std::uint64_t sample_seed) {
    double worst = 0.0;
    Rng rng(sample_seed);
    for (Param* p : params) {
        std::vector<std::size_t> coords;
        const std::size_t n = p->value.size();
        if (max_coords_per_param == 0 || n <= max_coords_per_param) {
            coords.resize(n);
            for (std::size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            coords = rng.sample_without_replacement(n, max_coords_per_param);
        }
        for (std::size_t c : coords) {
            const double orig = p->value.values[c];
            p->value.values[c] = orig + h;
            const double fp = f();
            p->value.values[c] = orig - h;
            const double fm = f();
            p->value.values[c] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double analytic = p->grad.values[c];
            const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
            worst = std::max(worst, std::abs(analytic - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace devrec::autograd
