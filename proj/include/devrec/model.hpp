#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "devrec/autograd.hpp"
#include "devrec/htg.hpp"

namespace devrec::model {

using autograd::DenseMatrix;
using autograd::NodeId;
using autograd::Param;
using autograd::Tape;
using relations::RelationType;

struct ModelConfig {
    std::size_t hidden_dim = 32;
    std::size_t layers = 2;
    std::size_t tw = 2;
    double dropout = 0.2;
    std::size_t negatives_per_positive = 5;
    std::uint64_t seed = 42;
};

// Transductive node universe: developers and files known at training time.
// Fixers are included even when they never touch an edge, so every positive
// pair is scoreable.
struct NodeUniverse {
    std::vector<std::string> developers;  // sorted
    std::vector<std::string> files;       // sorted
    std::unordered_map<std::string, std::size_t> dev_index;
    std::unordered_map<std::string, std::size_t> file_index;

    static NodeUniverse from_htg(const htg::Htg& g);
};

// Every trainable matrix/vector, addressable by a structured name:
//   proj/W/<type>, proj/b/<type>
//   intra/W/<relation>/o<offset>/l<layer>, intra/b/...
//   inter/q/o<offset>/l<layer>, inter/Wself/<type>/o<offset>/l<layer>
//   across/q/<developer|file>/l<layer>
//   target/W/<relation>, target/b/<relation>, target/q, target/Wself
//     (the prediction pass is its own time period and owns its parameters)
//   emb/developer, emb/file          (one row per universe node)
class ParamStore {
public:
    ParamStore() = default;
    ParamStore(const ParamStore& other) { *this = other; }
    ParamStore& operator=(const ParamStore& other);
    ParamStore(ParamStore&&) = default;
    ParamStore& operator=(ParamStore&&) = default;

    // all parameters ~ Uniform(-1/sqrt(d), +1/sqrt(d)) from the "init"
    // substream of cfg.seed; creation order is fixed, so stores are
    // bit-identical per seed
    static ParamStore init(const ModelConfig& cfg, NodeUniverse universe);

    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    bool has(const std::string& name) const;

    std::vector<Param*> all();  // creation order
    std::size_t total_coords() const;
    void zero_grads();

    const ModelConfig& config() const { return config_; }
    const NodeUniverse& universe() const { return universe_; }

    void save(std::ostream& out) const;
    static ParamStore load(std::istream& in);

    static std::string proj_w(NodeType t);
    static std::string proj_b(NodeType t);
    static std::string intra_w(RelationType r, std::size_t offset, std::size_t layer);
    static std::string intra_b(RelationType r, std::size_t offset, std::size_t layer);
    static std::string inter_q(std::size_t offset, std::size_t layer);
    static std::string inter_w_self(NodeType t, std::size_t offset, std::size_t layer);
    static std::string across_q(NodeType t, std::size_t layer);
    static std::string target_w(RelationType r);
    static std::string target_b(RelationType r);

private:
    Param& add(const std::string& name, std::size_t rows, std::size_t cols);

    ModelConfig config_;
    NodeUniverse universe_;
    std::vector<std::unique_ptr<Param>> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Fixed (non-trainable) issue feature, reproducible for unseen issues:
// Uniform(-1/sqrt(d), 1/sqrt(d)) seeded by hash(global seed, issue id).
std::vector<double> initial_issue_embedding(const std::string& issue_id, std::uint64_t seed,
                                            std::size_t d);

// ---- batched aggregation blocks (shared by the forward pass and tests) ----

// Weighted neighbor mean -> dropout -> linear -> ReLU for targets with at
// least one neighbor. `neighbors` rows are grouped by target via offsets
// (no empty segments). weights, when present, are normalized per segment.
NodeId intra_aggregate(Tape& tape, NodeId neighbors, std::vector<std::uint32_t> offsets,
                       const std::vector<double>* weights, Param& w, Param& b, double dropout,
                       bool training, Rng* rng);

// Relation-attention fusion plus self path:
//   alpha = segment_softmax(tanh(instances) . q), per target
//   out   = ReLU(projected . Wself + segment_sum(alpha * instances))
// `instances` rows are relation embeddings grouped by target; segments may
// be empty (targets with no relations keep the self path only).
NodeId inter_aggregate(Tape& tape, NodeId instances, std::vector<std::uint32_t> offsets,
                       NodeId projected, Param& q, Param& w_self);

// Temporal attention over a node's per-slice spatial embeddings:
//   beta = segment_softmax(instances . q); out = segment_sum(beta * instances)
NodeId across_time_aggregate(Tape& tape, NodeId instances, std::vector<std::uint32_t> offsets,
                             Param& q);

struct ForwardOptions {
    bool training = false;
    Rng* dropout_rng = nullptr;  // required when training and dropout > 0
};

// Full window forward: L layers of {project -> intra -> inter -> across}
// over the input slices, per-node sums over the window (final developer and
// file embeddings), and one spatial pass embedding the target slice's home
// issues from their Report/Comment/textual-Similar edges.
struct ForwardResult {
    Tape tape;
    NodeId dev_final = -1;   // universe developers x d
    NodeId file_final = -1;  // universe files x d
    NodeId issue_emb = -1;   // target home issues x d
    std::vector<std::string> target_issues;       // row order, sorted
    std::vector<std::string> flagged_zero_edge;   // embedded from the seed alone
};

ForwardResult forward_window(const htg::Htg& g, const htg::WindowBatch& batch,
                             ParamStore& params, const ForwardOptions& opts = {});

// Eq-5 matching score.
double score(std::span<const double> issue_embedding, std::span<const double> dev_embedding);

// Candidates sorted by score descending, ties by developer id ascending.
std::vector<std::pair<std::string, double>> recommend(
    std::span<const double> issue_embedding,
    const std::vector<std::pair<std::string, std::span<const double>>>& candidates,
    std::size_t top_n);

// Value-level single-issue spatial pass used for ad-hoc recommendation;
// agrees with the batched target pass (tested).
std::vector<double> embed_issue_single(
    const std::vector<double>& issue_init,
    const std::vector<std::vector<double>>& report_neighbors,
    const std::vector<std::vector<double>>& comment_neighbors,
    const std::vector<std::pair<std::vector<double>, double>>& similar_neighbors,
    const ParamStore& params);

// developers appearing in the training slices, plus fixers of training-slice
// issues (the negative/candidate pool)
std::vector<std::string> candidate_pool(const htg::Htg& g, const htg::Split& split);

}  // namespace devrec::model
