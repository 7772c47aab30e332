#include "devrec/model.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstring>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

namespace devrec::model {

namespace {

double uniform_bound(std::size_t d) { return 1.0 / std::sqrt(static_cast<double>(d)); }

}  // namespace

NodeUniverse NodeUniverse::from_htg(const htg::Htg& g) {
    NodeUniverse u;
    std::set<std::string> devs, files;
    for (const htg::Snapshot& s : g.snapshots) {
        devs.insert(s.developers.begin(), s.developers.end());
        files.insert(s.files.begin(), s.files.end());
    }
    for (const auto& [issue, fixers] : g.fixers) {
        devs.insert(fixers.begin(), fixers.end());
    }
    u.developers.assign(devs.begin(), devs.end());
    u.files.assign(files.begin(), files.end());
    for (std::size_t i = 0; i < u.developers.size(); ++i) u.dev_index[u.developers[i]] = i;
    for (std::size_t i = 0; i < u.files.size(); ++i) u.file_index[u.files[i]] = i;
    return u;
}

std::string ParamStore::proj_w(NodeType t) { return std::string("proj/W/") + to_string(t); }
std::string ParamStore::proj_b(NodeType t) { return std::string("proj/b/") + to_string(t); }
std::string ParamStore::intra_w(RelationType r, std::size_t o, std::size_t l) {
    return std::string("intra/W/") + relations::to_string(r) + "/o" + std::to_string(o) + "/l" +
           std::to_string(l);
}
std::string ParamStore::intra_b(RelationType r, std::size_t o, std::size_t l) {
    return std::string("intra/b/") + relations::to_string(r) + "/o" + std::to_string(o) + "/l" +
           std::to_string(l);
}
std::string ParamStore::inter_q(std::size_t o, std::size_t l) {
    return "inter/q/o" + std::to_string(o) + "/l" + std::to_string(l);
}
std::string ParamStore::inter_w_self(NodeType t, std::size_t o, std::size_t l) {
    return std::string("inter/Wself/") + to_string(t) + "/o" + std::to_string(o) + "/l" +
           std::to_string(l);
}
std::string ParamStore::across_q(NodeType t, std::size_t l) {
    return std::string("across/q/") + to_string(t) + "/l" + std::to_string(l);
}
std::string ParamStore::target_w(RelationType r) {
    return std::string("target/W/") + relations::to_string(r);
}
std::string ParamStore::target_b(RelationType r) {
    return std::string("target/b/") + relations::to_string(r);
}

ParamStore& ParamStore::operator=(const ParamStore& other) {
    if (this == &other) return *this;
    config_ = other.config_;
    universe_ = other.universe_;
    index_ = other.index_;
    params_.clear();
    params_.reserve(other.params_.size());
    for (const auto& p : other.params_) params_.push_back(std::make_unique<Param>(*p));
    return *this;
}

Param& ParamStore::add(const std::string& name, std::size_t rows, std::size_t cols) {
    params_.push_back(std::make_unique<Param>(name, DenseMatrix(rows, cols)));
    index_[name] = params_.size() - 1;
    return *params_.back();
}

ParamStore ParamStore::init(const ModelConfig& cfg, NodeUniverse universe) {
    ParamStore ps;
    ps.config_ = cfg;
    ps.universe_ = std::move(universe);
    const std::size_t d = cfg.hidden_dim;

    constexpr NodeType kTypes[] = {NodeType::Issue, NodeType::Developer, NodeType::File};
    for (NodeType t : kTypes) {
        ps.add(proj_w(t), d, d);
        ps.add(proj_b(t), 1, d);
    }
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        for (std::size_t o = 0; o < cfg.tw; ++o) {
            for (RelationType r : relations::kAllRelations) {
                ps.add(intra_w(r, o, l), d, d);
                ps.add(intra_b(r, o, l), 1, d);
            }
            ps.add(inter_q(o, l), d, 1);
            for (NodeType t : kTypes) {
                ps.add(inter_w_self(t, o, l), d, d);
            }
        }
        ps.add(across_q(NodeType::Developer, l), d, 1);
        ps.add(across_q(NodeType::File, l), d, 1);
    }
    for (RelationType r : {RelationType::Report, RelationType::Comment, RelationType::Similar}) {
        ps.add(target_w(r), d, d);
        ps.add(target_b(r), 1, d);
    }
    ps.add("target/q", d, 1);
    ps.add("target/Wself", d, d);
    ps.add("emb/developer", std::max<std::size_t>(ps.universe_.developers.size(), 1), d);
    ps.add("emb/file", std::max<std::size_t>(ps.universe_.files.size(), 1), d);

    Rng rng = Rng::substream(cfg.seed, "init");
    const double bound = uniform_bound(d);
    for (auto& p : ps.params_) {
        for (double& v : p->value.values) v = rng.uniform(-bound, bound);
    }
    return ps;
}

Param& ParamStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::runtime_error("ParamStore: unknown parameter " + name);
    return *params_[it->second];
}

const Param& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::runtime_error("ParamStore: unknown parameter " + name);
    return *params_[it->second];
}

bool ParamStore::has(const std::string& name) const { return index_.contains(name); }

std::vector<Param*> ParamStore::all() {
    std::vector<Param*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::size_t ParamStore::total_coords() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
}

void ParamStore::zero_grads() {
    for (auto& p : params_) p->zero_grad();
}

void ParamStore::save(std::ostream& out) const {
    out << "devrec-ckpt\t1\n";
    out << "config\t" << config_.hidden_dim << '\t' << config_.layers << '\t' << config_.tw
        << '\t' << config_.dropout << '\t' << config_.negatives_per_positive << '\t'
        << config_.seed << '\n';
    out << "developers\t" << universe_.developers.size() << '\n';
    for (const auto& id : universe_.developers) out << id << '\n';
    out << "files\t" << universe_.files.size() << '\n';
    for (const auto& id : universe_.files) out << id << '\n';
    char buf[40];
    for (const auto& p : params_) {
        out << "param\t" << p->name << '\t' << p->value.rows << '\t' << p->value.cols << '\n';
        for (std::size_t i = 0; i < p->value.rows; ++i) {
            for (std::size_t j = 0; j < p->value.cols; ++j) {
                std::snprintf(buf, sizeof(buf), "%a", p->value.at(i, j));
                out << buf << (j + 1 < p->value.cols ? ' ' : '\n');
            }
        }
    }
}

ParamStore ParamStore::load(std::istream& in) {
    std::string line;
    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) {
            throw ValidationError(std::string("checkpoint: unexpected end reading ") + what);
        }
        return line;
    };
    if (next_line("header") != "devrec-ckpt\t1") {
        throw ValidationError("checkpoint: bad header");
    }
    ParamStore ps;
    std::istringstream cfg(next_line("config"));
    std::string tag;
    cfg >> tag >> ps.config_.hidden_dim >> ps.config_.layers >> ps.config_.tw >>
        ps.config_.dropout >> ps.config_.negatives_per_positive >> ps.config_.seed;
    if (tag != "config") throw ValidationError("checkpoint: missing config line");

    auto read_ids = [&](const char* section, std::vector<std::string>& out) {
        std::istringstream hs(next_line(section));
        std::string name;
        std::size_t count = 0;
        hs >> name >> count;
        if (name != section) throw ValidationError("checkpoint: expected " + std::string(section));
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) out.push_back(next_line("node id"));
    };
    read_ids("developers", ps.universe_.developers);
    read_ids("files", ps.universe_.files);
    for (std::size_t i = 0; i < ps.universe_.developers.size(); ++i) {
        ps.universe_.dev_index[ps.universe_.developers[i]] = i;
    }
    for (std::size_t i = 0; i < ps.universe_.files.size(); ++i) {
        ps.universe_.file_index[ps.universe_.files[i]] = i;
    }

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream hs(line);
        std::string kind, name;
        std::size_t rows = 0, cols = 0;
        hs >> kind >> name >> rows >> cols;
        if (kind != "param") throw ValidationError("checkpoint: expected param line, got " + line);
        Param& p = ps.add(name, rows, cols);
        for (std::size_t i = 0; i < rows; ++i) {
            next_line("param values");
            std::istringstream vs(line);
            for (std::size_t j = 0; j < cols; ++j) {
                std::string hex;
                if (!(vs >> hex)) throw ValidationError("checkpoint: short row in " + name);
                p.value.at(i, j) = std::strtod(hex.c_str(), nullptr);
            }
        }
    }
    // shape validation against the embedded config
    const std::size_t d = ps.config_.hidden_dim;
    for (auto& p : ps.params_) {
        const bool vec = p->name.starts_with("inter/q") || p->name.starts_with("across/q") ||
                         p->name == "target/q";
        const bool emb = p->name.starts_with("emb/");
        const bool bias = p->name.find("/b/") != std::string::npos;
        if (vec && (p->value.rows != d || p->value.cols != 1)) {
            throw ValidationError("checkpoint: " + p->name + " shape mismatch with hidden_dim");
        }
        if (bias && (p->value.rows != 1 || p->value.cols != d)) {
            throw ValidationError("checkpoint: " + p->name + " shape mismatch with hidden_dim");
        }
        if (!vec && !bias && !emb && (p->value.rows != d || p->value.cols != d)) {
            throw ValidationError("checkpoint: " + p->name + " shape mismatch with hidden_dim");
        }
        if (emb && p->value.cols != d) {
            throw ValidationError("checkpoint: " + p->name + " width mismatch with hidden_dim");
        }
    }
    return ps;
}

std::vector<double> initial_issue_embedding(const std::string& issue_id, std::uint64_t seed,
                                            std::size_t d) {
    Rng rng = Rng::substream(seed, "issue-init", fnv1a64(issue_id));
    const double bound = uniform_bound(d);
    std::vector<double> v(d);
    for (double& x : v) x = rng.uniform(-bound, bound);
    return v;
}

NodeId intra_aggregate(Tape& tape, NodeId neighbors, std::vector<std::uint32_t> offsets,
                       const std::vector<double>* weights, Param& w, Param& b, double dropout,
                       bool training, Rng* rng) {
    NodeId mean;
    if (weights) {
        const std::size_t rows = tape.value(neighbors).rows;
        if (weights->size() != rows) {
            throw autograd::ShapeError("intra_aggregate: weights length != neighbor rows");
        }
        std::vector<double> normalized(rows, 0.0);
        for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
            double total = 0.0;
            for (std::uint32_t r = offsets[s]; r < offsets[s + 1]; ++r) total += (*weights)[r];
            if (total <= 0.0) total = 1.0;
            for (std::uint32_t r = offsets[s]; r < offsets[s + 1]; ++r) {
                normalized[r] = (*weights)[r] / total;
            }
        }
        NodeId w_const = tape.constant(DenseMatrix(rows, 1, std::move(normalized)));
        mean = tape.segment_sum(tape.scale_rows(neighbors, w_const), std::move(offsets));
    } else {
        mean = tape.segment_mean(neighbors, std::move(offsets));
    }
    if (training && dropout > 0.0) {
        if (!rng) throw std::runtime_error("intra_aggregate: training dropout needs an rng");
        mean = tape.dropout(mean, dropout, true, *rng);
    }
    return tape.relu(tape.add_bias(tape.matmul(mean, tape.param(w)), tape.param(b)));
}

NodeId inter_aggregate(Tape& tape, NodeId instances, std::vector<std::uint32_t> offsets,
                       NodeId projected, Param& q, Param& w_self) {
    NodeId self_term = tape.matmul(projected, tape.param(w_self));
    if (tape.value(instances).rows == 0) {
        return tape.relu(self_term);
    }
    NodeId scores = tape.matmul(tape.tanh(instances), tape.param(q));
    NodeId alpha = tape.segment_softmax(scores, offsets);
    NodeId summed = tape.segment_sum(tape.scale_rows(instances, alpha), std::move(offsets));
    return tape.relu(tape.add(self_term, summed));
}

NodeId across_time_aggregate(Tape& tape, NodeId instances, std::vector<std::uint32_t> offsets,
                             Param& q) {
    NodeId scores = tape.matmul(instances, tape.param(q));
    NodeId beta = tape.segment_softmax(scores, offsets);
    return tape.segment_sum(tape.scale_rows(instances, beta), std::move(offsets));
}

namespace {

using relations::Edge;
using relations::Provenance;

struct RelationBlock {
    std::vector<std::uint32_t> targets;        // rows into the slice target list
    std::vector<std::uint32_t> neighbor_rows;  // rows into the source matrix
    std::vector<std::uint32_t> offsets;        // per present target
    std::vector<double> weights;
    bool weighted = false;

    bool empty() const { return targets.empty(); }
};

// neighbor lists keyed by target row, in deterministic (map) order
using AdjMap = std::map<std::uint32_t, std::vector<std::pair<std::uint32_t, double>>>;

RelationBlock block_from_adj(const AdjMap& adj, bool weighted) {
    RelationBlock blk;
    blk.weighted = weighted;
    blk.offsets.push_back(0);
    for (const auto& [target, neigh] : adj) {
        blk.targets.push_back(target);
        for (const auto& [row, w] : neigh) {
            blk.neighbor_rows.push_back(row);
            blk.weights.push_back(w);
        }
        blk.offsets.push_back(static_cast<std::uint32_t>(blk.neighbor_rows.size()));
    }
    return blk;
}

// Per-slice contexts share this node bookkeeping.
struct SliceNodes {
    std::vector<std::string> issues;  // home + visiting, sorted
    std::unordered_map<std::string, std::uint32_t> issue_row;
    std::vector<std::uint32_t> dev_rows;   // window rows present in the slice
    std::vector<std::uint32_t> file_rows;  // window rows present in the slice
    std::unordered_map<std::uint32_t, std::uint32_t> dev_pos;   // window row -> slice pos
    std::unordered_map<std::uint32_t, std::uint32_t> file_pos;  // window row -> slice pos
};

// Edges of one slice with the per-issue Similar provenance choice applied:
// traced when the issue has any traced edge in the slice, textual otherwise.
std::vector<const Edge*> active_edges(const htg::Snapshot& snap) {
    std::set<std::string> has_traced;
    for (const Edge& e : snap.edges) {
        if (e.relation == RelationType::Similar && e.provenance == Provenance::Traced) {
            has_traced.insert(e.src.id);
        }
    }
    std::vector<const Edge*> out;
    out.reserve(snap.edges.size());
    for (const Edge& e : snap.edges) {
        if (e.relation == RelationType::Similar) {
            const bool traced = e.provenance == Provenance::Traced;
            if (has_traced.contains(e.src.id) != traced) continue;
        }
        out.push_back(&e);
    }
    return out;
}

struct WindowIndex {
    std::vector<std::string> devs;   // union over input slices, sorted
    std::vector<std::string> files;
    std::unordered_map<std::string, std::uint32_t> dev_row;
    std::unordered_map<std::string, std::uint32_t> file_row;
};

}  // namespace

ForwardResult forward_window(const htg::Htg& g, const htg::WindowBatch& batch,
                             ParamStore& params, const ForwardOptions& opts) {
    const ModelConfig& cfg = params.config();
    const NodeUniverse& uni = params.universe();
    const std::size_t d = cfg.hidden_dim;
    const std::size_t L = cfg.layers;
    const std::size_t n_slices = batch.input_slices.size();
    if (n_slices == 0 || n_slices > cfg.tw) {
        throw ValidationError("forward_window: window size does not fit the model config");
    }
    for (std::size_t t : batch.input_slices) {
        if (t < 1 || t > g.T()) throw ValidationError("forward_window: slice out of range");
    }
    if (opts.training && cfg.dropout > 0.0 && !opts.dropout_rng) {
        throw std::runtime_error("forward_window: training requires a dropout rng");
    }

    ForwardResult fr;
    Tape& tape = fr.tape;

    // window-level node union
    WindowIndex win;
    {
        std::set<std::string> devs, files;
        for (std::size_t t : batch.input_slices) {
            const htg::Snapshot& s = g.snapshots[t - 1];
            devs.insert(s.developers.begin(), s.developers.end());
            files.insert(s.files.begin(), s.files.end());
        }
        win.devs.assign(devs.begin(), devs.end());
        win.files.assign(files.begin(), files.end());
        for (std::uint32_t i = 0; i < win.devs.size(); ++i) win.dev_row[win.devs[i]] = i;
        for (std::uint32_t i = 0; i < win.files.size(); ++i) win.file_row[win.files[i]] = i;
    }

    std::vector<SliceNodes> slice_nodes(n_slices);
    std::vector<std::vector<const Edge*>> slice_edges(n_slices);
    for (std::size_t si = 0; si < n_slices; ++si) {
        const htg::Snapshot& snap = g.snapshots[batch.input_slices[si] - 1];
        SliceNodes& sn = slice_nodes[si];
        sn.issues.reserve(snap.issues.size() + snap.visiting_issues.size());
        sn.issues.insert(sn.issues.end(), snap.issues.begin(), snap.issues.end());
        sn.issues.insert(sn.issues.end(), snap.visiting_issues.begin(),
                         snap.visiting_issues.end());
        std::sort(sn.issues.begin(), sn.issues.end());
        for (std::uint32_t i = 0; i < sn.issues.size(); ++i) sn.issue_row[sn.issues[i]] = i;
        for (const std::string& id : snap.developers) {
            const std::uint32_t w = win.dev_row.at(id);
            sn.dev_pos[w] = static_cast<std::uint32_t>(sn.dev_rows.size());
            sn.dev_rows.push_back(w);
        }
        for (const std::string& id : snap.files) {
            const std::uint32_t w = win.file_row.at(id);
            sn.file_pos[w] = static_cast<std::uint32_t>(sn.file_rows.size());
            sn.file_rows.push_back(w);
        }
        slice_edges[si] = active_edges(snap);
    }

    // layer-0 embeddings
    NodeId dev_window = tape.gather_rows(tape.param(params.at("emb/developer")), [&] {
        std::vector<std::uint32_t> rows;
        rows.reserve(win.devs.size());
        for (const std::string& id : win.devs) {
            rows.push_back(static_cast<std::uint32_t>(uni.dev_index.at(id)));
        }
        return rows;
    }());
    NodeId file_window = tape.gather_rows(tape.param(params.at("emb/file")), [&] {
        std::vector<std::uint32_t> rows;
        rows.reserve(win.files.size());
        for (const std::string& id : win.files) {
            rows.push_back(static_cast<std::uint32_t>(uni.file_index.at(id)));
        }
        return rows;
    }());

    std::vector<NodeId> issue_emb(n_slices);
    for (std::size_t si = 0; si < n_slices; ++si) {
        const SliceNodes& sn = slice_nodes[si];
        DenseMatrix init(sn.issues.size(), d);
        for (std::size_t i = 0; i < sn.issues.size(); ++i) {
            const auto v = initial_issue_embedding(sn.issues[i], cfg.seed, d);
            std::memcpy(init.data() + i * d, v.data(), d * sizeof(double));
        }
        issue_emb[si] = tape.constant(std::move(init));
    }

    auto project = [&](NodeId x, NodeType t) {
        return tape.add_bias(tape.matmul(x, tape.param(params.at(ParamStore::proj_w(t)))),
                             tape.param(params.at(ParamStore::proj_b(t))));
    };

    // relation blocks per slice per target type, built once and reused per layer
    struct SliceBlocks {
        std::map<RelationType, RelationBlock> issue_t;  // issue targets
        std::map<RelationType, RelationBlock> dev_t;
        std::map<RelationType, RelationBlock> file_t;
    };
    std::vector<SliceBlocks> blocks(n_slices);
    for (std::size_t si = 0; si < n_slices; ++si) {
        const SliceNodes& sn = slice_nodes[si];
        std::map<RelationType, AdjMap> issue_adj, dev_adj, file_adj;
        for (const Edge* e : slice_edges[si]) {
            switch (e->relation) {
                case RelationType::Report:
                case RelationType::Comment: {
                    const std::uint32_t irow = sn.issue_row.at(e->src.id);
                    const std::uint32_t dwin = win.dev_row.at(e->dst.id);
                    issue_adj[e->relation][irow].emplace_back(dwin, e->weight);
                    dev_adj[e->relation][sn.dev_pos.at(dwin)].emplace_back(irow, e->weight);
                    break;
                }
                case RelationType::Create:
                case RelationType::Remove: {
                    const std::uint32_t dwin = win.dev_row.at(e->src.id);
                    const std::uint32_t fwin = win.file_row.at(e->dst.id);
                    dev_adj[e->relation][sn.dev_pos.at(dwin)].emplace_back(fwin, e->weight);
                    file_adj[e->relation][sn.file_pos.at(fwin)].emplace_back(dwin, e->weight);
                    break;
                }
                case RelationType::Similar: {
                    const std::uint32_t irow = sn.issue_row.at(e->src.id);
                    const std::uint32_t fwin = win.file_row.at(e->dst.id);
                    issue_adj[e->relation][irow].emplace_back(fwin, e->weight);
                    file_adj[e->relation][sn.file_pos.at(fwin)].emplace_back(irow, e->weight);
                    break;
                }
            }
        }
        for (auto& [r, adj] : issue_adj) {
            blocks[si].issue_t[r] = block_from_adj(adj, r == RelationType::Similar);
        }
        for (auto& [r, adj] : dev_adj) {
            blocks[si].dev_t[r] = block_from_adj(adj, false);
        }
        for (auto& [r, adj] : file_adj) {
            blocks[si].file_t[r] = block_from_adj(adj, r == RelationType::Similar);
        }
    }

    // one spatial step for one target type in one slice
    auto spatial = [&](std::size_t si, std::size_t layer, NodeType type, NodeId prev_targets,
                       const std::map<RelationType, RelationBlock>& rel_blocks,
                       const std::function<NodeId(RelationType)>& source_of) -> NodeId {
        const std::size_t offset = si;  // window offset of this slice
        const std::size_t n_targets = tape.value(prev_targets).rows;

        // intra per relation, then instances grouped by target
        std::vector<std::pair<RelationType, const RelationBlock*>> present;
        std::vector<NodeId> intra_out;
        for (const auto& [r, blk] : rel_blocks) {
            if (blk.empty()) continue;
            NodeId gathered = tape.gather_rows(source_of(r), blk.neighbor_rows);
            NodeId h = intra_aggregate(tape, gathered, blk.offsets,
                                       blk.weighted ? &blk.weights : nullptr,
                                       params.at(ParamStore::intra_w(r, offset, layer)),
                                       params.at(ParamStore::intra_b(r, offset, layer)),
                                       cfg.dropout, opts.training, opts.dropout_rng);
            present.emplace_back(r, &blk);
            intra_out.push_back(h);
        }

        NodeId projected = project(prev_targets, type);
        Param& q = params.at(ParamStore::inter_q(offset, layer));
        Param& w_self = params.at(ParamStore::inter_w_self(type, offset, layer));

        if (present.empty()) {
            return inter_aggregate(tape, tape.constant(DenseMatrix(0, d)),
                                   std::vector<std::uint32_t>(n_targets + 1, 0), projected, q,
                                   w_self);
        }

        NodeId stacked = intra_out[0];
        for (std::size_t i = 1; i < intra_out.size(); ++i) {
            stacked = tape.concat_rows(stacked, intra_out[i]);
        }
        // permutation grouping instance rows by target
        std::vector<std::vector<std::uint32_t>> per_target(n_targets);
        std::uint32_t base = 0;
        for (std::size_t i = 0; i < present.size(); ++i) {
            const RelationBlock& blk = *present[i].second;
            for (std::uint32_t j = 0; j < blk.targets.size(); ++j) {
                per_target[blk.targets[j]].push_back(base + j);
            }
            base += static_cast<std::uint32_t>(blk.targets.size());
        }
        std::vector<std::uint32_t> perm;
        std::vector<std::uint32_t> offsets{0};
        for (std::size_t t = 0; t < n_targets; ++t) {
            for (std::uint32_t row : per_target[t]) perm.push_back(row);
            offsets.push_back(static_cast<std::uint32_t>(perm.size()));
        }
        NodeId instances = tape.gather_rows(stacked, std::move(perm));
        return inter_aggregate(tape, instances, std::move(offsets), projected, q, w_self);
    };

    // L layers of project -> intra -> inter -> across-time
    for (std::size_t layer = 0; layer < L; ++layer) {
        std::vector<NodeId> dev_spatial(n_slices), file_spatial(n_slices);
        std::vector<NodeId> issue_next(n_slices);
        for (std::size_t si = 0; si < n_slices; ++si) {
            const SliceNodes& sn = slice_nodes[si];
            NodeId dev_prev_slice = tape.gather_rows(dev_window, sn.dev_rows);
            NodeId file_prev_slice = tape.gather_rows(file_window, sn.file_rows);

            auto source_for_issue_targets = [&](RelationType r) {
                return (r == RelationType::Similar) ? file_window : dev_window;
            };
            auto source_for_dev_targets = [&](RelationType r) {
                return (r == RelationType::Report || r == RelationType::Comment)
                           ? issue_emb[si]
                           : file_window;
            };
            auto source_for_file_targets = [&](RelationType r) {
                return (r == RelationType::Similar) ? issue_emb[si] : dev_window;
            };

            issue_next[si] = spatial(si, layer, NodeType::Issue, issue_emb[si],
                                     blocks[si].issue_t, source_for_issue_targets);
            dev_spatial[si] = spatial(si, layer, NodeType::Developer, dev_prev_slice,
                                      blocks[si].dev_t, source_for_dev_targets);
            file_spatial[si] = spatial(si, layer, NodeType::File, file_prev_slice,
                                       blocks[si].file_t, source_for_file_targets);
        }
        for (std::size_t si = 0; si < n_slices; ++si) issue_emb[si] = issue_next[si];

        // across-time fusion per node type over the window
        auto fuse = [&](const std::vector<NodeId>& spatial_out,
                        const std::vector<std::vector<std::uint32_t>>& slice_rows,
                        const std::vector<std::unordered_map<std::uint32_t, std::uint32_t>>& pos,
                        std::size_t n_nodes, NodeType type) -> NodeId {
            NodeId stacked = spatial_out[0];
            std::vector<std::uint32_t> slice_base(n_slices, 0);
            for (std::size_t si = 1; si < n_slices; ++si) {
                slice_base[si] =
                    slice_base[si - 1] + static_cast<std::uint32_t>(slice_rows[si - 1].size());
                stacked = tape.concat_rows(stacked, spatial_out[si]);
            }
            std::vector<std::uint32_t> perm;
            std::vector<std::uint32_t> offsets{0};
            for (std::uint32_t node = 0; node < n_nodes; ++node) {
                for (std::size_t si = 0; si < n_slices; ++si) {
                    auto it = pos[si].find(node);
                    if (it != pos[si].end()) perm.push_back(slice_base[si] + it->second);
                }
                offsets.push_back(static_cast<std::uint32_t>(perm.size()));
            }
            NodeId instances = tape.gather_rows(stacked, std::move(perm));
            return across_time_aggregate(tape, instances, std::move(offsets),
                                         params.at(ParamStore::across_q(type, layer)));
        };

        std::vector<std::vector<std::uint32_t>> dev_slice_rows(n_slices),
            file_slice_rows(n_slices);
        std::vector<std::unordered_map<std::uint32_t, std::uint32_t>> dev_pos(n_slices),
            file_pos(n_slices);
        for (std::size_t si = 0; si < n_slices; ++si) {
            dev_slice_rows[si] = slice_nodes[si].dev_rows;
            file_slice_rows[si] = slice_nodes[si].file_rows;
            dev_pos[si] = slice_nodes[si].dev_pos;
            file_pos[si] = slice_nodes[si].file_pos;
        }
        dev_window = fuse(dev_spatial, dev_slice_rows, dev_pos, win.devs.size(),
                          NodeType::Developer);
        file_window = fuse(file_spatial, file_slice_rows, file_pos, win.files.size(),
                           NodeType::File);
    }

    // final embeddings: window nodes sum the (identical) per-slice terms;
    // absent universe nodes fall back to the projected base embedding
    auto assemble = [&](NodeId window_node, const std::vector<std::string>& window_ids,
                        const std::unordered_map<std::string, std::uint32_t>& window_row,
                        const std::vector<std::string>& universe_ids, const char* emb_name,
                        NodeType type) -> NodeId {
        NodeId present = tape.scale(window_node, static_cast<double>(n_slices));
        std::vector<std::uint32_t> absent_rows;
        std::unordered_map<std::string, std::uint32_t> absent_pos;
        for (std::uint32_t i = 0; i < universe_ids.size(); ++i) {
            if (!window_row.contains(universe_ids[i])) {
                absent_pos[universe_ids[i]] = static_cast<std::uint32_t>(absent_rows.size());
                absent_rows.push_back(i);
            }
        }
        NodeId combined = present;
        if (!absent_rows.empty()) {
            NodeId absent =
                project(tape.gather_rows(tape.param(params.at(emb_name)), absent_rows), type);
            combined = tape.concat_rows(present, absent);
        }
        std::vector<std::uint32_t> perm(universe_ids.size());
        const auto n_window = static_cast<std::uint32_t>(window_ids.size());
        for (std::uint32_t i = 0; i < universe_ids.size(); ++i) {
            auto it = window_row.find(universe_ids[i]);
            perm[i] = it != window_row.end() ? it->second : n_window + absent_pos[universe_ids[i]];
        }
        return tape.gather_rows(combined, std::move(perm));
    };

    fr.dev_final = assemble(dev_window, win.devs, win.dev_row, uni.developers, "emb/developer",
                            NodeType::Developer);
    fr.file_final = assemble(file_window, win.files, win.file_row, uni.files, "emb/file",
                             NodeType::File);

    // target pass: one spatial block over the target slice's Report/Comment/
    // textual-Similar edges, neighbor inputs = final dev/file embeddings
    const htg::Snapshot& target = g.snapshots[batch.target_slice - 1];
    fr.target_issues = target.issues;
    const std::size_t n_t = fr.target_issues.size();
    std::unordered_map<std::string, std::uint32_t> t_row;
    for (std::uint32_t i = 0; i < n_t; ++i) t_row[fr.target_issues[i]] = i;

    std::map<RelationType, AdjMap> t_adj;
    for (const Edge& e : target.edges) {
        if (e.src.type != NodeType::Issue) continue;
        auto it = t_row.find(e.src.id);
        if (it == t_row.end()) continue;  // visiting issues are not queries
        if (e.relation == RelationType::Similar) {
            if (e.provenance != Provenance::Textual) continue;
            t_adj[e.relation][it->second].emplace_back(
                static_cast<std::uint32_t>(uni.file_index.at(e.dst.id)), e.weight);
        } else {
            t_adj[e.relation][it->second].emplace_back(
                static_cast<std::uint32_t>(uni.dev_index.at(e.dst.id)), e.weight);
        }
    }

    DenseMatrix t_init(n_t, d);
    std::vector<bool> has_edge(n_t, false);
    for (std::size_t i = 0; i < n_t; ++i) {
        const auto v = initial_issue_embedding(fr.target_issues[i], cfg.seed, d);
        std::memcpy(t_init.data() + i * d, v.data(), d * sizeof(double));
    }
    for (const auto& [r, adj] : t_adj) {
        for (const auto& [row, neigh] : adj) has_edge[row] = true;
    }

    // connected issues run the spatial block with the last offset/layer
    std::vector<std::uint32_t> connected;
    std::unordered_map<std::uint32_t, std::uint32_t> connected_pos;
    for (std::uint32_t i = 0; i < n_t; ++i) {
        if (has_edge[i]) {
            connected_pos[i] = static_cast<std::uint32_t>(connected.size());
            connected.push_back(i);
        } else {
            fr.flagged_zero_edge.push_back(fr.target_issues[i]);
        }
    }

    NodeId init_all = tape.constant(t_init);
    if (connected.empty()) {
        fr.issue_emb = init_all;
        return fr;
    }

    std::map<RelationType, RelationBlock> t_blocks;
    for (const auto& [r, adj] : t_adj) {
        AdjMap remapped;
        for (const auto& [row, neigh] : adj) remapped[connected_pos.at(row)] = neigh;
        t_blocks[r] = block_from_adj(remapped, r == RelationType::Similar);
    }

    NodeId init_connected = tape.gather_rows(init_all, connected);

    std::vector<std::pair<RelationType, const RelationBlock*>> present;
    std::vector<NodeId> intra_out;
    for (const auto& [r, blk] : t_blocks) {
        NodeId source = (r == RelationType::Similar) ? fr.file_final : fr.dev_final;
        NodeId gathered = tape.gather_rows(source, blk.neighbor_rows);
        NodeId h = intra_aggregate(tape, gathered, blk.offsets,
                                   blk.weighted ? &blk.weights : nullptr,
                                   params.at(ParamStore::target_w(r)),
                                   params.at(ParamStore::target_b(r)),
                                   cfg.dropout, opts.training, opts.dropout_rng);
        present.emplace_back(r, &blk);
        intra_out.push_back(h);
    }
    NodeId stacked = intra_out[0];
    for (std::size_t i = 1; i < intra_out.size(); ++i) {
        stacked = tape.concat_rows(stacked, intra_out[i]);
    }
    std::vector<std::vector<std::uint32_t>> per_target(connected.size());
    std::uint32_t base = 0;
    for (auto& [r, blk] : present) {
        for (std::uint32_t j = 0; j < blk->targets.size(); ++j) {
            per_target[blk->targets[j]].push_back(base + j);
        }
        base += static_cast<std::uint32_t>(blk->targets.size());
    }
    std::vector<std::uint32_t> perm;
    std::vector<std::uint32_t> offsets{0};
    for (std::size_t t = 0; t < connected.size(); ++t) {
        for (std::uint32_t row : per_target[t]) perm.push_back(row);
        offsets.push_back(static_cast<std::uint32_t>(perm.size()));
    }
    NodeId instances = tape.gather_rows(stacked, std::move(perm));
    NodeId projected = tape.add_bias(
        tape.matmul(init_connected, tape.param(params.at(ParamStore::proj_w(NodeType::Issue)))),
        tape.param(params.at(ParamStore::proj_b(NodeType::Issue))));
    NodeId spatial_out = inter_aggregate(tape, instances, std::move(offsets), projected,
                                         params.at("target/q"), params.at("target/Wself"));

    if (connected.size() == n_t) {
        fr.issue_emb = spatial_out;
    } else {
        // zero-edge issues keep the raw seeded feature, flagged above
        NodeId combined = tape.concat_rows(spatial_out, init_all);
        std::vector<std::uint32_t> rows(n_t);
        for (std::uint32_t i = 0; i < n_t; ++i) {
            auto it = connected_pos.find(i);
            rows[i] = it != connected_pos.end()
                          ? it->second
                          : static_cast<std::uint32_t>(connected.size()) + i;
        }
        fr.issue_emb = tape.gather_rows(combined, std::move(rows));
    }
    return fr;
}

double score(std::span<const double> issue_embedding, std::span<const double> dev_embedding) {
    if (issue_embedding.size() != dev_embedding.size()) {
        throw autograd::ShapeError("score: embedding lengths differ");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < issue_embedding.size(); ++i) {
        acc += issue_embedding[i] * dev_embedding[i];
    }
    return acc;
}

std::vector<std::pair<std::string, double>> recommend(
    std::span<const double> issue_embedding,
    const std::vector<std::pair<std::string, std::span<const double>>>& candidates,
    std::size_t top_n) {
    if (candidates.empty()) {
        throw ValidationError("recommend: empty candidate set");
    }
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(candidates.size());
    for (const auto& [id, emb] : candidates) {
        scored.emplace_back(id, score(issue_embedding, emb));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > top_n) scored.resize(top_n);
    return scored;
}

std::vector<double> embed_issue_single(
    const std::vector<double>& issue_init,
    const std::vector<std::vector<double>>& report_neighbors,
    const std::vector<std::vector<double>>& comment_neighbors,
    const std::vector<std::pair<std::vector<double>, double>>& similar_neighbors,
    const ParamStore& params) {
    const ModelConfig& cfg = params.config();
    const std::size_t d = cfg.hidden_dim;

    auto linear = [&](const std::vector<double>& x, const Param& w, const Param& b) {
        std::vector<double> y(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) y[j] += x[i] * w.value.at(i, j);
        }
        for (std::size_t j = 0; j < d; ++j) y[j] += b.value.at(0, j);
        return y;
    };
    auto matvec = [&](const std::vector<double>& x, const Param& w) {
        std::vector<double> y(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) y[j] += x[i] * w.value.at(i, j);
        }
        return y;
    };
    auto relu_vec = [&](std::vector<double> v) {
        for (double& x : v) x = x > 0.0 ? x : 0.0;
        return v;
    };

    struct Rel {
        RelationType r;
        std::vector<double> h;
    };
    std::vector<Rel> rels;
    auto add_rel = [&](RelationType r, const std::vector<std::vector<double>>& neigh,
                       const std::vector<double>* weights) {
        if (neigh.empty()) return;
        std::vector<double> mean(d, 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < neigh.size(); ++i) {
            const double w = weights ? (*weights)[i] : 1.0;
            total += w;
            for (std::size_t j = 0; j < d; ++j) mean[j] += w * neigh[i][j];
        }
        if (total <= 0.0) total = 1.0;
        for (double& x : mean) x /= total;
        auto h = relu_vec(linear(mean, params.at(ParamStore::target_w(r)),
                                 params.at(ParamStore::target_b(r))));
        rels.push_back({r, std::move(h)});
    };
    add_rel(RelationType::Report, report_neighbors, nullptr);
    add_rel(RelationType::Comment, comment_neighbors, nullptr);
    if (!similar_neighbors.empty()) {
        std::vector<std::vector<double>> neigh;
        std::vector<double> weights;
        for (const auto& [v, w] : similar_neighbors) {
            neigh.push_back(v);
            weights.push_back(w);
        }
        add_rel(RelationType::Similar, neigh, &weights);
    }

    if (rels.empty()) return issue_init;  // zero-edge issue keeps the seed

    const Param& q = params.at("target/q");
    std::vector<double> scores;
    scores.reserve(rels.size());
    for (const Rel& rel : rels) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += std::tanh(rel.h[j]) * q.value.at(j, 0);
        scores.push_back(s);
    }
    const double mx = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double& s : scores) {
        s = std::exp(s - mx);
        z += s;
    }
    for (double& s : scores) s /= z;

    std::vector<double> fused(d, 0.0);
    for (std::size_t i = 0; i < rels.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) fused[j] += scores[i] * rels[i].h[j];
    }
    auto projected = linear(issue_init, params.at(ParamStore::proj_w(NodeType::Issue)),
                            params.at(ParamStore::proj_b(NodeType::Issue)));
    auto self_term = matvec(projected, params.at("target/Wself"));
    for (std::size_t j = 0; j < d; ++j) fused[j] += self_term[j];
    return relu_vec(std::move(fused));
}

std::vector<std::string> candidate_pool(const htg::Htg& g, const htg::Split& split) {
    std::set<std::string> pool;
    for (std::size_t t : split.train) {
        const htg::Snapshot& s = g.snapshots[t - 1];
        pool.insert(s.developers.begin(), s.developers.end());
        for (const std::string& issue : s.issues) {
            auto it = g.fixers.find(issue);
            if (it != g.fixers.end()) pool.insert(it->second.begin(), it->second.end());
        }
    }
    return {pool.begin(), pool.end()};
}

}  // namespace devrec::model
