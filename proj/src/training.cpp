#include "devrec/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <set>

namespace devrec::training {

using autograd::NodeId;
using model::ForwardResult;

std::vector<std::string> sample_negatives(const std::set<std::string>& fixers,
                                          const std::vector<std::string>& candidates,
                                          std::size_t k, Rng& rng) {
    std::vector<std::string> pool;
    pool.reserve(candidates.size());
    for (const std::string& c : candidates) {
        if (!fixers.contains(c)) pool.push_back(c);
    }
    if (pool.empty()) return {};
    if (pool.size() <= k) return pool;
    std::vector<std::string> out;
    out.reserve(k);
    for (std::size_t idx : rng.sample_without_replacement(pool.size(), k)) {
        out.push_back(pool[idx]);
    }
    return out;
}

NodeId hinge_ranking_loss(ForwardResult& fr, const std::vector<Triple>& triples, double margin) {
    if (triples.empty()) {
        throw ValidationError("hinge_ranking_loss: no triples");
    }
    auto& tape = fr.tape;
    std::vector<std::uint32_t> issue_idx, pos_idx, neg_idx;
    issue_idx.reserve(triples.size());
    pos_idx.reserve(triples.size());
    neg_idx.reserve(triples.size());
    for (const Triple& t : triples) {
        issue_idx.push_back(t.issue_row);
        pos_idx.push_back(t.pos_dev_row);
        neg_idx.push_back(t.neg_dev_row);
    }
    NodeId issues = tape.gather_rows(fr.issue_emb, std::move(issue_idx));
    NodeId y_pos = tape.row_inner_product(issues, tape.gather_rows(fr.dev_final, std::move(pos_idx)));
    NodeId y_neg = tape.row_inner_product(issues, tape.gather_rows(fr.dev_final, std::move(neg_idx)));
    NodeId margin_col = tape.constant(
        autograd::DenseMatrix::filled(triples.size(), 1, margin));
    NodeId arg = tape.add(tape.add(margin_col, tape.scale(y_pos, -1.0)), y_neg);
    NodeId hinged = tape.relu(arg);
    return tape.scale(tape.sum_all(hinged), 1.0 / static_cast<double>(triples.size()));
}

namespace {

struct PreparedTriples {
    std::vector<Triple> triples;
    std::size_t skipped = 0;
};

PreparedTriples make_triples(const htg::WindowBatch& batch,
                             const std::vector<std::string>& target_issues,
                             const model::NodeUniverse& uni, const htg::Htg& g,
                             const std::vector<std::string>& candidates, std::size_t k,
                             Rng& rng) {
    std::unordered_map<std::string, std::uint32_t> issue_row;
    for (std::uint32_t i = 0; i < target_issues.size(); ++i) issue_row[target_issues[i]] = i;
    PreparedTriples out;
    for (const auto& [issue, fixer] : batch.positives) {
        auto ir = issue_row.find(issue);
        auto dr = uni.dev_index.find(fixer);
        if (ir == issue_row.end() || dr == uni.dev_index.end()) {
            out.skipped += 1;
            continue;
        }
        const std::set<std::string>& fixers = g.fixers.at(issue);
        std::vector<std::string> negs = sample_negatives(fixers, candidates, k, rng);
        if (negs.empty()) {
            out.skipped += 1;
            continue;
        }
        for (const std::string& neg : negs) {
            out.triples.push_back(Triple{ir->second, static_cast<std::uint32_t>(dr->second),
                                         static_cast<std::uint32_t>(uni.dev_index.at(neg))});
        }
    }
    return out;
}

}  // namespace

BatchLoss batch_loss(const htg::Htg& g, const htg::WindowBatch& batch,
                     model::ParamStore& params, const std::vector<std::string>& candidates,
                     const TrainConfig& cfg, Rng& negative_rng, bool training, Rng* dropout_rng,
                     autograd::NodeId* loss_node, model::ForwardResult* out_fr) {
    model::ForwardOptions opts;
    opts.training = training;
    opts.dropout_rng = dropout_rng;
    auto fr = std::make_unique<ForwardResult>(model::forward_window(g, batch, params, opts));

    PreparedTriples prepared = make_triples(batch, fr->target_issues, params.universe(), g,
                                            candidates, cfg.negatives, negative_rng);
    if (prepared.triples.empty()) {
        throw ValidationError("batch_loss: no usable positives in target slice " +
                              std::to_string(batch.target_slice));
    }
    NodeId loss = hinge_ranking_loss(*fr, prepared.triples, cfg.margin);
    BatchLoss result;
    result.value = fr->tape.value(loss).values[0];
    result.triples = prepared.triples.size();
    result.skipped_positives = prepared.skipped;
    if (loss_node) *loss_node = loss;
    if (out_fr) *out_fr = std::move(*fr);
    return result;
}

TrainResult train(const htg::Htg& g, const htg::Split& split, const model::ModelConfig& mcfg,
                  const TrainConfig& tcfg, std::ostream* log) {
    const htg::WindowPlan plan = htg::window_batches(g, mcfg.tw, split);
    model::NodeUniverse universe = model::NodeUniverse::from_htg(g);
    model::ParamStore params = model::ParamStore::init(mcfg, std::move(universe));
    const std::vector<std::string> candidates = model::candidate_pool(g, split);
    if (candidates.empty()) {
        throw ValidationError("train: empty candidate pool");
    }
    autograd::AdamConfig acfg;
    acfg.lr = tcfg.lr;
    acfg.weight_decay = tcfg.weight_decay;
    autograd::AdamState adam(acfg);
    std::vector<autograd::Param*> param_ptrs = params.all();

    if (log) {
        *log << "parameters: " << params.total_coords() << " coordinates in "
             << param_ptrs.size() << " groups; candidates: " << candidates.size()
             << "; training batches: " << plan.training.size() << "\n";
    }

    // validation triples are frozen for the whole run and rank every
    // candidate negative, so early stopping tracks margins against the
    // hardest negatives instead of a sampling-noise proxy
    Rng val_rng = Rng::substream(tcfg.seed, "val-negatives");
    std::vector<std::vector<Triple>> val_triples;
    std::size_t val_total_triples = 0;
    for (const htg::WindowBatch& vb : plan.validation) {
        const htg::Snapshot& snap = g.snapshots[vb.target_slice - 1];
        PreparedTriples p = make_triples(vb, snap.issues, params.universe(), g, candidates,
                                         candidates.size(), val_rng);
        val_total_triples += p.triples.size();
        val_triples.push_back(std::move(p.triples));
    }
    if (val_total_triples == 0) {
        throw ValidationError("train: validation slice has no usable positives");
    }

    auto validation_loss = [&]() {
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < plan.validation.size(); ++i) {
            if (val_triples[i].empty()) continue;
            model::ForwardOptions opts;  // dropout off
            ForwardResult fr = model::forward_window(g, plan.validation[i], params, opts);
            NodeId loss = hinge_ranking_loss(fr, val_triples[i], tcfg.margin);
            total += fr.tape.value(loss).values[0] * static_cast<double>(val_triples[i].size());
            count += val_triples[i].size();
        }
        return total / static_cast<double>(count);
    };

    TrainResult result;
    result.best = params;  // epoch-0 fallback
    TrainHistory& hist = result.history;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        const auto wall_start = std::chrono::steady_clock::now();
        Rng neg_rng = Rng::substream(tcfg.seed, "negatives", epoch);
        Rng drop_rng = Rng::substream(tcfg.seed, "dropout", epoch);

        double train_total = 0.0;
        std::size_t train_triples = 0;
        bool nan_seen = false;
        for (const htg::WindowBatch& batch : plan.training) {
            params.zero_grads();
            NodeId loss_node = -1;
            ForwardResult fr;
            BatchLoss bl = batch_loss(g, batch, params, candidates, tcfg, neg_rng, true,
                                      &drop_rng, &loss_node, &fr);
            if (!std::isfinite(bl.value)) {
                nan_seen = true;
                break;
            }
            fr.tape.backward(loss_node);
            adam.step(param_ptrs);
            train_total += bl.value * static_cast<double>(bl.triples);
            train_triples += bl.triples;
        }
        if (nan_seen) {
            hist.aborted_nan = true;
            if (log) *log << "epoch " << epoch << ": non-finite loss, aborting with last good checkpoint\n";
            break;
        }

        EpochStats es;
        es.epoch = epoch;
        es.train_loss = train_total / static_cast<double>(std::max<std::size_t>(train_triples, 1));
        es.val_loss = validation_loss();
        es.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                               wall_start)
                         .count();
        hist.epochs.push_back(es);
        if (log) {
            *log << "epoch " << epoch << ": train " << es.train_loss << " val " << es.val_loss
                 << "\n";
        }
        if (!std::isfinite(es.val_loss)) {
            hist.aborted_nan = true;
            break;
        }

        if (es.val_loss < best_val) {
            best_val = es.val_loss;
            hist.best_epoch = epoch;
            hist.best_val_loss = es.val_loss;
            result.best = params;
            since_best = 0;
        } else {
            since_best += 1;
            if (since_best >= tcfg.patience) {
                if (log) {
                    *log << "early stop at epoch " << epoch << " (best " << hist.best_epoch
                         << ")\n";
                }
                break;
            }
        }
    }
    if (hist.best_epoch == 0 && !hist.epochs.empty()) {
        hist.best_epoch = 1;
        hist.best_val_loss = hist.epochs.front().val_loss;
    }
    return result;
}

void write_history_tsv(std::ostream& out, const TrainHistory& history) {
    out << "epoch\ttrain_loss\tval_loss\twall_ms\tbest\n";
    char buf[96];
    for (const EpochStats& e : history.epochs) {
        std::snprintf(buf, sizeof(buf), "%zu\t%.9g\t%.9g\t%.3f\t%s\n", e.epoch, e.train_loss,
                      e.val_loss, e.wall_ms, e.epoch == history.best_epoch ? "*" : "-");
        out << buf;
    }
}

}  // namespace devrec::training
