#include "devrec/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace devrec::pipeline {

std::map<std::string, std::string> RunConfig::to_kv() const {
    std::map<std::string, std::string> kv;
    auto put = [&](const char* k, auto v) {
        if constexpr (std::is_floating_point_v<decltype(v)>) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.9g", v);
            kv[k] = buf;
        } else {
            kv[k] = std::to_string(v);
        }
    };
    put("similar.k", similar_k);
    put("similar.tau", similar_tau);
    put("graph.slices", slices);
    put("split.train", train_parts);
    put("split.val", val_parts);
    put("split.test", test_parts);
    put("model.hidden_dim", model.hidden_dim);
    put("model.layers", model.layers);
    put("model.tw", model.tw);
    put("model.dropout", model.dropout);
    put("model.negatives", model.negatives_per_positive);
    put("model.seed", model.seed);
    put("train.epochs", train.epochs);
    put("train.patience", train.patience);
    put("train.lr", train.lr);
    put("train.weight_decay", train.weight_decay);
    put("train.margin", train.margin);
    put("train.negatives", train.negatives);
    put("train.seed", train.seed);
    put("baseline.half_life_days", baseline_half_life_days);
    return kv;
}

std::uint64_t file_hash(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("file_hash: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof(buf));
        const std::streamsize got = f.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

void write_labels_tsv(std::ostream& out, const std::vector<corpus::LabeledIssue>& labeled) {
    out << "issue_id\tcreated_at\tclosed_at\tfixers\n";
    for (const corpus::LabeledIssue& li : labeled) {
        out << li.issue->issue_id << '\t' << li.issue->created_at << '\t';
        if (li.issue->closed_at) {
            out << *li.issue->closed_at;
        } else {
            out << '-';
        }
        out << '\t';
        if (li.fixers.empty()) {
            out << '-';
        } else {
            bool first = true;
            for (const std::string& f : li.fixers) {
                if (!first) out << ',';
                out << f;
                first = false;
            }
        }
        out << '\n';
    }
}

LabelRows read_labels_tsv(std::istream& in) {
    LabelRows rows;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::set<std::string>> fixer_sets;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("issue_id", 0) == 0) continue;
        std::istringstream ss(line);
        std::string id, created, closed, fixers;
        if (!std::getline(ss, id, '\t') || !std::getline(ss, created, '\t') ||
            !std::getline(ss, closed, '\t') || !std::getline(ss, fixers)) {
            throw ParseError("labels line " + std::to_string(line_no) + ": expected 4 columns");
        }
        IssueRecord rec;
        rec.issue_id = id;
        rec.created_at = parse_timestamp(created);
        if (closed != "-") {
            rec.closed_at = parse_timestamp(closed);
            rec.state = IssueState::Closed;
        }
        rows.storage.push_back(std::move(rec));
        std::set<std::string> fx;
        if (fixers != "-") {
            std::istringstream fs(fixers);
            std::string f;
            while (std::getline(fs, f, ',')) {
                if (!f.empty()) fx.insert(f);
            }
        }
        fixer_sets.push_back(std::move(fx));
    }
    rows.labeled.reserve(rows.storage.size());
    for (std::size_t i = 0; i < rows.storage.size(); ++i) {
        rows.labeled.push_back(corpus::LabeledIssue{&rows.storage[i], fixer_sets[i]});
    }
    return rows;
}

htg::Htg build_graph(const std::vector<relations::Edge>& edges, const LabelRows& labels,
                     std::size_t slices, htg::BuildStats* stats) {
    std::vector<const corpus::LabeledIssue*> sorted;
    sorted.reserve(labels.labeled.size());
    for (const auto& li : labels.labeled) sorted.push_back(&li);
    std::sort(sorted.begin(), sorted.end(),
              [](const corpus::LabeledIssue* a, const corpus::LabeledIssue* b) {
                  if (a->issue->created_at != b->issue->created_at) {
                      return a->issue->created_at < b->issue->created_at;
                  }
                  return a->issue->issue_id < b->issue->issue_id;
              });
    auto boundaries = htg::slice_timeline(sorted, slices);
    return htg::build_snapshots(edges, boundaries, sorted, stats);
}

EvalReport evaluate_checkpoint(const htg::Htg& g, const htg::Split& split,
                               model::ParamStore& params, const EvalOptions& opts) {
    const htg::WindowPlan plan = htg::window_batches(g, params.config().tw, split);
    const std::vector<std::string> candidates = model::candidate_pool(g, split);
    if (candidates.empty()) throw ValidationError("evaluate: empty candidate pool");
    const model::NodeUniverse& uni = params.universe();
    std::set<std::string> candidate_set(candidates.begin(), candidates.end());

    EvalReport rep;
    rep.candidates = candidates;

    // training positives feed the frequency baseline; the Report edge
    // timestamp stands in for the fix time
    std::vector<std::pair<std::string, Timestamp>> fixes;
    Timestamp train_end = 0;
    for (std::size_t t : split.train) {
        const htg::Snapshot& snap = g.snapshots[t - 1];
        std::map<std::string, Timestamp> created;
        for (const relations::Edge& e : snap.edges) {
            if (e.relation == relations::RelationType::Report) created[e.src.id] = e.at;
        }
        for (const std::string& issue : snap.issues) {
            auto fit = g.fixers.find(issue);
            if (fit == g.fixers.end() || fit->second.empty()) continue;
            const Timestamp at = created.contains(issue) ? created[issue] : snap.issue_first;
            train_end = std::max(train_end, at);
            for (const std::string& f : fit->second) fixes.emplace_back(f, at);
        }
    }
    const double half_life_s = opts.half_life_days * 86400.0;
    std::vector<std::string> baseline_rank =
        evaluation::frequency_baseline(fixes, half_life_s, train_end);
    // candidates missing from the baseline score (never fixed) follow in id order
    {
        std::set<std::string> seen(baseline_rank.begin(), baseline_rank.end());
        std::vector<std::string> rest;
        for (const std::string& c : candidates) {
            if (!seen.contains(c)) rest.push_back(c);
        }
        std::vector<std::string> filtered;
        for (const std::string& b : baseline_rank) {
            if (candidate_set.contains(b)) filtered.push_back(b);
        }
        filtered.insert(filtered.end(), rest.begin(), rest.end());
        baseline_rank = std::move(filtered);
    }

    for (const htg::WindowBatch& batch : plan.test) {
        model::ForwardOptions fopts;  // evaluation: dropout off
        model::ForwardResult fr = model::forward_window(g, batch, params, fopts);
        rep.flagged_zero_edge += fr.flagged_zero_edge.size();
        const autograd::DenseMatrix& issue_mat = fr.tape.value(fr.issue_emb);
        const autograd::DenseMatrix& dev_mat = fr.tape.value(fr.dev_final);
        const std::size_t d = params.config().hidden_dim;

        std::vector<std::pair<std::string, std::span<const double>>> cand_embs;
        cand_embs.reserve(candidates.size());
        for (const std::string& c : candidates) {
            const std::size_t row = uni.dev_index.at(c);
            cand_embs.emplace_back(c, std::span<const double>(dev_mat.data() + row * d, d));
        }

        for (std::size_t i = 0; i < fr.target_issues.size(); ++i) {
            const std::string& issue = fr.target_issues[i];
            auto fit = g.fixers.find(issue);
            if (fit == g.fixers.end() || fit->second.empty()) continue;  // unlabeled: no query
            std::span<const double> emb(issue_mat.data() + i * d, d);
            auto ranked = model::recommend(emb, cand_embs, candidates.size());
            evaluation::IssuePrediction ip;
            ip.issue_id = issue;
            ip.fixers = fit->second;
            ip.ranking.reserve(ranked.size());
            for (auto& [id, s] : ranked) ip.ranking.push_back(std::move(id));
            bool reachable = false;
            for (const std::string& f : ip.fixers) {
                if (candidate_set.contains(f)) reachable = true;
            }
            if (!reachable) rep.unreachable_fixers += 1;

            evaluation::IssuePrediction bp;
            bp.issue_id = issue;
            bp.fixers = fit->second;
            bp.ranking = baseline_rank;
            rep.model_preds.issues.push_back(std::move(ip));
            rep.baseline_preds.issues.push_back(std::move(bp));
        }
    }
    rep.test_issues = rep.model_preds.issues.size();
    if (rep.test_issues == 0) {
        throw ValidationError("evaluate: no labeled issues in the test slices");
    }

    for (std::size_t n : opts.topns) {
        rep.topn[n] = evaluation::topn_hit_rate(rep.model_preds, n);
        rep.baseline_topn[n] = evaluation::topn_hit_rate(rep.baseline_preds, n);
    }
    rep.mrr_value = evaluation::mrr(rep.model_preds);
    rep.baseline_mrr = evaluation::mrr(rep.baseline_preds);

    // core / non-core over the test set's resolution counts
    std::map<std::string, std::size_t> resolved;
    for (const auto& ip : rep.model_preds.issues) {
        for (const std::string& f : ip.fixers) resolved[f] += 1;
    }
    const evaluation::GroupSplit gs = evaluation::split_core_noncore(resolved);
    rep.core_size = gs.core.size();
    rep.non_core_size = gs.non_core.size();
    rep.groups = evaluation::group_recall(rep.model_preds, gs);

    // paired per-issue reciprocal ranks, model vs baseline
    auto reciprocal_ranks = [](const evaluation::PredictionSet& ps) {
        std::vector<double> rr;
        rr.reserve(ps.issues.size());
        for (const auto& ip : ps.issues) {
            double v = 0.0;
            for (std::size_t i = 0; i < ip.ranking.size(); ++i) {
                if (ip.fixers.contains(ip.ranking[i])) {
                    v = 1.0 / static_cast<double>(i + 1);
                    break;
                }
            }
            rr.push_back(v);
        }
        return rr;
    };
    const std::vector<double> rr_model = reciprocal_ranks(rep.model_preds);
    const std::vector<double> rr_base = reciprocal_ranks(rep.baseline_preds);
    rep.wilcoxon = evaluation::wilcoxon_signed_rank(rr_model, rr_base);
    rep.cliffs = evaluation::cliffs_delta(rr_model, rr_base);
    rep.overlap = evaluation::prediction_overlap(
        {{"model", &rep.model_preds}, {"baseline", &rep.baseline_preds}});
    return rep;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

void write_eval_report(std::ostream& out, const EvalReport& rep,
                       const std::map<std::string, std::string>& config_echo,
                       const std::map<std::string, std::string>& input_hashes,
                       bool include_rankings) {
    out << "# evaluation report\n";
    out << "[config]\n";
    for (const auto& [k, v] : config_echo) out << k << " = " << v << "\n";
    out << "[inputs]\n";
    for (const auto& [k, v] : input_hashes) out << k << " = " << v << "\n";
    out << "[metrics]\n";
    out << "test_issues = " << rep.test_issues << "\n";
    for (const auto& [n, v] : rep.topn) out << "top" << n << " = " << fmt(v) << "\n";
    out << "mrr = " << fmt(rep.mrr_value) << "\n";
    out << "unreachable_fixer_issues = " << rep.unreachable_fixers << "\n";
    out << "zero_edge_issues = " << rep.flagged_zero_edge << "\n";
    for (const auto& [n, v] : rep.baseline_topn) {
        out << "baseline_top" << n << " = " << fmt(v) << "\n";
    }
    out << "baseline_mrr = " << fmt(rep.baseline_mrr) << "\n";
    out << "[groups]\n";
    out << "core_developers = " << rep.core_size << "\n";
    out << "non_core_developers = " << rep.non_core_size << "\n";
    out << "t_core = " << rep.groups.t_core << "\n";
    out << "t_non_core = " << rep.groups.t_non_core << "\n";
    out << "f_core = " << rep.groups.f_core << "\n";
    out << "f_non_core = " << rep.groups.f_non_core << "\n";
    out << "recall_core = " << (rep.groups.recall_core ? fmt(*rep.groups.recall_core) : "-")
        << "\n";
    out << "recall_non_core = "
        << (rep.groups.recall_non_core ? fmt(*rep.groups.recall_non_core) : "-") << "\n";
    out << "[statistics]\n";
    out << "wilcoxon_w = " << fmt(rep.wilcoxon.w) << "\n";
    out << "wilcoxon_p = " << fmt(rep.wilcoxon.p_value) << "\n";
    out << "wilcoxon_exact = " << (rep.wilcoxon.exact ? "yes" : "no") << "\n";
    out << "wilcoxon_degenerate = " << (rep.wilcoxon.degenerate ? "yes" : "no") << "\n";
    out << "cliffs_delta = " << fmt(rep.cliffs.delta) << "\n";
    out << "cliffs_magnitude = " << rep.cliffs.magnitude << "\n";
    out << "[overlap]\n";
    for (const auto& cell : rep.overlap) {
        out << "correct_by";
        for (const std::string& s : cell.systems) out << "_" << s;
        out << " = " << cell.count << "\n";
    }
    if (include_rankings) {
        out << "[rankings]\n";
        for (const auto& ip : rep.model_preds.issues) {
            out << ip.issue_id << " =";
            for (const std::string& dev : ip.ranking) out << " " << dev;
            out << "\n";
        }
    }
}

std::vector<SweepRow> sweep_window(const htg::Htg& g, const htg::Split& split,
                                   model::ModelConfig mcfg, training::TrainConfig tcfg,
                                   const std::vector<std::size_t>& tw_values, std::ostream* log) {
    std::vector<SweepRow> rows;
    for (std::size_t tw : tw_values) {
        mcfg.tw = tw;
        if (log) *log << "sweep: training tw=" << tw << "\n";
        training::TrainResult tr = training::train(g, split, mcfg, tcfg, nullptr);
        EvalOptions opts;
        EvalReport rep = evaluate_checkpoint(g, split, tr.best, opts);
        SweepRow row;
        row.tw = tw;
        row.top1 = rep.topn.at(1);
        row.top3 = rep.topn.at(3);
        row.top5 = rep.topn.at(5);
        row.mrr = rep.mrr_value;
        row.best_epoch = tr.history.best_epoch;
        rows.push_back(row);
        if (log) {
            *log << "sweep: tw=" << tw << " top1=" << fmt(row.top1) << " mrr=" << fmt(row.mrr)
                 << "\n";
        }
    }
    return rows;
}

void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "tw\ttop1\ttop3\ttop5\tmrr\tbest_epoch\n";
    for (const SweepRow& r : rows) {
        out << r.tw << '\t' << fmt(r.top1) << '\t' << fmt(r.top3) << '\t' << fmt(r.top5) << '\t'
            << fmt(r.mrr) << '\t' << r.best_epoch << "\n";
    }
}

}  // namespace devrec::pipeline
