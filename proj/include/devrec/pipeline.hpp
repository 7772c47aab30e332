#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "devrec/evaluation.hpp"
#include "devrec/htg.hpp"
#include "devrec/model.hpp"
#include "devrec/training.hpp"

namespace devrec::pipeline {

// Fully resolved run configuration, echoed into every report. Precedence:
// command-line flags > config file > defaults.
struct RunConfig {
    std::size_t similar_k = 3;
    double similar_tau = 0.05;
    std::size_t slices = 10;
    std::size_t train_parts = 8;
    std::size_t val_parts = 1;
    std::size_t test_parts = 1;
    model::ModelConfig model;
    training::TrainConfig train;
    double baseline_half_life_days = 90.0;

    std::map<std::string, std::string> to_kv() const;
};

std::uint64_t file_hash(const std::string& path);  // FNV-1a over the bytes

// labels.tsv: issue_id, created_at, closed_at, fixer csv ("-" when unlabeled)
void write_labels_tsv(std::ostream& out, const std::vector<corpus::LabeledIssue>& labeled);

// Self-contained labeled-issue rows read back from labels.tsv; owns its
// IssueRecord storage.
struct LabelRows {
    std::vector<IssueRecord> storage;
    std::vector<corpus::LabeledIssue> labeled;
};
LabelRows read_labels_tsv(std::istream& in);

// edges + labels -> sliced heterogeneous temporal graph
htg::Htg build_graph(const std::vector<relations::Edge>& edges, const LabelRows& labels,
                     std::size_t slices, htg::BuildStats* stats = nullptr);

struct EvalOptions {
    std::vector<std::size_t> topns = {1, 3, 5};
    double half_life_days = 90.0;
    bool include_rankings = false;
};

struct EvalReport {
    evaluation::PredictionSet model_preds;
    evaluation::PredictionSet baseline_preds;
    std::vector<std::string> candidates;
    std::map<std::size_t, double> topn;           // model
    double mrr_value = 0.0;
    std::map<std::size_t, double> baseline_topn;
    double baseline_mrr = 0.0;
    evaluation::GroupRecallResult groups;
    std::size_t core_size = 0, non_core_size = 0;
    evaluation::WilcoxonResult wilcoxon;          // model vs baseline reciprocal ranks
    evaluation::CliffsDelta cliffs;
    std::vector<evaluation::OverlapCell> overlap;
    std::size_t test_issues = 0;
    std::size_t unreachable_fixers = 0;  // test issues with no fixer in the pool
    std::size_t flagged_zero_edge = 0;
};

EvalReport evaluate_checkpoint(const htg::Htg& g, const htg::Split& split,
                               model::ParamStore& params, const EvalOptions& opts);

// metric/group/statistics blocks plus the resolved config and input hashes;
// deterministic byte-for-byte given identical inputs
void write_eval_report(std::ostream& out, const EvalReport& report,
                       const std::map<std::string, std::string>& config_echo,
                       const std::map<std::string, std::string>& input_hashes,
                       bool include_rankings);

struct SweepRow {
    std::size_t tw = 0;
    double top1 = 0.0, top3 = 0.0, top5 = 0.0, mrr = 0.0;
    std::size_t best_epoch = 0;
};

// trains and evaluates one model per window size
std::vector<SweepRow> sweep_window(const htg::Htg& g, const htg::Split& split,
                                   model::ModelConfig mcfg, training::TrainConfig tcfg,
                                   const std::vector<std::size_t>& tw_values,
                                   std::ostream* log = nullptr);

void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace devrec::pipeline
