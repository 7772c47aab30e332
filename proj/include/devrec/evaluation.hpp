#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "devrec/corpus.hpp"

namespace devrec::evaluation {

struct IssuePrediction {
    std::string issue_id;
    std::vector<std::string> ranking;  // candidates, best first
    std::set<std::string> fixers;
};

struct PredictionSet {
    std::vector<IssuePrediction> issues;

    std::size_t size() const { return issues.size(); }
};

// fraction of issues whose top-N list contains at least one fixer; a fixer
// absent from the ranking misses at every N
double topn_hit_rate(const PredictionSet& preds, std::size_t n);

// mean of 1/rank of the first correct developer; issues with no correct
// developer anywhere contribute 0 (finite candidate pool)
double mrr(const PredictionSet& preds);

struct GroupSplit {
    std::set<std::string> core;
    std::set<std::string> non_core;
};

// Shortest prefix of developers (by resolved count descending, ties by id)
// whose cumulative count reaches half the total.
GroupSplit split_core_noncore(const std::map<std::string, std::size_t>& resolved_counts);

struct GroupRecallResult {
    // T_g: issues belonging to g whose top-1 is a fixer.
    // F_g: issues not belonging to g whose top-1 landed in g.
    std::size_t t_core = 0;
    std::size_t t_non_core = 0;
    std::size_t f_core = 0;
    std::size_t f_non_core = 0;
    std::size_t owned_core = 0;      // issues with >=1 core fixer
    std::size_t owned_non_core = 0;
    std::optional<double> recall_core;      // absent when no group-owned issues
    std::optional<double> recall_non_core;
};

GroupRecallResult group_recall(const PredictionSet& preds, const GroupSplit& split);

struct WilcoxonResult {
    double w = 0.0;        // min(W+, W-)
    double p_value = 1.0;  // two-sided
    bool exact = false;    // exact null distribution (n <= 25) vs normal approx
    bool degenerate = false;  // all differences zero
    std::size_t n_effective = 0;  // pairs after dropping zero differences
};

// Wilcoxon signed-rank test, zero differences dropped, mid-ranks for ties;
// exact distribution for n <= 25, normal approximation with tie correction
// (and continuity correction) otherwise.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

struct CliffsDelta {
    double delta = 0.0;
    std::string magnitude;  // negligible / small / medium / large
};

CliffsDelta cliffs_delta(std::span<const double> x, std::span<const double> y);

// Global developer ranking by exponentially time-decayed fix count
// (half_life in seconds; +inf means pure frequency). Ties by id ascending.
std::vector<std::string> frequency_baseline(
    const std::vector<std::pair<std::string, Timestamp>>& fixes, double half_life,
    Timestamp reference);

struct ActivityTable {
    std::vector<std::string> developers;        // sorted
    std::vector<std::pair<Timestamp, Timestamp>> stages;  // half-open
    // percentages[d][s]: developer's share of stage s commits; empty stages
    // carry no values
    std::vector<std::vector<std::optional<double>>> percentages;
    std::vector<std::size_t> stage_commits;
};

// Per-developer share of each stage's commits. Boundaries partition the
// commit timeline into half-open stages.
ActivityTable activity_table(const corpus::Corpus& corpus,
                             const std::vector<Timestamp>& stage_boundaries);

void write_activity_table(std::ostream& out, const ActivityTable& table);

struct OverlapCell {
    std::vector<std::string> systems;  // exactly-these-systems subset
    std::size_t count = 0;
};

// Correct top-1 issue counts partitioned by the exact subset of systems
// that got them right.
std::vector<OverlapCell> prediction_overlap(
    const std::vector<std::pair<std::string, const PredictionSet*>>& systems);

}  // namespace devrec::evaluation
