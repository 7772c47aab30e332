#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "devrec/relations.hpp"

namespace devrec::htg {

using relations::Edge;

// Contiguous chronological partition of issues into T slices whose sizes
// differ by at most one (the first n%T slices take the extra issue).
struct SliceBoundary {
    std::size_t first_index = 0;  // into the chronologically sorted issue list
    std::size_t count = 0;
    Timestamp start = 0;  // half-open [start, end)
    Timestamp end = 0;
    Timestamp issue_first = 0;
    Timestamp issue_last = 0;
};

std::vector<SliceBoundary> slice_timeline(
    const std::vector<const corpus::LabeledIssue*>& issues_sorted, std::size_t T = 10);

struct Snapshot {
    std::size_t index = 0;  // 1-based
    Timestamp start = 0;
    Timestamp end = 0;
    Timestamp issue_first = 0;
    Timestamp issue_last = 0;
    // home issues of this slice (pairwise disjoint across snapshots)
    std::vector<std::string> issues;
    // open issues from earlier slices carrying late edges here
    std::vector<std::string> visiting_issues;
    std::vector<std::string> developers;
    std::vector<std::string> files;
    std::vector<Edge> edges;

    bool has_node(const NodeRef& n) const;
};

struct BuildStats {
    std::size_t dropped_closed_issue_edges = 0;  // late edges on closed issues
    std::size_t late_comment_edges = 0;          // kept on visiting open issues
};

struct Htg {
    std::vector<Snapshot> snapshots;
    // fixers per labeled issue (empty set = retained but unlabeled)
    std::map<std::string, std::set<std::string>> fixers;

    std::size_t T() const { return snapshots.size(); }
    std::uint64_t structure_hash() const;
    // slice index (1-based) that owns an issue, 0 if unknown
    std::size_t home_slice(const std::string& issue_id) const;

    void save(std::ostream& out) const;
    static Htg load(std::istream& in);

private:
    mutable std::unordered_map<std::string, std::size_t> home_cache_;
};

// Materializes per-slice snapshots from the extracted edges. Every slice
// contains its issues, every developer incident to its edges, every file in
// existence during the slice, and the edges timestamped inside it. An
// issue-incident edge timestamped after the issue's home slice is kept (the
// issue visits that snapshot) while the issue is still open, and dropped
// once it is closed. Unknown endpoints are construction errors.
Htg build_snapshots(const std::vector<Edge>& edges,
                    const std::vector<SliceBoundary>& boundaries,
                    const std::vector<const corpus::LabeledIssue*>& issues_sorted,
                    BuildStats* stats = nullptr);

struct Split {
    std::vector<std::size_t> train;       // 1-based slice indices
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

// Default 8:1:1 over T=10; ratios may be overridden (parts must sum to T).
Split chronological_split(const Htg& htg, std::size_t train_parts = 8,
                          std::size_t val_parts = 1, std::size_t test_parts = 1);

struct WindowBatch {
    std::vector<std::size_t> input_slices;  // tw consecutive indices
    std::size_t target_slice = 0;           // max(input)+1
    std::vector<std::pair<std::string, std::string>> positives;  // (issue, fixer)
};

enum class BatchRole { Training, Validation, Test };

struct WindowPlan {
    std::vector<WindowBatch> training;  // chronological by target
    std::vector<WindowBatch> validation;
    std::vector<WindowBatch> test;
};

WindowPlan window_batches(const Htg& htg, std::size_t tw, const Split& split);

}  // namespace devrec::htg
