#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "devrec/types.hpp"

namespace devrec::corpus {

struct DevStats {
    std::int64_t commit_count = 0;
    std::int64_t closed_issue_count = 0;

    friend bool operator==(const DevStats&, const DevStats&) = default;
};

using DeveloperStats = std::map<std::string, DevStats>;

struct LabeledIssue {
    const IssueRecord* issue = nullptr;
    std::set<std::string> fixers;  // empty => unlabeled

    bool labeled() const { return !fixers.empty(); }
};

struct RelabelSummary {
    std::size_t closed_issues = 0;
    std::size_t labeled = 0;
    std::size_t unlabeled = 0;
    std::size_t multi_fixer = 0;
    std::size_t rule1 = 0;  // via traced pre-close commits
    std::size_t rule2 = 0;  // via qualifying closer fallback
};

struct LoadReport {
    std::size_t issue_count = 0;
    std::size_t comment_count = 0;
    std::size_t event_count = 0;
    std::size_t commit_count = 0;
    std::vector<std::string> warnings;  // unresolved event shas, orphan events, ...
};

// Immutable after load; safe to share across concurrent readers. Iteration
// order is deterministic: records sorted by id / (timestamp, id).
class Corpus {
public:
    static Corpus load(std::istream& issues, std::istream& comments, std::istream& events,
                       std::istream& commits);
    static Corpus load_dir(const std::string& dir);
    static Corpus from_records(std::vector<IssueRecord> issues, std::vector<CommentRecord> comments,
                               std::vector<EventRecord> events, std::vector<CommitRecord> commits);

    const std::vector<IssueRecord>& issues() const { return issues_; }
    const std::vector<CommentRecord>& comments() const { return comments_; }
    const std::vector<EventRecord>& events() const { return events_; }
    const std::vector<CommitRecord>& commits() const { return commits_; }

    const IssueRecord* find_issue(const std::string& id) const;
    const CommitRecord* find_commit(const std::string& sha) const;
    // comments / events of one issue, sorted by (created_at, author/actor)
    std::vector<const CommentRecord*> comments_of(const std::string& issue_id) const;
    std::vector<const EventRecord*> events_of(const std::string& issue_id) const;

    // issues sorted chronologically by (created_at, issue_id)
    std::vector<const IssueRecord*> issues_by_time() const;

    std::size_t issue_count() const { return issues_.size(); }
    std::size_t commit_count() const { return commits_.size(); }
    const LoadReport& report() const { return report_; }

    void save_dir(const std::string& dir) const;

private:
    void build_indices();
    void validate();

    std::vector<IssueRecord> issues_;
    std::vector<CommentRecord> comments_;
    std::vector<EventRecord> events_;
    std::vector<CommitRecord> commits_;
    std::unordered_map<std::string, std::size_t> issue_index_;
    std::unordered_map<std::string, std::size_t> commit_index_;
    std::unordered_map<std::string, std::vector<std::size_t>> comments_by_issue_;
    std::unordered_map<std::string, std::vector<std::size_t>> events_by_issue_;
    LoadReport report_;
};

DeveloperStats developer_stats(const Corpus& corpus);

// Fixers of one closed issue. Rule 1: authors of commits reachable through
// the linked events with committed_at strictly before closed_at. Rule 2
// (only when Rule 1 finds nothing): the closer, iff their commit count
// exceeds the issues they closed.
std::set<std::string> relabel_issue(const IssueRecord& issue,
                                    const std::vector<const EventRecord*>& linked_events,
                                    const Corpus& corpus, const DeveloperStats& stats);

std::vector<LabeledIssue> relabel_corpus(const Corpus& corpus, RelabelSummary* summary = nullptr);

// Cohen's kappa over two equal-length categorical label lists. Defined as 1
// when both raters agree perfectly with zero chance disagreement (p_e == 1).
double cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b);
double cohens_kappa(const std::vector<int>& a, const std::vector<int>& b);

// Cochran sample size with finite population correction, p=0.5.
// confidence must be one of 0.90 / 0.95 / 0.99.
std::int64_t sample_size(std::int64_t population, double confidence, double margin);

}  // namespace devrec::corpus
