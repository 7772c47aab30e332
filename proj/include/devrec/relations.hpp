#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "devrec/corpus.hpp"
#include "devrec/types.hpp"

namespace devrec::relations {

enum class RelationType : std::uint8_t { Report, Comment, Create, Remove, Similar };

constexpr inline RelationType kAllRelations[] = {RelationType::Report, RelationType::Comment,
                                                 RelationType::Create, RelationType::Remove,
                                                 RelationType::Similar};

const char* to_string(RelationType r);
RelationType relation_from_string(const std::string& s);

// endpoint discipline: Report/Comment issue<->developer, Create/Remove
// developer<->file, Similar issue<->file
NodeType src_type_of(RelationType r);
NodeType dst_type_of(RelationType r);

enum class Provenance : std::uint8_t { None, Traced, Textual };

const char* to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct Edge {
    NodeRef src;
    NodeRef dst;
    RelationType relation = RelationType::Report;
    Timestamp at = 0;
    double weight = 1.0;
    Provenance provenance = Provenance::None;

    friend bool operator==(const Edge&, const Edge&) = default;
};

bool endpoint_types_valid(const Edge& e);

// canonical order used everywhere an edge list is serialized or compared
bool edge_less(const Edge& a, const Edge& b);
void sort_edges(std::vector<Edge>& edges);

// One Report edge per issue plus one Comment edge per distinct
// (issue, commenter) at the first comment time.
std::vector<Edge> extract_report_comment(const std::vector<corpus::LabeledIssue>& labeled,
                                         const std::vector<CommentRecord>& comments);

// Create/Remove edges from commit file changes; modified changes produce no
// edge; duplicates collapse onto the earliest timestamp.
std::vector<Edge> extract_create_remove(const std::vector<CommitRecord>& commits);

struct SparseVector {
    // (dimension, weight) sorted by dimension; unit L2 norm unless empty
    std::vector<std::pair<std::uint32_t, double>> entries;

    double norm() const;
};

double cosine(const SparseVector& a, const SparseVector& b);

// Lowercase alphanumeric runs; identifiers split on underscores and
// camelCase humps.
std::vector<std::string> tokenize(const std::string& text);

class TfidfIndex {
public:
    static TfidfIndex build(const std::vector<std::pair<std::string, std::string>>& docs);

    // tf-idf vector for free text in this index's vocabulary, L2-normalized
    SparseVector vectorize(const std::string& text) const;

    // (doc id, cosine) for docs with cosine >= tau, best first; ties broken
    // by doc id ascending; at most k results. The filter restricts the
    // candidate set (e.g. to files that exist at a given time).
    std::vector<std::pair<std::string, double>> top_k(
        const std::string& text, std::size_t k, double tau,
        const std::function<bool(const std::string&)>& filter = {}) const;

    std::size_t doc_count() const { return doc_ids_.size(); }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    const SparseVector* doc_vector(const std::string& id) const;

private:
    std::unordered_map<std::string, std::uint32_t> vocabulary_;
    std::vector<double> idf_;
    std::vector<std::string> doc_ids_;  // sorted
    std::vector<SparseVector> doc_vectors_;
    std::unordered_map<std::string, std::size_t> doc_index_;
};

// Similar edges from text: top-k files by cosine between the issue's
// title+body and each file vector, thresholded at tau. weight = cosine.
// The optional filter restricts candidates to files existing at the issue's
// creation time when the caller built the index over a wider universe.
std::vector<Edge> similar_edges_text(const IssueRecord& issue, const TfidfIndex& index,
                                     std::size_t k, double tau,
                                     const std::function<bool(const std::string&)>& filter = {});

// Similar edges (weight 1) to every file touched by the issue's pre-close
// linked commits. Requires a closed issue with at least one such commit.
std::vector<Edge> similar_edges_traced(const corpus::LabeledIssue& issue,
                                       const std::vector<const CommitRecord*>& linked_commits);

struct ExtractOptions {
    std::size_t similar_k = 3;
    double similar_tau = 0.05;
};

// Full extraction over a relabeled corpus: report/comment, create/remove,
// traced similar for issues with pre-close commits, textual similar for
// every issue (provenance-flagged). File text is the tokenized path; the
// record streams carry no file bodies. Output sorted canonically.
std::vector<Edge> extract_all(const corpus::Corpus& corpus,
                              const std::vector<corpus::LabeledIssue>& labeled,
                              const ExtractOptions& opts = {});

// linked pre-close commits of a labeled issue, sorted by sha
std::vector<const CommitRecord*> preclose_commits(const corpus::Corpus& corpus,
                                                  const IssueRecord& issue);

void write_edges_tsv(std::ostream& out, const std::vector<Edge>& edges);
std::vector<Edge> read_edges_tsv(std::istream& in);

}  // namespace devrec::relations
