#include "devrec/relations.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace devrec::relations {

const char* to_string(RelationType r) {
    switch (r) {
        case RelationType::Report: return "report";
        case RelationType::Comment: return "comment";
        case RelationType::Create: return "create";
        case RelationType::Remove: return "remove";
        case RelationType::Similar: return "similar";
    }
    return "?";
}

RelationType relation_from_string(const std::string& s) {
    if (s == "report") return RelationType::Report;
    if (s == "comment") return RelationType::Comment;
    if (s == "create") return RelationType::Create;
    if (s == "remove") return RelationType::Remove;
    if (s == "similar") return RelationType::Similar;
    throw ParseError("unknown relation: " + s);
}

NodeType src_type_of(RelationType r) {
    switch (r) {
        case RelationType::Report:
        case RelationType::Comment:
        case RelationType::Similar: return NodeType::Issue;
        case RelationType::Create:
        case RelationType::Remove: return NodeType::Developer;
    }
    return NodeType::Issue;
}

NodeType dst_type_of(RelationType r) {
    switch (r) {
        case RelationType::Report:
        case RelationType::Comment: return NodeType::Developer;
        case RelationType::Create:
        case RelationType::Remove:
        case RelationType::Similar: return NodeType::File;
    }
    return NodeType::Developer;
}

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::None: return "-";
        case Provenance::Traced: return "traced";
        case Provenance::Textual: return "textual";
    }
    return "?";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "-") return Provenance::None;
    if (s == "traced") return Provenance::Traced;
    if (s == "textual") return Provenance::Textual;
    throw ParseError("unknown provenance: " + s);
}

bool endpoint_types_valid(const Edge& e) {
    return e.src.type == src_type_of(e.relation) && e.dst.type == dst_type_of(e.relation);
}

bool edge_less(const Edge& a, const Edge& b) {
    auto key = [](const Edge& e) {
        return std::tuple(static_cast<int>(e.relation), e.src.id, e.dst.id, e.at,
                          static_cast<int>(e.provenance));
    };
    return key(a) < key(b);
}

void sort_edges(std::vector<Edge>& edges) { std::sort(edges.begin(), edges.end(), edge_less); }

std::vector<Edge> extract_report_comment(const std::vector<corpus::LabeledIssue>& labeled,
                                         const std::vector<CommentRecord>& comments) {
    std::vector<Edge> out;
    std::map<std::string, const IssueRecord*> by_id;
    for (const auto& li : labeled) {
        by_id.emplace(li.issue->issue_id, li.issue);
        out.push_back(Edge{{NodeType::Issue, li.issue->issue_id},
                           {NodeType::Developer, li.issue->reporter},
                           RelationType::Report,
                           li.issue->created_at,
                           1.0,
                           Provenance::None});
    }
    // first comment time per (issue, commenter)
    std::map<std::pair<std::string, std::string>, Timestamp> first;
    for (const CommentRecord& c : comments) {
        if (!by_id.contains(c.issue_id)) continue;
        auto key = std::make_pair(c.issue_id, c.author);
        auto it = first.find(key);
        if (it == first.end() || c.created_at < it->second) {
            first[key] = c.created_at;
        }
    }
    for (const auto& [key, at] : first) {
        out.push_back(Edge{{NodeType::Issue, key.first},
                           {NodeType::Developer, key.second},
                           RelationType::Comment,
                           at,
                           1.0,
                           Provenance::None});
    }
    sort_edges(out);
    return out;
}

std::vector<Edge> extract_create_remove(const std::vector<CommitRecord>& commits) {
    // (relation, dev, file) -> earliest timestamp
    std::map<std::tuple<int, std::string, std::string>, Timestamp> earliest;
    for (const CommitRecord& c : commits) {
        for (const FileChange& fc : c.file_changes) {
            RelationType rel;
            if (fc.change_type == ChangeType::Created) {
                rel = RelationType::Create;
            } else if (fc.change_type == ChangeType::Removed) {
                rel = RelationType::Remove;
            } else {
                continue;
            }
            auto key = std::make_tuple(static_cast<int>(rel), c.author, fc.path);
            auto it = earliest.find(key);
            if (it == earliest.end() || c.committed_at < it->second) {
                earliest[key] = c.committed_at;
            }
        }
    }
    std::vector<Edge> out;
    out.reserve(earliest.size());
    for (const auto& [key, at] : earliest) {
        out.push_back(Edge{{NodeType::Developer, std::get<1>(key)},
                           {NodeType::File, std::get<2>(key)},
                           static_cast<RelationType>(std::get<0>(key)),
                           at,
                           1.0,
                           Provenance::None});
    }
    sort_edges(out);
    return out;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string run;
    auto flush_camel = [&](const std::string& word) {
        // split on lower->Upper humps; runs of uppercase stay together until
        // a following lowercase starts a new word (JSONParser -> json, parser)
        std::vector<std::string> parts;
        std::string cur;
        for (std::size_t i = 0; i < word.size(); ++i) {
            const char ch = word[i];
            const bool upper = std::isupper(static_cast<unsigned char>(ch)) != 0;
            if (upper && !cur.empty()) {
                const char prev = cur.back();
                const bool prev_upper = std::isupper(static_cast<unsigned char>(prev)) != 0;
                const bool next_lower =
                    i + 1 < word.size() && std::islower(static_cast<unsigned char>(word[i + 1]));
                if (!prev_upper || next_lower) {
                    if (!prev_upper) {
                        parts.push_back(cur);
                        cur.clear();
                    } else if (next_lower) {
                        parts.push_back(cur);
                        cur.clear();
                    }
                }
            }
            cur.push_back(ch);
        }
        if (!cur.empty()) parts.push_back(cur);
        for (std::string& p : parts) {
            for (char& c : p) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            tokens.push_back(std::move(p));
        }
    };
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            run.push_back(c);
        } else {
            if (!run.empty()) flush_camel(run);
            run.clear();
        }
    }
    if (!run.empty()) flush_camel(run);
    return tokens;
}

double SparseVector::norm() const {
    double s = 0.0;
    for (const auto& [d, w] : entries) s += w * w;
    return std::sqrt(s);
}

double cosine(const SparseVector& a, const SparseVector& b) {
    double dot = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.entries.size() && j < b.entries.size()) {
        if (a.entries[i].first < b.entries[j].first) {
            ++i;
        } else if (a.entries[i].first > b.entries[j].first) {
            ++j;
        } else {
            dot += a.entries[i].second * b.entries[j].second;
            ++i;
            ++j;
        }
    }
    return dot;  // inputs are unit vectors (or empty)
}

namespace {

void l2_normalize(SparseVector& v) {
    const double n = v.norm();
    if (n <= 0.0) {
        v.entries.clear();
        return;
    }
    for (auto& [d, w] : v.entries) w /= n;
}

}  // namespace

TfidfIndex TfidfIndex::build(const std::vector<std::pair<std::string, std::string>>& docs) {
    TfidfIndex idx;
    std::vector<std::pair<std::string, std::string>> sorted = docs;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<std::map<std::string, std::size_t>> counts;
    counts.reserve(sorted.size());
    std::map<std::string, std::size_t> df;
    for (const auto& [id, text] : sorted) {
        std::map<std::string, std::size_t> tf;
        for (const std::string& tok : tokenize(text)) tf[tok] += 1;
        for (const auto& [tok, cnt] : tf) df[tok] += 1;
        counts.push_back(std::move(tf));
    }

    idx.idf_.reserve(df.size());
    std::uint32_t dim = 0;
    const double n_docs = static_cast<double>(sorted.size());
    for (const auto& [tok, d] : df) {
        idx.vocabulary_.emplace(tok, dim++);
        idx.idf_.push_back(std::log(n_docs / (1.0 + static_cast<double>(d))) + 1.0);
    }

    idx.doc_ids_.reserve(sorted.size());
    idx.doc_vectors_.reserve(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        SparseVector v;
        for (const auto& [tok, cnt] : counts[i]) {
            const std::uint32_t d = idx.vocabulary_.at(tok);
            v.entries.emplace_back(d, static_cast<double>(cnt) * idx.idf_[d]);
        }
        std::sort(v.entries.begin(), v.entries.end());
        l2_normalize(v);
        idx.doc_index_.emplace(sorted[i].first, idx.doc_ids_.size());
        idx.doc_ids_.push_back(sorted[i].first);
        idx.doc_vectors_.push_back(std::move(v));
    }
    return idx;
}

SparseVector TfidfIndex::vectorize(const std::string& text) const {
    std::map<std::uint32_t, double> acc;
    for (const std::string& tok : tokenize(text)) {
        auto it = vocabulary_.find(tok);
        if (it == vocabulary_.end()) continue;  // out-of-vocabulary
        acc[it->second] += idf_[it->second];
    }
    SparseVector v;
    v.entries.assign(acc.begin(), acc.end());
    l2_normalize(v);
    return v;
}

const SparseVector* TfidfIndex::doc_vector(const std::string& id) const {
    auto it = doc_index_.find(id);
    return it == doc_index_.end() ? nullptr : &doc_vectors_[it->second];
}

std::vector<std::pair<std::string, double>> TfidfIndex::top_k(
    const std::string& text, std::size_t k, double tau,
    const std::function<bool(const std::string&)>& filter) const {
    std::vector<std::pair<std::string, double>> hits;
    const SparseVector q = vectorize(text);
    if (q.entries.empty()) return hits;
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        if (doc_vectors_[i].entries.empty()) continue;  // empty docs never match
        if (filter && !filter(doc_ids_[i])) continue;
        const double c = cosine(q, doc_vectors_[i]);
        if (c >= tau) hits.emplace_back(doc_ids_[i], c);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

std::vector<Edge> similar_edges_text(const IssueRecord& issue, const TfidfIndex& index,
                                     std::size_t k, double tau,
                                     const std::function<bool(const std::string&)>& filter) {
    std::vector<Edge> out;
    const std::string text = issue.title + " " + issue.body;
    for (const auto& [file_id, cos] : index.top_k(text, k, tau, filter)) {
        out.push_back(Edge{{NodeType::Issue, issue.issue_id},
                           {NodeType::File, file_id},
                           RelationType::Similar,
                           issue.created_at,
                           cos,
                           Provenance::Textual});
    }
    sort_edges(out);
    return out;
}

std::vector<Edge> similar_edges_traced(const corpus::LabeledIssue& issue,
                                       const std::vector<const CommitRecord*>& linked_commits) {
    if (!issue.issue->is_closed()) {
        throw ValidationError("similar_edges_traced: issue '" + issue.issue->issue_id +
                              "' is not closed");
    }
    std::set<std::string> files;
    for (const CommitRecord* c : linked_commits) {
        if (c->committed_at >= *issue.issue->closed_at) continue;
        for (const FileChange& fc : c->file_changes) files.insert(fc.path);
    }
    if (files.empty()) {
        throw ValidationError("similar_edges_traced: issue '" + issue.issue->issue_id +
                              "' has no pre-close linked commits");
    }
    std::vector<Edge> out;
    out.reserve(files.size());
    for (const std::string& f : files) {
        out.push_back(Edge{{NodeType::Issue, issue.issue->issue_id},
                           {NodeType::File, f},
                           RelationType::Similar,
                           issue.issue->created_at,
                           1.0,
                           Provenance::Traced});
    }
    sort_edges(out);
    return out;
}

std::vector<const CommitRecord*> preclose_commits(const corpus::Corpus& corpus,
                                                  const IssueRecord& issue) {
    std::set<std::string> shas;
    for (const EventRecord* e : corpus.events_of(issue.issue_id)) {
        if (e->commit_sha) shas.insert(*e->commit_sha);
    }
    std::vector<const CommitRecord*> out;
    for (const std::string& sha : shas) {
        const CommitRecord* c = corpus.find_commit(sha);
        if (c && issue.closed_at && c->committed_at < *issue.closed_at) {
            out.push_back(c);
        }
    }
    return out;
}

std::vector<Edge> extract_all(const corpus::Corpus& corpus,
                              const std::vector<corpus::LabeledIssue>& labeled,
                              const ExtractOptions& opts) {
    std::vector<Edge> edges = extract_report_comment(labeled, corpus.comments());
    std::vector<Edge> cr = extract_create_remove(corpus.commits());
    edges.insert(edges.end(), cr.begin(), cr.end());

    // file universe: every path touched by any commit; text = the path.
    // first_seen gates textual candidates to files existing when the issue
    // was filed (the index itself is built once over the whole universe).
    std::map<std::string, Timestamp> first_seen;
    for (const CommitRecord& c : corpus.commits()) {
        for (const FileChange& fc : c.file_changes) {
            auto it = first_seen.find(fc.path);
            if (it == first_seen.end() || c.committed_at < it->second) {
                first_seen[fc.path] = c.committed_at;
            }
        }
    }
    std::vector<std::pair<std::string, std::string>> docs;
    docs.reserve(first_seen.size());
    for (const auto& [p, ts] : first_seen) docs.emplace_back(p, p);
    const TfidfIndex index = TfidfIndex::build(docs);

    for (const corpus::LabeledIssue& li : labeled) {
        auto linked = preclose_commits(corpus, *li.issue);
        if (!linked.empty()) {
            auto traced = similar_edges_traced(li, linked);
            edges.insert(edges.end(), traced.begin(), traced.end());
        }
        const Timestamp created = li.issue->created_at;
        auto textual = similar_edges_text(
            *li.issue, index, opts.similar_k, opts.similar_tau,
            [&](const std::string& path) { return first_seen.at(path) <= created; });
        edges.insert(edges.end(), textual.begin(), textual.end());
    }
    sort_edges(edges);
    return edges;
}

void write_edges_tsv(std::ostream& out, const std::vector<Edge>& edges) {
    out << "src_type\tsrc_id\trelation\tdst_type\tdst_id\ttimestamp\tweight\tprovenance\n";
    char buf[64];
    for (const Edge& e : edges) {
        std::snprintf(buf, sizeof(buf), "%.9g", e.weight);
        out << to_string(e.src.type) << '\t' << e.src.id << '\t' << to_string(e.relation) << '\t'
            << to_string(e.dst.type) << '\t' << e.dst.id << '\t' << e.at << '\t' << buf << '\t'
            << to_string(e.provenance) << '\n';
    }
}

std::vector<Edge> read_edges_tsv(std::istream& in) {
    std::vector<Edge> edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("src_type", 0) == 0) continue;
        std::istringstream ss(line);
        std::string src_type, src_id, rel, dst_type, dst_id, ts, weight, prov;
        if (!std::getline(ss, src_type, '\t') || !std::getline(ss, src_id, '\t') ||
            !std::getline(ss, rel, '\t') || !std::getline(ss, dst_type, '\t') ||
            !std::getline(ss, dst_id, '\t') || !std::getline(ss, ts, '\t') ||
            !std::getline(ss, weight, '\t') || !std::getline(ss, prov)) {
            throw ParseError("edges line " + std::to_string(line_no) + ": expected 8 columns");
        }
        Edge e;
        e.src = {node_type_from_string(src_type), src_id};
        e.dst = {node_type_from_string(dst_type), dst_id};
        e.relation = relation_from_string(rel);
        e.at = parse_timestamp(ts);
        e.weight = std::stod(weight);
        e.provenance = provenance_from_string(prov);
        if (!endpoint_types_valid(e)) {
            throw ValidationError("edges line " + std::to_string(line_no) +
                                  ": endpoint types do not match relation " + rel);
        }
        edges.push_back(std::move(e));
    }
    return edges;
}

}  // namespace devrec::relations
