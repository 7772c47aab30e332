#include "devrec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace devrec::corpus {

namespace {

using nlohmann::json;

Timestamp json_timestamp(const json& v, const char* field) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number()) return static_cast<Timestamp>(v.get<double>());
    if (v.is_string()) return parse_timestamp(v.get<std::string>());
    throw ParseError(std::string("field '") + field + "' is not a timestamp");
}

std::string require_string(const json& obj, const char* field) {
    auto it = obj.find(field);
    if (it == obj.end() || !it->is_string()) {
        throw ParseError(std::string("missing or non-string field '") + field + "'");
    }
    return it->get<std::string>();
}

template <typename Fn>
void for_each_line(std::istream& in, const char* stream_name, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
            fn(obj);
        } catch (const std::exception& e) {
            throw ParseError(std::string(stream_name) + " line " + std::to_string(line_no) +
                             ": " + e.what());
        }
    }
}

IssueRecord parse_issue(const json& o) {
    IssueRecord r;
    r.issue_id = require_string(o, "issue_id");
    if (o.contains("title") && o["title"].is_string()) r.title = o["title"].get<std::string>();
    if (o.contains("body") && o["body"].is_string()) r.body = o["body"].get<std::string>();
    r.reporter = require_string(o, "reporter");
    r.created_at = json_timestamp(o.at("created_at"), "created_at");
    if (o.contains("closed_at") && !o["closed_at"].is_null()) {
        r.closed_at = json_timestamp(o["closed_at"], "closed_at");
    }
    if (o.contains("closed_by") && o["closed_by"].is_string()) {
        r.closed_by = o["closed_by"].get<std::string>();
    }
    if (o.contains("original_assignees") && o["original_assignees"].is_array()) {
        for (const auto& a : o["original_assignees"]) {
            if (a.is_string()) r.original_assignees.insert(a.get<std::string>());
        }
    }
    std::string state = require_string(o, "state");
    if (state == "open") {
        r.state = IssueState::Open;
    } else if (state == "closed") {
        r.state = IssueState::Closed;
    } else {
        throw ParseError("issue '" + r.issue_id + "': unknown state '" + state + "'");
    }
    return r;
}

CommentRecord parse_comment(const json& o) {
    CommentRecord r;
    r.issue_id = require_string(o, "issue_id");
    r.author = require_string(o, "author");
    r.created_at = json_timestamp(o.at("created_at"), "created_at");
    return r;
}

EventRecord parse_event(const json& o) {
    EventRecord r;
    r.issue_id = require_string(o, "issue_id");
    r.actor = require_string(o, "actor");
    r.event_type = require_string(o, "event_type");
    r.created_at = json_timestamp(o.at("created_at"), "created_at");
    if (o.contains("commit_sha") && o["commit_sha"].is_string()) {
        r.commit_sha = o["commit_sha"].get<std::string>();
    }
    return r;
}

CommitRecord parse_commit(const json& o) {
    CommitRecord r;
    r.sha = require_string(o, "sha");
    r.author = require_string(o, "author");
    r.committed_at = json_timestamp(o.at("committed_at"), "committed_at");
    if (o.contains("file_changes") && o["file_changes"].is_array()) {
        for (const auto& fc : o["file_changes"]) {
            FileChange c;
            c.path = require_string(fc, "path");
            c.change_type = change_type_from_string(require_string(fc, "change_type"));
            r.file_changes.push_back(std::move(c));
        }
    }
    return r;
}

json issue_to_json(const IssueRecord& r) {
    json o;
    o["issue_id"] = r.issue_id;
    o["title"] = r.title;
    o["body"] = r.body;
    o["reporter"] = r.reporter;
    o["created_at"] = r.created_at;
    if (r.closed_at) o["closed_at"] = *r.closed_at;
    if (r.closed_by) o["closed_by"] = *r.closed_by;
    if (!r.original_assignees.empty()) {
        o["original_assignees"] = r.original_assignees;
    }
    o["state"] = r.state == IssueState::Closed ? "closed" : "open";
    return o;
}

}  // namespace

Corpus Corpus::load(std::istream& issues, std::istream& comments, std::istream& events,
                    std::istream& commits) {
    Corpus c;
    for_each_line(issues, "issues", [&](const json& o) { c.issues_.push_back(parse_issue(o)); });
    for_each_line(comments, "comments",
                  [&](const json& o) { c.comments_.push_back(parse_comment(o)); });
    for_each_line(events, "events", [&](const json& o) { c.events_.push_back(parse_event(o)); });
    for_each_line(commits, "commits",
                  [&](const json& o) { c.commits_.push_back(parse_commit(o)); });
    c.build_indices();
    c.validate();
    return c;
}

Corpus Corpus::load_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    auto open = [&](const char* name) {
        fs::path p = fs::path(dir) / (std::string(name) + ".jsonl");
        std::ifstream f(p);
        if (!f) throw ParseError("cannot open record stream " + p.string());
        return f;
    };
    std::ifstream issues = open("issues");
    std::ifstream comments = open("comments");
    std::ifstream events = open("events");
    std::ifstream commits = open("commits");
    return load(issues, comments, events, commits);
}

Corpus Corpus::from_records(std::vector<IssueRecord> issues, std::vector<CommentRecord> comments,
                            std::vector<EventRecord> events, std::vector<CommitRecord> commits) {
    Corpus c;
    c.issues_ = std::move(issues);
    c.comments_ = std::move(comments);
    c.events_ = std::move(events);
    c.commits_ = std::move(commits);
    c.build_indices();
    c.validate();
    return c;
}

void Corpus::build_indices() {
    std::sort(issues_.begin(), issues_.end(),
              [](const IssueRecord& a, const IssueRecord& b) { return a.issue_id < b.issue_id; });
    std::sort(commits_.begin(), commits_.end(),
              [](const CommitRecord& a, const CommitRecord& b) { return a.sha < b.sha; });
    auto comment_key = [](const CommentRecord& c) {
        return std::tie(c.issue_id, c.created_at, c.author);
    };
    std::sort(comments_.begin(), comments_.end(),
              [&](const CommentRecord& a, const CommentRecord& b) {
                  return comment_key(a) < comment_key(b);
              });
    auto event_key = [](const EventRecord& e) {
        return std::tie(e.issue_id, e.created_at, e.event_type, e.actor);
    };
    std::sort(events_.begin(), events_.end(), [&](const EventRecord& a, const EventRecord& b) {
        return event_key(a) < event_key(b);
    });

    for (std::size_t i = 0; i < issues_.size(); ++i) {
        auto [it, fresh] = issue_index_.emplace(issues_[i].issue_id, i);
        if (!fresh) {
            throw ValidationError("duplicate issue id '" + issues_[i].issue_id + "'");
        }
    }
    for (std::size_t i = 0; i < commits_.size(); ++i) {
        auto [it, fresh] = commit_index_.emplace(commits_[i].sha, i);
        if (!fresh) {
            throw ValidationError("duplicate commit sha '" + commits_[i].sha + "'");
        }
    }
    for (std::size_t i = 0; i < comments_.size(); ++i) {
        comments_by_issue_[comments_[i].issue_id].push_back(i);
    }
    for (std::size_t i = 0; i < events_.size(); ++i) {
        events_by_issue_[events_[i].issue_id].push_back(i);
    }

    report_.issue_count = issues_.size();
    report_.comment_count = comments_.size();
    report_.event_count = events_.size();
    report_.commit_count = commits_.size();
}

void Corpus::validate() {
    for (const IssueRecord& r : issues_) {
        const bool closed = r.state == IssueState::Closed;
        if (closed != r.closed_at.has_value()) {
            throw ValidationError("issue '" + r.issue_id +
                                  "': closed_at must be present iff state is closed");
        }
        if (r.closed_at && *r.closed_at < r.created_at) {
            throw ValidationError("issue '" + r.issue_id + "': closed_at precedes created_at");
        }
    }
    for (const CommentRecord& c : comments_) {
        if (!issue_index_.contains(c.issue_id)) {
            throw ValidationError("comment references unknown issue '" + c.issue_id + "'");
        }
    }
    for (const EventRecord& e : events_) {
        if (!issue_index_.contains(e.issue_id)) {
            report_.warnings.push_back("event for unknown issue '" + e.issue_id +
                                       "' ignored in tracing");
        }
        if (e.commit_sha && !commit_index_.contains(*e.commit_sha)) {
            report_.warnings.push_back("event on issue '" + e.issue_id +
                                       "' references unknown commit '" + *e.commit_sha + "'");
        }
    }
}

const IssueRecord* Corpus::find_issue(const std::string& id) const {
    auto it = issue_index_.find(id);
    return it == issue_index_.end() ? nullptr : &issues_[it->second];
}

const CommitRecord* Corpus::find_commit(const std::string& sha) const {
    auto it = commit_index_.find(sha);
    return it == commit_index_.end() ? nullptr : &commits_[it->second];
}

std::vector<const CommentRecord*> Corpus::comments_of(const std::string& issue_id) const {
    std::vector<const CommentRecord*> out;
    auto it = comments_by_issue_.find(issue_id);
    if (it == comments_by_issue_.end()) return out;
    out.reserve(it->second.size());
    for (std::size_t i : it->second) out.push_back(&comments_[i]);
    return out;
}

std::vector<const EventRecord*> Corpus::events_of(const std::string& issue_id) const {
    std::vector<const EventRecord*> out;
    auto it = events_by_issue_.find(issue_id);
    if (it == events_by_issue_.end()) return out;
    out.reserve(it->second.size());
    for (std::size_t i : it->second) out.push_back(&events_[i]);
    return out;
}

std::vector<const IssueRecord*> Corpus::issues_by_time() const {
    std::vector<const IssueRecord*> out;
    out.reserve(issues_.size());
    for (const auto& i : issues_) out.push_back(&i);
    std::sort(out.begin(), out.end(), [](const IssueRecord* a, const IssueRecord* b) {
        if (a->created_at != b->created_at) return a->created_at < b->created_at;
        return a->issue_id < b->issue_id;
    });
    return out;
}

void Corpus::save_dir(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto write = [&](const char* name, auto&& emit) {
        std::ofstream f(fs::path(dir) / (std::string(name) + ".jsonl"));
        if (!f) throw std::runtime_error(std::string("cannot write ") + name + ".jsonl");
        emit(f);
    };
    write("issues", [&](std::ostream& f) {
        for (const auto& r : issues_) f << issue_to_json(r).dump() << "\n";
    });
    write("comments", [&](std::ostream& f) {
        for (const auto& r : comments_) {
            json o{{"issue_id", r.issue_id}, {"author", r.author}, {"created_at", r.created_at}};
            f << o.dump() << "\n";
        }
    });
    write("events", [&](std::ostream& f) {
        for (const auto& r : events_) {
            json o{{"issue_id", r.issue_id},
                   {"actor", r.actor},
                   {"event_type", r.event_type},
                   {"created_at", r.created_at}};
            if (r.commit_sha) o["commit_sha"] = *r.commit_sha;
            f << o.dump() << "\n";
        }
    });
    write("commits", [&](std::ostream& f) {
        for (const auto& r : commits_) {
            json changes = json::array();
            for (const auto& c : r.file_changes) {
                changes.push_back({{"path", c.path}, {"change_type", to_string(c.change_type)}});
            }
            json o{{"sha", r.sha},
                   {"author", r.author},
                   {"committed_at", r.committed_at},
                   {"file_changes", changes}};
            f << o.dump() << "\n";
        }
    });
}

DeveloperStats developer_stats(const Corpus& corpus) {
    DeveloperStats stats;
    for (const CommitRecord& c : corpus.commits()) {
        stats[c.author].commit_count += 1;
    }
    for (const IssueRecord& i : corpus.issues()) {
        if (i.is_closed() && i.closed_by) {
            stats[*i.closed_by].closed_issue_count += 1;
        }
    }
    return stats;
}

std::set<std::string> relabel_issue(const IssueRecord& issue,
                                    const std::vector<const EventRecord*>& linked_events,
                                    const Corpus& corpus, const DeveloperStats& stats) {
    if (!issue.is_closed()) {
        throw ValidationError("relabel_issue: issue '" + issue.issue_id + "' is not closed");
    }
    const Timestamp closed_at = *issue.closed_at;

    std::set<std::string> fixers;
    for (const EventRecord* e : linked_events) {
        if (!e->commit_sha) continue;
        const CommitRecord* commit = corpus.find_commit(*e->commit_sha);
        if (!commit) continue;  // unresolved sha, already surfaced by validation
        if (commit->committed_at < closed_at) {
            fixers.insert(commit->author);
        }
    }
    if (!fixers.empty()) return fixers;

    if (issue.closed_by) {
        auto it = stats.find(*issue.closed_by);
        if (it != stats.end() && it->second.commit_count > it->second.closed_issue_count) {
            return {*issue.closed_by};
        }
    }
    return {};
}

std::vector<LabeledIssue> relabel_corpus(const Corpus& corpus, RelabelSummary* summary) {
    const DeveloperStats stats = developer_stats(corpus);
    RelabelSummary local;
    std::vector<LabeledIssue> out;
    for (const IssueRecord* issue : corpus.issues_by_time()) {
        if (!issue->is_closed()) continue;
        local.closed_issues += 1;
        LabeledIssue li;
        li.issue = issue;
        li.fixers = relabel_issue(*issue, corpus.events_of(issue->issue_id), corpus, stats);
        if (li.fixers.empty()) {
            local.unlabeled += 1;
        } else {
            local.labeled += 1;
            if (li.fixers.size() > 1) local.multi_fixer += 1;
            // distinguish rule provenance for the summary
            bool rule2 = issue->closed_by && li.fixers == std::set<std::string>{*issue->closed_by};
            if (rule2) {
                // could also be rule 1 finding exactly the closer; check traced commits
                bool any_traced = false;
                for (const EventRecord* e : corpus.events_of(issue->issue_id)) {
                    if (!e->commit_sha) continue;
                    const CommitRecord* c = corpus.find_commit(*e->commit_sha);
                    if (c && c->committed_at < *issue->closed_at) {
                        any_traced = true;
                        break;
                    }
                }
                rule2 = !any_traced;
            }
            if (rule2) {
                local.rule2 += 1;
            } else {
                local.rule1 += 1;
            }
        }
        out.push_back(std::move(li));
    }
    if (summary) *summary = local;
    return out;
}

namespace {

template <typename T>
double kappa_impl(const std::vector<T>& a, const std::vector<T>& b) {
    if (a.size() != b.size()) {
        throw ValidationError("cohens_kappa: label lists differ in length");
    }
    if (a.empty()) {
        throw ValidationError("cohens_kappa: empty label lists");
    }
    std::map<T, std::int64_t> ra, rb;
    std::int64_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ra[a[i]] += 1;
        rb[b[i]] += 1;
        if (a[i] == b[i]) agree += 1;
    }
    const double n = static_cast<double>(a.size());
    const double po = static_cast<double>(agree) / n;
    double pe = 0.0;
    for (const auto& [label, ca] : ra) {
        auto it = rb.find(label);
        if (it != rb.end()) {
            pe += (static_cast<double>(ca) / n) * (static_cast<double>(it->second) / n);
        }
    }
    if (pe >= 1.0) return 1.0;  // both raters constant and identical
    return (po - pe) / (1.0 - pe);
}

}  // namespace

double cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return kappa_impl(a, b);
}
double cohens_kappa(const std::vector<int>& a, const std::vector<int>& b) {
    return kappa_impl(a, b);
}

std::int64_t sample_size(std::int64_t population, double confidence, double margin) {
    if (margin <= 0.0 || margin >= 1.0) {
        throw ValidationError("sample_size: margin must lie in (0, 1)");
    }
    if (population <= 0) {
        throw ValidationError("sample_size: population must be positive");
    }
    double z;
    if (confidence == 0.90) {
        z = 1.645;
    } else if (confidence == 0.95) {
        z = 1.96;
    } else if (confidence == 0.99) {
        z = 2.576;
    } else {
        throw ValidationError("sample_size: confidence must be 0.90, 0.95 or 0.99");
    }
    const double n0 = z * z * 0.25 / (margin * margin);
    const double corrected = n0 / (1.0 + (n0 - 1.0) / static_cast<double>(population));
    auto n = static_cast<std::int64_t>(std::ceil(corrected));
    return std::max<std::int64_t>(n, 1);
}

}  // namespace devrec::corpus
