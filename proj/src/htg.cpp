#include "devrec/htg.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "devrec/rng.hpp"

namespace devrec::htg {

namespace {

constexpr Timestamp kMinTs = std::numeric_limits<Timestamp>::min();
constexpr Timestamp kMaxTs = std::numeric_limits<Timestamp>::max();

template <typename T>
void sort_unique(std::vector<T>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::vector<SliceBoundary> slice_timeline(
    const std::vector<const corpus::LabeledIssue*>& issues_sorted, std::size_t T) {
    if (T == 0) throw ValidationError("slice_timeline: T must be positive");
    const std::size_t n = issues_sorted.size();
    if (n < T) {
        throw ValidationError("slice_timeline: need at least " + std::to_string(T) +
                              " issues, got " + std::to_string(n));
    }
    const std::size_t q = n / T;
    const std::size_t r = n % T;
    std::vector<SliceBoundary> out(T);
    std::size_t at = 0;
    for (std::size_t i = 0; i < T; ++i) {
        SliceBoundary& b = out[i];
        b.first_index = at;
        b.count = q + (i < r ? 1 : 0);
        b.issue_first = issues_sorted[at]->issue->created_at;
        b.issue_last = issues_sorted[at + b.count - 1]->issue->created_at;
        b.start = (i == 0) ? kMinTs : b.issue_first;
        at += b.count;
    }
    for (std::size_t i = 0; i + 1 < T; ++i) out[i].end = out[i + 1].start;
    out[T - 1].end = kMaxTs;
    return out;
}

bool Snapshot::has_node(const NodeRef& n) const {
    auto contains = [](const std::vector<std::string>& v, const std::string& id) {
        return std::binary_search(v.begin(), v.end(), id);
    };
    switch (n.type) {
        case NodeType::Issue: return contains(issues, n.id) || contains(visiting_issues, n.id);
        case NodeType::Developer: return contains(developers, n.id);
        case NodeType::File: return contains(files, n.id);
    }
    return false;
}

Htg build_snapshots(const std::vector<Edge>& edges,
                    const std::vector<SliceBoundary>& boundaries,
                    const std::vector<const corpus::LabeledIssue*>& issues_sorted,
                    BuildStats* stats) {
    if (boundaries.empty()) throw ValidationError("build_snapshots: no slice boundaries");
    const std::size_t T = boundaries.size();

    struct IssueInfo {
        std::size_t home = 0;  // 1-based
        Timestamp created_at = 0;
        std::optional<Timestamp> closed_at;
    };
    std::unordered_map<std::string, IssueInfo> issue_info;
    for (std::size_t s = 0; s < T; ++s) {
        const SliceBoundary& b = boundaries[s];
        for (std::size_t i = 0; i < b.count; ++i) {
            const corpus::LabeledIssue* li = issues_sorted[b.first_index + i];
            issue_info[li->issue->issue_id] =
                IssueInfo{s + 1, li->issue->created_at, li->issue->closed_at};
        }
    }

    auto slice_of = [&](Timestamp at) -> std::size_t {
        // last slice whose start <= at; starts are non-decreasing
        std::size_t lo = 0, hi = T - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi + 1) / 2;
            if (boundaries[mid].start <= at) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        return lo + 1;  // 1-based
    };

    Htg g;
    g.snapshots.resize(T);
    for (std::size_t s = 0; s < T; ++s) {
        Snapshot& snap = g.snapshots[s];
        const SliceBoundary& b = boundaries[s];
        snap.index = s + 1;
        snap.start = b.start;
        snap.end = b.end;
        snap.issue_first = b.issue_first;
        snap.issue_last = b.issue_last;
        for (std::size_t i = 0; i < b.count; ++i) {
            snap.issues.push_back(issues_sorted[b.first_index + i]->issue->issue_id);
        }
        std::sort(snap.issues.begin(), snap.issues.end());
    }
    for (const corpus::LabeledIssue* li : issues_sorted) {
        g.fixers[li->issue->issue_id] = li->fixers;
    }

    // file existence interval: first sighting through last removal
    std::map<std::string, std::pair<Timestamp, Timestamp>> file_span;  // [first, removal)
    for (const Edge& e : edges) {
        const NodeRef* file = nullptr;
        if (e.src.type == NodeType::File) file = &e.src;
        if (e.dst.type == NodeType::File) file = &e.dst;
        if (!file) continue;
        auto [it, fresh] = file_span.emplace(file->id, std::make_pair(e.at, kMaxTs));
        if (!fresh) it->second.first = std::min(it->second.first, e.at);
    }
    for (const Edge& e : edges) {
        if (e.relation != relations::RelationType::Remove) continue;
        auto& span = file_span.at(e.dst.id);
        if (span.second == kMaxTs || e.at > span.second) span.second = e.at;
    }

    BuildStats local;
    for (const Edge& e : edges) {
        if (!relations::endpoint_types_valid(e)) {
            throw ValidationError("build_snapshots: edge endpoint types do not match relation");
        }
        std::size_t s = slice_of(e.at);
        const bool issue_edge = e.src.type == NodeType::Issue;
        if (issue_edge) {
            auto it = issue_info.find(e.src.id);
            if (it == issue_info.end()) {
                throw ValidationError("build_snapshots: dangling edge endpoint, unknown issue '" +
                                      e.src.id + "'");
            }
            const IssueInfo& info = it->second;
            if (s < info.home) {
                throw ValidationError("build_snapshots: edge on issue '" + e.src.id +
                                      "' timestamped before its home slice");
            }
            if (s > info.home) {
                // Report/Similar are stamped at creation; landing in a later
                // slice is only legitimate via a boundary tie
                if (e.relation != relations::RelationType::Comment &&
                    e.at != info.created_at) {
                    throw ValidationError("build_snapshots: " +
                                          std::string(relations::to_string(e.relation)) +
                                          " edge on issue '" + e.src.id +
                                          "' timestamped outside its home slice");
                }
                const Timestamp slice_start = g.snapshots[s - 1].start;
                const bool still_open = !info.closed_at || *info.closed_at > slice_start;
                if (!still_open) {
                    local.dropped_closed_issue_edges += 1;
                    continue;
                }
                local.late_comment_edges += 1;
                g.snapshots[s - 1].visiting_issues.push_back(e.src.id);
            }
        }
        g.snapshots[s - 1].edges.push_back(e);
    }

    for (Snapshot& snap : g.snapshots) {
        sort_unique(snap.visiting_issues);
        // visiting set excludes home issues
        std::vector<std::string> v;
        std::set_difference(snap.visiting_issues.begin(), snap.visiting_issues.end(),
                            snap.issues.begin(), snap.issues.end(), std::back_inserter(v));
        snap.visiting_issues = std::move(v);

        for (const Edge& e : snap.edges) {
            if (e.src.type == NodeType::Developer) snap.developers.push_back(e.src.id);
            if (e.dst.type == NodeType::Developer) snap.developers.push_back(e.dst.id);
            if (e.src.type == NodeType::File) snap.files.push_back(e.src.id);
            if (e.dst.type == NodeType::File) snap.files.push_back(e.dst.id);
        }
        // every file in existence during the slice window
        for (const auto& [file, span] : file_span) {
            if (span.first < snap.end && span.second > snap.start) {
                snap.files.push_back(file);
            }
        }
        sort_unique(snap.developers);
        sort_unique(snap.files);
        relations::sort_edges(snap.edges);
    }
    if (stats) *stats = local;
    return g;
}

std::size_t Htg::home_slice(const std::string& issue_id) const {
    if (home_cache_.empty()) {
        for (const Snapshot& s : snapshots) {
            for (const std::string& id : s.issues) home_cache_[id] = s.index;
        }
    }
    auto it = home_cache_.find(issue_id);
    return it == home_cache_.end() ? 0 : it->second;
}

Split chronological_split(const Htg& htg, std::size_t train_parts, std::size_t val_parts,
                          std::size_t test_parts) {
    const std::size_t T = htg.T();
    if (train_parts == 0 || val_parts == 0 || test_parts == 0 ||
        train_parts + val_parts + test_parts != T) {
        throw ValidationError("chronological_split: ratio parts " + std::to_string(train_parts) +
                              ":" + std::to_string(val_parts) + ":" + std::to_string(test_parts) +
                              " do not partition T=" + std::to_string(T));
    }
    Split sp;
    std::size_t t = 1;
    for (std::size_t i = 0; i < train_parts; ++i) sp.train.push_back(t++);
    for (std::size_t i = 0; i < val_parts; ++i) sp.validation.push_back(t++);
    for (std::size_t i = 0; i < test_parts; ++i) sp.test.push_back(t++);
    return sp;
}

namespace {

WindowBatch make_batch(const Htg& htg, std::size_t target, std::size_t tw) {
    WindowBatch b;
    b.target_slice = target;
    for (std::size_t t = target - tw; t < target; ++t) b.input_slices.push_back(t);
    const Snapshot& snap = htg.snapshots[target - 1];
    for (const std::string& issue : snap.issues) {
        auto it = htg.fixers.find(issue);
        if (it == htg.fixers.end()) continue;
        for (const std::string& fixer : it->second) {
            b.positives.emplace_back(issue, fixer);
        }
    }
    return b;
}

}  // namespace

WindowPlan window_batches(const Htg& htg, std::size_t tw, const Split& split) {
    if (tw < 1 || tw > 7) {
        throw ValidationError("window_batches: tw must lie in 1..7, got " + std::to_string(tw));
    }
    WindowPlan plan;
    const std::size_t last_train = split.train.back();
    for (std::size_t target = tw + 1; target <= last_train; ++target) {
        plan.training.push_back(make_batch(htg, target, tw));
    }
    for (std::size_t v : split.validation) {
        if (v <= tw) throw ValidationError("window_batches: tw too large for validation slice");
        plan.validation.push_back(make_batch(htg, v, tw));
    }
    for (std::size_t t : split.test) {
        if (t <= tw) throw ValidationError("window_batches: tw too large for test slice");
        plan.test.push_back(make_batch(htg, t, tw));
    }
    if (plan.training.empty()) {
        throw ValidationError("window_batches: no training windows fit before slice " +
                              std::to_string(last_train));
    }
    return plan;
}

void Htg::save(std::ostream& out) const {
    std::size_t nodes = 0, edges = 0;
    for (const Snapshot& s : snapshots) {
        nodes += s.issues.size() + s.visiting_issues.size() + s.developers.size() +
                 s.files.size();
        edges += s.edges.size();
    }
    out << "htg\t1\t" << snapshots.size() << '\t' << nodes << '\t' << edges << '\n';
    char buf[64];
    for (const Snapshot& s : snapshots) {
        out << "slice\t" << s.index << '\t' << s.start << '\t' << s.end << '\t' << s.issue_first
            << '\t' << s.issue_last << '\n';
        for (const std::string& id : s.issues) {
            out << "node\tissue\t" << id << '\t';
            const auto it = fixers.find(id);
            if (it == fixers.end() || it->second.empty()) {
                out << '-';
            } else {
                bool first = true;
                for (const std::string& f : it->second) {
                    if (!first) out << ',';
                    out << f;
                    first = false;
                }
            }
            out << "\thome\n";
        }
        for (const std::string& id : s.visiting_issues) {
            out << "node\tissue\t" << id << "\t-\tvisiting\n";
        }
        for (const std::string& id : s.developers) out << "node\tdeveloper\t" << id << '\n';
        for (const std::string& id : s.files) out << "node\tfile\t" << id << '\n';
        for (const Edge& e : s.edges) {
            std::snprintf(buf, sizeof(buf), "%.9g", e.weight);
            out << "edge\t" << to_string(e.src.type) << '\t' << e.src.id << '\t'
                << relations::to_string(e.relation) << '\t' << to_string(e.dst.type) << '\t'
                << e.dst.id << '\t' << e.at << '\t' << buf << '\t'
                << relations::to_string(e.provenance) << '\n';
        }
    }
}

Htg Htg::load(std::istream& in) {
    Htg g;
    std::string line;
    std::size_t line_no = 0;
    Snapshot* cur = nullptr;
    std::set<std::string> seen_home;
    auto fail = [&](const std::string& msg) {
        throw ValidationError("graph line " + std::to_string(line_no) + ": " + msg);
    };

    auto split_tabs = [](const std::string& l) {
        std::vector<std::string> parts;
        std::string cell;
        std::istringstream ss(l);
        while (std::getline(ss, cell, '\t')) parts.push_back(cell);
        return parts;
    };

    std::size_t declared_T = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto parts = split_tabs(line);
        if (parts[0] == "htg") {
            if (parts.size() != 5 || parts[1] != "1") fail("bad header");
            declared_T = std::stoul(parts[2]);
        } else if (parts[0] == "slice") {
            if (parts.size() != 6) fail("bad slice line");
            g.snapshots.emplace_back();
            cur = &g.snapshots.back();
            cur->index = std::stoul(parts[1]);
            if (cur->index != g.snapshots.size()) fail("slice indices out of order");
            cur->start = std::stoll(parts[2]);
            cur->end = std::stoll(parts[3]);
            cur->issue_first = std::stoll(parts[4]);
            cur->issue_last = std::stoll(parts[5]);
        } else if (parts[0] == "node") {
            if (!cur) fail("node before any slice");
            if (parts.size() < 3) fail("bad node line");
            const NodeType type = node_type_from_string(parts[1]);
            if (type == NodeType::Issue) {
                if (parts.size() != 5) fail("issue node needs fixers and residence");
                if (parts[4] == "home") {
                    if (!seen_home.insert(parts[2]).second) {
                        fail("issue '" + parts[2] + "' is home in two slices");
                    }
                    cur->issues.push_back(parts[2]);
                    std::set<std::string> fx;
                    if (parts[3] != "-") {
                        std::istringstream fs(parts[3]);
                        std::string f;
                        while (std::getline(fs, f, ',')) {
                            if (!f.empty()) fx.insert(f);
                        }
                    }
                    g.fixers[parts[2]] = std::move(fx);
                } else if (parts[4] == "visiting") {
                    cur->visiting_issues.push_back(parts[2]);
                } else {
                    fail("unknown issue residence '" + parts[4] + "'");
                }
            } else if (type == NodeType::Developer) {
                cur->developers.push_back(parts[2]);
            } else {
                cur->files.push_back(parts[2]);
            }
        } else if (parts[0] == "edge") {
            if (!cur) fail("edge before any slice");
            if (parts.size() != 9) fail("bad edge line");
            Edge e;
            e.src = {node_type_from_string(parts[1]), parts[2]};
            e.relation = relations::relation_from_string(parts[3]);
            e.dst = {node_type_from_string(parts[4]), parts[5]};
            e.at = std::stoll(parts[6]);
            e.weight = std::stod(parts[7]);
            e.provenance = relations::provenance_from_string(parts[8]);
            if (!relations::endpoint_types_valid(e)) fail("edge endpoint types invalid");
            cur->edges.push_back(std::move(e));
        } else {
            fail("unknown record '" + parts[0] + "'");
        }
    }
    if (declared_T != g.snapshots.size()) {
        throw ValidationError("graph: header slice count " + std::to_string(declared_T) +
                              " != slices present " + std::to_string(g.snapshots.size()));
    }
    for (Snapshot& s : g.snapshots) {
        sort_unique(s.issues);
        sort_unique(s.visiting_issues);
        sort_unique(s.developers);
        sort_unique(s.files);
        relations::sort_edges(s.edges);
        for (const Edge& e : s.edges) {
            if (!s.has_node(e.src) || !s.has_node(e.dst)) {
                throw ValidationError("graph: slice " + std::to_string(s.index) + " edge " +
                                      e.src.id + " -> " + e.dst.id +
                                      " references a node outside the slice");
            }
            if (e.at < s.start || (s.end != kMaxTs && e.at >= s.end)) {
                throw ValidationError("graph: slice " + std::to_string(s.index) + " edge " +
                                      e.src.id + " -> " + e.dst.id +
                                      " timestamped outside the slice range");
            }
        }
    }
    return g;
}

std::uint64_t Htg::structure_hash() const {
    std::ostringstream ss;
    save(ss);
    return fnv1a64(ss.str());
}

}  // namespace devrec::htg
