#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace devrec {

// Integer UTC seconds throughout; ties broken by record id lexicographic order.
using Timestamp = std::int64_t;

// Accepts integer seconds or ISO-8601 ("2018-01-02T03:04:05Z", offset forms too).
Timestamp parse_timestamp(const std::string& text);
std::string format_timestamp(Timestamp t);

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class IssueState { Open, Closed };

struct IssueRecord {
    std::string issue_id;
    std::string title;
    std::string body;
    std::string reporter;
    Timestamp created_at = 0;
    std::optional<Timestamp> closed_at;
    std::optional<std::string> closed_by;
    std::set<std::string> original_assignees;
    IssueState state = IssueState::Open;

    bool is_closed() const { return state == IssueState::Closed; }
};

struct CommentRecord {
    std::string issue_id;
    std::string author;
    Timestamp created_at = 0;
};

struct EventRecord {
    std::string issue_id;
    std::string actor;
    std::string event_type;
    Timestamp created_at = 0;
    std::optional<std::string> commit_sha;
};

enum class ChangeType { Created, Modified, Removed };

const char* to_string(ChangeType t);
ChangeType change_type_from_string(const std::string& s);

struct FileChange {
    std::string path;
    ChangeType change_type = ChangeType::Modified;
};

struct CommitRecord {
    std::string sha;
    std::string author;
    Timestamp committed_at = 0;
    std::vector<FileChange> file_changes;
};

enum class NodeType { Issue, Developer, File };

const char* to_string(NodeType t);
NodeType node_type_from_string(const std::string& s);

struct NodeRef {
    NodeType type = NodeType::Issue;
    std::string id;

    friend bool operator==(const NodeRef&, const NodeRef&) = default;
    friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

}  // namespace devrec

template <>
struct std::hash<devrec::NodeRef> {
    std::size_t operator()(const devrec::NodeRef& n) const noexcept {
        return std::hash<std::string>{}(n.id) * 3u + static_cast<std::size_t>(n.type);
    }
};
