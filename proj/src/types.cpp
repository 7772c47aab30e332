#include "devrec/types.hpp"

#include <cctype>
#include <cstdio>
#include <ctime>

namespace devrec {

namespace {

bool all_digits_or_sign(const std::string& s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i >= s.size()) return false;
    for (; i < s.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    return true;
}

constexpr int kDaysPerMonth[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

// days since 1970-01-01 for a civil date (valid for the tracker era)
std::int64_t days_from_civil(int y, int m, int d) {
    std::int64_t days = 0;
    if (y >= 1970) {
        for (int yy = 1970; yy < y; ++yy) days += is_leap(yy) ? 366 : 365;
    } else {
        for (int yy = y; yy < 1970; ++yy) days -= is_leap(yy) ? 366 : 365;
    }
    for (int mm = 1; mm < m; ++mm) {
        days += kDaysPerMonth[mm - 1];
        if (mm == 2 && is_leap(y)) days += 1;
    }
    return days + (d - 1);
}

}  // namespace

Timestamp parse_timestamp(const std::string& text) {
    if (all_digits_or_sign(text)) {
        try {
            return static_cast<Timestamp>(std::stoll(text));
        } catch (const std::exception&) {
            throw ParseError("timestamp out of range: " + text);
        }
    }
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    int n = 0;
    if (std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d%n", &y, &mo, &d, &h, &mi, &s, &n) != 6 &&
        std::sscanf(text.c_str(), "%d-%d-%d %d:%d:%d%n", &y, &mo, &d, &h, &mi, &s, &n) != 6) {
        if (std::sscanf(text.c_str(), "%d-%d-%d%n", &y, &mo, &d, &n) == 3 &&
            static_cast<std::size_t>(n) == text.size()) {
            h = mi = s = 0;
        } else {
            throw ParseError("unparseable timestamp: " + text);
        }
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) {
        throw ParseError("invalid timestamp fields: " + text);
    }
    Timestamp base = days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;

    // optional fraction and zone suffix
    std::string rest = text.substr(static_cast<std::size_t>(n));
    if (!rest.empty() && rest[0] == '.') {
        std::size_t i = 1;
        while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) ++i;
        rest = rest.substr(i);
    }
    if (rest.empty() || rest == "Z" || rest == "z") return base;
    int zh = 0, zm = 0;
    char sign = rest[0];
    if ((sign == '+' || sign == '-') &&
        (std::sscanf(rest.c_str() + 1, "%d:%d", &zh, &zm) == 2 ||
         std::sscanf(rest.c_str() + 1, "%2d%2d", &zh, &zm) == 2)) {
        Timestamp off = zh * 3600 + zm * 60;
        return sign == '+' ? base - off : base + off;
    }
    throw ParseError("unparseable timestamp zone: " + text);
}

std::string format_timestamp(Timestamp t) {
    std::time_t tt = static_cast<std::time_t>(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

const char* to_string(ChangeType t) {
    switch (t) {
        case ChangeType::Created: return "created";
        case ChangeType::Modified: return "modified";
        case ChangeType::Removed: return "removed";
    }
    return "?";
}

ChangeType change_type_from_string(const std::string& s) {
    if (s == "created" || s == "added") return ChangeType::Created;
    if (s == "modified" || s == "changed") return ChangeType::Modified;
    if (s == "removed" || s == "deleted") return ChangeType::Removed;
    throw ParseError("unknown change_type: " + s);
}

const char* to_string(NodeType t) {
    switch (t) {
        case NodeType::Issue: return "issue";
        case NodeType::Developer: return "developer";
        case NodeType::File: return "file";
    }
    return "?";
}

NodeType node_type_from_string(const std::string& s) {
    if (s == "issue") return NodeType::Issue;
    if (s == "developer") return NodeType::Developer;
    if (s == "file") return NodeType::File;
    throw ParseError("unknown node type: " + s);
}

}  // namespace devrec
