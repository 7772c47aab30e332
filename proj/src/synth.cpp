#include "devrec/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "devrec/rng.hpp"

namespace devrec::synth {

namespace {

std::string dev_id(std::size_t m, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "dev_m%zu_%zu", m, i);
    return buf;
}

std::string successor_id(std::size_t m) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "dev_m%zu_succ", m);
    return buf;
}

std::string issue_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "i%06zu", i);
    return buf;
}

}  // namespace

// Each module is split into one sub-area per developer slot: slot tokens
// name the area, slot files are created and fixed by the area's owner, and
// issue text mixes shared module tokens with the area's tokens. With drift,
// slot 0's owner retires and a successor inherits the area.
SynthCorpus generate_synthetic(const SynthSpec& spec) {
    if (spec.modules == 0 || spec.devs_per_module == 0) {
        throw ValidationError("generate_synthetic: need at least one module and one developer");
    }
    if (spec.issues == 0) {
        throw ValidationError("generate_synthetic: need at least one issue");
    }
    Rng rng = Rng::substream(spec.seed, "synth");
    SynthCorpus sc;

    const Timestamp span = static_cast<Timestamp>(spec.issues) * spec.issue_gap;
    const bool drifting = spec.drift_slice > 0;
    const Timestamp drift_at =
        drifting ? spec.t0 + span * static_cast<Timestamp>(spec.drift_slice - 1) / 10
                 : spec.t0 + span + 1;

    const std::size_t slots = spec.devs_per_module;
    auto owner_of_slot = [&](std::size_t m, std::size_t slot, Timestamp at) {
        if (drifting && slot == 0 && at >= drift_at) return successor_id(m);
        return dev_id(m, slot);
    };
    auto active_devs = [&](std::size_t m, Timestamp at) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < slots; ++i) out.push_back(owner_of_slot(m, i, at));
        return out;
    };

    // vocabulary: a shared block per module plus one block per slot;
    // blocks are disjoint across modules and slots
    const std::size_t shared_tokens = std::max<std::size_t>(spec.vocab_per_module / 3, 2);
    const std::size_t slot_tokens =
        std::max<std::size_t>((spec.vocab_per_module - shared_tokens) / slots, 2);
    auto shared_tok = [&](std::size_t m, std::size_t v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "mod%zuword%zu", m, v % shared_tokens);
        return std::string(buf);
    };
    auto slot_tok = [&](std::size_t m, std::size_t slot, std::size_t v) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "mod%zuarea%zuword%zu", m, slot, v % slot_tokens);
        return std::string(buf);
    };

    // seed files per slot, creation spread across the whole stream
    std::vector<std::vector<std::vector<std::string>>> files(
        spec.modules, std::vector<std::vector<std::string>>(slots));
    std::size_t commit_no = 0;
    for (std::size_t m = 0; m < spec.modules; ++m) {
        for (std::size_t f = 0; f < spec.files_per_module; ++f) {
            const std::size_t slot = f % slots;
            const std::string t1 = slot_tok(m, slot, rng.next_below(slot_tokens));
            const std::string t2 = shared_tok(m, rng.next_below(shared_tokens));
            char path[192];
            std::snprintf(path, sizeof(path), "module%zu/%s_%s_%zu.src", m, t1.c_str(),
                          t2.c_str(), f);
            files[m][slot].push_back(path);

            const double frac = static_cast<double>(f) / static_cast<double>(
                                    std::max<std::size_t>(spec.files_per_module, 1));
            const Timestamp created =
                spec.t0 - 7200 + static_cast<Timestamp>(frac * static_cast<double>(span));
            char sha[48];
            std::snprintf(sha, sizeof(sha), "setup%06zu", commit_no++);
            sc.commits.push_back(CommitRecord{
                sha, owner_of_slot(m, slot, created), created,
                {FileChange{path, ChangeType::Created}}});
        }
    }

    for (std::size_t i = 0; i < spec.issues; ++i) {
        const Timestamp created = spec.t0 + static_cast<Timestamp>(i) * spec.issue_gap;
        const Timestamp closed = created + 1800;
        const std::size_t m = static_cast<std::size_t>(rng.next_below(spec.modules));
        const std::size_t slot = static_cast<std::size_t>(rng.next_below(slots));
        const std::string fixer = owner_of_slot(m, slot, created);
        auto active = active_devs(m, created);

        IssueRecord issue;
        issue.issue_id = issue_id(i);
        for (std::size_t w = 0; w < 4; ++w) {
            const std::string tok = w % 2 == 0 ? slot_tok(m, slot, rng.next_below(slot_tokens))
                                               : shared_tok(m, rng.next_below(shared_tokens));
            issue.title += (w ? " " : "") + tok;
        }
        for (std::size_t w = 0; w < 4; ++w) {
            const std::string tok = w % 2 == 0 ? slot_tok(m, slot, rng.next_below(slot_tokens))
                                               : shared_tok(m, rng.next_below(shared_tokens));
            issue.body += (w ? " " : "") + tok;
        }

        // reporters skew toward the issue's module, sometimes the fixer
        const double rroll = rng.next_double();
        if (rroll < spec.reporter_is_fixer_prob) {
            issue.reporter = fixer;
        } else if (rroll < spec.reporter_is_fixer_prob + 0.45) {
            issue.reporter = active[rng.next_below(active.size())];
        } else {
            const std::size_t rm = static_cast<std::size_t>(rng.next_below(spec.modules));
            auto rd = active_devs(rm, created);
            issue.reporter = rd[rng.next_below(rd.size())];
        }
        issue.created_at = created;
        issue.closed_at = closed;
        issue.closed_by = fixer;
        issue.state = IssueState::Closed;

        if (rng.next_double() < spec.fixer_comment_prob) {
            sc.comments.push_back(CommentRecord{issue.issue_id, fixer, created + 300});
        }
        // occasional drive-by commenters from other modules
        if (spec.modules > 1) {
            const double roll = rng.next_double();
            const std::size_t extra =
                roll >= spec.drive_by_prob ? 0 : (roll < spec.drive_by_prob / 6.0 ? 2 : 1);
            for (std::size_t c = 0; c < extra; ++c) {
                std::size_t cm = static_cast<std::size_t>(rng.next_below(spec.modules - 1));
                if (cm >= m) ++cm;
                auto cd = active_devs(cm, created);
                const std::string commenter = cd[rng.next_below(cd.size())];
                sc.comments.push_back(
                    CommentRecord{issue.issue_id, commenter, created + 600 + 60 * (Timestamp)c});
            }
        }

        // the fix touches the owner's area files; modified changes leave no
        // create/remove edges but drive traced similarity
        char sha[48];
        std::snprintf(sha, sizeof(sha), "fix%06zu", i);
        CommitRecord fix;
        fix.sha = sha;
        fix.author = fixer;
        fix.committed_at = closed - 600;
        const auto& own = files[m][slot];
        const std::size_t touched = 1 + static_cast<std::size_t>(rng.next_below(2));
        std::set<std::string> picked;
        for (std::size_t t = 0; t < touched; ++t) {
            picked.insert(own[rng.next_below(own.size())]);
        }
        for (const std::string& p : picked) {
            fix.file_changes.push_back(FileChange{p, ChangeType::Modified});
        }
        // some fixes land a fresh file, so create activity flows all stream
        if (rng.next_double() < 0.15) {
            const std::string tok = slot_tok(m, slot, rng.next_below(slot_tokens));
            char extra_path[192];
            std::snprintf(extra_path, sizeof(extra_path), "module%zu/%s_fix%zu.src", m,
                          tok.c_str(), i);
            fix.file_changes.push_back(FileChange{extra_path, ChangeType::Created});
            files[m][slot].push_back(extra_path);
        }
        sc.commits.push_back(std::move(fix));

        sc.events.push_back(
            EventRecord{issue.issue_id, fixer, "referenced", closed - 600, std::string(sha)});
        sc.events.push_back(EventRecord{issue.issue_id, fixer, "closed", closed, std::nullopt});

        sc.issues.push_back(std::move(issue));
        sc.issue_module.push_back(m);
    }
    return sc;
}

void write_record_streams(const SynthCorpus& sc, const std::string& dir) {
    corpus::Corpus c = corpus::Corpus::from_records(sc.issues, sc.comments, sc.events,
                                                    sc.commits);
    c.save_dir(dir);
}

}  // namespace devrec::synth
