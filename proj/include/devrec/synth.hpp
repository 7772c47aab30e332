#pragma once

#include <string>
#include <vector>

#include "devrec/corpus.hpp"

namespace devrec::synth {

// Planted-structure generator: module-partitioned developers, files and
// vocabularies, optional mid-stream retirement drift. Everything derives
// from the seed; reruns are byte-identical.
struct SynthSpec {
    std::size_t modules = 5;
    std::size_t devs_per_module = 2;
    std::size_t issues = 500;
    std::size_t files_per_module = 12;
    std::size_t vocab_per_module = 30;
    // 0 = no drift; s in 1..10 retires each module's primary developer at
    // the start of slice s (of a 10-slice issue partition) and hands the
    // role to a fresh successor
    std::size_t drift_slice = 0;
    double fixer_comment_prob = 0.85;
    double reporter_is_fixer_prob = 0.25;
    double drive_by_prob = 0.30;  // P(>=1 cross-module commenter)
    std::uint64_t seed = 7;

    Timestamp t0 = 1500000000;       // first issue timestamp
    Timestamp issue_gap = 3600;      // spacing between issues
};

struct SynthCorpus {
    std::vector<IssueRecord> issues;
    std::vector<CommentRecord> comments;
    std::vector<EventRecord> events;
    std::vector<CommitRecord> commits;
    // ground truth for assertions: issue id -> module
    std::vector<std::size_t> issue_module;
};

SynthCorpus generate_synthetic(const SynthSpec& spec);

// writes issues/comments/events/commits .jsonl into dir
void write_record_streams(const SynthCorpus& sc, const std::string& dir);

}  // namespace devrec::synth
