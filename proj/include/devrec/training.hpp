#pragma once

#include <optional>
#include <string>
#include <vector>

#include "devrec/model.hpp"

namespace devrec::training {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t patience = 10;
    double lr = 5e-3;
    double weight_decay = 5e-4;
    double margin = 1.0;
    std::size_t negatives = 5;
    std::uint64_t seed = 42;
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double wall_ms = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0;  // 1-based, minimal validation loss
    double best_val_loss = 0.0;
    bool aborted_nan = false;
};

// A (issue, positive developer, negative developer) training triple by row:
// issue_row indexes the forward target issues, dev rows index the universe.
struct Triple {
    std::uint32_t issue_row = 0;
    std::uint32_t pos_dev_row = 0;
    std::uint32_t neg_dev_row = 0;
};

// k uniform draws without replacement from candidates minus the issue's
// fixer set (fewer when the pool is smaller; empty pool skips the pair).
std::vector<std::string> sample_negatives(const std::set<std::string>& fixers,
                                          const std::vector<std::string>& candidates,
                                          std::size_t k, Rng& rng);

// Mean hinge ranking loss max(0, margin - y+ + y-) over the batch's triples,
// appended to the forward tape. Returns the loss node.
autograd::NodeId hinge_ranking_loss(model::ForwardResult& fr, const std::vector<Triple>& triples,
                                    double margin);

// Builds triples for a window batch against the candidate pool and returns
// the loss value (no optimizer step). Positives with an empty negative pool
// or an unembeddable fixer are skipped and counted.
struct BatchLoss {
    double value = 0.0;
    std::size_t triples = 0;
    std::size_t skipped_positives = 0;
};

BatchLoss batch_loss(const htg::Htg& g, const htg::WindowBatch& batch,
                     model::ParamStore& params, const std::vector<std::string>& candidates,
                     const TrainConfig& cfg, Rng& negative_rng, bool training,
                     Rng* dropout_rng, autograd::NodeId* loss_node = nullptr,
                     model::ForwardResult* out_fr = nullptr);

struct TrainResult {
    model::ParamStore best;
    TrainHistory history;
};

// Adam over chronologically ordered window batches with early stopping on
// the validation loss (dropout off, negatives frozen for the whole run).
TrainResult train(const htg::Htg& g, const htg::Split& split, const model::ModelConfig& mcfg,
                  const TrainConfig& tcfg, std::ostream* log = nullptr);

void write_history_tsv(std::ostream& out, const TrainHistory& history);

}  // namespace devrec::training
