#pragma once

#include "fairpred/config.hpp"

namespace fairpred {

// Pipeline commands behind the CLI. Each reads its inputs from the config,
// writes its outputs plus a manifest into the `out_dir` key (default "."),
// and throws ConfigError / DataError / TrainingError on failure.

// Writes train.csv and test.csv split at `train_fraction`.
void cmd_split(const Config& config);

// Trains a model on `input`; grid mode (any grid.* key) runs the search and
// stores grid_report.csv. Writes model.txt.
void cmd_train(const Config& config);

// Evaluates `model` on `input`: predictions.csv and fairness.csv.
void cmd_evaluate(const Config& config);

// Shapley report for `model` over `input` as the support set: shapley.csv.
// With `compare_model` also writes ratio.csv (protected-influence ratios).
void cmd_explain(const Config& config);

// Generates a synthetic log per the synth.* keys (CSV or XES).
void cmd_generate(const Config& config);

} // namespace fairpred
