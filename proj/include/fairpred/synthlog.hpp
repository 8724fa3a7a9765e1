#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairpred/eventlog.hpp"

namespace fairpred {

// Seeded generator of event logs with injected, tunable discrimination and a
// correlated proxy attribute. Traces follow a simple sequential flow
// (Start, steps..., End) with one optional Branch activity.
struct SynthConfig {
    enum class OutcomeKind { DurationShift, OccurrenceShift };

    std::size_t n_traces = 1000;
    std::size_t alphabet_size = 6; // >= 4: Start, steps, Branch, End

    std::string protected_name = "gender";
    std::vector<std::string> protected_categories = {"f", "m"};
    std::vector<double> protected_probabilities = {0.5, 0.5};
    std::size_t disadvantaged_index = 0;

    std::string proxy_name = "department";
    double proxy_correlation = 0.8; // rho: probability the proxy recodes the protected value

    double bias_strength = 0.8; // beta
    OutcomeKind outcome_kind = OutcomeKind::DurationShift;

    // DurationShift: duration = base + beta * shift * [disadvantaged] + noise
    double base_duration_hours = 10.0;
    double duration_shift_hours = 24.0;
    double noise_window_hours = 2.0; // uniform on [-w, +w]

    // OccurrenceShift: P(Branch) = clamp(base + beta * shift * [disadvantaged])
    double base_branch_probability = 0.45;
    double branch_probability_shift = 0.35;

    std::uint64_t seed = 1;

    void validate() const; // throws ConfigError
    std::string branch_activity() const { return "Branch"; }
};

struct GroundTruth {
    // Per protected category, the expected outcome (hours, or branch
    // probability for occurrence logs).
    std::vector<double> group_expected_outcome;
    // P(proxy equals the recoding of the protected value).
    double proxy_match_probability = 0.0;
    bool proxy_independent = false;
};

// Fully determined by config.seed; per-trace streams are derived from
// (seed, trace index).
EventLog generate(const SynthConfig& config);

// Analytic expectations implied by the config, for use as test oracles.
GroundTruth describe(const SynthConfig& config);

} // namespace fairpred
