#include "fairpred/synthlog.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairpred/errors.hpp"
#include "fairpred/neuralnet.hpp"

namespace fairpred {

void SynthConfig::validate() const {
    if (n_traces == 0) throw ConfigError("synth.n_traces must be positive");
    if (alphabet_size < 4) throw ConfigError("synth.alphabet_size must be at least 4");
    if (protected_categories.size() < 2) {
        throw ConfigError("the protected attribute needs at least 2 categories");
    }
    if (protected_categories.size() != protected_probabilities.size()) {
        throw ConfigError("protected categories and probabilities differ in length");
    }
    double sum = std::accumulate(protected_probabilities.begin(), protected_probabilities.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("protected category probabilities must sum to 1");
    }
    for (double p : protected_probabilities) {
        if (!(p >= 0.0)) throw ConfigError("category probabilities must be non-negative");
    }
    if (disadvantaged_index >= protected_categories.size()) {
        throw ConfigError("synth.disadvantaged_index out of range");
    }
    if (!(proxy_correlation >= 0.0 && proxy_correlation <= 1.0)) {
        throw ConfigError("synth.proxy_correlation must be in [0, 1]");
    }
    if (!(bias_strength >= 0.0 && bias_strength <= 1.0)) {
        throw ConfigError("synth.bias_strength must be in [0, 1]");
    }
    if (!(noise_window_hours >= 0.0)) throw ConfigError("synth.noise_window_hours must be >= 0");
    if (outcome_kind == OutcomeKind::DurationShift &&
        base_duration_hours - noise_window_hours <= 0.0) {
        throw ConfigError("synth.base_duration_hours must exceed the noise window");
    }
    if (proxy_name == protected_name) {
        throw ConfigError("the proxy attribute must differ from the protected attribute");
    }
}

namespace {

// Deterministic activity alphabet: Start, Step1..StepK, Branch, End.
std::vector<std::string> step_activities(const SynthConfig& config) {
    std::vector<std::string> steps;
    for (std::size_t i = 0; i + 3 < config.alphabet_size; ++i) {
        steps.push_back("Step" + std::to_string(i + 1));
    }
    return steps;
}

std::size_t draw_category(Rng& rng, const std::vector<double>& probabilities) {
    double u = rng.uniform();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        cumulative += probabilities[i];
        if (u < cumulative) return i;
    }
    return probabilities.size() - 1;
}

constexpr std::int64_t kLogStartMs = 1577836800000; // 2020-01-01T00:00Z
constexpr std::int64_t kTraceSpacingMs = 60000;

} // namespace

EventLog generate(const SynthConfig& config) {
    config.validate();
    std::vector<std::string> steps = step_activities(config);
    bool duration_outcome = config.outcome_kind == SynthConfig::OutcomeKind::DurationShift;

    EventLog log;
    log.traces.reserve(config.n_traces);
    for (std::size_t index = 0; index < config.n_traces; ++index) {
        Rng rng(mix_seed(config.seed, index));

        // Draw order is part of the format: length, protected, proxy, branch, noise.
        std::size_t n_events = 3 + rng.index(6); // 3..8
        std::size_t protected_category = draw_category(rng, config.protected_probabilities);
        bool disadvantaged = protected_category == config.disadvantaged_index;

        std::size_t proxy_category;
        if (rng.uniform() < config.proxy_correlation) {
            proxy_category = protected_category; // recoding of the protected value
        } else {
            proxy_category = draw_category(rng, config.protected_probabilities);
        }

        double branch_probability = config.base_branch_probability;
        if (!duration_outcome && disadvantaged) {
            branch_probability += config.bias_strength * config.branch_probability_shift;
        }
        branch_probability = std::clamp(branch_probability, 0.0, 1.0);
        bool branch = rng.uniform() < branch_probability;

        double duration_hours = config.base_duration_hours;
        if (duration_outcome && disadvantaged) {
            duration_hours += config.bias_strength * config.duration_shift_hours;
        }
        duration_hours += rng.uniform(-config.noise_window_hours, config.noise_window_hours);

        // Start, middle steps, optional Branch before End.
        std::vector<std::string> activities;
        activities.reserve(n_events);
        activities.push_back("Start");
        std::size_t middle = n_events - (branch ? 3 : 2);
        for (std::size_t i = 0; i < middle; ++i) {
            activities.push_back(steps.empty() ? "Step1" : steps[rng.index(steps.size())]);
        }
        if (branch) activities.push_back(config.branch_activity());
        activities.push_back("End");

        Trace trace;
        trace.case_id = "case_" + std::to_string(index);
        std::int64_t start_ms = kLogStartMs + static_cast<std::int64_t>(index) * kTraceSpacingMs;
        std::int64_t total_ms = std::llround(duration_hours * 3600000.0);
        std::size_t gaps = activities.size() - 1;
        for (std::size_t i = 0; i < activities.size(); ++i) {
            Event event;
            event.activity = activities[i];
            event.timestamp_ms =
                start_ms + (gaps == 0 ? 0
                                      : total_ms * static_cast<std::int64_t>(i) /
                                            static_cast<std::int64_t>(gaps));
            if (i == 0) {
                event.attributes[config.protected_name] =
                    categorical_value(config.protected_categories[protected_category]);
                event.attributes[config.proxy_name] =
                    categorical_value(config.protected_categories[proxy_category]);
            }
            trace.events.push_back(std::move(event));
        }
        log.traces.push_back(std::move(trace));
    }
    log.schema = build_attribute_schema(log.traces);
    return log;
}

GroundTruth describe(const SynthConfig& config) {
    config.validate();
    GroundTruth truth;
    bool duration_outcome = config.outcome_kind == SynthConfig::OutcomeKind::DurationShift;
    for (std::size_t i = 0; i < config.protected_categories.size(); ++i) {
        bool disadvantaged = i == config.disadvantaged_index;
        if (duration_outcome) {
            double expected = config.base_duration_hours;
            if (disadvantaged) expected += config.bias_strength * config.duration_shift_hours;
            truth.group_expected_outcome.push_back(expected);
        } else {
            double p = config.base_branch_probability;
            if (disadvantaged) p += config.bias_strength * config.branch_probability_shift;
            truth.group_expected_outcome.push_back(std::clamp(p, 0.0, 1.0));
        }
    }
    // P(proxy = recode(protected)): exact match with probability rho, else an
    // independent draw that collides with probability sum(p_i^2).
    double collision = 0.0;
    for (double p : config.protected_probabilities) collision += p * p;
    truth.proxy_match_probability =
        config.proxy_correlation + (1.0 - config.proxy_correlation) * collision;
    truth.proxy_independent = config.proxy_correlation == 0.0;
    return truth;
}

} // namespace fairpred
