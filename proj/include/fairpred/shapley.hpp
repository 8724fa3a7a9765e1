#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fairpred/debias.hpp"
#include "fairpred/encoding.hpp"

namespace fairpred {

// Exact enumeration is limited to this many players (cost 2^g).
inline constexpr std::size_t kMaxExactPlayers = 12;

struct AttributionConfig {
    enum class Mode { Exact, Sampled };
    Mode mode = Mode::Exact;
    std::size_t samples_per_feature = 2000; // permutations, sampled mode
    std::uint64_t seed = 1;
    bool keep_per_instance = false;
};

using PredictFn = std::function<double(const EncodedInstance&)>;

// Per-player attributions for one instance. The value of a coalition S is the
// mean prediction over the background rows with the players in S taken from
// the instance. One-hot groups move as single players.
std::vector<double> shapley_exact(const PredictFn& f,
                                  const std::vector<FeatureSchema::Group>& players,
                                  const EncodedInstance& instance,
                                  const std::vector<EncodedInstance>& background);

// Monte-Carlo permutation estimator, one background row per permutation.
// Deterministic for a fixed seed.
std::vector<double> shapley_sampled(const PredictFn& f,
                                    const std::vector<FeatureSchema::Group>& players,
                                    const EncodedInstance& instance,
                                    const std::vector<EncodedInstance>& background,
                                    std::size_t samples_per_feature, std::uint64_t seed);

struct ShapleyReport {
    struct Row {
        std::string player;
        double mean_signed = 0.0;
        double mean_abs = 0.0;
    };

    double base_value = 0.0; // mean prediction over the background
    std::vector<Row> rows;   // sorted by descending |mean_signed|
    std::vector<std::string> player_order; // players in schema order
    std::vector<std::vector<double>> per_instance; // optional, schema order

    const Row* find(const std::string& player) const;
};

// Mean signed and mean absolute attribution per player over the support set.
ShapleyReport aggregate_over_support(const PredictFn& f,
                                     const std::vector<FeatureSchema::Group>& players,
                                     const std::vector<EncodedInstance>& support,
                                     const std::vector<EncodedInstance>& background,
                                     const AttributionConfig& config);

// Convenience wrapper evaluating a trained model over encoded datasets.
ShapleyReport explain_model(const AdversarialModel& model, const Dataset& support,
                            const Dataset& background_source, std::size_t background_rows,
                            const AttributionConfig& config);

// Seeded subsample without replacement (the reference distribution).
std::vector<EncodedInstance> sample_background(const Dataset& source, std::size_t rows,
                                               std::uint64_t seed);

// |mean signed with| / |mean signed without| for one player. Returns 0 when
// the debiased value is 0 and +infinity when only the baseline is 0.
double influence_ratio(const ShapleyReport& report_without, const ShapleyReport& report_with,
                       const std::string& player);

void write_shapley_csv(const ShapleyReport& report, const std::string& path,
                       const std::string& manifest_hash);

// Text rendering: one bar per player, sorted as the report.
std::string render_shapley_bars(const ShapleyReport& report);

} // namespace fairpred
