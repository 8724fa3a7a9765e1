#include "fairpred/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fairpred/csv.hpp"
#include "fairpred/errors.hpp"

namespace fairpred {

namespace {

void copy_players(EncodedInstance& into, const EncodedInstance& from,
                  const std::vector<FeatureSchema::Group>& players, std::uint32_t mask) {
    for (std::size_t p = 0; p < players.size(); ++p) {
        if (!(mask & (1u << p))) continue;
        for (std::size_t index : players[p].indices) {
            into.values[index] = from.values[index];
        }
    }
}

} // namespace

std::vector<double> shapley_exact(const PredictFn& f,
                                  const std::vector<FeatureSchema::Group>& players,
                                  const EncodedInstance& instance,
                                  const std::vector<EncodedInstance>& background) {
    std::size_t g = players.size();
    if (g > kMaxExactPlayers) {
        throw ConfigError("exact Shapley enumeration is limited to " +
                          std::to_string(kMaxExactPlayers) + " players (got " + std::to_string(g) +
                          "); use sampled mode");
    }
    if (background.empty()) {
        throw ConfigError("Shapley attribution needs a non-empty background");
    }

    // Coalition values: v(S) = mean over background rows of f(hybrid) where
    // the players in S come from the instance.
    std::size_t n_masks = std::size_t{1} << g;
    std::vector<double> value(n_masks, 0.0);
    double inv_bg = 1.0 / static_cast<double>(background.size());
    EncodedInstance hybrid;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        double sum = 0.0;
        for (const EncodedInstance& row : background) {
            hybrid = row;
            copy_players(hybrid, instance, players, static_cast<std::uint32_t>(mask));
            sum += f(hybrid);
        }
        value[mask] = sum * inv_bg;
    }

    // weight(s) = s! (g-1-s)! / g!
    std::vector<double> factorial(g + 1, 1.0);
    for (std::size_t i = 1; i <= g; ++i) factorial[i] = factorial[i - 1] * static_cast<double>(i);
    std::vector<double> weight(g, 0.0);
    for (std::size_t s = 0; s < g; ++s) {
        weight[s] = factorial[s] * factorial[g - 1 - s] / factorial[g];
    }

    std::vector<double> phi(g, 0.0);
    for (std::size_t p = 0; p < g; ++p) {
        std::uint32_t bit = 1u << p;
        for (std::size_t mask = 0; mask < n_masks; ++mask) {
            if (mask & bit) continue;
            std::size_t s = static_cast<std::size_t>(std::popcount(static_cast<std::uint32_t>(mask)));
            phi[p] += weight[s] * (value[mask | bit] - value[mask]);
        }
    }
    return phi;
}

std::vector<double> shapley_sampled(const PredictFn& f,
                                    const std::vector<FeatureSchema::Group>& players,
                                    const EncodedInstance& instance,
                                    const std::vector<EncodedInstance>& background,
                                    std::size_t samples_per_feature, std::uint64_t seed) {
    std::size_t g = players.size();
    if (samples_per_feature == 0) {
        throw ConfigError("samples_per_feature must be >= 1");
    }
    if (background.empty()) {
        throw ConfigError("Shapley attribution needs a non-empty background");
    }

    Rng rng(mix_seed(seed, 0x5a));
    std::vector<std::size_t> permutation(g);
    std::vector<double> phi(g, 0.0);
    EncodedInstance hybrid;
    for (std::size_t sample = 0; sample < samples_per_feature; ++sample) {
        std::iota(permutation.begin(), permutation.end(), std::size_t{0});
        for (std::size_t i = g; i > 1; --i) {
            std::swap(permutation[i - 1], permutation[rng.index(i)]);
        }
        hybrid = background[rng.index(background.size())];
        double previous = f(hybrid);
        for (std::size_t p : permutation) {
            for (std::size_t index : players[p].indices) {
                hybrid.values[index] = instance.values[index];
            }
            double current = f(hybrid);
            phi[p] += current - previous;
            previous = current;
        }
    }
    double inv = 1.0 / static_cast<double>(samples_per_feature);
    for (double& v : phi) v *= inv;
    return phi;
}

const ShapleyReport::Row* ShapleyReport::find(const std::string& player) const {
    for (const Row& row : rows) {
        if (row.player == player) return &row;
    }
    return nullptr;
}

ShapleyReport aggregate_over_support(const PredictFn& f,
                                     const std::vector<FeatureSchema::Group>& players,
                                     const std::vector<EncodedInstance>& support,
                                     const std::vector<EncodedInstance>& background,
                                     const AttributionConfig& config) {
    if (support.empty()) {
        throw ConfigError("the support set is empty");
    }
    std::size_t g = players.size();

    ShapleyReport report;
    double base = 0.0;
    for (const EncodedInstance& row : background) base += f(row);
    report.base_value = base / static_cast<double>(background.size());

    std::vector<double> sum_signed(g, 0.0), sum_abs(g, 0.0);
    for (std::size_t s = 0; s < support.size(); ++s) {
        std::vector<double> phi =
            config.mode == AttributionConfig::Mode::Exact
                ? shapley_exact(f, players, support[s], background)
                : shapley_sampled(f, players, support[s], background, config.samples_per_feature,
                                  mix_seed(config.seed, s));
        for (std::size_t p = 0; p < g; ++p) {
            sum_signed[p] += phi[p];
            sum_abs[p] += std::abs(phi[p]);
        }
        if (config.keep_per_instance) report.per_instance.push_back(std::move(phi));
    }

    double inv = 1.0 / static_cast<double>(support.size());
    report.rows.reserve(g);
    for (std::size_t p = 0; p < g; ++p) {
        report.player_order.push_back(players[p].label);
        report.rows.push_back({players[p].label, sum_signed[p] * inv, sum_abs[p] * inv});
    }
    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const ShapleyReport::Row& a, const ShapleyReport::Row& b) {
                         double ma = std::abs(a.mean_signed), mb = std::abs(b.mean_signed);
                         if (ma != mb) return ma > mb;
                         return a.player < b.player;
                     });
    return report;
}

std::vector<EncodedInstance> sample_background(const Dataset& source, std::size_t rows,
                                               std::uint64_t seed) {
    if (source.size() == 0) {
        throw ConfigError("background source dataset is empty");
    }
    std::size_t take = std::min(rows, source.size());
    std::vector<std::size_t> indices(source.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    Rng rng(mix_seed(seed, 0xb6));
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t j = i + rng.index(indices.size() - i);
        std::swap(indices[i], indices[j]);
    }
    std::vector<EncodedInstance> background;
    background.reserve(take);
    for (std::size_t i = 0; i < take; ++i) background.push_back(source.instances[indices[i]]);
    return background;
}

ShapleyReport explain_model(const AdversarialModel& model, const Dataset& support,
                            const Dataset& background_source, std::size_t background_rows,
                            const AttributionConfig& config) {
    std::vector<EncodedInstance> background =
        sample_background(background_source, background_rows, config.seed);
    PredictFn f = [&model](const EncodedInstance& x) { return predict_encoded(model, x); };
    return aggregate_over_support(f, model.schema.groups(), support.instances, background, config);
}

double influence_ratio(const ShapleyReport& report_without, const ShapleyReport& report_with,
                       const std::string& player) {
    const ShapleyReport::Row* without = report_without.find(player);
    const ShapleyReport::Row* with = report_with.find(player);
    if (!without || !with) {
        throw std::invalid_argument("influence_ratio: unknown player '" + player + "'");
    }
    double with_abs = std::abs(with->mean_signed);
    double without_abs = std::abs(without->mean_signed);
    if (with_abs == 0.0) return 0.0;
    if (without_abs == 0.0) return std::numeric_limits<double>::infinity(); // baseline zero
    return with_abs / without_abs;
}

void write_shapley_csv(const ShapleyReport& report, const std::string& path,
                       const std::string& manifest_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write Shapley CSV: " + path);
    }
    char buf[40];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    out << "# manifest=" << manifest_hash << '\n';
    out << "# base_value=" << fmt(report.base_value) << '\n';
    out << "player,mean_signed,mean_abs\n";
    for (const auto& row : report.rows) {
        out << csv_escape(row.player) << ',' << fmt(row.mean_signed) << ',' << fmt(row.mean_abs)
            << '\n';
    }
}

std::string render_shapley_bars(const ShapleyReport& report) {
    double max_abs = 0.0;
    for (const auto& row : report.rows) max_abs = std::max(max_abs, std::abs(row.mean_signed));
    std::size_t width = 0;
    for (const auto& row : report.rows) width = std::max(width, row.player.size());

    std::string out;
    char buf[40];
    for (const auto& row : report.rows) {
        int bar = max_abs > 0.0
                      ? static_cast<int>(std::lround(30.0 * std::abs(row.mean_signed) / max_abs))
                      : 0;
        out += row.player;
        out.append(width - row.player.size() + 1, ' ');
        out += row.mean_signed < 0.0 ? '-' : '+';
        out += ' ';
        out.append(static_cast<std::size_t>(bar), '#');
        std::snprintf(buf, sizeof(buf), " %.6g\n", row.mean_signed);
        out += buf;
    }
    return out;
}

} // namespace fairpred
