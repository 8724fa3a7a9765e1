#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fairpred {

struct ApaResult {
    double apa = 0.0; // percentage, floored at 0
    std::size_t used_rows = 0;
    std::size_t excluded_zero_actuals = 0;
};

// Absolute Percentage Accuracy: 100 * (1 - mean(|a - p| / |a|)). Rows with
// actual == 0 are excluded and counted. Throws DataError when no rows remain.
ApaResult apa(std::span<const double> actuals, std::span<const double> predictions);

// F1 at the given threshold; 0 when there are no true positives.
double f_score(std::span<const double> actual_labels,
               std::span<const double> predicted_probabilities, double threshold = 0.5);

struct GroupRates {
    std::string key;
    std::size_t support = 0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::optional<double> fpr; // undefined when FP+TN == 0
    std::optional<double> tpr; // undefined when TP+FN == 0
};

struct EvaluatedRow {
    std::string group_key;
    double actual = 0.0;     // 0/1 label
    double prediction = 0.0; // probability
};

// Confusion counts and rates per protected-value group, sorted by key.
// Groups under min_support are excluded and listed in excluded_groups.
std::vector<GroupRates> group_rates(std::span<const EvaluatedRow> rows, double threshold,
                                    std::size_t min_support,
                                    std::vector<std::string>* excluded_groups = nullptr);

// Population standard deviation of FPR and TPR across groups; rates that are
// undefined in a group are excluded from the corresponding dispersion.
// Throws DataError with fewer than 2 defined rates.
std::pair<double, double> equalized_odds_std(std::span<const GroupRates> groups);

struct FairnessReport {
    std::string accuracy_metric; // "apa" or "f_score"
    double accuracy = 0.0;
    std::size_t evaluated_rows = 0;
    std::size_t excluded_zero_actuals = 0;       // APA only
    std::vector<GroupRates> groups;              // classification only
    std::vector<std::string> excluded_groups;    // under min_support
    std::optional<double> std_fpr;
    std::optional<double> std_tpr;
};

// CSV with a summary comment block followed by group,support,fpr,tpr rows.
void write_fairness_csv(const FairnessReport& report, const std::string& path,
                        const std::string& manifest_hash);

} // namespace fairpred
