#include "fairpred/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "fairpred/csv.hpp"
#include "fairpred/errors.hpp"

namespace fairpred {

ApaResult apa(std::span<const double> actuals, std::span<const double> predictions) {
    if (actuals.size() != predictions.size()) {
        throw std::invalid_argument("apa: sequence lengths differ");
    }
    ApaResult result;
    double error_sum = 0.0;
    for (std::size_t i = 0; i < actuals.size(); ++i) {
        if (actuals[i] == 0.0) {
            ++result.excluded_zero_actuals;
            continue;
        }
        error_sum += std::abs(actuals[i] - predictions[i]) / std::abs(actuals[i]);
        ++result.used_rows;
    }
    if (result.used_rows == 0) {
        throw DataError("APA undefined: every actual value is zero");
    }
    double mape = 100.0 * error_sum / static_cast<double>(result.used_rows);
    result.apa = std::max(0.0, 100.0 - mape);
    return result;
}

double f_score(std::span<const double> actual_labels,
               std::span<const double> predicted_probabilities, double threshold) {
    if (actual_labels.size() != predicted_probabilities.size()) {
        throw std::invalid_argument("f_score: sequence lengths differ");
    }
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < actual_labels.size(); ++i) {
        bool actual = actual_labels[i] >= 0.5;
        bool predicted = predicted_probabilities[i] >= threshold;
        if (predicted && actual) ++tp;
        else if (predicted && !actual) ++fp;
        else if (!predicted && actual) ++fn;
    }
    if (tp == 0) return 0.0;
    double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

std::vector<GroupRates> group_rates(std::span<const EvaluatedRow> rows, double threshold,
                                    std::size_t min_support,
                                    std::vector<std::string>* excluded_groups) {
    std::map<std::string, GroupRates> by_key;
    for (const EvaluatedRow& row : rows) {
        GroupRates& group = by_key[row.group_key];
        group.key = row.group_key;
        ++group.support;
        bool actual = row.actual >= 0.5;
        bool predicted = row.prediction >= threshold;
        if (predicted && actual) ++group.tp;
        else if (predicted && !actual) ++group.fp;
        else if (!predicted && actual) ++group.fn;
        else ++group.tn;
    }

    std::vector<GroupRates> out;
    for (auto& [key, group] : by_key) {
        if (group.support < min_support) {
            if (excluded_groups) excluded_groups->push_back(key);
            continue;
        }
        if (group.fp + group.tn > 0) {
            group.fpr = static_cast<double>(group.fp) / static_cast<double>(group.fp + group.tn);
        }
        if (group.tp + group.fn > 0) {
            group.tpr = static_cast<double>(group.tp) / static_cast<double>(group.tp + group.fn);
        }
        out.push_back(group);
    }
    return out;
}

std::pair<double, double> equalized_odds_std(std::span<const GroupRates> groups) {
    auto population_std = [](const std::vector<double>& values) {
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        return std::sqrt(var / static_cast<double>(values.size()));
    };

    std::vector<double> fprs, tprs;
    for (const GroupRates& group : groups) {
        if (group.fpr) fprs.push_back(*group.fpr);
        if (group.tpr) tprs.push_back(*group.tpr);
    }
    if (fprs.size() < 2 || tprs.size() < 2) {
        throw DataError("equalized-odds dispersion needs at least 2 groups with defined rates");
    }
    return {population_std(fprs), population_std(tprs)};
}

void write_fairness_csv(const FairnessReport& report, const std::string& path,
                        const std::string& manifest_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write fairness CSV: " + path);
    }
    char buf[40];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };

    out << "# manifest=" << manifest_hash << '\n';
    out << "# accuracy_metric=" << report.accuracy_metric << '\n';
    out << "# accuracy=" << fmt(report.accuracy) << '\n';
    out << "# evaluated_rows=" << report.evaluated_rows << '\n';
    if (report.accuracy_metric == "apa") {
        out << "# excluded_zero_actuals=" << report.excluded_zero_actuals << '\n';
    }
    if (report.std_fpr) out << "# std_fpr=" << fmt(*report.std_fpr) << '\n';
    if (report.std_tpr) out << "# std_tpr=" << fmt(*report.std_tpr) << '\n';
    for (const std::string& group : report.excluded_groups) {
        out << "# excluded_group=" << group << '\n';
    }
    out << "group,support,fpr,tpr\n";
    for (const GroupRates& group : report.groups) {
        out << csv_escape(group.key) << ',' << group.support << ',';
        out << (group.fpr ? fmt(*group.fpr) : "undefined") << ',';
        out << (group.tpr ? fmt(*group.tpr) : "undefined") << '\n';
    }
}

} // namespace fairpred
