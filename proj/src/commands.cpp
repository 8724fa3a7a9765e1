#include "fairpred/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "fairpred/csv.hpp"
#include "fairpred/debias.hpp"
#include "fairpred/errors.hpp"
#include "fairpred/fairness.hpp"
#include "fairpred/manifest.hpp"
#include "fairpred/model_io.hpp"
#include "fairpred/shapley.hpp"
#include "fairpred/synthlog.hpp"
#include "fairpred/xes.hpp"

namespace fairpred {

namespace {

std::string out_dir(const Config& config) {
    std::string dir = config.get("out_dir", ".");
    std::filesystem::create_directories(dir);
    return dir;
}

std::vector<std::string> dropped_attributes(const Config& config) {
    if (!config.has("drop_attributes")) return default_dropped_attributes();
    return config.get_list("drop_attributes");
}

EventLog load_log(const Config& config, const std::string& path) {
    std::string format = config.get("format", "");
    if (format.empty()) {
        format = path.ends_with(".xes") ? "xes" : "csv";
    }
    if (format == "xes") {
        return parse_xes(path, dropped_attributes(config));
    }
    if (format == "csv") {
        ColumnMapping mapping;
        mapping.case_column = config.get("case_column", "case_id");
        mapping.activity_column = config.get("activity_column", "activity");
        std::string ts = config.get("timestamp_column", "timestamp");
        if (!ts.empty()) mapping.timestamp_column = ts;
        return parse_csv(path, mapping, dropped_attributes(config));
    }
    throw ConfigError("unknown log format '" + format + "' (expected csv or xes)");
}

TrainingConfig training_config(const Config& config) {
    TrainingConfig tc;
    tc.learning_rate = config.get_double("learning_rate", tc.learning_rate);
    tc.epochs = static_cast<std::size_t>(config.get_u64("epochs", tc.epochs));
    tc.batch_size = static_cast<std::size_t>(config.get_u64("batch_size", tc.batch_size));
    tc.weight_decay = config.get_double("weight_decay", tc.weight_decay);
    tc.adversary_weight = config.get_double("lambda", tc.adversary_weight);
    tc.adversary_steps_per_batch =
        static_cast<std::size_t>(config.get_u64("adversary_steps", tc.adversary_steps_per_batch));
    tc.seed = config.get_u64("seed", tc.seed);
    if (config.has("predictor_layers")) tc.predictor_hidden = config.get_size_list("predictor_layers");
    if (config.has("adversary_layers")) tc.adversary_hidden = config.get_size_list("adversary_layers");
    return tc;
}

std::set<std::string> protected_names(const Config& config) {
    auto list = config.get_list("protected");
    return {list.begin(), list.end()};
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

// Latest protected values of a prefix, joined into a grouping key.
std::string group_key_for_prefix(const Trace& trace, std::size_t prefix_length,
                                 const std::vector<std::string>& grouping) {
    std::string key;
    for (const std::string& name : grouping) {
        const AttributeValue* latest = nullptr;
        for (std::size_t i = 0; i < prefix_length; ++i) {
            auto it = trace.events[i].attributes.find(name);
            if (it != trace.events[i].attributes.end()) latest = &it->second;
        }
        if (!key.empty()) key += '|';
        if (!latest) {
            key += "(unassigned)";
        } else {
            switch (kind_of(*latest)) {
            case AttributeKind::Categorical: key += std::get<std::string>(*latest); break;
            case AttributeKind::Boolean: key += std::get<bool>(*latest) ? "true" : "false"; break;
            case AttributeKind::Numeric:
                throw ConfigError("group metrics need categorical or boolean protected attributes; '" +
                                  name + "' is numeric");
            }
        }
    }
    return key;
}

struct LoadedModel {
    AdversarialModel model;
    std::string path;
};

LoadedModel load_model_from(const Config& config, const std::string& key) {
    std::string path = config.require(key);
    return {load_model(path), path};
}

} // namespace

void cmd_split(const Config& config) {
    std::string input = config.require("input");
    double fraction = config.get_double("train_fraction", 0.7);
    std::string dir = out_dir(config);

    RunManifest manifest = begin_manifest("split", config, {input});
    EventLog log = load_log(config, input);
    auto [train_log, test_log] = temporal_split(log, fraction);

    std::string train_path = dir + "/train.csv";
    std::string test_path = dir + "/test.csv";
    write_native_csv(train_log, train_path);
    write_native_csv(test_log, test_path);
    manifest.outputs = {"train.csv", "test.csv"};
    write_manifest(manifest, dir);

    std::cout << "split: " << train_log.traces.size() << " train / " << test_log.traces.size()
              << " test traces\n";
}

void cmd_train(const Config& config) {
    std::string input = config.require("input");
    OutcomeSpec outcome = parse_outcome(config.require("outcome"));
    std::string dir = out_dir(config);

    RunManifest manifest = begin_manifest("train", config, {input});
    EventLog log = load_log(config, input);
    validate_log(log);

    if (const auto* occurrence = std::get_if<ActivityOccurrence>(&outcome)) {
        if (!log.schema.activities.contains(occurrence->activity)) {
            throw ConfigError("outcome activity '" + occurrence->activity +
                              "' does not occur in the training log");
        }
    }

    FeatureSchema schema = build_schema(log, protected_names(config));
    Dataset dataset = build_dataset(schema, log, outcome);
    TrainingConfig base = training_config(config);

    bool grid_mode = config.has("grid.learning_rate") || config.has("grid.epochs") ||
                     config.has("grid.weight_decay") || config.has("grid.predictor_layers");
    bool export_dataset = config.get_bool("export_dataset", false);
    manifest.outputs = {"model.txt"};
    if (grid_mode) manifest.outputs.push_back("grid_report.csv");
    if (export_dataset) manifest.outputs.push_back("dataset.csv");
    std::string manifest_hash = manifest.hash();
    if (export_dataset) {
        write_dataset_csv(schema, dataset, dir + "/dataset.csv");
    }

    if (grid_mode) {
        HyperGrids grids;
        grids.learning_rates = config.has("grid.learning_rate")
                                   ? config.get_double_list("grid.learning_rate")
                                   : std::vector<double>{base.learning_rate};
        grids.epochs = config.has("grid.epochs")
                           ? config.get_size_list("grid.epochs")
                           : std::vector<std::size_t>{base.epochs};
        grids.weight_decays = config.has("grid.weight_decay")
                                  ? config.get_double_list("grid.weight_decay")
                                  : std::vector<double>{base.weight_decay};
        grids.predictor_shapes = config.has("grid.predictor_layers")
                                     ? config.get_shape_list("grid.predictor_layers")
                                     : std::vector<std::vector<std::size_t>>{base.predictor_hidden};
        double validation_fraction = config.get_double("validation_fraction", 0.25);
        auto [best, report] = grid_search(dataset, schema, outcome, validation_fraction, grids, base);

        std::string report_path = dir + "/grid_report.csv";
        std::ofstream out(report_path, std::ios::binary);
        if (!out) throw DataError("cannot write grid report: " + report_path);
        out << "# manifest=" << manifest_hash << '\n';
        out << "learning_rate,predictor_layers,epochs,weight_decay,validation_error,status\n";
        for (const GridSearchEntry& entry : report.entries) {
            std::string shape;
            for (std::size_t w : entry.config.predictor_hidden) {
                if (!shape.empty()) shape += ' ';
                shape += std::to_string(w);
            }
            out << format_value(entry.config.learning_rate) << ',' << shape << ','
                << entry.config.epochs << ',' << format_value(entry.config.weight_decay) << ','
                << (entry.failed ? "" : format_value(entry.validation_error)) << ','
                << (entry.failed ? "failed" : "ok") << '\n';
        }
        base = best;
        std::cout << "grid search: " << report.entries.size() << " combinations, best validation error "
                  << format_value(report.entries[report.best_index].validation_error) << "\n";
    }

    AdversarialModel model = train(dataset, schema, outcome, base);
    if (!model.has_adversary()) {
        std::cout << "warning: empty protected set, trained a plain predictor\n";
    }
    save_model(model, dir + "/model.txt", manifest_hash);
    write_manifest(manifest, dir);
    std::cout << "trained model on " << dataset.size() << " prefix rows -> " << dir
              << "/model.txt\n";
}

void cmd_evaluate(const Config& config) {
    LoadedModel loaded = load_model_from(config, "model");
    const AdversarialModel& model = loaded.model;
    std::string input = config.require("input");
    std::string dir = out_dir(config);
    double threshold = config.get_double("threshold", 0.5);
    std::size_t min_support = static_cast<std::size_t>(config.get_u64("min_support", 50));

    std::string metric = config.get("metric", model.classification() ? "f_score" : "apa");
    if (metric == "apa" && model.classification()) {
        throw ConfigError("metric not applicable: APA is a regression metric but the model is a classifier");
    }
    if (metric == "f_score" && !model.classification()) {
        throw ConfigError("metric not applicable: F-score is a classification metric but the model is a regressor");
    }
    if (metric != "apa" && metric != "f_score") {
        throw ConfigError("unknown metric '" + metric + "' (expected apa or f_score)");
    }

    RunManifest manifest = begin_manifest("evaluate", config, {loaded.path, input});
    manifest.outputs = {"predictions.csv", "fairness.csv"};
    std::string manifest_hash = manifest.hash();

    EventLog log = load_log(config, input);
    validate_log(log);

    std::vector<std::string> grouping(model.schema.protected_names.begin(),
                                      model.schema.protected_names.end());

    // One row per prefix: prediction, actual, and the protected group key.
    std::vector<double> actuals, predictions;
    std::vector<EvaluatedRow> rows;
    std::string predictions_path = dir + "/predictions.csv";
    std::ofstream pred_out(predictions_path, std::ios::binary);
    if (!pred_out) throw DataError("cannot write predictions: " + predictions_path);
    pred_out << "# manifest=" << manifest_hash << '\n';
    pred_out << "case_id,prefix_length,group,actual,predicted\n";
    for (const Trace& trace : log.traces) {
        double actual = eval_outcome(model.outcome, trace);
        std::span<const Event> events(trace.events);
        for (std::size_t len = 1; len <= events.size(); ++len) {
            EncodedInstance x = encode_events(model.schema, events.subspan(0, len));
            double predicted = predict_encoded(model, x);
            std::string group = grouping.empty() ? "(all)" : group_key_for_prefix(trace, len, grouping);
            pred_out << csv_escape(trace.case_id) << ',' << len << ',' << csv_escape(group) << ','
                     << format_value(actual) << ',' << format_value(predicted) << '\n';
            actuals.push_back(actual);
            predictions.push_back(predicted);
            rows.push_back({group, actual, predicted});
        }
    }
    pred_out.close();
    if (actuals.empty()) {
        throw DataError("the evaluation log has no prefixes");
    }

    FairnessReport report;
    report.accuracy_metric = metric;
    report.evaluated_rows = actuals.size();
    if (metric == "apa") {
        ApaResult result = apa(actuals, predictions);
        report.accuracy = result.apa;
        report.excluded_zero_actuals = result.excluded_zero_actuals;
    } else {
        report.accuracy = f_score(actuals, predictions, threshold);
        report.groups = group_rates(rows, threshold, min_support, &report.excluded_groups);
        try {
            auto [std_fpr, std_tpr] = equalized_odds_std(report.groups);
            report.std_fpr = std_fpr;
            report.std_tpr = std_tpr;
        } catch (const DataError&) {
            // fewer than 2 groups with defined rates; dispersion stays unset
        }
    }
    write_fairness_csv(report, dir + "/fairness.csv", manifest_hash);
    write_manifest(manifest, dir);

    std::cout << (metric == "apa" ? "APA" : "F-score") << ": " << format_value(report.accuracy)
              << (metric == "apa" ? "%" : "") << " over " << report.evaluated_rows << " rows\n";
    if (report.std_fpr) {
        std::cout << "equalized odds: std_fpr=" << format_value(*report.std_fpr)
                  << " std_tpr=" << format_value(*report.std_tpr) << '\n';
    }
}

void cmd_explain(const Config& config) {
    LoadedModel loaded = load_model_from(config, "model");
    const AdversarialModel& model = loaded.model;
    std::string input = config.require("input");
    std::string dir = out_dir(config);

    AttributionConfig attribution;
    std::string mode = config.get("shapley_mode", "exact");
    if (mode == "exact") attribution.mode = AttributionConfig::Mode::Exact;
    else if (mode == "sampled") attribution.mode = AttributionConfig::Mode::Sampled;
    else throw ConfigError("unknown shapley_mode '" + mode + "' (expected exact or sampled)");
    attribution.samples_per_feature =
        static_cast<std::size_t>(config.get_u64("shapley_samples", 2000));
    attribution.seed = config.get_u64("seed", 1);
    attribution.keep_per_instance = config.get_bool("shapley_instances", false);
    std::size_t background_rows = static_cast<std::size_t>(config.get_u64("background_rows", 100));
    std::size_t support_rows = static_cast<std::size_t>(config.get_u64("support_rows", 0));

    std::vector<std::string> inputs = {loaded.path, input};
    std::string background_input = config.get("background_input", input);
    if (background_input != input) inputs.push_back(background_input);
    bool compare = config.has("compare_model");
    LoadedModel baseline;
    if (compare) {
        baseline = load_model_from(config, "compare_model");
        inputs.push_back(baseline.path);
    }

    RunManifest manifest = begin_manifest("explain", config, inputs);
    manifest.outputs = {"shapley.csv"};
    if (attribution.keep_per_instance) manifest.outputs.push_back("shapley_instances.csv");
    if (compare) manifest.outputs.push_back("ratio.csv");
    std::string manifest_hash = manifest.hash();

    EventLog support_log = load_log(config, input);
    validate_log(support_log);
    Dataset support = build_dataset(model.schema, support_log, model.outcome);
    Dataset background_source =
        background_input == input
            ? support
            : build_dataset(model.schema, load_log(config, background_input), model.outcome);

    if (support_rows > 0 && support_rows < support.size()) {
        Dataset reduced;
        reduced.instances = sample_background(support, support_rows, attribution.seed + 1);
        reduced.targets.assign(reduced.instances.size(), 0.0);
        reduced.protected_rows.assign(reduced.instances.size(), {});
        reduced.provenance.assign(reduced.instances.size(), {});
        support = std::move(reduced);
    }

    ShapleyReport report = explain_model(model, support, background_source, background_rows, attribution);
    write_shapley_csv(report, dir + "/shapley.csv", manifest_hash);

    if (attribution.keep_per_instance) {
        std::string instances_path = dir + "/shapley_instances.csv";
        std::ofstream out(instances_path, std::ios::binary);
        if (!out) throw DataError("cannot write per-instance attributions: " + instances_path);
        out << "# manifest=" << manifest_hash << '\n';
        for (std::size_t p = 0; p < report.player_order.size(); ++p) {
            if (p > 0) out << ',';
            out << csv_escape(report.player_order[p]);
        }
        out << '\n';
        for (const auto& row : report.per_instance) {
            for (std::size_t p = 0; p < row.size(); ++p) {
                if (p > 0) out << ',';
                out << format_value(row[p]);
            }
            out << '\n';
        }
    }

    double unit_scale = 1.0;
    std::string unit = config.get("display_unit", "hours");
    if (!model.classification()) {
        if (unit == "minutes") unit_scale = 60.0;
        else if (unit != "hours") throw ConfigError("display_unit must be hours or minutes");
    }
    ShapleyReport display = report;
    if (unit_scale != 1.0) {
        display.base_value *= unit_scale;
        for (auto& row : display.rows) {
            row.mean_signed *= unit_scale;
            row.mean_abs *= unit_scale;
        }
    }
    std::cout << "base value: " << format_value(display.base_value)
              << (model.classification() ? "" : (" (" + unit + ")")) << '\n';
    std::cout << render_shapley_bars(display);

    if (compare) {
        // `model` is the debiased run ("with"), `compare_model` the baseline
        // ("without"); ratio = |with| / |without| per player.
        ShapleyReport report_without = explain_model(baseline.model, support, background_source,
                                                     background_rows, attribution);
        std::string ratio_path = dir + "/ratio.csv";
        std::ofstream out(ratio_path, std::ios::binary);
        if (!out) throw DataError("cannot write ratio table: " + ratio_path);
        out << "# manifest=" << manifest_hash << '\n';
        out << "player,without,with,ratio,protected\n";
        for (const std::string& player : report.player_order) {
            const auto* with_row = report.find(player);
            const auto* without_row = report_without.find(player);
            if (!with_row || !without_row) continue;
            double ratio = influence_ratio(report_without, report, player);
            bool is_protected = model.schema.protected_names.contains(player);
            out << csv_escape(player) << ',' << format_value(without_row->mean_signed) << ','
                << format_value(with_row->mean_signed) << ','
                << (std::isinf(ratio) ? "baseline_zero" : format_value(ratio)) << ','
                << (is_protected ? "yes" : "no") << '\n';
        }
    }
    write_manifest(manifest, dir);
}

void cmd_generate(const Config& config) {
    SynthConfig synth;
    synth.n_traces = static_cast<std::size_t>(config.get_u64("synth.n_traces", synth.n_traces));
    synth.alphabet_size =
        static_cast<std::size_t>(config.get_u64("synth.alphabet_size", synth.alphabet_size));
    synth.protected_name = config.get("synth.protected_name", synth.protected_name);
    if (config.has("synth.protected_categories")) {
        synth.protected_categories = config.get_list("synth.protected_categories");
    }
    if (config.has("synth.protected_probabilities")) {
        synth.protected_probabilities = config.get_double_list("synth.protected_probabilities");
    }
    synth.disadvantaged_index =
        static_cast<std::size_t>(config.get_u64("synth.disadvantaged_index", synth.disadvantaged_index));
    synth.proxy_name = config.get("synth.proxy_name", synth.proxy_name);
    synth.proxy_correlation = config.get_double("synth.proxy_correlation", synth.proxy_correlation);
    synth.bias_strength = config.get_double("synth.bias_strength", synth.bias_strength);
    std::string kind = config.get("synth.outcome_kind", "duration");
    if (kind == "duration") synth.outcome_kind = SynthConfig::OutcomeKind::DurationShift;
    else if (kind == "occurrence") synth.outcome_kind = SynthConfig::OutcomeKind::OccurrenceShift;
    else throw ConfigError("synth.outcome_kind must be duration or occurrence");
    synth.base_duration_hours =
        config.get_double("synth.base_duration_hours", synth.base_duration_hours);
    synth.duration_shift_hours =
        config.get_double("synth.duration_shift_hours", synth.duration_shift_hours);
    synth.noise_window_hours =
        config.get_double("synth.noise_window_hours", synth.noise_window_hours);
    synth.base_branch_probability =
        config.get_double("synth.base_branch_probability", synth.base_branch_probability);
    synth.branch_probability_shift =
        config.get_double("synth.branch_probability_shift", synth.branch_probability_shift);
    synth.seed = config.get_u64("seed", synth.seed);

    std::string dir = out_dir(config);
    std::string format = config.get("synth.format", "csv");

    RunManifest manifest = begin_manifest("generate", config, {});
    EventLog log = generate(synth);
    std::string name = format == "xes" ? "synthetic.xes" : "synthetic.csv";
    if (format == "xes") {
        write_xes(log, dir + "/" + name);
    } else if (format == "csv") {
        write_native_csv(log, dir + "/" + name);
    } else {
        throw ConfigError("synth.format must be csv or xes");
    }
    manifest.outputs = {name};
    write_manifest(manifest, dir);
    std::cout << "generated " << log.traces.size() << " traces -> " << dir << '/' << name << '\n';
}

} // namespace fairpred
