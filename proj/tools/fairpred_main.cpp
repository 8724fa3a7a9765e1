#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fairpred/commands.hpp"
#include "fairpred/config.hpp"
#include "fairpred/errors.hpp"
#include "fairpred/manifest.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::string seed, lambda, outcome, protected_list, input, model, out_dir;
};

fairpred::Config build_config(const Overrides& o) {
    fairpred::Config config;
    if (!o.config_path.empty()) config = fairpred::Config::from_file(o.config_path);
    if (!o.seed.empty()) config.set("seed", o.seed);
    if (!o.lambda.empty()) config.set("lambda", o.lambda);
    if (!o.outcome.empty()) config.set("outcome", o.outcome);
    if (!o.protected_list.empty()) config.set("protected", o.protected_list);
    if (!o.input.empty()) config.set("input", o.input);
    if (!o.model.empty()) config.set("model", o.model);
    if (!o.out_dir.empty()) config.set("out_dir", o.out_dir);
    return config;
}

void add_common_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "configuration file (key = value lines)");
    cmd->add_option("--seed", o.seed, "override the seed");
    cmd->add_option("--lambda", o.lambda, "override the adversary weight");
    cmd->add_option("--outcome", o.outcome, "override the outcome (total_time | occurs:<activity>)");
    cmd->add_option("--protected", o.protected_list, "override the protected attribute list");
    cmd->add_option("--input", o.input, "override the input path");
    cmd->add_option("--model", o.model, "override the model path");
    cmd->add_option("--out", o.out_dir, "override the output directory");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairness-aware predictive models for business-process event logs"};
    app.set_version_flag("--version", std::string("fairpred ") + fairpred::kToolkitVersion);
    app.require_subcommand(1);

    Overrides o;
    CLI::App* split = app.add_subcommand("split", "temporal train/test split of an event log");
    CLI::App* train = app.add_subcommand("train", "train an adversarially debiased model");
    CLI::App* evaluate = app.add_subcommand("evaluate", "accuracy and group-fairness report");
    CLI::App* explain = app.add_subcommand("explain", "Shapley influence report");
    CLI::App* generate = app.add_subcommand("generate", "generate a synthetic biased log");
    for (CLI::App* cmd : {split, train, evaluate, explain, generate}) {
        add_common_options(cmd, o);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        fairpred::Config config = build_config(o);
        if (split->parsed()) fairpred::cmd_split(config);
        else if (train->parsed()) fairpred::cmd_train(config);
        else if (evaluate->parsed()) fairpred::cmd_evaluate(config);
        else if (explain->parsed()) fairpred::cmd_explain(config);
        else if (generate->parsed()) fairpred::cmd_generate(config);
    } catch (const fairpred::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const fairpred::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const fairpred::TrainingError& e) {
        std::cerr << "training error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
