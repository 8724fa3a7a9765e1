#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fairpred/debias.hpp"
#include "fairpred/errors.hpp"
#include "fairpred/model_io.hpp"
#include "fairpred/outcomes.hpp"
#include "fairpred/synthlog.hpp"
#include "support/helpers.hpp"

using namespace fairpred;

namespace {

// Schema with one protected one-hot pair (g=f, g=m) and nothing else.
FeatureSchema pair_schema() {
    FeatureSchema schema;
    schema.features = {
        {FeatureKind::OneHot, "g", "f", 0, 0},
        {FeatureKind::OneHot, "g", "m", 0, 0},
    };
    schema.protected_indices = {0, 1};
    schema.protected_names = {"g"};
    return schema;
}

// Hand-assembled model: hidden 1x2 identity layer, then the output head.
AdversarialModel manual_model(double head_bias, bool classification) {
    AdversarialModel model;
    model.schema = pair_schema();
    model.outcome = classification ? OutcomeSpec{ActivityOccurrence{"X"}} : OutcomeSpec{TotalTime{}};
    model.max_outcome = 100.0;
    model.protected_max = {1.0, 1.0};

    DenseLayer hidden;
    hidden.in_dim = 2;
    hidden.out_dim = 1;
    hidden.weights = {0.0, 0.0};
    hidden.biases = {1.0};
    hidden.activation = Activation::Identity;
    DenseLayer head;
    head.in_dim = 1;
    head.out_dim = 1;
    head.weights = {0.0};
    head.biases = {head_bias};
    head.activation = classification ? Activation::Sigmoid : Activation::Identity;
    model.predictor.layers = {hidden, head};

    // adversary: 1 -> 2, saturated sigmoids produce z ~ (1, 0)
    DenseLayer adversary;
    adversary.in_dim = 1;
    adversary.out_dim = 2;
    adversary.weights = {0.0, 0.0};
    adversary.biases = {50.0, -50.0};
    adversary.activation = Activation::Sigmoid;
    model.adversary.layers = {adversary};
    return model;
}

SynthConfig deterministic_occurrence_config(std::uint64_t seed, std::size_t n_traces) {
    // the outcome is a deterministic function of the protected value alone
    SynthConfig config;
    config.n_traces = n_traces;
    config.outcome_kind = SynthConfig::OutcomeKind::OccurrenceShift;
    config.base_branch_probability = 0.0;
    config.branch_probability_shift = 1.0;
    config.bias_strength = 1.0;
    config.proxy_correlation = 0.0;
    config.protected_probabilities = {0.6, 0.4};
    config.seed = seed;
    return config;
}

struct SynthData {
    FeatureSchema schema;
    Dataset train;
    Dataset test;
    OutcomeSpec outcome;
};

SynthData prepare(const SynthConfig& config) {
    EventLog log = generate(config);
    auto [train_log, test_log] = temporal_split(log, 0.7);
    SynthData data;
    data.outcome = config.outcome_kind == SynthConfig::OutcomeKind::OccurrenceShift
                       ? OutcomeSpec{ActivityOccurrence{config.branch_activity()}}
                       : OutcomeSpec{TotalTime{}};
    data.schema = build_schema(train_log, {config.protected_name});
    data.train = build_dataset(data.schema, train_log, data.outcome);
    data.test = build_dataset(data.schema, test_log, data.outcome);
    return data;
}

TrainingConfig small_training_config(std::uint64_t seed, double lambda) {
    TrainingConfig config;
    config.learning_rate = 0.1;
    config.epochs = 20;
    config.batch_size = 16;
    config.adversary_weight = lambda;
    config.adversary_steps_per_batch = 1;
    config.seed = seed;
    config.predictor_hidden = {16, 8};
    config.adversary_hidden = {8};
    return config;
}

} // namespace

TEST_CASE("delta_scalar normalizes by the largest outcome") {
    CHECK(delta_scalar(5.0, 5.0, 10.0, false) == 0.0);
    CHECK(delta_scalar(30.0, 50.0, 100.0, false) == doctest::Approx(0.2));
    CHECK(delta_scalar(0.9, 1.0, 0.0, true) == doctest::Approx(0.1));
    CHECK_THROWS_AS(delta_scalar(1.0, 2.0, 0.0, false), ConfigError);
    CHECK_THROWS_AS(delta_scalar(1.0, 2.0, -3.0, false), ConfigError);
}

TEST_CASE("delta_vector averages componentwise normalized distances") {
    std::vector<double> maxes = {1.0, 1.0};
    CHECK(delta_vector(std::vector<double>{0.3, 0.7}, std::vector<double>{0.3, 0.7}, maxes) == 0.0);
    CHECK(delta_vector(std::vector<double>{0.2, 0.8}, std::vector<double>{0.0, 1.0}, maxes) ==
          doctest::Approx(0.2));
    CHECK(delta_vector({}, {}, {}) == 0.0);
    CHECK_THROWS_AS(delta_vector(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0},
                                 std::vector<double>{1.0, 1.0}),
                    std::invalid_argument);

    // denominators never drop below 1
    std::vector<double> small_max = {0.5, 0.0};
    CHECK(delta_vector(std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 0.0}, small_max) ==
          doctest::Approx(1.0));
}

TEST_CASE("joint_loss of a perfect predictor against a maximally wrong adversary") {
    // regression: raw output 0.5 * max_outcome 100 = 50 = y exactly
    AdversarialModel model = manual_model(0.5, false);
    EncodedInstance x{{0.0, 1.0}}; // g=m, so p = (0, 1)

    for (double lambda : {0.5, 1.0, 2.0}) {
        LossValue loss = joint_loss(model, x, 50.0, lambda);
        CHECK(loss.prediction_term == 0.0);
        CHECK(loss.adversary_term == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(loss.total == doctest::Approx(-lambda).epsilon(1e-12));
    }
}

TEST_CASE("joint_loss with lambda zero is the prediction term exactly") {
    AdversarialModel model = manual_model(0.25, false);
    EncodedInstance x{{1.0, 0.0}};
    LossValue loss = joint_loss(model, x, 70.0, 0.0);
    CHECK(loss.total == loss.prediction_term);
    CHECK(loss.prediction_term == doctest::Approx(std::abs(25.0 - 70.0) / 100.0));
}

TEST_CASE("loss algebra and ranges hold on random models") {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        AdversarialModel model;
        model.schema = pair_schema();
        model.outcome = TotalTime{};
        model.max_outcome = 50.0;
        model.protected_max = {1.0, 1.0};
        Rng init(rng.next_u64());
        model.predictor = make_network(2, {4}, 1, Activation::ReLU, Activation::Identity, init);
        model.adversary = make_network(4, {3}, 2, Activation::ReLU, Activation::Sigmoid, init);

        EncodedInstance x{{rng.uniform(), rng.uniform()}};
        double y = rng.uniform(0.0, 50.0);
        double lambda = rng.uniform(0.0, 2.0);
        LossValue loss = joint_loss(model, x, y, lambda);
        CHECK(loss.total == loss.prediction_term - lambda * loss.adversary_term);
        CHECK(loss.prediction_term >= 0.0);
        CHECK(loss.total >= -lambda - 1e-12);
    }
}

TEST_CASE("predictor gradients with lambda zero equal plain supervised backprop") {
    SynthData data = prepare(deterministic_occurrence_config(5, 60));
    TrainingConfig config = small_training_config(5, 0.0);
    config.epochs = 1;
    AdversarialModel model = train(data.train, data.schema, data.outcome, config);

    for (std::size_t r = 0; r < 10; ++r) {
        const EncodedInstance& x = data.train.instances[r];
        double y = data.train.targets[r];
        Gradients coupled = predictor_gradients(model, x, y, 0.0);

        // plain supervised gradient, computed directly
        ForwardTrace trace;
        std::vector<double> out = forward(model.predictor, x.values, &trace);
        double diff = out[0] - y;
        std::vector<double> dy = {diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)};
        Gradients plain = backward(model.predictor, trace, dy);

        for (std::size_t li = 0; li < plain.layers.size(); ++li) {
            REQUIRE(coupled.layers[li].weights == plain.layers[li].weights);
            REQUIRE(coupled.layers[li].biases == plain.layers[li].biases);
        }
    }
}

TEST_CASE("coupled predictor gradients match finite differences") {
    SynthData data = prepare(deterministic_occurrence_config(7, 40));
    TrainingConfig config = small_training_config(7, 1.0);
    config.epochs = 2;
    config.predictor_hidden = {6, 5};
    config.adversary_hidden = {4};
    AdversarialModel model = train(data.train, data.schema, data.outcome, config);

    const EncodedInstance& x = data.train.instances[3];
    double y = data.train.targets[3];
    double lambda = 1.0;
    Gradients analytic = predictor_gradients(model, x, y, lambda);

    const double eps = 1e-6;
    double max_rel = 0.0;
    for (std::size_t li = 0; li < model.predictor.layers.size(); ++li) {
        DenseLayer& layer = model.predictor.layers[li];
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
            double saved = layer.weights[i];
            layer.weights[i] = saved + eps;
            double up = joint_loss(model, x, y, lambda).total;
            layer.weights[i] = saved - eps;
            double down = joint_loss(model, x, y, lambda).total;
            layer.weights[i] = saved;
            double numeric = (up - down) / (2.0 * eps);
            double analytic_grad = analytic.layers[li].weights[i];
            double denom = std::max({std::abs(numeric), std::abs(analytic_grad), 1e-6});
            max_rel = std::max(max_rel, std::abs(numeric - analytic_grad) / denom);
        }
    }
    CHECK(max_rel < 1e-4);
}

TEST_CASE("adversary gradients match finite differences") {
    SynthData data = prepare(deterministic_occurrence_config(9, 40));
    TrainingConfig config = small_training_config(9, 1.0);
    config.epochs = 2;
    AdversarialModel model = train(data.train, data.schema, data.outcome, config);

    const EncodedInstance& x = data.train.instances[5];
    Gradients analytic = adversary_gradients(model, x);

    const double eps = 1e-6;
    double max_rel = 0.0;
    for (std::size_t li = 0; li < model.adversary.layers.size(); ++li) {
        DenseLayer& layer = model.adversary.layers[li];
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
            double saved = layer.weights[i];
            layer.weights[i] = saved + eps;
            double up = joint_loss(model, x, 0.0, 1.0).adversary_term;
            layer.weights[i] = saved - eps;
            double down = joint_loss(model, x, 0.0, 1.0).adversary_term;
            layer.weights[i] = saved;
            double numeric = (up - down) / (2.0 * eps);
            double analytic_grad = analytic.layers[li].weights[i];
            double denom = std::max({std::abs(numeric), std::abs(analytic_grad), 1e-6});
            max_rel = std::max(max_rel, std::abs(numeric - analytic_grad) / denom);
        }
    }
    CHECK(max_rel < 1e-4);
}

// On a log where the protected value carries all of the outcome signal,
// hiding it costs the whole prediction term (p_minority) while the adversary
// term repays at most half of that (two informative slots averaged over the
// four-slot projection), so the adversary weight must exceed 2 before hiding
// wins. 3 gives a comfortable margin.
constexpr double kBlindingLambda = 3.0;

TEST_CASE("training on the deterministic log: plain model learns, debiasing blinds the adversary") {
    SynthData data = prepare(deterministic_occurrence_config(11, 400));

    AdversarialModel plain = train(data.train, data.schema, data.outcome, small_training_config(11, 0.0));
    AdversarialModel debiased =
        train(data.train, data.schema, data.outcome, small_training_config(11, kBlindingLambda));

    // lambda = 0: the outcome is determined by the protected value, so test
    // accuracy approaches 1 and the adversary reads the protected value from
    // the representation
    std::size_t correct = 0;
    for (std::size_t r = 0; r < data.test.size(); ++r) {
        double p = predict_encoded(plain, data.test.instances[r]);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        if ((p >= 0.5) == (data.test.targets[r] >= 0.5)) ++correct;
    }
    double accuracy = static_cast<double>(correct) / static_cast<double>(data.test.size());
    CHECK(accuracy >= 0.95);
    double plain_adversary = adversary_accuracy(plain, data.test);
    CHECK(plain_adversary >= 0.9);

    // under pressure the adversary falls toward the majority-class rate (0.6)
    double debiased_adversary = adversary_accuracy(debiased, data.test);
    CHECK(debiased_adversary < plain_adversary - 0.1);
    CHECK(debiased_adversary <= 0.8);
}

TEST_CASE("debiasing pressure is monotone across seeds") {
    for (std::uint64_t seed : {21, 22, 23, 24, 25}) {
        SynthData data = prepare(deterministic_occurrence_config(seed, 400));
        AdversarialModel plain =
            train(data.train, data.schema, data.outcome, small_training_config(seed, 0.0));
        AdversarialModel debiased =
            train(data.train, data.schema, data.outcome, small_training_config(seed, kBlindingLambda));
        CHECK(adversary_accuracy(debiased, data.test) < adversary_accuracy(plain, data.test));
    }
}

TEST_CASE("training is deterministic given the seed") {
    SynthData data = prepare(deterministic_occurrence_config(31, 80));
    TrainingConfig config = small_training_config(31, 1.0);
    config.epochs = 4;
    AdversarialModel a = train(data.train, data.schema, data.outcome, config);
    AdversarialModel b = train(data.train, data.schema, data.outcome, config);

    auto dir = testsupport::test_dir("train_determinism");
    save_model(a, dir + "/a.txt");
    save_model(b, dir + "/b.txt");
    CHECK(testsupport::read_file(dir + "/a.txt") == testsupport::read_file(dir + "/b.txt"));
}

TEST_CASE("model serialization round-trips and rejects corruption") {
    SynthData data = prepare(deterministic_occurrence_config(33, 60));
    TrainingConfig config = small_training_config(33, 1.0);
    config.epochs = 2;
    AdversarialModel model = train(data.train, data.schema, data.outcome, config);

    auto dir = testsupport::test_dir("model_io");
    save_model(model, dir + "/model.txt", "cafe");
    AdversarialModel loaded = load_model(dir + "/model.txt");

    CHECK(loaded.schema == model.schema);
    CHECK(loaded.max_outcome == model.max_outcome);
    CHECK(loaded.protected_max == model.protected_max);
    REQUIRE(loaded.predictor.layers.size() == model.predictor.layers.size());
    for (std::size_t i = 0; i < model.predictor.layers.size(); ++i) {
        CHECK(loaded.predictor.layers[i].weights == model.predictor.layers[i].weights);
        CHECK(loaded.predictor.layers[i].biases == model.predictor.layers[i].biases);
    }
    for (std::size_t r = 0; r < 5; ++r) {
        CHECK(predict_encoded(loaded, data.test.instances[r]) ==
              predict_encoded(model, data.test.instances[r]));
    }

    // schema tampering is rejected by the stored hash
    std::string text = testsupport::read_file(dir + "/model.txt");
    auto pos = text.find("feature count Start");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 19, "feature count Begin");
    testsupport::write_file(dir, "tampered.txt", text);
    CHECK_THROWS_AS(load_model(dir + "/tampered.txt"), DataError);
}

TEST_CASE("divergent training reports epoch and batch") {
    // regression with an identity head: an absurd learning rate blows the
    // weights up until a forward pass or gradient overflows
    SynthConfig synth;
    synth.n_traces = 40;
    synth.outcome_kind = SynthConfig::OutcomeKind::DurationShift;
    synth.seed = 35;
    SynthData data = prepare(synth);
    TrainingConfig config = small_training_config(35, 0.0);
    // lr * decay >> 1 multiplies every weight each step until it overflows
    config.learning_rate = 1e6;
    config.weight_decay = 1e18;
    config.epochs = 50;
    try {
        train(data.train, data.schema, data.outcome, config);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        std::string message = e.what();
        CHECK(message.find("epoch") != std::string::npos);
        CHECK(message.find("batch") != std::string::npos);
    }
}

TEST_CASE("training with an empty protected set degenerates to a plain predictor") {
    SynthConfig synth = deterministic_occurrence_config(37, 60);
    EventLog log = generate(synth);
    FeatureSchema schema = build_schema(log, {});
    Dataset dataset = build_dataset(schema, log, ActivityOccurrence{synth.branch_activity()});
    TrainingConfig config = small_training_config(37, 1.0);
    config.epochs = 2;
    AdversarialModel model = train(dataset, schema, ActivityOccurrence{synth.branch_activity()}, config);
    CHECK(!model.has_adversary());
    CHECK(joint_loss(model, dataset.instances[0], dataset.targets[0], 1.0).adversary_term == 0.0);
}

TEST_CASE("untrained models still predict finite values") {
    SynthData data = prepare(deterministic_occurrence_config(39, 40));
    TrainingConfig config = small_training_config(39, 1.0);
    config.epochs = 0; // initialized, never stepped
    AdversarialModel model = train(data.train, data.schema, data.outcome, config);
    double p = predict_encoded(model, data.test.instances[0]);
    CHECK(std::isfinite(p));
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
}

TEST_CASE("training config validation") {
    TrainingConfig config;
    config.learning_rate = 0.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = TrainingConfig{};
    config.predictor_hidden.clear();
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = TrainingConfig{};
    config.batch_size = 0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = TrainingConfig{};
    config.adversary_weight = -0.5;
    CHECK_THROWS_AS(config.validate(), ConfigError);
}

TEST_CASE("grid search picks the best combination and reports all of them") {
    SynthData data = prepare(deterministic_occurrence_config(41, 120));
    TrainingConfig base = small_training_config(41, 0.0);
    base.epochs = 6;

    SUBCASE("single-point grids return that configuration") {
        HyperGrids grids;
        grids.learning_rates = {0.05};
        grids.epochs = {6};
        grids.weight_decays = {0.001};
        grids.predictor_shapes = {{8, 4}};
        auto [best, report] = grid_search(data.train, data.schema, data.outcome, 0.25, grids, base);
        CHECK(best.learning_rate == 0.05);
        CHECK(best.epochs == 6);
        CHECK(best.weight_decay == 0.001);
        CHECK(best.predictor_hidden == std::vector<std::size_t>{8, 4});
        CHECK(report.entries.size() == 1);
    }

    SUBCASE("a diverging learning rate loses to a working one") {
        HyperGrids grids;
        grids.learning_rates = {1e17, 0.1};
        grids.epochs = {6};
        grids.weight_decays = {0.0};
        grids.predictor_shapes = {{8, 4}};
        auto [best, report] = grid_search(data.train, data.schema, data.outcome, 0.25, grids, base);
        CHECK(best.learning_rate == 0.1);
        REQUIRE(report.entries.size() == 2);
        // either the huge rate diverged outright or its validation error lost
        if (!report.entries[0].failed) {
            CHECK(report.entries[0].validation_error > report.entries[1].validation_error);
        }
        CHECK(report.best_index == 1);
    }

    SUBCASE("report rows cover the full grid") {
        HyperGrids grids;
        grids.learning_rates = {0.1, 0.05};
        grids.epochs = {2, 4, 6};
        grids.weight_decays = {0.0, 0.01};
        grids.predictor_shapes = {{8, 4}, {6}};
        auto [best, report] = grid_search(data.train, data.schema, data.outcome, 0.25, grids, base);
        CHECK(report.entries.size() == 2 * 3 * 2 * 2);
    }
}
