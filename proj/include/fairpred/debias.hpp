#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairpred/encoding.hpp"
#include "fairpred/neuralnet.hpp"
#include "fairpred/outcomes.hpp"

namespace fairpred {

struct TrainingConfig {
    double learning_rate = 0.05;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    double weight_decay = 0.0;
    double adversary_weight = 1.0; // lambda
    std::size_t adversary_steps_per_batch = 1;
    std::uint64_t seed = 1;
    std::vector<std::size_t> predictor_hidden = {32, 16};
    std::vector<std::size_t> adversary_hidden = {16};

    // Throws ConfigError on violated constraints. epochs == 0 is allowed and
    // yields an initialized, untrained model.
    void validate() const;
};

// Predictor plus adversary. The adversary reads the activation of the
// predictor's last hidden layer and forecasts the protected projection.
// For regression the predictor's raw output is the outcome scaled by
// max_outcome; predict() reports original units.
struct AdversarialModel {
    Network predictor;
    Network adversary; // no layers when the protected set is empty
    FeatureSchema schema;
    OutcomeSpec outcome;
    double max_outcome = 0.0;
    std::vector<double> protected_max; // componentwise max over training rows

    bool classification() const { return is_classification(outcome); }
    bool has_adversary() const { return !adversary.layers.empty(); }
    std::size_t last_hidden_layer() const { return predictor.layers.size() - 2; }
};

struct LossValue {
    double total = 0.0;
    double prediction_term = 0.0; // Delta(y_hat, y)
    double adversary_term = 0.0;  // Delta(z, protected projection)
};

// Normalized prediction error. Regression: |y_hat - y| / max_outcome
// (max_outcome must be positive). Classification: |y_hat - y| with
// y_hat already in [0,1].
double delta_scalar(double y_hat, double y, double max_outcome, bool classification);

// Mean over components of |z_i - p_i| / max(protected_max_i, 1).
// Empty vectors give 0.
double delta_vector(std::span<const double> z, std::span<const double> p,
                    std::span<const double> protected_max);

// Runs both networks and evaluates total = Delta(y_hat,y) - lambda * Delta(z,p).
LossValue joint_loss(const AdversarialModel& model, const EncodedInstance& x, double y,
                     double lambda);

// Gradients of the full coupled objective with respect to the predictor's
// parameters, adversary frozen (the adversary term chains back through its
// input). When loss_out is given it receives the loss of the same pass.
Gradients predictor_gradients(const AdversarialModel& model, const EncodedInstance& x, double y,
                              double lambda, LossValue* loss_out = nullptr);

// Gradients of Delta(z, p) with respect to the adversary's parameters.
Gradients adversary_gradients(const AdversarialModel& model, const EncodedInstance& x);

// Deterministic per-epoch row order (Fisher-Yates from the seed).
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t n);

// Alternating two-player minimization of the joint loss: per batch, the
// adversary first descends its own error (it learns the protected values),
// then the predictor descends the total with the adversary frozen.
// Throws TrainingError (with epoch/batch) on divergence.
AdversarialModel train(const Dataset& train_data, const FeatureSchema& schema,
                       const OutcomeSpec& outcome, const TrainingConfig& config);

// Regression: predicted outcome in original units. Classification:
// probability in [0,1].
double predict(const AdversarialModel& model, const Trace& prefix);
double predict_encoded(const AdversarialModel& model, const EncodedInstance& x);

// Adversary output for an encoded instance (diagnostics and tests).
std::vector<double> adversary_forecast(const AdversarialModel& model, const EncodedInstance& x);

// Fraction of rows whose protected category (argmax over a categorical
// protected attribute's slots) is recovered by the adversary.
double adversary_accuracy(const AdversarialModel& model, const Dataset& data);

struct HyperGrids {
    std::vector<double> learning_rates;
    std::vector<std::size_t> epochs;
    std::vector<double> weight_decays;
    std::vector<std::vector<std::size_t>> predictor_shapes;
};

struct GridSearchEntry {
    TrainingConfig config;
    double validation_error = 0.0; // mean Delta(y_hat, y) on the validation part
    bool failed = false;
    std::string message;
};

struct GridSearchReport {
    std::vector<GridSearchEntry> entries;
    std::size_t best_index = 0;
};

// Exhaustive search over the grids; the dataset is split temporally by case
// provenance into fit and validation parts. Combinations that fail to train
// are recorded and skipped.
std::pair<TrainingConfig, GridSearchReport> grid_search(const Dataset& train_data,
                                                        const FeatureSchema& schema,
                                                        const OutcomeSpec& outcome,
                                                        double validation_fraction,
                                                        const HyperGrids& grids,
                                                        const TrainingConfig& base);

} // namespace fairpred
