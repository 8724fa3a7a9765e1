#include "fairpred/debias.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fairpred/errors.hpp"

namespace fairpred {

void TrainingConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (batch_size == 0) throw ConfigError("batch_size must be a positive integer");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (!(adversary_weight >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (adversary_steps_per_batch == 0) {
        throw ConfigError("adversary_steps_per_batch must be a positive integer");
    }
    if (predictor_hidden.empty()) {
        throw ConfigError("the predictor needs at least one hidden layer (the adversary reads it)");
    }
    for (std::size_t w : predictor_hidden) {
        if (w == 0) throw ConfigError("predictor layer widths must be positive");
    }
    for (std::size_t w : adversary_hidden) {
        if (w == 0) throw ConfigError("adversary layer widths must be positive");
    }
}

double delta_scalar(double y_hat, double y, double max_outcome, bool classification) {
    if (classification) {
        return std::abs(y_hat - y);
    }
    if (!(max_outcome > 0.0)) {
        throw ConfigError("regression normalization needs a positive max outcome");
    }
    return std::abs(y_hat - y) / max_outcome;
}

double delta_vector(std::span<const double> z, std::span<const double> p,
                    std::span<const double> protected_max) {
    if (z.size() != p.size() || z.size() != protected_max.size()) {
        throw std::invalid_argument("delta_vector: length mismatch");
    }
    if (z.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        sum += std::abs(z[i] - p[i]) / std::max(protected_max[i], 1.0);
    }
    return sum / static_cast<double>(z.size());
}

namespace {

// Predictor forward pass: raw output plus the last hidden activation that
// feeds the adversary.
struct PredictorPass {
    ForwardTrace trace;
    double raw_output = 0.0;
    const std::vector<double>* last_hidden = nullptr;
};

PredictorPass run_predictor(const AdversarialModel& model, const EncodedInstance& x) {
    PredictorPass pass;
    std::vector<double> y = forward(model.predictor, x.values, &pass.trace);
    pass.raw_output = y.at(0);
    pass.last_hidden = &pass.trace.activations[model.last_hidden_layer()];
    return pass;
}

double denormalize(const AdversarialModel& model, double raw_output) {
    return model.classification() ? raw_output : raw_output * model.max_outcome;
}

// d Delta(y_hat, y) / d raw_output. For regression the raw output is the
// outcome scaled by max_outcome, so the normalized error is
// |raw - y / max_outcome| and the derivative is the sign.
double prediction_loss_gradient(const AdversarialModel& model, double raw_output, double y) {
    double diff = model.classification() ? raw_output - y : raw_output - y / model.max_outcome;
    if (diff > 0.0) return 1.0;
    if (diff < 0.0) return -1.0;
    return 0.0;
}

std::vector<double> adversary_loss_gradient(std::span<const double> z, std::span<const double> p,
                                            std::span<const double> protected_max) {
    std::vector<double> out(z.size(), 0.0);
    if (z.empty()) return out;
    double scale = 1.0 / static_cast<double>(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        double diff = z[i] - p[i];
        double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        out[i] = scale * sign / std::max(protected_max[i], 1.0);
    }
    return out;
}

} // namespace

LossValue joint_loss(const AdversarialModel& model, const EncodedInstance& x, double y,
                     double lambda) {
    PredictorPass pass = run_predictor(model, x);
    LossValue loss;
    loss.prediction_term = model.classification()
                               ? delta_scalar(pass.raw_output, y, 0.0, true)
                               : delta_scalar(denormalize(model, pass.raw_output), y,
                                              model.max_outcome, false);
    if (model.has_adversary()) {
        std::vector<double> z = forward(model.adversary, *pass.last_hidden);
        std::vector<double> p = protected_projection(model.schema, x);
        loss.adversary_term = delta_vector(z, p, model.protected_max);
    }
    loss.total = loss.prediction_term - lambda * loss.adversary_term;
    return loss;
}

Gradients predictor_gradients(const AdversarialModel& model, const EncodedInstance& x, double y,
                              double lambda, LossValue* loss_out) {
    PredictorPass pass = run_predictor(model, x);
    double d_raw = prediction_loss_gradient(model, pass.raw_output, y);
    std::vector<double> d_output = {d_raw};

    LossValue loss;
    loss.prediction_term = model.classification()
                               ? delta_scalar(pass.raw_output, y, 0.0, true)
                               : delta_scalar(denormalize(model, pass.raw_output), y,
                                              model.max_outcome, false);

    if (!model.has_adversary() || lambda == 0.0) {
        if (model.has_adversary() && loss_out) {
            std::vector<double> z = forward(model.adversary, *pass.last_hidden);
            std::vector<double> p = protected_projection(model.schema, x);
            loss.adversary_term = delta_vector(z, p, model.protected_max);
        }
        loss.total = loss.prediction_term - lambda * loss.adversary_term;
        if (loss_out) *loss_out = loss;
        return backward(model.predictor, pass.trace, d_output);
    }

    ForwardTrace adversary_trace;
    std::vector<double> z = forward(model.adversary, *pass.last_hidden, &adversary_trace);
    std::vector<double> p = protected_projection(model.schema, x);
    loss.adversary_term = delta_vector(z, p, model.protected_max);
    loss.total = loss.prediction_term - lambda * loss.adversary_term;
    if (loss_out) *loss_out = loss;

    std::vector<double> dz = adversary_loss_gradient(z, p, model.protected_max);
    for (double& v : dz) v *= -lambda; // the predictor ascends the adversary's error
    Gradients through_adversary = backward(model.adversary, adversary_trace, dz);

    return backward(model.predictor, pass.trace, d_output, model.last_hidden_layer(),
                    through_adversary.input);
}

Gradients adversary_gradients(const AdversarialModel& model, const EncodedInstance& x) {
    if (!model.has_adversary()) {
        throw std::invalid_argument("adversary_gradients: model has no adversary");
    }
    PredictorPass pass = run_predictor(model, x);
    ForwardTrace adversary_trace;
    std::vector<double> z = forward(model.adversary, *pass.last_hidden, &adversary_trace);
    std::vector<double> p = protected_projection(model.schema, x);
    std::vector<double> dz = adversary_loss_gradient(z, p, model.protected_max);
    return backward(model.adversary, adversary_trace, dz);
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t n) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(mix_seed(seed, epoch + 1)); // stream 0 is the init stream
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = rng.index(i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

AdversarialModel train(const Dataset& train_data, const FeatureSchema& schema,
                       const OutcomeSpec& outcome, const TrainingConfig& config) {
    config.validate();
    if (train_data.size() == 0) {
        throw ConfigError("training dataset is empty");
    }

    bool classification = is_classification(outcome);
    AdversarialModel model;
    model.schema = schema;
    model.outcome = outcome;

    model.max_outcome = 0.0;
    for (double t : train_data.targets) model.max_outcome = std::max(model.max_outcome, std::abs(t));
    if (!classification && !(model.max_outcome > 0.0)) {
        throw ConfigError("all training outcomes are zero; the regression target cannot be normalized");
    }

    std::size_t protected_width = schema.protected_indices.size();
    model.protected_max.assign(protected_width, 0.0);
    for (const auto& row : train_data.protected_rows) {
        if (row.size() != protected_width) {
            throw std::invalid_argument("train: dataset protected rows do not match the schema");
        }
        for (std::size_t i = 0; i < protected_width; ++i) {
            model.protected_max[i] = std::max(model.protected_max[i], std::abs(row[i]));
        }
    }

    Rng init_rng(mix_seed(config.seed, 0));
    Activation head = classification ? Activation::Sigmoid : Activation::Identity;
    model.predictor = make_network(schema.size(), config.predictor_hidden, 1, Activation::ReLU,
                                   head, init_rng);
    if (protected_width > 0) {
        std::size_t adversary_input = config.predictor_hidden.back();
        model.adversary = make_network(adversary_input, config.adversary_hidden, protected_width,
                                       Activation::ReLU, Activation::Sigmoid, init_rng);
    }
    // An empty protected set degenerates to plain supervised training.

    std::size_t n = train_data.size();
    double lambda = config.adversary_weight;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<std::size_t> order = epoch_order(config.seed, epoch, n);
        for (std::size_t batch_start = 0; batch_start < n; batch_start += config.batch_size) {
            std::size_t batch_end = std::min(batch_start + config.batch_size, n);
            double batch_scale = 1.0 / static_cast<double>(batch_end - batch_start);
            std::size_t batch_index = batch_start / config.batch_size;

            auto fail = [&](const std::string& what) {
                throw TrainingError("training diverged (" + what + ") at epoch " +
                                    std::to_string(epoch) + ", batch " +
                                    std::to_string(batch_index));
            };
            auto step = [&](Network& net, const Gradients& grads) {
                try {
                    sgd_step(net, grads, config.learning_rate, config.weight_decay);
                } catch (const TrainingError& e) {
                    fail(e.what());
                }
            };

            if (model.has_adversary()) {
                for (std::size_t s = 0; s < config.adversary_steps_per_batch; ++s) {
                    Gradients sum = zero_gradients(model.adversary);
                    for (std::size_t i = batch_start; i < batch_end; ++i) {
                        accumulate(sum, adversary_gradients(model, train_data.instances[order[i]]));
                    }
                    scale(sum, batch_scale);
                    step(model.adversary, sum);
                }
            }

            Gradients sum = zero_gradients(model.predictor);
            double batch_loss = 0.0;
            for (std::size_t i = batch_start; i < batch_end; ++i) {
                const EncodedInstance& x = train_data.instances[order[i]];
                double y = train_data.targets[order[i]];
                LossValue loss;
                accumulate(sum, predictor_gradients(model, x, y, lambda, &loss));
                batch_loss += loss.total;
            }
            if (!std::isfinite(batch_loss)) fail("non-finite loss");
            scale(sum, batch_scale);
            step(model.predictor, sum);
        }
    }
    return model;
}

double predict_encoded(const AdversarialModel& model, const EncodedInstance& x) {
    std::vector<double> y = forward(model.predictor, x.values);
    return denormalize(model, y.at(0));
}

double predict(const AdversarialModel& model, const Trace& prefix) {
    return predict_encoded(model, encode_trace(model.schema, prefix));
}

std::vector<double> adversary_forecast(const AdversarialModel& model, const EncodedInstance& x) {
    if (!model.has_adversary()) {
        throw std::invalid_argument("adversary_forecast: model has no adversary");
    }
    PredictorPass pass = run_predictor(model, x);
    return forward(model.adversary, *pass.last_hidden);
}

double adversary_accuracy(const AdversarialModel& model, const Dataset& data) {
    if (!model.has_adversary() || data.size() == 0) return 0.0;
    std::size_t hits = 0;
    for (std::size_t row = 0; row < data.size(); ++row) {
        std::vector<double> z = adversary_forecast(model, data.instances[row]);
        const std::vector<double>& p = data.protected_rows[row];
        std::size_t predicted = 0, actual = 0;
        for (std::size_t i = 1; i < z.size(); ++i) {
            if (z[i] > z[predicted]) predicted = i;
            if (p[i] > p[actual]) actual = i;
        }
        if (predicted == actual) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

namespace {

Dataset gather_rows(const Dataset& source, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.instances.reserve(rows.size());
    for (std::size_t r : rows) {
        out.instances.push_back(source.instances[r]);
        out.targets.push_back(source.targets[r]);
        out.protected_rows.push_back(source.protected_rows[r]);
        out.provenance.push_back(source.provenance[r]);
    }
    return out;
}

} // namespace

std::pair<TrainingConfig, GridSearchReport> grid_search(const Dataset& train_data,
                                                        const FeatureSchema& schema,
                                                        const OutcomeSpec& outcome,
                                                        double validation_fraction,
                                                        const HyperGrids& grids,
                                                        const TrainingConfig& base) {
    if (grids.learning_rates.empty() || grids.epochs.empty() || grids.weight_decays.empty() ||
        grids.predictor_shapes.empty()) {
        throw ConfigError("every hyper-parameter grid needs at least one value");
    }
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("validation_fraction must be in (0, 1)");
    }

    // Temporal split by case provenance: rows arrive in first-event order, so
    // the later cases form the validation part.
    std::vector<std::string> case_order;
    std::set<std::string> seen;
    for (const auto& prov : train_data.provenance) {
        if (seen.insert(prov.case_id).second) case_order.push_back(prov.case_id);
    }
    if (case_order.size() < 2) {
        throw ConfigError("grid search needs at least 2 cases");
    }
    std::size_t n_validation = static_cast<std::size_t>(
        std::llround(validation_fraction * static_cast<double>(case_order.size())));
    n_validation = std::clamp<std::size_t>(n_validation, 1, case_order.size() - 1);
    std::set<std::string> validation_cases(case_order.end() - static_cast<std::ptrdiff_t>(n_validation),
                                           case_order.end());

    std::vector<std::size_t> fit_rows, validation_rows;
    for (std::size_t r = 0; r < train_data.size(); ++r) {
        (validation_cases.contains(train_data.provenance[r].case_id) ? validation_rows : fit_rows)
            .push_back(r);
    }
    Dataset fit_data = gather_rows(train_data, fit_rows);
    Dataset validation_data = gather_rows(train_data, validation_rows);

    GridSearchReport report;
    for (double lr : grids.learning_rates) {
        for (const auto& shape : grids.predictor_shapes) {
            for (std::size_t epochs : grids.epochs) {
                for (double wd : grids.weight_decays) {
                    GridSearchEntry entry;
                    entry.config = base;
                    entry.config.learning_rate = lr;
                    entry.config.predictor_hidden = shape;
                    entry.config.epochs = epochs;
                    entry.config.weight_decay = wd;
                    try {
                        AdversarialModel model = train(fit_data, schema, outcome, entry.config);
                        double sum = 0.0;
                        for (std::size_t r = 0; r < validation_data.size(); ++r) {
                            double y_hat = predict_encoded(model, validation_data.instances[r]);
                            sum += delta_scalar(y_hat, validation_data.targets[r],
                                                model.max_outcome, model.classification());
                        }
                        entry.validation_error = sum / static_cast<double>(validation_data.size());
                        if (!std::isfinite(entry.validation_error)) {
                            entry.failed = true;
                            entry.message = "non-finite validation error";
                        }
                    } catch (const TrainingError& e) {
                        entry.failed = true;
                        entry.message = e.what();
                    }
                    report.entries.push_back(std::move(entry));
                }
            }
        }
    }

    std::size_t best = report.entries.size();
    for (std::size_t i = 0; i < report.entries.size(); ++i) {
        if (report.entries[i].failed) continue;
        if (best == report.entries.size() ||
            report.entries[i].validation_error < report.entries[best].validation_error) {
            best = i;
        }
    }
    if (best == report.entries.size()) {
        throw TrainingError("every grid combination failed to train");
    }
    report.best_index = best;
    return {report.entries[best].config, report};
}

} // namespace fairpred
