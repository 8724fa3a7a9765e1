#include "fairpred/neuralnet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fairpred/errors.hpp"

namespace fairpred {

const char* activation_name(Activation a) {
    switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    default: return "identity";
    }
}

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::ReLU;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "identity") return Activation::Identity;
    throw ConfigError("unknown activation '" + name + "'");
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

double Rng::normal() {
    // Box-Muller; one value per pair keeps the draw sequence simple.
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::size_t Rng::index(std::size_t n) {
    // modulo-rejection to keep the draw unbiased
    if (n == 0) throw std::invalid_argument("Rng::index(0)");
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return static_cast<std::size_t>(v % n);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

namespace {

double activate(Activation a, double z) {
    switch (a) {
    case Activation::ReLU: return z > 0.0 ? z : 0.0;
    case Activation::Sigmoid: return sigmoid(z);
    default: return z;
    }
}

// derivative expressed through pre-activation z and activation value a
double activate_derivative(Activation act, double z, double a) {
    switch (act) {
    case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: return a * (1.0 - a);
    default: return 1.0;
    }
}

} // namespace

Network make_network(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                     std::size_t output_dim, Activation hidden_activation,
                     Activation output_activation, Rng& rng) {
    Network net;
    std::size_t prev = input_dim;
    auto add_layer = [&](std::size_t width, Activation act) {
        DenseLayer layer;
        layer.in_dim = prev;
        layer.out_dim = width;
        layer.activation = act;
        layer.weights.resize(width * prev);
        layer.biases.assign(width, 0.0);
        double stddev = act == Activation::ReLU
                            ? std::sqrt(2.0 / static_cast<double>(prev))
                            : std::sqrt(2.0 / static_cast<double>(prev + width));
        for (double& w : layer.weights) w = rng.normal() * stddev;
        net.layers.push_back(std::move(layer));
        prev = width;
    };
    for (std::size_t width : hidden_widths) add_layer(width, hidden_activation);
    add_layer(output_dim, output_activation);
    return net;
}

std::vector<double> forward(const Network& net, std::span<const double> x, ForwardTrace* trace) {
    if (net.layers.empty()) throw std::invalid_argument("forward: empty network");
    if (x.size() != net.input_dim()) {
        throw std::invalid_argument("forward: input has " + std::to_string(x.size()) +
                                    " dims, network expects " + std::to_string(net.input_dim()));
    }
    if (trace) {
        trace->input.assign(x.begin(), x.end());
        trace->pre_activations.clear();
        trace->activations.clear();
        trace->pre_activations.reserve(net.layers.size());
        trace->activations.reserve(net.layers.size());
    }

    std::vector<double> current(x.begin(), x.end());
    std::vector<double> next;
    for (const DenseLayer& layer : net.layers) {
        next.resize(layer.out_dim);
        for (std::size_t r = 0; r < layer.out_dim; ++r) {
            double acc = layer.biases[r];
            const double* row = layer.weights.data() + r * layer.in_dim;
            for (std::size_t c = 0; c < layer.in_dim; ++c) acc += row[c] * current[c];
            next[r] = acc;
        }
        if (trace) trace->pre_activations.push_back(next);
        for (std::size_t r = 0; r < layer.out_dim; ++r) {
            next[r] = activate(layer.activation, next[r]);
        }
        if (trace) trace->activations.push_back(next);
        std::swap(current, next);
    }
    return current;
}

Gradients backward(const Network& net, const ForwardTrace& trace, std::span<const double> d_output) {
    return backward(net, trace, d_output, net.layers.size(), {});
}

Gradients backward(const Network& net, const ForwardTrace& trace, std::span<const double> d_output,
                   std::size_t inject_layer, std::span<const double> inject_gradient) {
    if (trace.activations.size() != net.layers.size()) {
        throw std::invalid_argument("backward: trace does not match network");
    }
    if (d_output.size() != net.output_dim()) {
        throw std::invalid_argument("backward: gradient size does not match output");
    }

    Gradients grads = zero_gradients(net);
    std::vector<double> delta(d_output.begin(), d_output.end()); // d loss / d activation

    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const DenseLayer& layer = net.layers[li];
        const std::vector<double>& z = trace.pre_activations[li];
        const std::vector<double>& a = trace.activations[li];
        const std::vector<double>& prev =
            li == 0 ? trace.input : trace.activations[li - 1];

        std::vector<double> dz(layer.out_dim);
        for (std::size_t r = 0; r < layer.out_dim; ++r) {
            dz[r] = delta[r] * activate_derivative(layer.activation, z[r], a[r]);
        }
        LayerGradients& lg = grads.layers[li];
        for (std::size_t r = 0; r < layer.out_dim; ++r) {
            double* wrow = lg.weights.data() + r * layer.in_dim;
            for (std::size_t c = 0; c < layer.in_dim; ++c) wrow[c] += dz[r] * prev[c];
            lg.biases[r] += dz[r];
        }
        std::vector<double> d_prev(layer.in_dim, 0.0);
        for (std::size_t r = 0; r < layer.out_dim; ++r) {
            const double* wrow = layer.weights.data() + r * layer.in_dim;
            for (std::size_t c = 0; c < layer.in_dim; ++c) d_prev[c] += wrow[c] * dz[r];
        }
        if (li > 0 && li - 1 == inject_layer) {
            if (inject_gradient.size() != d_prev.size()) {
                throw std::invalid_argument("backward: injected gradient size mismatch");
            }
            for (std::size_t c = 0; c < d_prev.size(); ++c) d_prev[c] += inject_gradient[c];
        }
        delta = std::move(d_prev);
    }
    grads.input = std::move(delta);
    return grads;
}

Gradients zero_gradients(const Network& net) {
    Gradients grads;
    grads.layers.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        grads.layers[i].weights.assign(net.layers[i].weights.size(), 0.0);
        grads.layers[i].biases.assign(net.layers[i].biases.size(), 0.0);
    }
    grads.input.assign(net.input_dim(), 0.0);
    return grads;
}

void accumulate(Gradients& into, const Gradients& grads) {
    for (std::size_t li = 0; li < into.layers.size(); ++li) {
        for (std::size_t i = 0; i < into.layers[li].weights.size(); ++i) {
            into.layers[li].weights[i] += grads.layers[li].weights[i];
        }
        for (std::size_t i = 0; i < into.layers[li].biases.size(); ++i) {
            into.layers[li].biases[i] += grads.layers[li].biases[i];
        }
    }
    for (std::size_t i = 0; i < into.input.size(); ++i) into.input[i] += grads.input[i];
}

void scale(Gradients& grads, double factor) {
    for (auto& layer : grads.layers) {
        for (double& w : layer.weights) w *= factor;
        for (double& b : layer.biases) b *= factor;
    }
    for (double& v : grads.input) v *= factor;
}

void sgd_step(Network& net, const Gradients& grads, double learning_rate, double weight_decay) {
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        DenseLayer& layer = net.layers[li];
        const LayerGradients& lg = grads.layers[li];
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
            if (!std::isfinite(lg.weights[i])) {
                throw TrainingError("non-finite weight gradient");
            }
            layer.weights[i] -= learning_rate * (lg.weights[i] + weight_decay * layer.weights[i]);
        }
        for (std::size_t i = 0; i < layer.biases.size(); ++i) {
            if (!std::isfinite(lg.biases[i])) {
                throw TrainingError("non-finite bias gradient");
            }
            layer.biases[i] -= learning_rate * lg.biases[i];
        }
    }
}

double gradient_check(const Network& net, std::span<const double> x,
                      const std::function<double(std::span<const double>)>& loss,
                      const std::function<std::vector<double>(std::span<const double>)>& loss_gradient,
                      double epsilon) {
    ForwardTrace trace;
    std::vector<double> y = forward(net, x, &trace);
    std::vector<double> dy = loss_gradient(y);
    Gradients analytic = backward(net, trace, dy);

    Network probe = net;
    double max_rel = 0.0;
    auto check = [&](double& param, double analytic_grad) {
        double saved = param;
        param = saved + epsilon;
        double up = loss(forward(probe, x));
        param = saved - epsilon;
        double down = loss(forward(probe, x));
        param = saved;
        double numeric = (up - down) / (2.0 * epsilon);
        double denom = std::max({std::abs(analytic_grad), std::abs(numeric), 1e-6});
        max_rel = std::max(max_rel, std::abs(analytic_grad - numeric) / denom);
    };
    for (std::size_t li = 0; li < probe.layers.size(); ++li) {
        DenseLayer& layer = probe.layers[li];
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
            check(layer.weights[i], analytic.layers[li].weights[i]);
        }
        for (std::size_t i = 0; i < layer.biases.size(); ++i) {
            check(layer.biases[i], analytic.layers[li].biases[i]);
        }
    }
    return max_rel;
}

} // namespace fairpred
