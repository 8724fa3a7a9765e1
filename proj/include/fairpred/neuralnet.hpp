#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace fairpred {

enum class Activation { ReLU, Sigmoid, Identity };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& name);

double sigmoid(double x);

// Deterministic random source. mt19937_64 is bit-exact across platforms and
// the derived draws avoid the implementation-defined standard distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller
    double normal();

    // [0, n)
    std::size_t index(std::size_t n);

private:
    std::mt19937_64 engine_;
};

// Stream derivation for (seed, index) pairs; splitmix64 finalizer.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

struct DenseLayer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::vector<double> weights; // row-major, out_dim x in_dim
    std::vector<double> biases;  // out_dim
    Activation activation = Activation::Identity;
};

struct Network {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }
};

struct ForwardTrace {
    std::vector<double> input;
    std::vector<std::vector<double>> pre_activations; // per layer
    std::vector<std::vector<double>> activations;     // per layer
};

struct LayerGradients {
    std::vector<double> weights;
    std::vector<double> biases;
};

struct Gradients {
    std::vector<LayerGradients> layers;
    std::vector<double> input; // dLoss/dx
};

// He initialization for ReLU layers, Glorot for sigmoid/identity; zero biases.
Network make_network(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                     std::size_t output_dim, Activation hidden_activation,
                     Activation output_activation, Rng& rng);

// Affine + activation per layer. Throws std::invalid_argument on a dimension
// mismatch. The trace caches intermediates for backward().
std::vector<double> forward(const Network& net, std::span<const double> x,
                            ForwardTrace* trace = nullptr);

// Exact analytic gradients of a loss with d loss / d output given, for every
// weight, bias, and the input vector.
Gradients backward(const Network& net, const ForwardTrace& trace,
                   std::span<const double> d_output);

// Same, with an extra gradient added at the activation of an intermediate
// layer (used to chain a second network's loss into this one).
Gradients backward(const Network& net, const ForwardTrace& trace,
                   std::span<const double> d_output, std::size_t inject_layer,
                   std::span<const double> inject_gradient);

Gradients zero_gradients(const Network& net);
void accumulate(Gradients& into, const Gradients& grads);
void scale(Gradients& grads, double factor);

// w <- w - lr * (grad + weight_decay * w); biases are exempt from decay.
// Throws TrainingError on non-finite gradients.
void sgd_step(Network& net, const Gradients& grads, double learning_rate, double weight_decay);

// Compares backward() with central finite differences over all parameters.
// loss maps the network output to a scalar; loss_gradient is its analytic
// derivative with respect to the output. Returns the max relative error.
double gradient_check(const Network& net, std::span<const double> x,
                      const std::function<double(std::span<const double>)>& loss,
                      const std::function<std::vector<double>(std::span<const double>)>& loss_gradient,
                      double epsilon = 1e-5);

} // namespace fairpred
