#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slicesim/errors.hpp"
#include "slicesim/rng.hpp"

namespace slicesim::nn {

enum class Activation { Relu, Tanh, Identity, Sigmoid };

Activation activation_from_string(const std::string& s);
const char* to_string(Activation a);

/// Fully connected network shape. Parameters are stored flat, layer by
/// layer as a row-major weight matrix followed by the bias vector.
struct MlpSpec {
    std::vector<int> layer_widths;
    Activation hidden_activation = Activation::Relu;
    Activation output_activation = Activation::Identity;

    void validate() const;
    int input_width() const { return layer_widths.front(); }
    int output_width() const { return layer_widths.back(); }
    std::size_t param_count() const;
    bool operator==(const MlpSpec&) const = default;
};

struct ParamSet {
    std::vector<double> values;
};

/// Fan-in scaled uniform init; out_scale shrinks the final layer (used to
/// start actors near mid-range).
ParamSet init_params(const MlpSpec& spec, sim::SeededRng& rng, double out_scale = 1.0);

/// Layer activations retained for the backward pass. Reusable across calls
/// to avoid churn in training loops.
struct ForwardTrace {
    std::vector<std::vector<double>> acts; // acts[0] = input, acts.back() = output
};

struct Gradients {
    std::vector<double> params;
    std::vector<double> input;
};

void forward(const MlpSpec& spec, const ParamSet& params, std::span<const double> input,
             std::vector<double>& out);
std::vector<double> forward(const MlpSpec& spec, const ParamSet& params,
                            std::span<const double> input);

void forward_trace(const MlpSpec& spec, const ParamSet& params, std::span<const double> input,
                   ForwardTrace& trace);

/// Exact reverse-mode gradient of output . upstream with respect to the
/// parameters (and the input, as a byproduct). Requires the trace produced
/// by forward_trace on the same (spec, params, input).
void backward(const MlpSpec& spec, const ParamSet& params, const ForwardTrace& trace,
              std::span<const double> upstream, Gradients& out);

/// backward() with an extra gradient injected at the output layer's
/// pre-activations. Unlike upstream it bypasses the output activation
/// derivative, so it stays effective where a squashing output saturates.
void backward(const MlpSpec& spec, const ParamSet& params, const ForwardTrace& trace,
              std::span<const double> upstream, std::span<const double> output_pre_upstream,
              Gradients& out);

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;

    void reset(std::size_t n);
};

/// Bias-corrected Adam update, in place.
void optimizer_step(ParamSet& params, std::span<const double> gradient, AdamState& state,
                    const AdamHyper& hyper);

/// target <- tau * online + (1 - tau) * target
void soft_update(ParamSet& target, const ParamSet& online, double tau);

/// Versioned JSON checkpoint for one network. Round-trips 64-bit floats
/// bit-exactly.
void save_network(const std::string& path, const MlpSpec& spec, const ParamSet& params);
std::pair<MlpSpec, ParamSet> load_network(const std::string& path);

} // namespace slicesim::nn
