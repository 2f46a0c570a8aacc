#include "slicesim/nn.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace slicesim::nn {

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    if (s == "identity") return Activation::Identity;
    if (s == "sigmoid") return Activation::Sigmoid;
    throw ConfigError("unknown activation: " + s);
}

const char* to_string(Activation a) {
    switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
    case Activation::Sigmoid: return "sigmoid";
    }
    return "?";
}

void MlpSpec::validate() const {
    if (layer_widths.size() < 2) throw ConfigError("network needs at least two layers");
    for (int w : layer_widths)
        if (w < 1) throw ConfigError("network layer widths must be >= 1");
    if (hidden_activation != Activation::Relu && hidden_activation != Activation::Tanh)
        throw ConfigError("hidden activation must be relu or tanh");
    if (output_activation == Activation::Relu)
        throw ConfigError("output activation must be identity, tanh or sigmoid");
}

std::size_t MlpSpec::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_widths.size(); ++l)
        n += static_cast<std::size_t>(layer_widths[l + 1]) * layer_widths[l] + layer_widths[l + 1];
    return n;
}

ParamSet init_params(const MlpSpec& spec, sim::SeededRng& rng, double out_scale) {
    spec.validate();
    ParamSet p;
    p.values.resize(spec.param_count());
    std::size_t off = 0;
    std::size_t layers = spec.layer_widths.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        int in = spec.layer_widths[l];
        int out = spec.layer_widths[l + 1];
        double bound = 1.0 / std::sqrt(static_cast<double>(in));
        if (l + 1 == layers) bound *= out_scale;
        for (int i = 0; i < out * in; ++i) p.values[off++] = rng.uniform(-bound, bound);
        for (int i = 0; i < out; ++i) p.values[off++] = rng.uniform(-bound, bound);
    }
    return p;
}

static double apply_act(Activation a, double z) {
    switch (a) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::Identity: return z;
    }
    return z;
}

// derivative expressed through the activation value
static double act_deriv(Activation a, double y) {
    switch (a) {
    case Activation::Relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - y * y;
    case Activation::Sigmoid: return y * (1.0 - y);
    case Activation::Identity: return 1.0;
    }
    return 1.0;
}

static void check_shapes(const MlpSpec& spec, const ParamSet& params,
                         std::span<const double> input) {
    if (params.values.size() != spec.param_count())
        throw ShapeMismatchError("parameter vector length " + std::to_string(params.values.size()) +
                                 " does not match spec (" + std::to_string(spec.param_count()) + ")");
    if (input.size() != static_cast<std::size_t>(spec.input_width()))
        throw ShapeMismatchError("input length " + std::to_string(input.size()) +
                                 " does not match first width " + std::to_string(spec.input_width()));
}

void forward_trace(const MlpSpec& spec, const ParamSet& params, std::span<const double> input,
                   ForwardTrace& trace) {
    check_shapes(spec, params, input);
    std::size_t layers = spec.layer_widths.size() - 1;
    trace.acts.resize(layers + 1);
    trace.acts[0].assign(input.begin(), input.end());
    const double* w = params.values.data();
    for (std::size_t l = 0; l < layers; ++l) {
        int in = spec.layer_widths[l];
        int out = spec.layer_widths[l + 1];
        Activation act = (l + 1 == layers) ? spec.output_activation : spec.hidden_activation;
        const std::vector<double>& x = trace.acts[l];
        std::vector<double>& y = trace.acts[l + 1];
        y.resize(out);
        const double* bias = w + static_cast<std::size_t>(out) * in;
        for (int o = 0; o < out; ++o) {
            double z = bias[o];
            const double* row = w + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) z += row[i] * x[i];
            y[o] = apply_act(act, z);
        }
        w += static_cast<std::size_t>(out) * in + out;
    }
}

void forward(const MlpSpec& spec, const ParamSet& params, std::span<const double> input,
             std::vector<double>& out) {
    thread_local ForwardTrace scratch;
    forward_trace(spec, params, input, scratch);
    out = scratch.acts.back();
}

std::vector<double> forward(const MlpSpec& spec, const ParamSet& params,
                            std::span<const double> input) {
    std::vector<double> out;
    forward(spec, params, input, out);
    return out;
}

void backward(const MlpSpec& spec, const ParamSet& params, const ForwardTrace& trace,
              std::span<const double> upstream, Gradients& out) {
    backward(spec, params, trace, upstream, {}, out);
}

void backward(const MlpSpec& spec, const ParamSet& params, const ForwardTrace& trace,
              std::span<const double> upstream, std::span<const double> output_pre_upstream,
              Gradients& out) {
    std::size_t layers = spec.layer_widths.size() - 1;
    if (trace.acts.size() != layers + 1) throw ShapeMismatchError("stale forward trace");
    if (upstream.size() != static_cast<std::size_t>(spec.output_width()))
        throw ShapeMismatchError("upstream length does not match output width");
    if (!output_pre_upstream.empty() &&
        output_pre_upstream.size() != static_cast<std::size_t>(spec.output_width()))
        throw ShapeMismatchError("pre-activation upstream length does not match output width");
    out.params.assign(params.values.size(), 0.0);

    // delta starts as upstream times the output activation derivative
    std::vector<double> delta(upstream.begin(), upstream.end());
    std::vector<double> next_delta;
    for (std::size_t l = layers; l-- > 0;) {
        int in = spec.layer_widths[l];
        int outw = spec.layer_widths[l + 1];
        Activation act = (l + 1 == layers) ? spec.output_activation : spec.hidden_activation;
        const std::vector<double>& y = trace.acts[l + 1];
        const std::vector<double>& x = trace.acts[l];
        std::size_t off = 0;
        for (std::size_t k = 0; k < l; ++k)
            off += static_cast<std::size_t>(spec.layer_widths[k + 1]) * spec.layer_widths[k] +
                   spec.layer_widths[k + 1];
        double* wg = out.params.data() + off;
        double* bg = wg + static_cast<std::size_t>(outw) * in;
        const double* w = params.values.data() + off;

        for (int o = 0; o < outw; ++o) delta[o] *= act_deriv(act, y[o]);
        if (l + 1 == layers && !output_pre_upstream.empty())
            for (int o = 0; o < outw; ++o) delta[o] += output_pre_upstream[o];

        next_delta.assign(in, 0.0);
        for (int o = 0; o < outw; ++o) {
            double d = delta[o];
            bg[o] += d;
            double* wrow = wg + static_cast<std::size_t>(o) * in;
            const double* row = w + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) {
                wrow[i] += d * x[i];
                next_delta[i] += d * row[i];
            }
        }
        delta.swap(next_delta);
    }
    out.input = delta;
}

void AdamState::reset(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    step = 0;
}

void optimizer_step(ParamSet& params, std::span<const double> gradient, AdamState& state,
                    const AdamHyper& hyper) {
    if (gradient.size() != params.values.size())
        throw ShapeMismatchError("gradient length does not match parameter count");
    for (double g : gradient)
        if (!std::isfinite(g)) throw NonFiniteError("non-finite gradient in optimizer step");
    if (state.m.size() != params.values.size()) state.reset(params.values.size());
    ++state.step;
    double b1t = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    double b2t = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.values.size(); ++i) {
        double g = gradient[i];
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        double mhat = state.m[i] / b1t;
        double vhat = state.v[i] / b2t;
        params.values[i] -= hyper.lr * mhat / (std::sqrt(vhat) + hyper.eps);
    }
}

void soft_update(ParamSet& target, const ParamSet& online, double tau) {
    if (target.values.size() != online.values.size())
        throw LayoutMismatchError("soft_update: parameter layouts differ");
    if (tau < 0.0 || tau > 1.0) throw OutOfRangeError("soft_update: tau outside [0,1]");
    for (std::size_t i = 0; i < target.values.size(); ++i)
        target.values[i] = tau * online.values[i] + (1.0 - tau) * target.values[i];
}

static nlohmann::json spec_to_json(const MlpSpec& spec) {
    return nlohmann::json{{"layer_widths", spec.layer_widths},
                          {"hidden_activation", to_string(spec.hidden_activation)},
                          {"output_activation", to_string(spec.output_activation)}};
}

static MlpSpec spec_from_json(const nlohmann::json& j) {
    MlpSpec spec;
    spec.layer_widths = j.at("layer_widths").get<std::vector<int>>();
    spec.hidden_activation = activation_from_string(j.at("hidden_activation").get<std::string>());
    spec.output_activation = activation_from_string(j.at("output_activation").get<std::string>());
    spec.validate();
    return spec;
}

void save_network(const std::string& path, const MlpSpec& spec, const ParamSet& params) {
    if (params.values.size() != spec.param_count())
        throw ShapeMismatchError("save_network: parameter count does not match spec");
    for (double v : params.values)
        if (!std::isfinite(v)) throw NonFiniteError("save_network: non-finite parameter");
    nlohmann::json j;
    j["format_version"] = 1;
    j["spec"] = spec_to_json(spec);
    j["params"] = params.values;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

std::pair<MlpSpec, ParamSet> load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint " + path + ": " + e.what());
    }
    if (j.value("format_version", 0) != 1)
        throw ParseError("checkpoint " + path + ": unsupported format version");
    MlpSpec spec = spec_from_json(j.at("spec"));
    ParamSet params;
    params.values = j.at("params").get<std::vector<double>>();
    if (params.values.size() != spec.param_count())
        throw ParseError("checkpoint " + path + ": parameter count does not match spec");
    return {spec, params};
}

} // namespace slicesim::nn
