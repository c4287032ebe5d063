#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "sfbd/errors.hpp"
#include "sfbd/rng.hpp"
#include "sfbd/tape.hpp"
#include "sfbd/vecmath.hpp"

namespace sfbd {

// Times below this are evaluated at kTimeFloor; exactly t = 0 short-circuits
// to the identity map.
inline constexpr double kTimeFloor = 1e-4;

// Preconditioning for the variance kernel Var(x_t) = Var(x_0) + t on
// unit-variance data. c_skip(0) = 1 and c_out(0) = 0 force D(., 0) = Id.
inline double c_skip(double t) { return 1.0 / (1.0 + t); }
inline double c_in(double t) { return 1.0 / std::sqrt(1.0 + t); }
inline double c_out(double t) { return std::sqrt(t / (1.0 + t)); }

struct MlpSpec {
    int input_dim = 1;
    std::vector<int> hidden_widths = {32, 32};
    Activation activation = Activation::SmoothRelu;
    int time_embedding_dim = 8;  // even: sin/cos pairs of log t

    void validate() const {
        if (input_dim < 1) throw ContractViolation("MlpSpec: input_dim must be >= 1");
        for (int w : hidden_widths) {
            if (w < 1) throw ContractViolation("MlpSpec: hidden widths must be >= 1");
        }
        if (time_embedding_dim < 0 || time_embedding_dim % 2 != 0) {
            throw ContractViolation("MlpSpec: time_embedding_dim must be even and >= 0");
        }
    }

    // Layer l maps layer_in(l) -> layer_out(l); weights row-major then bias.
    int num_layers() const { return static_cast<int>(hidden_widths.size()) + 1; }

    int layer_in(int l) const {
        if (l == 0) return input_dim + time_embedding_dim;
        return hidden_widths[l - 1];
    }

    int layer_out(int l) const {
        if (l == num_layers() - 1) return input_dim;
        return hidden_widths[l];
    }

    std::size_t weight_offset(int l) const {
        std::size_t off = 0;
        for (int k = 0; k < l; ++k) {
            off += static_cast<std::size_t>(layer_in(k)) * layer_out(k) + layer_out(k);
        }
        return off;
    }

    std::size_t bias_offset(int l) const {
        return weight_offset(l) + static_cast<std::size_t>(layer_in(l)) * layer_out(l);
    }

    std::size_t param_count() const {
        return weight_offset(num_layers() - 1) +
               static_cast<std::size_t>(layer_in(num_layers() - 1)) * layer_out(num_layers() - 1) +
               layer_out(num_layers() - 1);
    }
};

// Sinusoidal features of log t. Frequencies 0.25 * 2^k keep the embedding
// smooth over the [kTimeFloor, T] ranges used here.
inline void time_embedding(double t, int dim, double* out) {
    const double u = std::log(t);
    for (int k = 0; k < dim / 2; ++k) {
        const double w = 0.25 * std::pow(2.0, k);
        out[2 * k] = std::sin(w * u);
        out[2 * k + 1] = std::cos(w * u);
    }
}

inline std::vector<double> net_input(const MlpSpec& spec, const Point& x, double tc) {
    std::vector<double> in(static_cast<std::size_t>(spec.input_dim) + spec.time_embedding_dim);
    const double ci = c_in(tc);
    for (int i = 0; i < spec.input_dim; ++i) in[i] = ci * x[i];
    if (spec.time_embedding_dim > 0) {
        time_embedding(tc, spec.time_embedding_dim, in.data() + spec.input_dim);
    }
    return in;
}

// D(x, t) = c_skip(t) x + c_out(t) net(c_in(t) x, emb(t)); exactly t = 0
// returns x so the identity constraint holds for every parameter value.
inline Point mlp_forward(const ParamVector& params, const MlpSpec& spec, const Point& x, double t) {
    if (static_cast<int>(x.size()) != spec.input_dim) {
        throw ContractViolation("mlp_forward: point dimension does not match spec.input_dim");
    }
    if (t < 0.0) throw ContractViolation("mlp_forward: t must be >= 0");
    if (params.size() != spec.param_count()) {
        throw ContractViolation("mlp_forward: parameter count mismatch");
    }
    if (t == 0.0) return x;
    const double tc = std::max(t, kTimeFloor);

    std::vector<double> h = net_input(spec, x, tc);
    std::vector<double> next;
    for (int l = 0; l < spec.num_layers(); ++l) {
        next.assign(spec.layer_out(l), 0.0);
        affine_apply(params, spec.weight_offset(l), spec.bias_offset(l), spec.layer_in(l),
                     spec.layer_out(l), h.data(), next.data());
        if (l + 1 < spec.num_layers()) {
            for (double& v : next) v = apply_activation(spec.activation, v);
        }
        h.swap(next);
    }

    const double cs = c_skip(tc);
    const double co = c_out(tc);
    Point out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = cs * x[i] + co * h[i];
    return out;
}

// Tape twin of mlp_forward; identical arithmetic, differentiable in params.
inline Tape::Var mlp_forward_tape(Tape& tape, const ParamVector& params, const MlpSpec& spec,
                                  const Point& x, double t) {
    if (static_cast<int>(x.size()) != spec.input_dim) {
        throw ContractViolation("mlp_forward_tape: point dimension does not match spec.input_dim");
    }
    if (t < 0.0) throw ContractViolation("mlp_forward_tape: t must be >= 0");
    if (t == 0.0) return tape.constant(x);
    const double tc = std::max(t, kTimeFloor);

    Tape::Var h = tape.constant(net_input(spec, x, tc));
    for (int l = 0; l < spec.num_layers(); ++l) {
        h = tape.affine(h, spec.weight_offset(l), spec.bias_offset(l), spec.layer_out(l));
        if (l + 1 < spec.num_layers()) h = tape.activation(h, spec.activation);
    }
    return tape.scale_add_const(h, c_out(tc), scaled(x, c_skip(tc)));
}

// Denoiser with its parameters and the EMA shadow used for all denoising and
// sampling. The gradient buffer lives with the optimizer state.
struct DenoiserModel {
    MlpSpec spec;
    ParamVector params;
    ParamVector ema;

    static DenoiserModel init(const MlpSpec& spec, Rng& rng, double out_scale = 0.05) {
        spec.validate();
        DenoiserModel m;
        m.spec = spec;
        m.params.resize(spec.param_count());
        for (int l = 0; l < spec.num_layers(); ++l) {
            const double std_w = 1.0 / std::sqrt(static_cast<double>(spec.layer_in(l)));
            const double s = (l == spec.num_layers() - 1) ? out_scale * std_w : std_w;
            const std::size_t w0 = spec.weight_offset(l);
            const std::size_t nw = static_cast<std::size_t>(spec.layer_in(l)) * spec.layer_out(l);
            for (std::size_t i = 0; i < nw; ++i) m.params[w0 + i] = s * normal_draw(rng);
            // biases start at zero
        }
        m.ema = m.params;
        return m;
    }

    Point forward(const Point& x, double t) const { return mlp_forward(params, spec, x, t); }
    Point forward_ema(const Point& x, double t) const { return mlp_forward(ema, spec, x, t); }
};

inline constexpr const char* kCheckpointMagic = "sfbd-checkpoint-v1";

inline nlohmann::json mlp_spec_to_json(const MlpSpec& spec) {
    return nlohmann::json{
        {"input_dim", spec.input_dim},
        {"hidden_widths", spec.hidden_widths},
        {"activation", spec.activation == Activation::Tanh ? "tanh" : "smooth-relu"},
        {"time_embedding_dim", spec.time_embedding_dim},
    };
}

inline MlpSpec mlp_spec_from_json(const nlohmann::json& j) {
    MlpSpec spec;
    spec.input_dim = j.at("input_dim").get<int>();
    spec.hidden_widths = j.at("hidden_widths").get<std::vector<int>>();
    const std::string act = j.at("activation").get<std::string>();
    if (act == "tanh") {
        spec.activation = Activation::Tanh;
    } else if (act == "smooth-relu") {
        spec.activation = Activation::SmoothRelu;
    } else {
        throw ConfigError("checkpoint: unknown activation '" + act + "'");
    }
    spec.time_embedding_dim = j.at("time_embedding_dim").get<int>();
    spec.validate();
    return spec;
}

inline void save_checkpoint(const DenoiserModel& model, const std::string& path) {
    nlohmann::json j{
        {"magic", kCheckpointMagic},
        {"spec", mlp_spec_to_json(model.spec)},
        {"params", model.params},
        {"ema", model.ema},
    };
    std::ofstream out(path);
    if (!out) throw ConfigError("save_checkpoint: cannot open " + path);
    out << j.dump();
}

inline DenoiserModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("load_checkpoint: cannot open " + path);
    nlohmann::json j;
    in >> j;
    if (!j.contains("magic") || j.at("magic").get<std::string>() != kCheckpointMagic) {
        throw ConfigError("load_checkpoint: bad magic in " + path);
    }
    DenoiserModel m;
    m.spec = mlp_spec_from_json(j.at("spec"));
    m.params = j.at("params").get<ParamVector>();
    m.ema = j.at("ema").get<ParamVector>();
    if (m.params.size() != m.spec.param_count() || m.ema.size() != m.spec.param_count()) {
        throw ConfigError("load_checkpoint: parameter count does not match spec");
    }
    return m;
}

}  // namespace sfbd
