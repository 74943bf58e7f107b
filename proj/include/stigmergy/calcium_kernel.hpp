#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stigmergy/errors.hpp"

namespace stigmergy {

enum class KernelChoice { diffusion, gaussian };

// Square pulse train standing in for the dendritic voltage that drives
// transmitter release. Times in ms, levels in mV.
struct StimulusWaveform {
    double pulse_amplitude = 20.0;
    double pulse_width = 2.0;
    double pulse_period = 10.0;
    int pulse_count = 5;
    double rest_level = -65.0;

    void validate() const {
        if (pulse_width <= 0.0) throw config_error("stimulus: pulse_width must be > 0");
        if (pulse_period < pulse_width) throw config_error("stimulus: pulse_period must be >= pulse_width");
        if (pulse_count < 1) throw config_error("stimulus: pulse_count must be >= 1");
        if (pulse_amplitude <= rest_level) throw config_error("stimulus: amplitude must exceed rest_level");
    }

    double at(double t) const {
        if (t < 0.0) return rest_level;
        const double k = std::floor(t / pulse_period);
        if (k >= static_cast<double>(pulse_count)) return rest_level;
        return (t - k * pulse_period) < pulse_width ? pulse_amplitude : rest_level;
    }
};

// Sigmoid transmitter release: T(v) = t_max / (1 + exp(-(v - v_base)/k_n)).
struct GluParams {
    double t_max = 1.0;
    double v_base = -20.0;
    double k_n = 5.0;

    void validate() const {
        if (t_max <= 0.0) throw config_error("glu: t_max must be > 0");
        if (k_n <= 0.0) throw config_error("glu: k_n must be > 0");
    }
};

// Microdomain calcium response: Hill-type influx, first-order decay
// toward the equilibrium concentration.
struct CalciumParams {
    double v_ca = 50.0;      // influx scale, a.u./ms
    double k_ca = 0.5;       // half-activation concentration, a.u.
    double hill_exp = 2.0;   // Hill exponent
    double tau_ca = 10.0;    // decay constant, ms
    double ca_eq = 0.05;     // equilibrium concentration, a.u.

    void validate() const {
        if (v_ca <= 0.0) throw config_error("calcium: v_ca must be > 0");
        if (k_ca <= 0.0) throw config_error("calcium: k_ca must be > 0");
        if (hill_exp < 1.0) throw config_error("calcium: hill_exp must be >= 1");
        if (tau_ca <= 0.0) throw config_error("calcium: tau_ca must be > 0");
        if (ca_eq < 0.0) throw config_error("calcium: ca_eq must be >= 0");
    }
};

// Damped-wave propagation of calcium along a 1-D half-line of microdomains.
// The source occupies a region of physical width source_width at the
// origin; concentrating it on a single node would make the near-field
// response diverge under grid refinement.
struct TelegraphParams {
    double tau_d = 1.0;      // relaxation factor, ms
    double d_coef = 1.0;     // diffusion coefficient, length^2/ms
    double dx = 0.05;        // grid step, length
    double dt = 0.04;        // time step, ms
    double domain_len = 15.0;
    double duration = 100.0; // ms
    double source_width = 0.2;

    double wave_speed() const { return std::sqrt(d_coef / tau_d); }
    std::size_t cells() const { return static_cast<std::size_t>(std::llround(domain_len / dx)); }
    std::size_t steps() const { return static_cast<std::size_t>(std::llround(duration / dt)); }

    void validate() const {
        if (tau_d <= 0.0 || d_coef <= 0.0 || dx <= 0.0 || dt <= 0.0 || domain_len <= 0.0 ||
            duration <= 0.0 || source_width <= 0.0) {
            throw config_error("telegraph: all parameters must be > 0");
        }
        const double cfl_limit = dx / wave_speed();
        if (dt > cfl_limit * (1.0 + 1e-12)) {
            throw config_error("telegraph: CFL violated, need dt <= dx/sqrt(d_coef/tau_d) = " +
                               std::to_string(cfl_limit));
        }
        if (cells() < 16) throw config_error("telegraph: need domain_len/dx >= 16 grid cells");
        if (source_width > domain_len / 2.0) {
            throw config_error("telegraph: source_width must not exceed half the domain");
        }
    }
};

// Regulation current gating: I = k_i * ln(ca - i_th), active only once
// the log argument exceeds 1.
struct RegulationParams {
    double k_i = 1.0;
    double i_th = 3.0;

    void validate() const {
        if (k_i <= 0.0) throw config_error("regulation: k_i must be > 0");
        if (i_th < 0.0) throw config_error("regulation: i_th must be >= 0");
    }
};

// Phase 1a: transmitter concentration in the cleft for a dendritic voltage.
inline double glu_concentration(double v_d, const GluParams& p) {
    return p.t_max / (1.0 + std::exp(-(v_d - p.v_base) / p.k_n));
}

// Phase 1b: explicit time-stepped calcium concentration at the stimulated
// microdomain. Returns samples at t = 0, dt, ..., duration. The trace
// starts at ca_eq unless a different initial concentration is given.
inline std::vector<double> calcium_trace(const StimulusWaveform& waveform, const GluParams& g,
                                         const CalciumParams& c, double dt, double duration,
                                         std::optional<double> initial = std::nullopt) {
    waveform.validate();
    g.validate();
    c.validate();
    if (dt <= 0.0) throw config_error("calcium_trace: dt must be > 0");
    if (duration < 0.0) throw config_error("calcium_trace: duration must be >= 0");
    if (dt > c.tau_ca / 10.0) {
        throw config_error("calcium_trace: dt must be <= tau_ca/10 for a stable explicit step");
    }

    const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
    std::vector<double> trace;
    trace.reserve(steps + 1);
    const double k_pow = std::pow(c.k_ca, c.hill_exp);
    auto rate = [&](double t, double ca) {
        const double tn = std::pow(glu_concentration(waveform.at(t), g), c.hill_exp);
        return c.v_ca * tn / (k_pow + tn) - (ca - c.ca_eq) / c.tau_ca;
    };
    double ca = initial.value_or(c.ca_eq);
    trace.push_back(ca);
    // Heun step; forward Euler's bias at dt = tau_ca/100 is ~2e-3 of the
    // relaxation amplitude, two orders above the accuracy this trace is
    // held to.
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        const double k1 = rate(t, ca);
        const double k2 = rate(t + dt, ca + dt * k1);
        ca += 0.5 * dt * (k1 + k2);
        trace.push_back(ca);
    }
    return trace;
}

// Phase 3: slow-inward-current amplitude for a calcium concentration.
inline double regulation_current(double ca, const RegulationParams& p) {
    const double y = ca - p.i_th;
    return y > 1.0 ? p.k_i * std::log(y) : 0.0;
}

// Space-time solution of the telegraph equation; frames[n][i] is the
// concentration at time n*dt, position i*dx.
struct TelegraphField {
    std::vector<std::vector<double>> frames;
    double dx = 0.0;
    double dt = 0.0;

    std::size_t time_points() const { return frames.size(); }
    std::size_t space_points() const { return frames.empty() ? 0 : frames.front().size(); }
};

// Phase 2: explicit central-difference solver for
//   tau_d c_tt + c_t = d_coef c_xx + b,
// with a reflecting (zero-flux) boundary at x = 0 and a first-order
// absorbing boundary at the far end. `source` holds one rate value per time
// step; source[n] is the rate at which mass enters the domain, injected as
// a uniform density over [0, source_width) weighted by cell overlap.
inline TelegraphField telegraph_solve(std::span<const double> source, const TelegraphParams& p) {
    p.validate();
    const std::size_t steps = p.steps();
    const std::size_t nodes = p.cells() + 1;
    if (source.size() != steps) {
        throw config_error("telegraph_solve: source length must equal duration/dt = " +
                           std::to_string(steps));
    }

    TelegraphField field;
    field.dx = p.dx;
    field.dt = p.dt;
    field.frames.assign(steps + 1, std::vector<double>(nodes, 0.0));
    if (steps == 0) return field;

    // Per-node source density for unit total rate: the overlap of each
    // node's cell [x - dx/2, x + dx/2) with the source region, normalized so
    // that dx * sum(density) = 1. Node 0 sits on the mirror boundary and
    // carries only a half cell, so its density is doubled (image source);
    // this makes the half-line mass intake exactly source[n] per unit time.
    std::vector<double> density;
    {
        std::vector<double> overlap;
        double total = 0.0;
        for (std::size_t i = 0; i < nodes; ++i) {
            const double lo = std::max(0.0, (static_cast<double>(i) - 0.5) * p.dx);
            const double hi = std::min(p.source_width, (static_cast<double>(i) + 0.5) * p.dx);
            const double w = std::max(0.0, hi - lo);
            if (w == 0.0 && !overlap.empty()) break;
            overlap.push_back(w);
            total += w;
        }
        density.resize(overlap.size());
        for (std::size_t i = 0; i < overlap.size(); ++i) {
            density[i] = overlap[i] / (total * p.dx);
        }
        density[0] *= 2.0;
    }

    // First step from the Taylor expansion about t = 0 with zero initial
    // field and velocity: c(dt) = dt^2/(2 tau_d) * b(0).
    for (std::size_t i = 0; i < density.size(); ++i) {
        field.frames[1][i] = 0.5 * p.dt * p.dt / p.tau_d * source[0] * density[i];
    }

    const double a = p.tau_d / (p.dt * p.dt);
    const double b = 1.0 / (2.0 * p.dt);
    const double diff = p.d_coef / (p.dx * p.dx);
    const double v = p.wave_speed();
    const double mur = (v * p.dt - p.dx) / (v * p.dt + p.dx);

    for (std::size_t n = 1; n < steps; ++n) {
        const auto& prev = field.frames[n - 1];
        const auto& curr = field.frames[n];
        auto& next = field.frames[n + 1];
        double frame_sum = 0.0;
        for (std::size_t i = 0; i + 1 < nodes; ++i) {
            const double left = (i == 0) ? curr[1] : curr[i - 1]; // mirror ghost at x = 0
            const double lap = curr[i + 1] - 2.0 * curr[i] + left;
            const double src = i < density.size() ? source[n] * density[i] : 0.0;
            next[i] = (2.0 * a * curr[i] - (a - b) * prev[i] + diff * lap + src) / (a + b);
            frame_sum += next[i];
        }
        next[nodes - 1] = curr[nodes - 2] + mur * (next[nodes - 2] - curr[nodes - 1]);
        frame_sum += next[nodes - 1];
        if (!std::isfinite(frame_sum)) {
            throw numeric_error("telegraph_solve: non-finite values at step " + std::to_string(n));
        }
    }
    return field;
}

// Tabulated distance-attenuation kernel D(d) on a uniform grid over
// [0, d_th], normalized to D(0) = 1 with compact support at d_th.
class KernelTable {
public:
    KernelTable(std::vector<double> distances, std::vector<double> values, double d_th)
        : distances_(std::move(distances)), values_(std::move(values)), d_th_(d_th) {
        validate();
        step_ = distances_[1] - distances_[0];
    }

    double eval(double d) const {
        if (d < 0.0) throw std::domain_error("kernel_eval: distance must be >= 0");
        if (d >= d_th_) return 0.0;
        const double u = d / step_;
        auto cell = static_cast<std::size_t>(u);
        if (cell + 1 >= values_.size()) cell = values_.size() - 2;
        const double frac = u - static_cast<double>(cell);
        return values_[cell] + frac * (values_[cell + 1] - values_[cell]);
    }

    const std::vector<double>& distances() const { return distances_; }
    const std::vector<double>& values() const { return values_; }
    double d_th() const { return d_th_; }
    double step() const { return step_; }

private:
    void validate() const {
        if (distances_.size() < 2 || distances_.size() != values_.size()) {
            throw std::invalid_argument("KernelTable: need matching grids with >= 2 points");
        }
        if (d_th_ <= 0.0) throw std::invalid_argument("KernelTable: d_th must be > 0");
        const double h = d_th_ / static_cast<double>(distances_.size() - 1);
        for (std::size_t i = 0; i < distances_.size(); ++i) {
            if (std::abs(distances_[i] - static_cast<double>(i) * h) > 1e-9 * d_th_) {
                throw std::invalid_argument("KernelTable: distances must form a uniform grid over [0, d_th]");
            }
        }
        if (std::abs(values_.front() - 1.0) > 1e-9) {
            throw std::invalid_argument("KernelTable: normalized value at d = 0 must be 1");
        }
        if (values_.back() != 0.0) {
            throw std::invalid_argument("KernelTable: value at d_th must be exactly 0");
        }
        std::size_t arg_max = 0;
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (values_[i] < -1e-12 || values_[i] > 1.0 + 1e-12) {
                throw std::invalid_argument("KernelTable: values must lie in [0, 1]");
            }
            if (values_[i] > values_[arg_max]) arg_max = i;
        }
        for (std::size_t i = arg_max; i + 1 < values_.size(); ++i) {
            if (values_[i + 1] > values_[i] + 1e-9) {
                throw std::invalid_argument("KernelTable: values must be non-increasing past their maximum");
            }
        }
    }

    std::vector<double> distances_;
    std::vector<double> values_;
    double d_th_;
    double step_ = 0.0;
};

namespace detail {

inline double interp_profile(std::span<const double> profile, double grid_step, double x) {
    const double u = x / grid_step;
    auto cell = static_cast<std::size_t>(u);
    if (cell + 1 >= profile.size()) return profile.back();
    const double frac = u - static_cast<double>(cell);
    return profile[cell] + frac * (profile[cell + 1] - profile[cell]);
}

} // namespace detail

// Full three-phase pipeline: stimulated calcium trace at the origin, its
// time derivative as the telegraph source, peak concentration over time at
// each distance, regulation current, then normalization by the d = 0
// response. Values at d >= d_th are clamped to 0.
inline KernelTable build_diffusion_kernel(const StimulusWaveform& waveform, const GluParams& g,
                                          const CalciumParams& c, const TelegraphParams& t,
                                          const RegulationParams& r, double d_th) {
    r.validate();
    t.validate();
    if (d_th <= 0.0) throw config_error("kernel: d_th must be > 0");
    if (d_th > t.domain_len) throw config_error("kernel: d_th must not exceed telegraph domain_len");

    const auto trace = calcium_trace(waveform, g, c, t.dt, t.duration);
    std::vector<double> source(trace.size() - 1);
    for (std::size_t n = 0; n < source.size(); ++n) {
        source[n] = (trace[n + 1] - trace[n]) / t.dt;
    }

    const TelegraphField field = telegraph_solve(source, t);
    const std::size_t nodes = field.space_points();
    std::vector<double> peak(nodes, 0.0);
    for (const auto& frame : field.frames) {
        for (std::size_t i = 0; i < nodes; ++i) {
            peak[i] = std::max(peak[i], frame[i]);
        }
    }

    const auto k = static_cast<std::size_t>(std::max<long long>(2, std::llround(d_th / t.dx)));
    const double h = d_th / static_cast<double>(k);
    std::vector<double> distances(k + 1);
    std::vector<double> current(k + 1);
    for (std::size_t j = 0; j <= k; ++j) {
        distances[j] = static_cast<double>(j) * h;
        current[j] = regulation_current(detail::interp_profile(peak, t.dx, distances[j]), r);
    }
    const double origin = current[0];
    if (origin <= 0.0) {
        throw kernel_error("build_diffusion_kernel: zero response at d = 0, pipeline is degenerate");
    }
    std::vector<double> values(k + 1);
    for (std::size_t j = 0; j <= k; ++j) {
        values[j] = current[j] / origin;
        if (values[j] > 1.0 + 1e-9) {
            throw kernel_error("build_diffusion_kernel: response exceeds the d = 0 response");
        }
        values[j] = std::min(values[j], 1.0);
    }
    values[k] = 0.0; // compact support at d_th
    return KernelTable(std::move(distances), std::move(values), d_th);
}

// Gaussian baseline kernel D(d) = exp(-d^2 / (2 sigma^2)), zeroed at d_th.
inline KernelTable build_gaussian_kernel(double sigma, double d_th, std::size_t points = 201) {
    if (sigma <= 0.0) throw config_error("kernel: gaussian sigma must be > 0");
    if (d_th <= 0.0) throw config_error("kernel: d_th must be > 0");
    if (points < 2) throw config_error("kernel: gaussian table needs >= 2 points");

    const std::size_t k = points - 1;
    const double h = d_th / static_cast<double>(k);
    std::vector<double> distances(points);
    std::vector<double> values(points);
    for (std::size_t j = 0; j < points; ++j) {
        distances[j] = static_cast<double>(j) * h;
        values[j] = std::exp(-distances[j] * distances[j] / (2.0 * sigma * sigma));
    }
    values[k] = 0.0;
    return KernelTable(std::move(distances), std::move(values), d_th);
}

} // namespace stigmergy
