#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "stigmergy/calcium_kernel.hpp"

using namespace stigmergy;

namespace {

StimulusWaveform rest_only_waveform() {
    StimulusWaveform w;
    w.pulse_amplitude = -64.0; // still above rest, but deep in the sigmoid's flat tail
    w.pulse_width = 1.0;
    w.pulse_period = 10.0;
    w.pulse_count = 1;
    w.rest_level = -65.0;
    return w;
}

} // namespace

TEST_CASE("glu_concentration matches the sigmoid closed form") {
    GluParams p;
    p.t_max = 1.0;
    p.v_base = -20.0;
    p.k_n = 5.0;

    CHECK(glu_concentration(p.v_base, p) == doctest::Approx(0.5).epsilon(1e-12));
    // 1/(1+e^-1), evaluated independently.
    CHECK(glu_concentration(p.v_base + p.k_n, p) ==
          doctest::Approx(0.7310585786300049).epsilon(1e-12));
    CHECK(glu_concentration(-1e4, p) < 1e-10);
    CHECK(glu_concentration(1e4, p) == doctest::Approx(p.t_max).epsilon(1e-10));

    // bounded and monotone increasing across the representable sigmoid range
    double prev = glu_concentration(-90.0, p);
    for (double v = -80.0; v <= 60.0; v += 10.0) {
        const double t = glu_concentration(v, p);
        CHECK(t > 0.0);
        CHECK(t < p.t_max);
        CHECK(t > prev);
        prev = t;
    }

    GluParams scaled = p;
    scaled.t_max = 3.5;
    CHECK(glu_concentration(scaled.v_base, scaled) == doctest::Approx(1.75));
}

TEST_CASE("calcium_trace relaxes to equilibrium per the linear closed form") {
    const GluParams g; // glu(rest=-65) ~ 1e-4, influx ~ 1e-8 of scale
    CalciumParams c;
    c.v_ca = 50.0;
    c.tau_ca = 10.0;
    c.ca_eq = 0.05;

    const double amplitude = 2.0;
    const double dt = c.tau_ca / 100.0;
    const auto trace =
        calcium_trace(rest_only_waveform(), g, c, dt, 3.0 * c.tau_ca, c.ca_eq + amplitude);

    for (std::size_t n = 0; n < trace.size(); ++n) {
        const double t = static_cast<double>(n) * dt;
        const double expected = c.ca_eq + amplitude * std::exp(-t / c.tau_ca);
        CHECK(std::abs(trace[n] - expected) / amplitude < 1e-4);
    }
}

TEST_CASE("calcium_trace converges to the fixed point under constant drive") {
    StimulusWaveform w;
    w.pulse_amplitude = 40.0;
    w.pulse_width = 10.0;
    w.pulse_period = 10.0;
    w.pulse_count = 1000; // effectively constant drive at pulse_amplitude
    w.rest_level = -65.0;
    GluParams g;
    CalciumParams c;
    c.v_ca = 0.8;
    c.k_ca = 0.5;
    c.hill_exp = 2.0;
    c.tau_ca = 12.0;
    c.ca_eq = 0.05;

    // Zero of the right-hand side, with T evaluated from the same closed form.
    const double t_const = glu_concentration(w.pulse_amplitude, g);
    const double influx =
        c.v_ca * std::pow(t_const, c.hill_exp) /
        (std::pow(c.k_ca, c.hill_exp) + std::pow(t_const, c.hill_exp));
    const double fixed_point = c.ca_eq + c.tau_ca * influx;

    const auto trace = calcium_trace(w, g, c, 0.1, 30.0 * c.tau_ca);
    CHECK(trace.back() == doctest::Approx(fixed_point).epsilon(1e-6));
}

TEST_CASE("calcium_trace edge cases") {
    CalciumParams c;
    const GluParams g;
    SUBCASE("zero duration yields the single initial sample") {
        const auto trace = calcium_trace(rest_only_waveform(), g, c, 0.5, 0.0);
        REQUIRE(trace.size() == 1);
        CHECK(trace[0] == c.ca_eq);
    }
    SUBCASE("too-large step is rejected") {
        CHECK_THROWS_AS(calcium_trace(rest_only_waveform(), g, c, c.tau_ca, 10.0), config_error);
    }
    SUBCASE("waveform invariants are enforced") {
        StimulusWaveform w;
        w.pulse_width = 0.0;
        CHECK_THROWS_AS(calcium_trace(w, g, c, 0.1, 1.0), config_error);
    }
}

TEST_CASE("telegraph_solve: zero source stays identically zero") {
    TelegraphParams p;
    p.duration = 10.0;
    const std::vector<double> source(p.steps(), 0.0);
    const auto field = telegraph_solve(source, p);
    for (const auto& frame : field.frames) {
        for (double v : frame) CHECK(v == 0.0);
    }
}

TEST_CASE("telegraph_solve: discrete mass accounting for an impulse") {
    TelegraphParams p;
    p.tau_d = 1.0;
    p.d_coef = 1.0;
    p.dx = 0.05;
    p.dt = 0.04;
    p.domain_len = 15.0;
    p.duration = 10.0; // wave front reaches x ~ 10 < 15, no boundary outflow yet

    std::vector<double> source(p.steps(), 0.0);
    source[1] = 1.0 / p.dt; // unit injected mass
    const double injected = 1.0;

    const auto field = telegraph_solve(source, p);
    auto mass_at = [&](std::size_t n) {
        double m = 0.0;
        for (double v : field.frames[n]) m += v;
        return m * p.dx;
    };

    // M + tau_d dM/dt balances the injected mass while nothing leaves
    // (centered derivative estimate).
    for (std::size_t n : {field.frames.size() / 4, field.frames.size() / 2, field.frames.size() - 2}) {
        const double m = mass_at(n);
        const double dm_dt = (mass_at(n + 1) - mass_at(n - 1)) / (2.0 * p.dt);
        CHECK(std::abs(m + p.tau_d * dm_dt - injected) < 0.01 * injected);
    }

    // The far boundary really saw nothing.
    double near_boundary = 0.0;
    for (const auto& frame : field.frames) {
        near_boundary = std::max(near_boundary, std::abs(frame[frame.size() - 2]));
    }
    CHECK(near_boundary < 1e-9);
}

TEST_CASE("telegraph_solve: absorbing far boundary passes the outgoing front") {
    TelegraphParams p;
    p.tau_d = 1.0;
    p.d_coef = 1.0;
    p.dx = 0.05;
    p.dt = 0.04;
    p.domain_len = 2.0; // short domain so the front exits quickly
    p.duration = 60.0;

    std::vector<double> source(p.steps(), 0.0);
    source[1] = 1.0 / p.dt;
    const auto field = telegraph_solve(source, p);

    auto mass_at = [&](std::size_t n) {
        double m = 0.0;
        for (double v : field.frames[n]) m += v;
        return m * p.dx;
    };
    double peak = 0.0;
    for (std::size_t n = 0; n < field.frames.size(); ++n) peak = std::max(peak, mass_at(n));
    const double settled = mass_at(static_cast<std::size_t>(30.0 / p.dt));
    const double late = mass_at(field.frames.size() - 1);

    CHECK(peak > 0.8);          // the injection arrived before the front exited
    CHECK(late < 0.8 * peak);   // the traveling front's share was absorbed
    // the boundary passes the wave without echoing it back: after the front
    // leaves, the remaining diffusive residue is steady
    CHECK(std::abs(late - settled) < 1e-3);
}

TEST_CASE("telegraph_solve: finite propagation speed") {
    TelegraphParams p;
    p.tau_d = 1.0;
    p.d_coef = 1.0;
    p.dx = 0.05;
    p.dt = 0.05; // at the CFL limit the numerical cone equals the physical one
    p.domain_len = 15.0;
    p.duration = 8.0;
    p.source_width = p.dx / 2.0; // point source at the origin node

    std::vector<double> source(p.steps(), 0.0);
    source[1] = 1.0 / p.dt;
    const auto field = telegraph_solve(source, p);

    const double speed = p.wave_speed();
    for (std::size_t n = 0; n < field.frames.size(); ++n) {
        const double horizon = static_cast<double>(n) * p.dt * speed + 2.0 * p.dx;
        for (std::size_t i = 0; i < field.frames[n].size(); ++i) {
            if (static_cast<double>(i) * p.dx > horizon) {
                CHECK(std::abs(field.frames[n][i]) < 1e-9);
            }
        }
    }
}

TEST_CASE("telegraph_solve configuration errors") {
    TelegraphParams p;
    SUBCASE("CFL violation") {
        p.dt = 2.0 * p.dx / p.wave_speed();
        const std::vector<double> source(10, 0.0);
        CHECK_THROWS_AS(telegraph_solve(source, p), config_error);
    }
    SUBCASE("source length mismatch") {
        const std::vector<double> source(p.steps() + 3, 0.0);
        CHECK_THROWS_AS(telegraph_solve(source, p), config_error);
    }
    SUBCASE("too few grid cells") {
        p.domain_len = 10.0 * p.dx;
        const std::vector<double> source(p.steps(), 0.0);
        CHECK_THROWS_AS(telegraph_solve(source, p), config_error);
    }
}

TEST_CASE("regulation_current gates on the log argument") {
    RegulationParams r;
    r.k_i = 2.0;
    r.i_th = 1.5;
    CHECK(regulation_current(r.i_th + 1.0, r) == 0.0);
    CHECK(regulation_current(r.i_th + std::exp(1.0), r) == doctest::Approx(r.k_i).epsilon(1e-12));
    CHECK(regulation_current(r.i_th, r) == 0.0);
    CHECK(regulation_current(r.i_th - 5.0, r) == 0.0);
    CHECK(regulation_current(0.0, r) == 0.0);
}

TEST_CASE("KernelTable interpolation and domain handling") {
    const KernelTable table({0.0, 1.0, 2.0, 3.0}, {1.0, 0.6, 0.4, 0.0}, 3.0);
    CHECK(table.eval(0.0) == 1.0);
    CHECK(table.eval(1.5) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(table.eval(3.0) == 0.0);
    CHECK(table.eval(10.0) == 0.0);
    CHECK(table.eval(2.5) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_THROWS_AS(table.eval(-0.1), std::domain_error);

    // evaluation at interior grid nodes reproduces the tabulated values
    const auto kernel = build_gaussian_kernel(2.5, 10.0, 101);
    for (std::size_t i = 0; i + 1 < kernel.distances().size(); ++i) {
        CHECK(kernel.eval(kernel.distances()[i]) ==
              doctest::Approx(kernel.values()[i]).epsilon(1e-12));
    }
}

TEST_CASE("KernelTable rejects invariant violations") {
    CHECK_THROWS(KernelTable({0.0, 1.0, 2.0}, {1.0, 0.2, 0.5}, 2.0)); // rises after the max
    CHECK_THROWS(KernelTable({0.0, 1.0, 2.0}, {0.7, 0.5, 0.0}, 2.0)); // first value not 1
    CHECK_THROWS(KernelTable({0.0, 1.0, 2.0}, {1.0, 0.5, 0.1}, 2.0)); // no compact support
    CHECK_THROWS(KernelTable({0.0, 1.0, 2.0}, {1.0, 1.2, 0.0}, 2.0)); // out of range
    CHECK_THROWS(KernelTable({0.0, 0.5, 2.0}, {1.0, 0.5, 0.0}, 2.0)); // non-uniform grid
}

TEST_CASE("build_gaussian_kernel") {
    const double sigma = 2.0;
    const auto kernel = build_gaussian_kernel(sigma, 10.0, 201);
    CHECK(kernel.eval(0.0) == 1.0);
    // half-height distance solves exp(-d^2/(2 sigma^2)) = 1/2
    const double half = sigma * std::sqrt(2.0 * std::log(2.0)); // = 2.3548200450309493 for sigma 2
    CHECK(kernel.eval(half) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(kernel.eval(10.0) == 0.0);
    CHECK(kernel.eval(25.0) == 0.0);
    // tabulated interior points carry the exact closed form
    const auto& d = kernel.distances();
    const auto& v = kernel.values();
    for (std::size_t j : {std::size_t{1}, std::size_t{50}, std::size_t{120}}) {
        CHECK(v[j] == doctest::Approx(std::exp(-d[j] * d[j] / (2.0 * sigma * sigma))).epsilon(1e-12));
    }
    CHECK_THROWS_AS(build_gaussian_kernel(0.0, 10.0), config_error);
}

TEST_CASE("build_diffusion_kernel: shipped defaults give a clean attenuation table") {
    const StimulusWaveform w;
    const GluParams g;
    const CalciumParams c;
    const TelegraphParams t;
    const RegulationParams r;
    const auto kernel = build_diffusion_kernel(w, g, c, t, r, 10.0);

    CHECK(kernel.eval(0.0) == 1.0);
    CHECK(kernel.values().back() == 0.0);
    CHECK(kernel.eval(10.0) == 0.0);
    double prev = 2.0;
    for (double v : kernel.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(v <= prev + 1e-9);
        prev = v;
    }
    // attenuation actually spans the range rather than collapsing early
    CHECK(kernel.eval(5.0) > 0.2);
    CHECK(kernel.eval(5.0) < 0.7);
}

TEST_CASE("build_diffusion_kernel: degenerate pipeline is reported") {
    const StimulusWaveform w;
    const GluParams g;
    const CalciumParams c;
    const TelegraphParams t;
    RegulationParams r;
    r.i_th = 1e6; // no concentration ever crosses the threshold
    CHECK_THROWS_AS(build_diffusion_kernel(w, g, c, t, r, 10.0), kernel_error);
}

TEST_CASE("build_diffusion_kernel: d_th must fit the telegraph domain") {
    const StimulusWaveform w;
    const GluParams g;
    const CalciumParams c;
    const TelegraphParams t;
    const RegulationParams r;
    CHECK_THROWS_AS(build_diffusion_kernel(w, g, c, t, r, t.domain_len + 1.0), config_error);
}
