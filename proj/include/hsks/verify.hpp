#pragma once
// Verification suite shared by the acceptance binary and `hsks_cli verify`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bifurcation.hpp"
#include "io.hpp"
#include "simulator.hpp"
#include "specfun.hpp"
#include "stability.hpp"
#include "tw_operator.hpp"

namespace hsks::verify {

struct Outcome {
    bool pass = false;
    std::string detail;              // one line, key=value pairs
    std::vector<std::string> notes;  // extra diagnostics

    Outcome() = default;
    Outcome(bool ok, std::string line, std::vector<std::string> extra = {})
        : pass(ok), detail(std::move(line)), notes(std::move(extra)) {}
};

struct Check {
    std::string id;
    std::string title;
    std::function<Outcome()> body;
    double time_limit = 0.0;  // seconds; 0 = none
};

struct CheckResult {
    std::string id, title;
    bool pass = false;
    std::string detail;
    std::vector<std::string> notes;
    double seconds = 0.0;
};

/// Runs one check; exceptions and time-limit overruns count as failures.
inline CheckResult run_check(const Check& c) {
    CheckResult r;
    r.id = c.id;
    r.title = c.title;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        auto o = c.body();
        r.pass = o.pass;
        r.detail = std::move(o.detail);
        r.notes = std::move(o.notes);
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0.0 && r.seconds > c.time_limit) {
        r.pass = false;
        r.notes.push_back("runtime " + std::to_string(r.seconds) + " s exceeds limit " + std::to_string(c.time_limit) + " s");
    }
    return r;
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline std::string kv(const std::string& k, double v) { return k + "=" + num(v); }

inline std::string join(const std::vector<std::string>& parts, const std::string& sep = "; ") {
    std::string out;
    for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? sep : "") + parts[k];
    return out;
}

namespace detail {

struct ParamSet {
    double m0, zeta, gamma, k_e;
};

// both figure sets first
inline const std::vector<ParamSet>& param_sets() {
    static const std::vector<ParamSet> sets = {
        {3.0, 4.0, 0.03, 4.0}, {1.1, 2.1, 0.75, 0.5}, {0.5, 1.5, 0.3, 1.0}, {2.0, 2.5, 0.1, 2.0}, {1.0, 5.0, 1.0, 0.2}};
    return sets;
}

inline ModelParams family(const FigurePreset& f, double R) { return params_for_density(f.m0, f.zeta, f.gamma, R, f.k_e); }

// plain bisection on phi1'(R) - 1 with Lambda(R) as density; independent of the F root finder
inline double phi1_root(const ModelParams& p, double lo, double hi) {
    auto g = [&](double R) { return Phi1Closed(R, lambda_of_r(R, p), p.zeta).boundary_slope() - 1.0; };
    double glo = g(lo);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi), gm = g(mid);
        if ((gm < 0.0) == (glo < 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline const TravelingWave& wave(const FigurePreset& f) {
    static std::map<std::string, TravelingWave> cache;
    auto it = cache.find(f.name);
    if (it == cache.end()) it = cache.emplace(f.name, tw_expand(f.critical_R(), f.params(), 512)).first;
    return it->second;
}

inline double rear_argmax(const TravelingWave& tw, double V, int n = 128) {
    const auto m = tw_boundary_myosin(tw, V, n);
    return 2.0 * kPi * static_cast<double>(std::max_element(m.begin(), m.end()) - m.begin()) / n;
}

inline double slowest_rate(const ModelParams& p, double R) {
    const auto sp = full_spectrum(radial_steady_state(R, p), 6, 64);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& e : sp.pairs)
        if (std::abs(e.extrapolated) >= sp.zero_tol) best = std::max(best, e.lambda.real());
    return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// Acceptance criteria

inline Outcome steady_exactness() {
    double worst = 0.0;
    for (const auto& s : detail::param_sets())
        for (double R : {0.3, 1.0, 2.5})
            worst = std::max(worst, radial_steady_state(R, params_for_density(s.m0, s.zeta, s.gamma, R, s.k_e)).residual());
    const auto pr = fig2_preset();
    const double R = pr.critical_R();
    const auto p = pr.params();
    const int n_r = 64, n_phi = 128, steps = 1000;
    Simulator sim(p, n_r, n_phi, R);
    const auto s0 = steady_state_init(p, R, n_r, n_phi);
    auto s = s0;
    for (int k = 0; k < steps; ++k) s = sim.step(s, 1e-4);
    double drift = std::abs(s.shape.Xc);
    for (std::size_t k = 0; k < s.myosin.values.size(); ++k) drift = std::max(drift, std::abs(s.myosin.values[k] - s0.myosin.values[k]));
    for (int k = 0; k <= s.shape.max_mode(); ++k) drift = std::max(drift, std::abs(s.shape.coeff(k)));
    return {worst < 1e-12 && drift < 1e-9, join({kv("max_residual", worst), kv("drift_1000_steps", drift), "grid=64x128", "dt=1e-4"})};
}

inline Outcome dual_criterion() {
    double worst = 0.0;
    bool transversal = true;
    for (const auto& s : detail::param_sets()) {
        const double Rc = critical_radius(s.m0, s.zeta);
        const auto p = params_for_density(s.m0, s.zeta, s.gamma, Rc, s.k_e);
        const auto root = find_bifurcation_radius(p, 0.9 * Rc, 1.1 * Rc);
        worst = std::max(worst, std::abs(root.R0 - detail::phi1_root(p, 0.995 * Rc, 1.005 * Rc)));
        transversal = transversal && !root.degenerate;
    }
    const auto n = static_cast<double>(detail::param_sets().size());
    return {worst < 1e-8 && transversal, join({kv("sets", n), kv("max_root_gap", worst), std::string("transversal=") + (transversal ? "yes" : "no")})};
}

inline Outcome phi1_oracle() {
    const auto pr = fig1_preset();
    const double R = pr.critical_R();
    std::vector<double> gaps;
    const std::vector<int> grids = {256, 512, 1024, 2048};
    for (int n : grids) gaps.push_back(phi1_profile(R, pr.m0, pr.zeta, n).max_gap);
    bool orders_ok = true;
    std::vector<std::string> parts{kv("gap_2048", gaps.back())};
    for (std::size_t k = 1; k < gaps.size(); ++k) {
        const double order = std::log2(gaps[k - 1] / gaps[k]);
        orders_ok = orders_ok && std::abs(order - 2.0) <= 0.15;
        parts.push_back(kv("order_" + std::to_string(grids[k]), order));
    }
    return {gaps.back() < 1e-6 && orders_ok, join(parts)};
}

inline Outcome q_functional_check() {
    double worst = 0.0, bound_margin = std::numeric_limits<double>::infinity();
    for (double zeta : {0.5, 2.0, 6.0})
        for (double R : {0.5, 1.0, 2.0}) {
            const double q = q_functional(R, zeta);
            worst = std::max(worst, std::abs(q - q_functional_discrete(R, zeta, 1024)) / q);
        }
    for (double zeta : {0.1, 0.5, 1.0, 2.0, 4.0, 10.0})
        for (double R : {0.1, 0.5, 1.0, 2.0, 5.0})
            bound_margin = std::min(bound_margin, q_functional(R, zeta) / (2.0 * kPi * std::sqrt(zeta) * R) - 1.0);
    return {worst < 1e-3 && bound_margin >= 0.0, join({kv("max_rel_gap", worst), kv("min_bound_margin", bound_margin)})};
}

inline Outcome spectral_multiplicities() {
    const auto pr = fig1_preset();
    const double R0 = pr.critical_R();
    const int n_r = 128;
    const auto stable = full_spectrum(radial_steady_state(0.8 * R0, detail::family(pr, 0.8 * R0)), 6, n_r);
    const auto st = radial_steady_state(R0, detail::family(pr, R0));
    const auto crit = full_spectrum(st, 6, n_r);
    const auto unstable = full_spectrum(radial_steady_state(1.2 * R0, detail::family(pr, 1.2 * R0)), 6, n_r);

    const Eigenpair* k = nullptr;
    for (const auto& e : crit.pairs)
        if (e.mode == 1 && (!k || std::abs(e.lambda) < std::abs(k->lambda))) k = &e;
    double cosine = 0.0, kernel_zero = std::numeric_limits<double>::infinity();
    if (k) {
        kernel_zero = std::abs(k->extrapolated);
        const Phi1Closed f(R0, st.m0, st.params.zeta);
        const RadialGrid g(n_r, R0);
        std::complex<double> dot = 0.0;
        double na = 0.0, nb = 0.0;
        for (int i = 0; i < n_r; ++i) {
            const double r = g.node(i), w = r * g.h(), ref = st.m0 * (f(r) - r);
            dot += w * ref * k->vector(i);
            na += w * ref * ref;
            nb += w * std::norm(k->vector(i));
        }
        cosine = std::abs(dot) / std::sqrt(na * nb);
    }
    double unstable_n1 = -std::numeric_limits<double>::infinity();
    for (const auto& e : unstable.pairs)
        if (e.mode == 1) unstable_n1 = std::max(unstable_n1, e.lambda.real());
    const bool pass = stable.zero_multiplicity == 2 && crit.zero_multiplicity == 3 && cosine > 0.999 &&
                      kernel_zero < crit.zero_tol && unstable_n1 > 0.0;
    return {pass, join({kv("mult_stable", stable.zero_multiplicity), kv("mult_critical", crit.zero_multiplicity),
                        kv("kernel_cosine", cosine), kv("kernel_lambda", kernel_zero), kv("zero_tol", crit.zero_tol),
                        kv("unstable_max_re_n1", unstable_n1)})};
}

inline Outcome rayleigh_trials() {
    const auto rep = rayleigh_inequality_check(1.0, 256, 100);
    return {rep.trials == 100 && rep.violations == 0,
            join({kv("trials", rep.trials), kv("violations", rep.violations), kv("worst_margin", rep.worst_margin),
                  kv("slack_constant", rep.slack_constant)})};
}

inline Outcome expansion_order() {
    bool pass = true;
    std::vector<std::string> parts;
    for (const auto& pr : {fig1_preset(), fig2_preset()}) {
        const auto& tw = detail::wave(pr);
        const std::vector<double> Vs = {0.05, 0.1, 0.2};
        std::vector<double> res;
        for (double V : Vs) res.push_back(tw_residual(tw, V).total());
        for (std::size_t k = 1; k < Vs.size(); ++k) {
            const double slope = std::log(res[k] / res[k - 1]) / std::log(Vs[k] / Vs[k - 1]);
            pass = pass && slope >= 2.7;
            parts.push_back(kv(pr.name + "_slope_" + num(Vs[k - 1]) + "_" + num(Vs[k]), slope));
        }
    }
    return {pass, join(parts)};
}

inline Outcome figure_one() {
    const auto pr = fig1_preset();
    const auto& tw = detail::wave(pr);
    Outcome o;
    bool rear = true, crescent = true;
    double prev_norm = 0.0;
    std::vector<std::string> parts;
    for (double V : pr.velocities) {
        if (V == 0.0) continue;
        const double off = std::abs(detail::rear_argmax(tw, V) - kPi);
        rear = rear && off <= 0.2;
        const double nrm = boundary_norm(tw.shape(V));
        crescent = crescent && nrm > prev_norm;
        prev_norm = nrm;
        parts.push_back(kv("argmax_offset_V" + num(V), off));
    }
    const auto root = find_bifurcation_radius(pr.params(), 0.3, 3.0);
    const bool r0_ok = std::abs(root.R0 - pr.reported_R0) < 5e-2;
    parts.push_back(kv("R0_computed", root.R0));
    parts.push_back(kv("R0_reported", pr.reported_R0));
    parts.push_back(std::string("crescent_grows=") + (crescent ? "yes" : "no"));
    o.pass = rear && crescent && r0_ok;
    o.detail = join(parts);
    if (!r0_ok) {
        std::string literal;
        try {
            literal = "root " + num(find_bifurcation_radius(pr.params(), 0.05, 3.0, BesselArgument::Literal).R0);
        } catch (const std::exception& e) {
            literal = "no root on [0.05, 3]";
        }
        o.notes.push_back("R0 mismatch: reported " + num(pr.reported_R0) + " vs computed " + num(root.R0) + " (phi1'(R) = 1 root " +
                          num(detail::phi1_root(pr.params(), 0.99 * root.R0, 1.01 * root.R0)) +
                          "); unscaled Bessel-argument convention I1'(kappa): " + literal);
    }
    if (!rear)
        o.notes.push_back("rear maximum leaves pi +- 0.2 at large V: boundary indentation V^2 |rho22| / R0 = " +
                          num(0.09 * std::abs(tw.rho2_mode2) / tw.R0) + " at V = 0.3");
    return o;
}

inline Outcome figure_two() {
    const auto pr = fig2_preset();
    Outcome o;
    auto analyse = [&](const TravelingWave& tw, const std::string& label) {
        std::vector<double> Vs;
        const double vmax = 0.95 * tw.valid_V;
        for (int k = 0; k <= 60; ++k) Vs.push_back(vmax * k / 60.0);
        const auto c = mass_vs_velocity(tw, Vs);
        const double small = (c.masses[2] - c.masses[0]) / (Vs[2] - Vs[0]);
        int changes = 0;
        double first_change = 0.0;
        for (std::size_t k = 2; k < Vs.size(); ++k) {
            const double d0 = c.masses[k - 1] - c.masses[k - 2], d1 = c.masses[k] - c.masses[k - 1];
            if ((d0 < 0.0) != (d1 < 0.0)) {
                if (!changes) first_change = Vs[k - 1];
                ++changes;
            }
        }
        const double M2 = tw.density2 * kPi * tw.R0 * tw.R0 + 2.0 * kPi * tw.R0 * tw.m0 * tw.rho2_mode0;
        o.notes.push_back(label + ": " + join({kv("M2", M2), kv("dMdV_small", small), kv("sign_changes", changes),
                                               kv("first_change_V", first_change), kv("valid_V", tw.valid_V)}, ", "));
        return std::pair{small < 0.0, changes > 0};
    };
    const auto [dec, bend] = analyse(detail::wave(pr), "solvability closure");
    const auto alt = tw_expand(pr.critical_R(), pr.params(), 512, TwClosure::MassConsistency);
    analyse(alt, "mass-consistency closure (diagnostic)");
    o.pass = dec && bend;
    o.detail = join({std::string("decreasing_at_small_V=") + (dec ? "yes" : "no"), std::string("bend_in_valid_range=") + (bend ? "yes" : "no")});
    return o;
}

inline Outcome tw_kernel_structure() {
    const auto pr = fig2_preset();
    const auto st = tw_kernel_study(detail::wave(pr), 0.1, 48, 32);
    Outcome o;
    o.pass = st.eigenvalues_within_budget() && st.shift_ok() && st.generalized_ok() && st.adjoint_ok();
    o.detail = join({kv("lambda1", std::abs(st.fine.eigenvalues[0])), kv("lambda2", std::abs(st.fine.eigenvalues[1])),
                     kv("lambda3", std::abs(st.fine.eigenvalues[2])), kv("lambda4", std::abs(st.fine.eigenvalues[3])),
                     kv("eig_budget", st.eigenvalue_budget), kv("shift_residual", st.fine.shift_residual),
                     kv("shift_tol", TwKernelStudy::shift_tolerance), kv("generalized", st.fine.generalized_residual),
                     kv("generalized_budget", st.generalized_budget), kv("adjoint", st.fine.mass.adjoint_residual),
                     kv("adjoint_budget", st.adjoint_budget)});
    o.notes.push_back("grids n_r " + std::to_string(st.n_r_coarse) + "/" + std::to_string(st.n_r_fine) +
                      ", n_phi 32; shift residual coarse " + num(st.coarse.shift_residual) + ", fine " + num(st.fine.shift_residual) +
                      " (first order in h)");
    return o;
}

inline Outcome nonlinear_linear() {
    const auto pr = fig2_preset();
    const double R = 0.8 * pr.critical_R();
    SimConfig cfg;
    cfg.params = detail::family(pr, R);
    cfg.radius = R;
    cfg.n_r = 32;
    cfg.n_phi = 32;
    cfg.dt = 5e-3;
    cfg.t_end = 12.0;
    cfg.sample_every = 20;
    cfg.init = InitKind::Perturbed;
    cfg.amplitude = 1e-5;
    cfg.tol_converge = 0.0;
    const auto tr = run(cfg);
    if (tr.event != SimEvent::Finished) return {false, std::string("run ended: ") + to_string(tr.event) + " " + tr.message};
    const double measured = decay_rate(tr), predicted = -detail::slowest_rate(cfg.params, R);
    double drift = 0.0;
    const double M0 = tr.series.front().mass;
    for (const auto& s : tr.series)
        if (s.time > 0.0) drift = std::max(drift, std::abs(s.mass - M0) / s.time);
    const double rel = std::abs(measured - predicted) / predicted;
    return {rel < 0.1 && drift < 1e-8, join({kv("decay_measured", measured), kv("decay_predicted", predicted), kv("rel_gap", rel),
                                             kv("mass_drift_per_time", drift), kv("delta", cfg.amplitude)})};
}

inline Outcome seeded_wave_probe() {
    const auto pr = fig2_preset();
    const auto& tw = detail::wave(pr);
    SimConfig cfg;
    cfg.params = pr.params();
    cfg.n_r = 32;
    cfg.n_phi = 64;
    cfg.dt = 2e-3;
    cfg.t_end = 4.0;
    cfg.sample_every = 100;
    cfg.tol_converge = 0.0;
    cfg.velocity = 0.1;
    const auto seed = tw_seed_init(tw, cfg.velocity, cfg.n_r, cfg.n_phi);
    Simulator sim(cfg.params, cfg.n_r, cfg.n_phi, seed.shape.R);
    const auto tr = run(sim, seed, cfg);
    // distance to the co-moving seed; state_distance ignores the centre position
    double first = 0.0, peak = 0.0;
    for (std::size_t k = 1; k < tr.states.size(); ++k) {
        const double d = state_distance(sim, tr.states[k], seed);
        if (first == 0.0) first = d;
        peak = std::max(peak, d);
    }
    const double growth = first > 0.0 ? peak / first : 0.0;
    const auto& last = tr.series.back();
    const double M2 = tw.density2 * kPi * tw.R0 * tw.R0 + 2.0 * kPi * tw.R0 * tw.m0 * tw.rho2_mode0;
    Outcome o;
    o.pass = tr.series.size() > 2 && std::isfinite(growth);
    o.detail = join({std::string("event=") + to_string(tr.event), kv("V", cfg.velocity), kv("speed", last.center / last.time),
                     kv("deviation_growth", growth), std::string("departs_x3=") + (growth >= 3.0 ? "yes" : "no"),
                     std::string("branch=") + (M2 < 0.0 ? "dM/dV<0" : "dM/dV>0")});
    o.notes.push_back("evidence only: the expanded fig2 branch has M2 = " + num(M2) +
                      (M2 < 0.0 ? "" : ", so the seed is not on a dM/dV < 0 branch"));
    return o;
}

inline std::vector<Check> acceptance_checks() {
    return {
        {"C1", "steady state exact and held fixed", steady_exactness, 60.0},
        {"C2", "dual-criterion bifurcation roots agree", dual_criterion, 0.0},
        {"C3", "phi1 closed form vs BVP, order 2", phi1_oracle, 0.0},
        {"C4", "Q functional closed form and lower bound", q_functional_check, 0.0},
        {"C5", "zero multiplicities 2/3 and n=1 instability", spectral_multiplicities, 300.0},
        {"C6", "Rayleigh inequality, 100 random trials", rayleigh_trials, 0.0},
        {"C7", "TW expansion residual slope >= 2.7", expansion_order, 0.0},
        {"C8", "fig1: rear myosin, crescent, reported R0", figure_one, 0.0},
        {"C9", "fig2: dM/dV < 0 then bend", figure_two, 0.0},
        {"C10", "TW operator kernel structure at V=0.1", tw_kernel_structure, 0.0},
        {"C11", "decay rate vs spectrum, mass drift", nonlinear_linear, 600.0},
        {"C12", "TW-seeded run departs from seed (evidence)", seeded_wave_probe, 0.0},
    };
}

// ---------------------------------------------------------------------------------------------
// Quick tier: cheap consistency checks

inline std::vector<Check> quick_checks() {
    std::vector<Check> out;
    out.push_back({"Q1", "preset parameter values", [] {
                       const auto a = fig1_preset(), b = fig2_preset();
                       const bool ok = a.m0 == 3.0 && a.zeta == 4.0 && a.gamma == 0.03 && a.velocities == std::vector<double>{0.0, 0.1, 0.2, 0.3} &&
                                       b.m0 == 1.1 && b.zeta == 2.1 && b.gamma == 0.75;
                       const double d1 = std::abs(steady_density(a.critical_R(), a.params()) - a.m0);
                       const double d2 = std::abs(steady_density(b.critical_R(), b.params()) - b.m0);
                       return Outcome{ok && d1 < 1e-12 && d2 < 1e-12, join({kv("fig1_density_gap", d1), kv("fig2_density_gap", d2)})};
                   }});
    out.push_back({"Q2", "steady residual below 1e-12", [] {
                       double worst = 0.0;
                       for (const auto& s : detail::param_sets())
                           for (double R : {0.3, 1.0, 2.5})
                               worst = std::max(worst, radial_steady_state(R, params_for_density(s.m0, s.zeta, s.gamma, R, s.k_e)).residual());
                       return Outcome{worst < 1e-12, kv("max_residual", worst)};
                   }});
    out.push_back({"Q3", "zeta <= m0 names the failed hypothesis", [] {
                       const auto rep = classify(1.0, params_for_density(3.0, 2.0, 0.1, 1.0, 1.0));
                       bool named = false;
                       for (const auto& h : rep.hypotheses) named = named || (h.name == "zeta > m0" && !h.pass);
                       return Outcome{named && rep.classification == Classification::Undetermined,
                                      std::string("classification=") + to_string(rep.classification)};
                   }});
    out.push_back({"Q4", "Bessel I_n against std::cyl_bessel_i", [] {
                       double worst = 0.0;
                       for (int n : {0, 1, 2, 5})
                           for (double x : {1e-3, 0.5, 2.0, 14.9, 15.1, 40.0})
                               worst = std::max(worst, std::abs(bessel_i(n, x) / std::cyl_bessel_i(double(n), x) - 1.0));
                       return Outcome{worst < 1e-12, kv("max_rel_error", worst)};
                   }});
    out.push_back({"Q5", "third Neumann eigenvalue", [] {
                       const double j = 3.0542369282271403;
                       const double gap = std::abs(third_neumann_eigenvalue(1.0) - j * j);
                       return Outcome{gap < 1e-9, kv("gap", gap)};
                   }});
    out.push_back({"Q6", "Q functional lower bound", [] {
                       double margin = std::numeric_limits<double>::infinity();
                       for (double zeta : {0.1, 1.0, 10.0})
                           for (double R : {0.1, 1.0, 5.0}) margin = std::min(margin, q_functional(R, zeta) / (2.0 * kPi * std::sqrt(zeta) * R) - 1.0);
                       return Outcome{margin >= 0.0, kv("min_margin", margin)};
                   }});
    out.push_back({"Q7", "malformed config rejected", [] {
                       int rejected = 0;
                       for (const char* bad : {"params.zeta\n", "bogus = 1\n", "[grid\n", "grid.n_r = 1\ngrid.n_r = 2\n"}) {
                           try {
                               FlatConfig::parse(bad);
                           } catch (const ConfigError&) {
                               ++rejected;
                           }
                       }
                       return Outcome{rejected == 4, kv("rejected", rejected)};
                   }});
    out.push_back({"Q8", "simulator conserves mass", [] {
                       const auto pr = fig2_preset();
                       const double R = pr.critical_R();
                       Simulator sim(pr.params(), 16, 32, R);
                       auto s = perturbed_state_init(pr.params(), R, 16, 32, 1e-2, -1);
                       const double M0 = sim.mass(s);
                       for (int k = 0; k < 50; ++k) s = sim.step(s, 5e-3);
                       const double gap = std::abs(sim.mass(s) - M0) / M0;
                       return Outcome{gap < 1e-12, kv("rel_mass_change", gap)};
                   }});
    out.push_back({"Q9", "deterministic CSV output", [] {
                       const auto pr = fig2_preset();
                       auto table = [&] {
                           const auto tw = tw_expand(pr.critical_R(), pr.params(), 128);
                           const auto f = tw_fields(tw, 0.1, 8, 16);
                           return shape_field_table(f.shape, f.kind, {{"myosin", &f.m}}).csv();
                       };
                       return Outcome{table() == table(), "two runs byte-identical"};
                   }});
    return out;
}

}  // namespace hsks::verify
