// hsks_cli: steady states, spectra, bifurcation sweeps, traveling waves, simulations and the verify suite.
//
// Exit codes: 0 success, 1 error (bad flags, malformed config, numerical failure), 2 a model hypothesis
// or a verify check does not hold.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hsks/bifurcation.hpp"
#include "hsks/io.hpp"
#include "hsks/simulator.hpp"
#include "hsks/stability.hpp"
#include "hsks/verify.hpp"

using namespace hsks;
using nlohmann::json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitHypothesis = 2;

struct HypothesisFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config, out = "out", format = "csv", preset;
    int jobs = 1;
    bool quick = false;
};

// HSKS_LOG=quiet silences progress messages; nothing else is read from the environment.
bool quiet() {
    const char* v = std::getenv("HSKS_LOG");
    return v && (std::string(v) == "quiet" || std::string(v) == "error");
}

void info(const std::string& msg) {
    if (!quiet()) std::cerr << msg << "\n";
}

struct Context {
    FlatConfig config;
    SimConfig sim;
    OutputDir out;
    std::string format;
};

/// Loads the config, applies flag overrides and opens the output directory. `extra` joins the hash input.
Context open_context(const Globals& g, const std::string& command, const std::vector<std::pair<std::string, std::string>>& overrides,
                     const std::string& extra) {
    FlatConfig cfg = g.config.empty() ? FlatConfig{} : FlatConfig::load(g.config);
    if (!g.preset.empty()) cfg.set("preset", g.preset);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    const auto sim = sim_config(cfg);
    const std::string hash_input = command + "\n" + cfg.canonical() + "format=" + g.format + "\nquick=" +
                                   (g.quick ? "1" : "0") + "\n" + extra;
    return {cfg, sim, OutputDir(g.out, command, config_hash(hash_input)), g.format};
}

/// Evaluates f over xs with up to `jobs` worker threads; results keep the input order.
template <class F>
std::vector<double> parallel_map(const std::vector<double>& xs, int jobs, F f) {
    std::vector<double> out(xs.size());
    const std::size_t n = xs.size(), workers = std::clamp<std::size_t>(static_cast<std::size_t>(jobs), 1, std::max<std::size_t>(n, 1));
    std::vector<std::future<void>> tasks;
    for (std::size_t w = 0; w < workers; ++w)
        tasks.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t k = w; k < n; k += workers) out[k] = f(xs[k]);
        }));
    for (auto& t : tasks) t.get();
    return out;
}

std::string velocity_tag(double V) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "V%.3f", V);
    return buf;
}

json hypotheses_json(const ClassifyReport& rep) {
    auto arr = json::array();
    for (const auto& h : rep.hypotheses) arr.push_back({{"name", h.name}, {"pass", h.pass}, {"value", h.value}, {"bound", h.bound}});
    return arr;
}

void require_hypotheses(const ClassifyReport& rep) {
    for (const auto& h : rep.hypotheses)
        if (!h.pass)
            throw HypothesisFailure("hypothesis failed: " + h.name + " (" + verify::num(h.value) + " vs " + verify::num(h.bound) + ")");
}

ClassifyReport classify_or_fail(double R, const ModelParams& p) {
    try {
        return classify(R, p);
    } catch (const std::domain_error& e) {
        throw HypothesisFailure(std::string("hypothesis failed: m0 > 0 (") + e.what() + ")");
    }
}

// ---------------------------------------------------------------------------------------------

int cmd_steady(const Globals& g, double radius) {
    std::vector<std::pair<std::string, std::string>> ov;
    if (radius > 0.0) ov.push_back({"init.radius", format_number(radius)});
    auto ctx = open_context(g, "steady", ov, "");
    const double R = ctx.sim.radius;
    const auto rep = classify_or_fail(R, ctx.sim.params);
    json j = {{"R", R},
              {"m0", rep.steady.m0},
              {"phi0", rep.steady.phi0},
              {"residual", rep.steady.residual()},
              {"classification", to_string(rep.classification)},
              {"phi1_slope", rep.phi1_slope},
              {"hypotheses", hypotheses_json(rep)},
              {"params", {{"zeta", ctx.sim.params.zeta}, {"gamma", ctx.sim.params.gamma}, {"p_h", ctx.sim.params.p_h}, {"k_e", ctx.sim.params.k_e}}}};
    if (ctx.sim.params.zeta > rep.steady.m0) j["critical_radius_at_m0"] = critical_radius(rep.steady.m0, ctx.sim.params.zeta);
    ctx.out.write_json("steady.json", j);
    ctx.out.finish();
    std::cout << "R = " << R << "  m0 = " << rep.steady.m0 << "  classification: " << to_string(rep.classification) << "\n";
    require_hypotheses(rep);
    return 0;
}

int cmd_spectrum(const Globals& g, double radius, int modes, int n_r) {
    std::vector<std::pair<std::string, std::string>> ov;
    if (radius > 0.0) ov.push_back({"init.radius", format_number(radius)});
    if (g.quick) n_r = std::min(n_r, 48);
    auto ctx = open_context(g, "spectrum", ov, "modes=" + std::to_string(modes) + "\nn_r=" + std::to_string(n_r) + "\n");
    const double R = ctx.sim.radius;
    const auto rep = classify_or_fail(R, ctx.sim.params);
    require_hypotheses(rep);
    const auto sp = full_spectrum(rep.steady, modes, n_r);
    Table t;
    t.header = {"mode", "re", "im", "re_extrapolated", "im_extrapolated", "residual"};
    for (const auto& e : sp.pairs)
        t.add({double(e.mode), e.lambda.real(), e.lambda.imag(), e.extrapolated.real(), e.extrapolated.imag(), e.residual});
    if (ctx.format == "csv") ctx.out.write("spectrum.csv", t.csv());
    if (ctx.format == "json") ctx.out.write_json("spectrum_table.json", t.json());
    if (ctx.format == "svg") {
        // the slow end of the spectrum; the fast tail grows like n_r^2
        double lo = 0.0, hi = 0.0, imax = 0.0;
        for (const auto& e : sp.pairs)
            if (e.lambda.real() > -20.0 * sp.rate_scale) {
                lo = std::min(lo, e.lambda.real()), hi = std::max(hi, e.lambda.real()), imax = std::max(imax, std::abs(e.lambda.imag()));
            }
        imax = std::max(imax, 0.05 * (hi - lo) + 1e-12);
        SvgPlot plot(lo - 0.05 * (hi - lo) - 1e-12, hi + 0.05 * (hi - lo) + 1e-12, -1.1 * imax, 1.1 * imax, 560, 400);
        plot.polyline({{0.0, -1.1 * imax}, {0.0, 1.1 * imax}}, "#999999", 1.0);
        for (const auto& e : sp.pairs)
            if (e.lambda.real() > -20.0 * sp.rate_scale) plot.circle(e.lambda.real(), e.lambda.imag(), 3.0, colormap(e.mode / std::max(1.0, double(modes))).hex());
        plot.legend(0, modes, "mode");
        ctx.out.write("spectrum.svg", plot.str());
    }
    double max_re = -1e300;
    for (const auto& e : sp.pairs)
        if (std::abs(e.extrapolated) >= sp.zero_tol) max_re = std::max(max_re, e.lambda.real());
    ctx.out.write_json("spectrum.json", {{"R", R},
                                         {"m0", rep.steady.m0},
                                         {"classification", to_string(rep.classification)},
                                         {"zero_multiplicity", sp.zero_multiplicity},
                                         {"zero_tol", sp.zero_tol},
                                         {"max_real_nonzero", max_re},
                                         {"modes", modes},
                                         {"n_r", n_r}});
    ctx.out.finish();
    std::cout << "zero multiplicity " << sp.zero_multiplicity << ", max nonzero Re " << max_re << "\n";
    return 0;
}

int cmd_bifurcate(const Globals& g, double lo_factor, double hi_factor, int points) {
    if (g.quick) points = std::min(points, 51);
    if (points < 3 || !(lo_factor > 0.0 && hi_factor > lo_factor)) throw std::invalid_argument("bifurcate: need points >= 3 and 0 < lo < hi");
    auto ctx = open_context(g, "bifurcate", {},
                            "lo=" + format_number(lo_factor) + "\nhi=" + format_number(hi_factor) + "\npoints=" + std::to_string(points) + "\n");
    const auto p = ctx.sim.params;
    const double Rc = ctx.sim.radius, lo = lo_factor * Rc, hi = hi_factor * Rc;
    std::vector<double> Rs(points);
    for (int k = 0; k < points; ++k) Rs[k] = lo + (hi - lo) * k / (points - 1);
    const double nan = std::nan("");
    auto guarded = [&](auto f) {
        return [f, &p, nan](double R) { return p.zeta > lambda_of_r(R, p) && lambda_of_r(R, p) > 0.0 ? f(R) : nan; };
    };
    const auto F = parallel_map(Rs, g.jobs, guarded([&](double R) { return f_of_r(R, p); }));
    const auto F_lit = parallel_map(Rs, g.jobs, guarded([&](double R) { return f_of_r(R, p, BesselArgument::Literal); }));
    const auto crit = parallel_map(Rs, g.jobs, guarded([&](double R) { return Phi1Closed(R, lambda_of_r(R, p), p.zeta).boundary_slope() - 1.0; }));
    Table t;
    t.header = {"R", "Lambda", "F", "F_literal", "phi1_slope_minus_1"};
    for (int k = 0; k < points; ++k) t.add({Rs[k], lambda_of_r(Rs[k], p), F[k], F_lit[k], crit[k]});
    if (ctx.format == "csv") ctx.out.write("bifurcate.csv", t.csv());
    if (ctx.format == "json") ctx.out.write_json("bifurcate_table.json", t.json());
    if (ctx.format == "svg") ctx.out.write("bifurcate.svg", line_chart_svg(t, "R", {"F", "phi1_slope_minus_1"}));
    json j = {{"bracket", {lo, hi}}};
    try {
        const auto root = find_bifurcation_radius(p, lo, hi);
        j["R0"] = root.R0;
        j["slope"] = root.slope;
        j["degenerate"] = root.degenerate;
        j["Lambda_at_R0"] = lambda_of_r(root.R0, p);
        std::cout << "R0 = " << root.R0 << "  F'(R0) = " << root.slope << "\n";
    } catch (const std::domain_error& e) {
        j["R0"] = nullptr;
        j["note"] = e.what();
        std::cout << "no bifurcation radius in [" << lo << ", " << hi << "]\n";
    }
    try {
        j["R0_literal_argument"] = find_bifurcation_radius(p, lo, hi, BesselArgument::Literal).R0;
    } catch (const std::domain_error&) {
        j["R0_literal_argument"] = nullptr;
    }
    if (auto pr = preset_by_name(ctx.config.text("preset")); pr && pr->reported_R0 > 0.0) j["R0_reported"] = pr->reported_R0;
    ctx.out.write_json("bifurcate.json", j);
    ctx.out.finish();
    return 0;
}

TravelingWave wave_for(const Context& ctx, bool quick) {
    const auto root = find_bifurcation_radius(ctx.sim.params, 0.2 * ctx.sim.radius, 5.0 * ctx.sim.radius);
    return tw_expand(root.R0, ctx.sim.params, quick ? 256 : 512);
}

int cmd_tw(const Globals& g, std::vector<double> velocities) {
    std::string vlist;
    for (double v : velocities) vlist += format_number(v) + ",";
    auto ctx = open_context(g, "tw", {}, "velocities=" + vlist + "\n");
    if (velocities.empty()) {
        const auto pr = preset_by_name(ctx.config.text("preset"));
        velocities = pr && pr->velocities.size() <= 4 ? pr->velocities : std::vector<double>{0.0, 0.1, 0.2, 0.3};
    }
    const auto tw = wave_for(ctx, g.quick);
    json summary = {{"R0", tw.R0}, {"m0", tw.m0}, {"valid_V", tw.valid_V}, {"rho2_mode0", tw.rho2_mode0},
                    {"rho2_mode2", tw.rho2_mode2}, {"density2", tw.density2}};
    auto waves = json::array();
    for (double V : velocities) {
        if (std::abs(V) > tw.valid_V)
            throw std::invalid_argument("tw: |V| = " + format_number(V) + " beyond the expansion's valid range " + verify::num(tw.valid_V));
        const auto f = tw_fields(tw, V, 32, 64);
        const auto boundary = tw_boundary_myosin(tw, V, 128);
        const auto peak = std::max_element(boundary.begin(), boundary.end()) - boundary.begin();
        const double argmax = 2.0 * kPi * static_cast<double>(peak) / 128.0;
        const auto tag = "tw_" + velocity_tag(V);
        if (ctx.format == "csv")
            ctx.out.write(tag + ".csv", shape_field_table(f.shape, f.kind, {{"myosin", &f.m}, {"potential", &f.phi}}, boundary).csv());
        if (ctx.format == "json")
            ctx.out.write_json(tag + ".json", {{"velocity", V},
                                               {"shape", {{"R", f.shape.R}, {"rho_cos", f.shape.rho_cos}}},
                                               {"points", shape_field_table(f.shape, f.kind, {{"myosin", &f.m}, {"potential", &f.phi}}, boundary).json()}});
        if (ctx.format == "svg") ctx.out.write(tag + ".svg", shape_field_svg(f.shape, f.kind, f.m, "myosin"));
        waves.push_back({{"velocity", V},
                         {"boundary_argmax_angle", argmax},
                         {"rear_offset", std::abs(argmax - kPi)},
                         {"deformation_norm", boundary_norm(f.shape)},
                         {"mass", tw_mass(tw, V)}});
        std::cout << "V = " << V << "  boundary myosin max at phi = " << argmax << "\n";
    }
    summary["waves"] = waves;
    ctx.out.write_json("tw.json", summary);
    ctx.out.finish();
    return 0;
}

int cmd_massvel(const Globals& g, double v_max, int points) {
    if (g.quick) points = std::min(points, 11);
    auto ctx = open_context(g, "massvel", {}, "v_max=" + format_number(v_max) + "\npoints=" + std::to_string(points) + "\n");
    const auto tw = wave_for(ctx, g.quick);
    const auto alt = tw_expand(tw.R0, ctx.sim.params, g.quick ? 256 : 512, TwClosure::MassConsistency);
    std::vector<double> Vs;
    const auto pr = preset_by_name(ctx.config.text("preset"));
    if (v_max <= 0.0 && pr && pr->velocities.size() > 4 && !g.quick) {
        Vs = pr->velocities;
    } else {
        const double top = v_max > 0.0 ? v_max : std::min(0.4, 0.95 * tw.valid_V);
        for (int k = 0; k < points; ++k) Vs.push_back(top * k / (points - 1));
    }
    for (double V : Vs)
        if (std::abs(V) > std::min(tw.valid_V, alt.valid_V)) throw std::invalid_argument("massvel: V beyond the expansion's valid range");
    const auto M = parallel_map(Vs, g.jobs, [&](double V) { return tw_mass(tw, V); });
    const auto M_exact = parallel_map(Vs, g.jobs, [&](double V) { return tw.average_density(V) * area(tw.shape(V)); });
    const auto M_alt = parallel_map(Vs, g.jobs, [&](double V) { return tw_mass(alt, V); });
    Table t;
    t.header = {"V", "M", "M_exact", "dMdV", "M_mass_closure"};
    const std::size_t n = Vs.size();
    int changes = 0;
    double prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t a = k == 0 ? 0 : k - 1, b = k + 1 == n ? k : k + 1;
        const double d = (M[b] - M[a]) / (Vs[b] - Vs[a]);
        if (k > 0 && (d < 0.0) != (prev < 0.0)) ++changes;
        prev = d;
        t.add({Vs[k], M[k], M_exact[k], d, M_alt[k]});
    }
    if (ctx.format == "csv") ctx.out.write("massvel.csv", t.csv());
    if (ctx.format == "json") ctx.out.write_json("massvel_table.json", t.json());
    if (ctx.format == "svg") ctx.out.write("massvel.svg", line_chart_svg(t, "V", {"M", "M_exact", "M_mass_closure"}));
    const double M2 = tw.density2 * kPi * tw.R0 * tw.R0 + 2.0 * kPi * tw.R0 * tw.m0 * tw.rho2_mode0;
    ctx.out.write_json("massvel.json", {{"R0", tw.R0},
                                        {"critical_mass", tw.m0 * kPi * tw.R0 * tw.R0},
                                        {"M2", M2},
                                        {"initial_slope_sign", t.rows.size() > 1 && t.rows[1][3] < 0.0 ? "decreasing" : "increasing"},
                                        {"slope_sign_changes", changes},
                                        {"valid_V", tw.valid_V}});
    ctx.out.finish();
    std::cout << "M2 = " << M2 << ", slope sign changes: " << changes << "\n";
    return 0;
}

int cmd_simulate(const Globals& g) {
    auto ctx = open_context(g, "simulate", {}, "");
    auto cfg = ctx.sim;
    if (g.quick) cfg.t_end = std::min(cfg.t_end, 50 * cfg.dt);
    const auto s0 = initial_state(cfg);
    Simulator sim(cfg.params, cfg.n_r, cfg.n_phi, s0.shape.R);
    info("simulate: " + std::to_string(std::lround(cfg.t_end / cfg.dt)) + " steps on " + std::to_string(cfg.n_r) + "x" + std::to_string(cfg.n_phi));
    const auto tr = run(sim, s0, cfg);
    Table series;
    series.header = {"time", "mass", "area", "center", "rho_norm", "m_dev"};
    for (const auto& o : tr.series) series.add({o.time, o.mass, o.area, o.center, o.rho_norm, o.m_dev});
    if (ctx.format == "csv") ctx.out.write("series.csv", series.csv());
    if (ctx.format == "json") ctx.out.write_json("series.json", series.json());
    if (ctx.format == "svg") ctx.out.write("series.svg", line_chart_svg(series, "time", {"rho_norm", "m_dev"}));
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        char name[48];
        std::snprintf(name, sizeof name, "snapshots/state_%04zu", k);
        const auto& s = tr.states[k];
        if (ctx.format == "csv")
            ctx.out.write(std::string(name) + ".csv", shape_field_table(s.shape, MapKind::BoundaryFitted, {{"myosin", &s.myosin}}).csv());
        if (ctx.format == "json")
            ctx.out.write_json(std::string(name) + ".json",
                               {{"time", s.time},
                                {"shape", {{"R", s.shape.R}, {"rho_cos", s.shape.rho_cos}, {"Xc", s.shape.Xc}}},
                                {"points", shape_field_table(s.shape, MapKind::BoundaryFitted, {{"myosin", &s.myosin}}).json()}});
        if (ctx.format == "svg") ctx.out.write(std::string(name) + ".svg", shape_field_svg(s.shape, MapKind::BoundaryFitted, s.myosin, "myosin"));
    }
    json j = {{"event", to_string(tr.event)}, {"message", tr.message}, {"steps", tr.steps}, {"snapshots", tr.states.size()}};
    const auto& last = tr.series.back();
    j["final"] = {{"time", last.time}, {"mass", last.mass}, {"center", last.center}, {"rho_norm", last.rho_norm}, {"m_dev", last.m_dev}};
    try {
        j["decay_rate"] = decay_rate(tr);
    } catch (const std::domain_error&) {
        j["decay_rate"] = nullptr;
    }
    ctx.out.write_json("simulate.json", j);
    ctx.out.finish();
    std::cout << "event: " << to_string(tr.event) << " after " << tr.steps << " steps" << (tr.message.empty() ? "" : " (" + tr.message + ")") << "\n";
    return tr.event == SimEvent::Error ? kExitError : 0;
}

int cmd_verify(const Globals& g) {
    auto ctx = open_context(g, "verify", {}, "");
    auto checks = verify::quick_checks();
    if (!g.quick)
        for (auto& c : verify::acceptance_checks()) checks.push_back(std::move(c));
    std::string table = "id    result  seconds  check\n";
    auto rows = json::array();
    int failures = 0;
    for (const auto& c : checks) {
        const auto r = verify::run_check(c);
        char line[256];
        std::snprintf(line, sizeof line, "%-5s %-7s %7.1f  %s\n", r.id.c_str(), r.pass ? "PASS" : "FAIL", r.seconds, r.title.c_str());
        table += line;
        table += "      " + r.detail + "\n";
        for (const auto& n : r.notes) table += "      " + n + "\n";
        std::cout << line << std::flush;
        rows.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail}, {"notes", r.notes}});
        failures += r.pass ? 0 : 1;
    }
    table += std::to_string(failures) + " of " + std::to_string(checks.size()) + " checks failed\n";
    ctx.out.write("summary.txt", table);
    ctx.out.write_json("summary.json", {{"checks", rows}, {"failures", failures}, {"tier", g.quick ? "quick" : "full"}});
    ctx.out.finish();
    std::cout << failures << " of " << checks.size() << " checks failed\n";
    return failures ? kExitHypothesis : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active-gel free-boundary toolkit: steady states, stability, traveling waves, simulation"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "flat key-path config file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "output directory")->capture_default_str();
    app.add_option("--format", g.format, "data format")->check(CLI::IsMember({"csv", "json", "svg"}))->capture_default_str();
    app.add_option("--jobs", g.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_flag("--quick", g.quick, "reduced grids / quick check tier");
    app.add_option("--preset", g.preset, "figure preset")->check(CLI::IsMember({"fig1", "fig2"}));

    double radius = 0.0;
    int modes = 6, n_r = 128, points = 201, mv_points = 41;
    double lo = 0.3, hi = 2.0, v_max = 0.0;
    std::vector<double> velocities;

    auto* steady = app.add_subcommand("steady", "radial steady state and its classification");
    steady->add_option("--radius", radius, "disk radius (default: init.radius or the preset's critical radius)");
    auto* spectrum = app.add_subcommand("spectrum", "linearised spectrum at a steady state");
    spectrum->add_option("--radius", radius, "disk radius");
    spectrum->add_option("--modes", modes, "highest angular mode")->check(CLI::NonNegativeNumber)->capture_default_str();
    spectrum->add_option("--n-r", n_r, "radial cells")->check(CLI::Range(8, 1024))->capture_default_str();
    auto* bifurcate = app.add_subcommand("bifurcate", "sweep of the bifurcation function over R");
    bifurcate->add_option("--lo", lo, "sweep start, multiple of the reference radius")->capture_default_str();
    bifurcate->add_option("--hi", hi, "sweep end, multiple of the reference radius")->capture_default_str();
    bifurcate->add_option("--points", points, "sample count")->capture_default_str();
    auto* tw = app.add_subcommand("tw", "traveling-wave shape and fields from the expansion");
    tw->add_option("--velocity", velocities, "velocities (default: the preset's)");
    auto* massvel = app.add_subcommand("massvel", "mass against velocity along the branch");
    massvel->add_option("--v-max", v_max, "largest velocity (default: preset grid or 0.4)");
    massvel->add_option("--points", mv_points, "sample count")->check(CLI::Range(3, 10000))->capture_default_str();
    auto* simulate = app.add_subcommand("simulate", "time integration from the config");
    auto* verify = app.add_subcommand("verify", "property and acceptance suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        if (steady->parsed()) return cmd_steady(g, radius);
        if (spectrum->parsed()) return cmd_spectrum(g, radius, modes, n_r);
        if (bifurcate->parsed()) return cmd_bifurcate(g, lo, hi, points);
        if (tw->parsed()) return cmd_tw(g, velocities);
        if (massvel->parsed()) return cmd_massvel(g, v_max, mv_points);
        if (simulate->parsed()) return cmd_simulate(g);
        if (verify->parsed()) return cmd_verify(g);
    } catch (const HypothesisFailure& e) {
        std::cerr << "hsks_cli " << name << ": " << e.what() << "\n";
        return kExitHypothesis;
    } catch (const ConfigError& e) {
        std::cerr << "hsks_cli " << name << ": config error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "hsks_cli " << name << ": " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
