#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hsks/simulator.hpp"
#include "hsks/stability.hpp"
#include "hsks/tw_operator.hpp"

using namespace hsks;

namespace {

const FigurePreset kFig2 = fig2_preset();
const FigurePreset kFig1 = fig1_preset();

// Steady family at fixed density: p_h re-tuned so that the disk of radius R has the preset's m0.
ModelParams family(const FigurePreset& f, double R) { return params_for_density(f.m0, f.zeta, f.gamma, R, f.k_e); }

double max_abs_diff(const PolarField& a, const PolarField& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) d = std::max(d, std::abs(a.values[k] - b.values[k]));
    return d;
}

double slowest_rate(const ModelParams& p, double R, int mode = -1) {
    const auto sp = full_spectrum(radial_steady_state(R, p), 6, 64);
    double best = -1e300;
    for (const auto& e : sp.pairs)
        if (std::abs(e.extrapolated) >= sp.zero_tol && (mode < 0 || e.mode == mode)) best = std::max(best, e.lambda.real());
    return best;
}

SimConfig decay_config(double R, int mode) {
    SimConfig cfg;
    cfg.params = family(kFig2, R);
    cfg.radius = R;
    cfg.n_r = 32;
    cfg.n_phi = 32;
    cfg.dt = 5e-3;
    cfg.t_end = 12.0;
    cfg.sample_every = 20;
    cfg.init = InitKind::Perturbed;
    cfg.amplitude = 1e-5;
    cfg.mode = mode;
    cfg.tol_converge = 0.0;
    return cfg;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// init_state

TEST(InitState, UniformDiskMass) {
    const auto p = kFig2.params();
    const double R = kFig2.critical_R();
    const auto s = steady_state_init(p, R, 32, 32);
    Simulator sim(p, 32, 32, R);
    const double m0 = steady_density(R, p);
    EXPECT_NEAR(sim.mass(s), m0 * kPi * R * R, 1e-12 * m0 * R * R);
}

TEST(InitState, RejectsBadInput) {
    const auto p = kFig2.params();
    const RadialGrid g(16, 1.0);
    PolarField m(g, 16, 1.0);
    EXPECT_NO_THROW(init_state(BoundaryShape::circle(1.0), m, p));
    m.at(3, 2) = -0.1;
    EXPECT_THROW(init_state(BoundaryShape::circle(1.0), m, p), std::invalid_argument);
    PolarField ok(g, 16, 1.0);
    EXPECT_THROW(init_state(BoundaryShape::circle(1.5), ok, p), std::invalid_argument);
    EXPECT_THROW(init_state(BoundaryShape(1.0, {-1.2}), ok, p), std::domain_error);
    ok.at(2, 3) += 0.1;  // breaks x-symmetry
    EXPECT_THROW(init_state(BoundaryShape::circle(1.0), ok, p), std::invalid_argument);
}

TEST(InitState, RecentersModeOne) {
    const auto p = kFig2.params();
    const RadialGrid g(16, 1.0);
    const auto s = init_state(BoundaryShape(1.0, {0.0, 0.05, 0.02}), PolarField(g, 16, 1.0), p);
    EXPECT_NEAR(s.shape.coeff(1), 0.0, 1e-14);
    EXPECT_NEAR(s.shape.Xc, 0.05, 1e-14);
    EXPECT_EQ(s.shape.max_mode(), dealiased_modes(16));
}

TEST(InitState, RandomPerturbationInvariants) {
    const auto p = kFig2.params();
    const double R = kFig2.critical_R();
    const int n_r = 24, n_phi = 32;
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Simulator sim(p, n_r, n_phi, R);
    const double m0 = steady_density(R, p);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> rho(dealiased_modes(n_phi) + 1, 0.0);
        for (int k = 2; k < 6; ++k) rho[k] = 1e-3 * R * u(rng);
        PolarField m(RadialGrid(n_r, R), n_phi, m0);
        std::vector<double> c(6);
        for (auto& v : c) v = 1e-2 * m0 * u(rng);
        for (int i = 0; i < n_r; ++i)
            for (int j = 0; j < n_phi; ++j)
                for (int k = 0; k < 6; ++k) m.at(i, j) += c[k] * std::pow(m.grid.node(i) / R, k) * std::cos(k * m.phi(j));
        const auto s = init_state(BoundaryShape(R, rho), m, p);
        const auto o = observe(sim, s);
        EXPECT_GT(*std::min_element(s.myosin.values.begin(), s.myosin.values.end()), 0.0);
        EXPECT_LT(s.myosin.asymmetry(), 1e-14);
        EXPECT_TRUE(std::isfinite(o.mass));
        EXPECT_GT(o.area, 0.0);
        EXPECT_LT(std::abs(o.mass - m0 * o.area) / (m0 * o.area), 0.05);
    }
}

TEST(InitState, PerturbedHasSteadyMass) {
    const auto p = kFig2.params();
    const double R = kFig2.critical_R();
    const auto s = perturbed_state_init(p, R, 24, 32, 1e-2, -1);
    Simulator sim(p, 24, 32, R);
    EXPECT_NEAR(sim.mass(s), steady_density(R, p) * kPi * R * R, 1e-12 * sim.mass(s));
    EXPECT_LT(s.myosin.asymmetry(), 1e-14);
}

// ---------------------------------------------------------------------------------------------
// step

TEST(Step, SteadyStateIsFixedPoint) {
    const double R = 0.8 * kFig2.critical_R();
    const auto p = family(kFig2, R);
    Simulator sim(p, 64, 128, R);
    const auto s0 = steady_state_init(p, R, 64, 128);
    auto s = s0;
    double worst_step = 0.0;
    for (int k = 0; k < 200; ++k) {
        const auto next = sim.step(s, 1e-4);
        worst_step = std::max(worst_step, max_abs_diff(next.myosin, s.myosin));
        s = next;
    }
    EXPECT_LT(worst_step, 1e-10);
    EXPECT_LT(max_abs_diff(s.myosin, s0.myosin), 1e-9);
    EXPECT_LT(boundary_norm(s.shape), 1e-9);
}

TEST(Step, TranslationLeavesFieldsUnchanged) {
    const auto p = kFig2.params();
    const double R = kFig2.critical_R();
    Simulator sim(p, 24, 32, R);
    auto a = perturbed_state_init(p, R, 24, 32, 1e-3, 2);
    auto b = a;
    b.shape.Xc = 0.7;
    for (int k = 0; k < 20; ++k) {
        a = sim.step(a, 2e-3);
        b = sim.step(b, 2e-3);
    }
    EXPECT_NEAR(b.shape.Xc - a.shape.Xc, 0.7, 1e-14);
    EXPECT_LT(max_abs_diff(a.myosin, b.myosin), 1e-14);
    auto st = steady_state_init(p, R, 24, 32);
    st.shape.Xc = -0.3;
    for (int k = 0; k < 20; ++k) st = sim.step(st, 2e-3);
    EXPECT_NEAR(st.shape.Xc, -0.3, 1e-13);
}

TEST(Step, MassConservedAndIndependentOfDt) {
    const auto p = kFig2.params();
    const double R = kFig2.critical_R();
    Simulator sim(p, 32, 64, R);
    const auto s0 = perturbed_state_init(p, R, 32, 64, 1e-2, -1);
    const double M0 = sim.mass(s0);
    auto drift = [&](double dt, int steps) {
        auto s = s0;
        double worst = 0.0;
        for (int k = 0; k < steps; ++k) {
            s = sim.step(s, dt);
            worst = std::max(worst, std::abs(sim.mass(s) - M0) / M0);
        }
        return worst;
    };
    const double coarse = drift(2e-3, 100), fine = drift(1e-3, 200);
    // conservation is exact up to the linear solver tolerance; both are at rounding level
    EXPECT_LT(coarse, 1e-12);
    EXPECT_LT(fine, 1e-12);
}

TEST(Step, SymmetryPreserved) {
    const auto p = kFig2.params();
    const double R = kFig2.critical_R();
    Simulator sim(p, 24, 32, R);
    auto s = perturbed_state_init(p, R, 24, 32, 5e-2, -1);
    for (int k = 0; k < 50; ++k) s = sim.step(s, 2e-3);
    EXPECT_TRUE(s.myosin.all_finite());
    EXPECT_LT(s.myosin.asymmetry(), 1e-12);
}

TEST(Step, RejectsCflViolation) {
    const auto p = kFig2.params();
    const double R = kFig2.critical_R();
    Simulator sim(p, 24, 32, R);
    const auto s = perturbed_state_init(p, R, 24, 32, 0.05, -1);
    EXPECT_THROW(sim.step(s, 50.0), std::domain_error);
    EXPECT_THROW(sim.step(s, -1.0), std::invalid_argument);
}

TEST(Step, RejectsNearlyFoldedMap) {
    const auto p = kFig1.params();
    const auto tw = tw_expand(kFig1.critical_R(), p);
    const auto s = tw_state_on_shape(tw, 0.1, tw.shape(0.1), 0.0, 32, 32);
    Simulator sim(p, 32, 32, tw.R0);
    EXPECT_THROW(sim.step(s, 1e-3), std::domain_error);
}

// ---------------------------------------------------------------------------------------------
// run and decay_rate

TEST(Run, StableRadiusConverges) {
    auto cfg = decay_config(0.8 * kFig2.critical_R(), -1);
    cfg.amplitude = 1e-3;
    cfg.t_end = 60.0;
    cfg.tol_converge = 1e-7;
    const auto tr = run(cfg);
    ASSERT_EQ(tr.event, SimEvent::Converged) << tr.message;
    EXPECT_LT(tr.series.back().m_dev, 1e-6);
    for (std::size_t k = 1; k < tr.series.size(); ++k) EXPECT_GT(tr.series[k].time, tr.series[k - 1].time);
}

TEST(Run, DecayRateMatchesSpectrum) {
    const double R = 0.8 * kFig2.critical_R();
    const auto tr = run(decay_config(R, -1));
    const double predicted = -slowest_rate(family(kFig2, R), R);
    EXPECT_NEAR(decay_rate(tr), predicted, 0.1 * predicted);
}

TEST(Run, ModeTwoDecayRate) {
    const double R = 0.8 * kFig2.critical_R();
    auto cfg = decay_config(R, 2);
    cfg.t_end = 8.0;
    const auto tr = run(cfg);
    const double predicted = -slowest_rate(family(kFig2, R), R, 2);
    EXPECT_NEAR(decay_rate(tr), predicted, 0.1 * predicted);
}

TEST(Run, SteadyStartHasInsufficientDecay) {
    auto cfg = decay_config(0.8 * kFig2.critical_R(), -1);
    cfg.init = InitKind::Steady;
    cfg.t_end = 0.5;
    const auto tr = run(cfg);
    EXPECT_THROW(decay_rate(tr), std::domain_error);
}

TEST(Run, UnstableRadiusGrows) {
    SimConfig cfg;
    cfg.radius = 1.2 * kFig1.critical_R();
    cfg.params = family(kFig1, cfg.radius);
    cfg.n_r = 32;
    cfg.n_phi = 32;
    cfg.dt = 2e-3;
    cfg.t_end = 6.0;
    cfg.sample_every = 50;
    cfg.init = InitKind::Perturbed;
    cfg.amplitude = 1e-3;
    cfg.tol_converge = 0.0;
    const auto tr = run(cfg);
    double peak = 0.0;
    for (const auto& o : tr.series) peak = std::max(peak, o.m_dev);
    EXPECT_GE(peak, 10.0 * tr.series.front().m_dev);
}

TEST(Run, SeededWaveAdvancesAtItsVelocity) {
    SimConfig cfg;
    cfg.params = kFig2.params();
    cfg.radius = kFig2.critical_R();
    cfg.n_r = 32;
    cfg.n_phi = 64;
    cfg.dt = 2e-3;
    cfg.t_end = 2.0;
    cfg.sample_every = 100;
    cfg.init = InitKind::TwSeed;
    cfg.velocity = 0.1;
    cfg.tol_converge = 0.0;
    const auto tr = run(cfg);
    ASSERT_EQ(tr.event, SimEvent::Finished) << tr.message;
    const auto& last = tr.series.back();
    const double travelled = last.center - tr.series.front().center;
    EXPECT_NEAR(travelled, cfg.velocity * last.time, 0.2 * cfg.velocity * last.time);
    EXPECT_LT(std::abs(last.mass - tr.series.front().mass), 1e-10 * last.mass);
}

TEST(Run, StateDistance) {
    const auto p = kFig2.params();
    const double R = kFig2.critical_R();
    Simulator sim(p, 16, 16, R);
    const auto a = steady_state_init(p, R, 16, 16);
    const auto b = perturbed_state_init(p, R, 16, 16, 1e-2, 2);
    EXPECT_EQ(state_distance(sim, a, a), 0.0);
    EXPECT_GT(state_distance(sim, a, b), 0.0);
}

// ---------------------------------------------------------------------------------------------
// linearised wave operator

TEST(TwOperator, ZeroVelocityMatchesSteadySpectrum) {
    const auto p = kFig2.params();
    const auto tw = tw_expand(kFig2.critical_R(), p);
    const auto op = assemble_tw_operator(tw, 0.0, 24, 32, TwBackground::Expansion);
    const auto rep = tw_kernel_check(op, tw);
    const auto sp = full_spectrum(radial_steady_state(tw.R0, p), 4, 24);
    // the slowest nonzero steady eigenvalues (n = 2 then n = 0 / 3) appear in the operator's spectrum
    std::vector<double> steady;
    for (const auto& e : sp.pairs)
        if (std::abs(e.lambda) > 0.1 && e.lambda.real() > -1.5) steady.push_back(e.lambda.real());
    ASSERT_FALSE(steady.empty());
    for (double lam : steady) {
        double best = 1e300;
        for (const auto& z : rep.eigenvalues) best = std::min(best, std::abs(z - lam));
        EXPECT_LT(best, 0.01 * std::abs(lam)) << lam;
    }
    EXPECT_LT(rep.shift_residual, 1e-6);
    EXPECT_LT(rep.background_residual, 1e-10);
    EXPECT_LT(rep.mass.adjoint_residual, 1e-10);
    EXPECT_LT(rep.mass.orthogonality, 1e-12);
}

TEST(TwOperator, DiscreteWaveRemovesExpansionDefect) {
    const auto tw = tw_expand(kFig2.critical_R(), kFig2.params());
    const auto op = assemble_tw_operator(tw, 0.05, 24, 32);
    ASSERT_TRUE(op.refinement.has_value());
    EXPECT_GT(op.refinement->initial_residual, 1e-4);
    EXPECT_LT(op.background_rate.lpNorm<Eigen::Infinity>(), 1e-9);
    const auto rep = tw_kernel_check(op, tw);
    // translation and its generalized partner: a Jordan pair split only by rounding
    EXPECT_LT(std::abs(rep.eigenvalues[0]), 1e-6);
    EXPECT_LT(std::abs(rep.eigenvalues[1]), 1e-6);
    EXPECT_LT(rep.mass.adjoint_residual, 1e-8);
    EXPECT_LT(rep.mass.orthogonality, 1e-2);
    EXPECT_LT(rep.mass.divergence_identity, 1e-9);
}

TEST(TwOperator, DiscreteShiftMatchesAnalyticTranslation) {
    const auto p = kFig2.params();
    const auto tw = tw_expand(kFig2.critical_R(), p);
    const double V = 0.1, e = 1e-5 * tw.R0;
    auto gap = [&](int n_r) {
        const int n_phi = 32;
        Simulator sim(p, n_r, n_phi, tw.R0);
        const int K = sim.boundary_modes();
        const auto base = tw_state_on_shape(tw, V, tw.shape(V), 0.0, n_r, n_phi);
        const auto v = discrete_shift(sim, base);
        const Eigen::VectorXd rho_dir = v.tail(K + 1);
        auto moved = [&](double s) {
            BoundaryShape sh = base.shape;
            for (int k = 0; k <= K; ++k) sh.rho_cos[k] += s * rho_dir[k];
            const auto st = tw_state_on_shape(tw, V, sh, s, n_r, n_phi);
            return detail::reduce_state(st.myosin, st.shape.rho_cos, K);
        };
        return ((moved(e) - moved(-e)) / (2.0 * e) - v).lpNorm<Eigen::Infinity>();
    };
    const double coarse = gap(24), fine = gap(48);
    EXPECT_LT(coarse, 2e-3);
    EXPECT_LT(fine, 0.6 * coarse);
}
