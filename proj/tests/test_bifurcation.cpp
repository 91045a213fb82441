#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hsks/bifurcation.hpp"

using namespace hsks;

namespace {

struct Set {
    double m0, zeta, gamma, k_e;
};
const std::vector<Set> kSets = {
    {3.0, 4.0, 0.03, 4.0}, {1.1, 2.1, 0.75, 0.5}, {0.5, 1.5, 0.3, 1.0}, {2.0, 2.5, 0.1, 2.0}, {1.0, 5.0, 1.0, 0.2},
};

ModelParams set_params(const Set& s) {
    return params_for_density(s.m0, s.zeta, s.gamma, critical_radius(s.m0, s.zeta), s.k_e);
}

// phi1'(R) - 1 with Lambda(R) in place of m0
double phi1_criterion(double R, const ModelParams& p) {
    return Phi1Closed(R, lambda_of_r(R, p), p.zeta).boundary_slope() - 1.0;
}

// plain bisection on the phi1 criterion, independent of the TOMS 748 path
double phi1_root(const ModelParams& p, double lo, double hi) {
    double glo = phi1_criterion(lo, p);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi), gm = phi1_criterion(mid, p);
        if ((gm < 0.0) == (glo < 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

const TravelingWave& fig2_wave() {
    static const TravelingWave tw = [] {
        const auto pr = fig2_preset();
        return tw_expand(pr.critical_R(), pr.params(), 512);
    }();
    return tw;
}

const TravelingWave& fig1_wave() {
    static const TravelingWave tw = [] {
        const auto pr = fig1_preset();
        return tw_expand(pr.critical_R(), pr.params(), 512);
    }();
    return tw;
}

}  // namespace

TEST(FunctionF, SignMatchesPhi1Criterion) {
    for (const auto& s : kSets) {
        const auto p = set_params(s);
        const double Rc = critical_radius(s.m0, s.zeta);
        for (double f = 0.8; f <= 1.6; f += 0.05) {
            const double R = f * Rc;
            if (!(p.zeta > lambda_of_r(R, p))) continue;
            const double F = f_of_r(R, p), g = phi1_criterion(R, p);
            if (std::abs(g) < 1e-12) continue;
            EXPECT_EQ(F > 0.0, g < 0.0) << "R " << R;
            // F = -(I1 / (kappa I1')) (phi1' - 1)
            const double k = std::sqrt(p.zeta - lambda_of_r(R, p));
            EXPECT_NEAR(F, -bessel_i(1, R * k) / (k * bessel_i_prime(1, R * k)) * g, 1e-10 * std::max(1.0, std::abs(F)));
        }
    }
}

TEST(FunctionF, ZeroDensityLimit) {
    // p_h chosen so that Lambda(R) = 0 at R = 1.3
    const double R = 1.3, zeta = 2.0;
    const ModelParams p{zeta, 0.2, 0.2 / R + 0.5 * kPi * R * R, 0.5};
    ASSERT_NEAR(lambda_of_r(R, p), 0.0, 1e-14);
    const double x = R * std::sqrt(zeta);
    EXPECT_NEAR(f_of_r(R, p), zeta * bessel_i(1, x) / (std::pow(zeta, 1.5) * bessel_i_prime(1, x)), 1e-13);
    EXPECT_GT(f_of_r(R, p), 0.0);
}

TEST(FunctionF, RejectsInadmissible) {
    const auto p = params_for_density(3.0, 2.0, 0.03, 1.0, 4.0);
    EXPECT_THROW(f_of_r(1.0, p), std::invalid_argument);
    EXPECT_THROW(psi_profile(0.5, 1.0, p), std::invalid_argument);
}

TEST(FunctionF, LiteralConventionDiffers) {
    const auto p = set_params(kSets[0]);
    const double R = 1.3;
    EXPECT_GT(std::abs(f_of_r(R, p) - f_of_r(R, p, BesselArgument::Literal)), 1e-3);
}

TEST(BifurcationRoot, DualCriterionAgreement) {
    for (const auto& s : kSets) {
        const auto p = set_params(s);
        const double Rc = critical_radius(s.m0, s.zeta);
        // wide bracket: the first sign change need not be at Rc (Lambda varies with R)
        const auto wide = find_bifurcation_radius(p, 0.3 * Rc, 2.0 * Rc);
        EXPECT_NEAR(wide.R0, phi1_root(p, 0.999 * wide.R0, 1.001 * wide.R0), 1e-8) << s.m0 << " " << s.zeta;
        // p_h places the steady density at m0 at Rc, so Rc is a root of both criteria
        const auto root = find_bifurcation_radius(p, 0.9 * Rc, 1.1 * Rc);
        EXPECT_NEAR(root.R0, phi1_root(p, 0.995 * Rc, 1.005 * Rc), 1e-8);
        EXPECT_NEAR(root.R0, Rc, 1e-8);
        EXPECT_FALSE(root.degenerate);
        EXPECT_GT(std::abs(root.slope), 1e-3);
    }
}

TEST(BifurcationRoot, TransversalityMatchesFiniteDifference) {
    const auto pr = fig2_preset();
    const auto p = pr.params();
    const auto root = find_bifurcation_radius(p, 0.5 * pr.critical_R(), 2.0 * pr.critical_R());
    const double h = 1e-4;
    const double fd = (f_of_r(root.R0 + h, p) - f_of_r(root.R0 - h, p)) / (2.0 * h);
    EXPECT_NEAR(root.slope, fd, 1e-6 * std::abs(fd));
}

TEST(BifurcationRoot, NoSignChange) {
    const auto p = set_params(kSets[0]);
    EXPECT_THROW(find_bifurcation_radius(p, 1.5, 3.0), std::domain_error);
    EXPECT_THROW(find_bifurcation_radius(p, 2.0, 1.0), std::invalid_argument);
}

TEST(BifurcationRoot, FigureOneReportedRadiusIsNotReproduced) {
    // the preset reports 0.501; the closed-form criterion gives 1.1872 for (m0, zeta) = (3, 4)
    const auto pr = fig1_preset();
    const auto root = find_bifurcation_radius(pr.params(), 0.3, 3.0);
    EXPECT_NEAR(root.R0, 1.187197977667343, 1e-9);
    EXPECT_GT(std::abs(root.R0 - pr.reported_R0), 5e-2);
}

TEST(Psi, BoundaryValues) {
    const auto p = set_params(kSets[1]);
    for (double R : {2.0, 2.1, 2.4}) {
        EXPECT_NEAR(psi_profile(0.0, R, p), 0.0, 1e-15);
        const double h = 1e-5;
        EXPECT_NEAR((psi_profile(1.0 + h, R, p) - psi_profile(1.0 - h, R, p)) / (2.0 * h), R, 1e-8);
        EXPECT_NEAR(psi_profile(1.0, R, p), f_of_r(R, p), 1e-12);
    }
}

TEST(Psi, MatchesRescaledBvp) {
    const auto p = set_params(kSets[0]);
    const double R = 1.3, L = lambda_of_r(R, p), k2 = p.zeta - L;
    const RadialGrid g(2048, 1.0);
    const auto src = sample_profile(g, 1, [&](double r) { return R * R * R * L * r; });
    const auto bvp = solve_mode_bvp(1, R * R * k2, src, BoundaryKind::Neumann, R);
    double gap = 0.0;
    for (int i = 0; i < g.n; ++i) gap = std::max(gap, std::abs(bvp.values[i] - psi_profile(g.node(i), R, p)));
    EXPECT_LT(gap, 1e-6);
}

TEST(TravelingWave, FigureTwoCoefficients) {
    const auto& tw = fig2_wave();
    EXPECT_NEAR(tw.rho2_mode2, -1.39877, 1e-4);
    // solvability closure
    EXPECT_NEAR(tw.density2, 1.51936, 1e-4);
    EXPECT_NEAR(tw.rho2_mode0, -0.26850, 1e-4);
    EXPECT_LT(std::abs(tw.solvability_defect), 1e-6);
    EXPECT_LT(tw.closure_condition, 1e6);
}

TEST(TravelingWave, MassClosureCoefficientsAndDefect) {
    const auto pr = fig2_preset();
    const auto tw = tw_expand(pr.critical_R(), pr.params(), 512, TwClosure::MassConsistency);
    EXPECT_NEAR(tw.rho2_mode0, -0.02663, 1e-4);
    EXPECT_NEAR(tw.rho2_mode2, -1.39877, 1e-4);
    EXPECT_EQ(tw.density2, 0.0);
    // pinning the density leaves an O(V^3) mode-1 obstruction
    EXPECT_NEAR(tw_solvability_defect(tw, 0.2), -4.7314, 1e-3);
}

TEST(TravelingWave, FigureOneCoefficients) {
    const auto& tw = fig1_wave();
    EXPECT_NEAR(tw.rho2_mode2, -8.57056, 1e-3);
    EXPECT_NEAR(tw.density2, 42.4007, 1e-2);
    EXPECT_NEAR(tw.rho2_mode0, -1.42581, 1e-4);
    EXPECT_GE(tw.valid_V, 0.3);
}

TEST(TravelingWave, ModeTwoNeumannResidual) {
    const auto& tw = fig2_wave();
    const auto& g = tw.phi2_mode2.grid;
    const double k2 = tw.params.zeta - tw.m0;
    std::vector<double> w(g.n);
    for (int i = 0; i < g.n; ++i) w[i] = k2 * g.node(i);
    const auto st = mode_flux_stencil(g, 2, w, BoundaryKind::Neumann);
    const auto Au = st.matrix.apply(tw.phi2_mode2.values);
    const Phi1Closed f(tw.R0, tw.m0, tw.params.zeta);
    double res = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double r = g.node(i);
        res = std::max(res, std::abs(Au[i] - r * (-tw.m0 * 0.25 * std::pow(f(r) - r, 2))));
    }
    EXPECT_LT(res, 1e-9);
    EXPECT_EQ(tw.phi2_mode2.boundary_derivative, 0.0);
}

TEST(TravelingWave, ZeroVelocityIsSteadyState) {
    const auto& tw = fig2_wave();
    const auto f = tw_fields(tw, 0.0, 32, 64);
    for (double v : f.m.values) EXPECT_NEAR(v, tw.m0, 1e-12);
    for (double v : f.phi.values) EXPECT_NEAR(v, tw.phi0, 1e-15);
    EXPECT_NEAR(area(f.shape), kPi * tw.R0 * tw.R0, 1e-12);
    const auto r = tw_residual(tw, 0.0);
    EXPECT_LT(r.total(), 1e-9);
}

TEST(TravelingWave, ResidualIsCubic) {
    for (const TravelingWave* tw : {&fig1_wave(), &fig2_wave()}) {
        double prev = 0.0, pv = 0.0;
        for (double V : {0.05, 0.1, 0.2}) {
            const double r = tw_residual(*tw, V).total();
            if (prev > 0.0) {
                EXPECT_GE(std::log(r / prev) / std::log(V / pv), 2.7);
            }
            prev = r;
            pv = V;
        }
    }
}

TEST(TravelingWave, SolvabilityClosureIsGridIndependent) {
    const auto pr = fig2_preset();
    const auto coarse = tw_expand(pr.critical_R(), pr.params(), 256);
    EXPECT_NEAR(coarse.density2, fig2_wave().density2, 1e-4);
    EXPECT_NEAR(coarse.rho2_mode0, fig2_wave().rho2_mode0, 1e-5);
}

TEST(TravelingWave, RejectsNonCriticalRadius) {
    const auto pr = fig2_preset();
    EXPECT_THROW(tw_expand(1.1 * pr.critical_R(), pr.params(), 256), std::invalid_argument);
}

TEST(TwFields, MassMatchesAverageDensity) {
    const auto& tw = fig2_wave();
    for (double V : {0.1, 0.3}) {
        const auto f = tw_fields(tw, V, 64, 128);
        // quadrature of m over the mapped domain, reusing the field's own normalisation
        const double integral = detail::radial_scaling_integral(f.shape, 128, [&](double s, double ph, double a) {
            return f.normalisation * std::exp(tw.potential_at(s, ph, V) - tw.phi0 - V * s * a / tw.R0 * std::cos(ph));
        });
        EXPECT_NEAR(integral, tw.average_density(V) * area(f.shape), 1e-10 * integral);
    }
    EXPECT_THROW(tw_fields(tw, 2.0 * tw.valid_V), std::invalid_argument);
}

TEST(TwFields, MyosinConcentratesAtRear) {
    const auto& tw = fig1_wave();
    auto argmax = [&](double V) {
        const auto m = tw_boundary_myosin(tw, V, 128);
        return 2.0 * kPi * static_cast<double>(std::max_element(m.begin(), m.end()) - m.begin()) / 128.0;
    };
    EXPECT_NEAR(argmax(0.1), kPi, 0.2);
    EXPECT_NEAR(argmax(0.2), kPi, 0.2);
    // golden: at V = 0.3 the rear indentation (boundary at r ~ 0.29 behind the centre) moves the maximum
    // onto the rear flanks
    EXPECT_NEAR(std::abs(argmax(0.3) - kPi), 0.69, 0.05);
}

TEST(TwFields, ShapeHasNoModeOneAndWidensSideways) {
    const auto& tw = fig1_wave();
    const auto shape = tw.shape(0.2);
    EXPECT_EQ(shape.coeff(1), 0.0);
    EXPECT_LT(tw.rho2_mode2, 0.0);
    double prev_aspect = 1.0;
    for (double V : {0.1, 0.2, 0.3}) {
        const auto s = tw.shape(V);
        const double length = 2.0 * tw.R0 + s.rho(0.0) + s.rho(kPi), width = 2.0 * tw.R0 + 2.0 * s.rho(kPi / 2);
        EXPECT_GT(width / length, prev_aspect);
        prev_aspect = width / length;
    }
    // golden curvature pattern at V = 0.2: front and rear equal at this order, flattened relative to the sides
    const auto kappa = curvature(shape, 64);
    EXPECT_NEAR(kappa[0], kappa[32], 1e-10);
    EXPECT_LT(kappa[0], kappa[16]);
}

TEST(MassCurve, StartsAtCriticalMassAndIsEven) {
    const auto& tw = fig2_wave();
    const auto c = mass_vs_velocity(tw, {0.0, 0.1, -0.1, 0.3, -0.3});
    EXPECT_NEAR(c.masses[0], tw.m0 * kPi * tw.R0 * tw.R0, 1e-9);
    EXPECT_NEAR(c.masses[1], c.masses[2], 1e-10 * c.masses[1]);
    EXPECT_NEAR(c.masses[3], c.masses[4], 1e-10 * c.masses[3]);
    EXPECT_THROW(mass_vs_velocity(tw, {2.0 * tw.valid_V}), std::invalid_argument);
}

TEST(MassCurve, FigureTwoGoldenSigns) {
    // solvability closure: M grows from V = 0 (golden); the truncated and exact forms agree to O(V^2)
    const auto& tw = fig2_wave();
    const auto c = mass_vs_velocity(tw, {0.0, 0.05, 0.1});
    EXPECT_GT(c.masses[1], c.masses[0]);
    EXPECT_GT(c.masses[2], c.masses[1]);
    const double M2 = tw.density2 * kPi * tw.R0 * tw.R0 + 2.0 * kPi * tw.R0 * tw.m0 * tw.rho2_mode0;
    EXPECT_NEAR((c.masses[1] - c.masses[0]) / (0.05 * 0.05), M2, 0.02 * M2);
    EXPECT_NEAR((c.masses_exact[1] - c.masses[0]) / (0.05 * 0.05), M2, 0.02 * M2);
}

TEST(Presets, ParameterValues) {
    const auto f1 = fig1_preset(), f2 = fig2_preset();
    EXPECT_EQ(f1.m0, 3.0);
    EXPECT_EQ(f1.zeta, 4.0);
    EXPECT_EQ(f1.gamma, 0.03);
    EXPECT_EQ(f1.velocities, (std::vector<double>{0.0, 0.1, 0.2, 0.3}));
    EXPECT_EQ(f2.m0, 1.1);
    EXPECT_EQ(f2.zeta, 2.1);
    EXPECT_EQ(f2.gamma, 0.75);
    EXPECT_NEAR(f2.critical_R(), 2.0560527749169477, 1e-10);
    for (const auto& pr : {f1, f2}) {
        const double R = pr.critical_R();
        const auto rep = classify(0.95 * R, params_for_density(pr.m0, pr.zeta, pr.gamma, 0.95 * R, pr.k_e));
        EXPECT_TRUE(rep.all_pass()) << pr.name;
        EXPECT_NEAR(steady_density(R, pr.params()), pr.m0, 1e-12);
    }
}
