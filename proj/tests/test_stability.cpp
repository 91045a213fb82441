#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "hsks/stability.hpp"

using namespace hsks;

namespace {

// (m0, zeta, gamma, k_e) sets with zeta > m0
struct Set {
    double m0, zeta, gamma, k_e;
};
const std::vector<Set> kSets = {
    {3.0, 4.0, 0.03, 4.0}, {1.1, 2.1, 0.75, 0.5}, {0.5, 1.5, 0.3, 1.0}, {2.0, 2.5, 0.1, 2.0}, {1.0, 5.0, 1.0, 0.2},
};

const double kR0 = 1.187197977667343;  // critical radius for (m0, zeta) = (3, 4), frozen

ModelParams fig1_family(double R) { return params_for_density(3.0, 4.0, 0.03, R, 4.0); }

}  // namespace

TEST(SteadyState, ResidualVanishes) {
    for (const auto& s : kSets)
        for (double R : {0.3, 1.0, 2.5}) {
            const auto p = params_for_density(s.m0, s.zeta, s.gamma, R, s.k_e);
            const auto st = radial_steady_state(R, p);
            EXPECT_NEAR(st.m0, s.m0, 1e-12);
            EXPECT_LT(st.residual(), 1e-12);
        }
}

TEST(SteadyState, RejectsNonpositiveDensity) {
    ModelParams p{1.0, 0.5, 0.1, 1.0};
    EXPECT_THROW(radial_steady_state(2.0, p), std::domain_error);
    EXPECT_THROW(radial_steady_state(-1.0, p), std::invalid_argument);
}

TEST(Phi1, ClosedFormMatchesBvp) {
    const auto r = phi1_profile(kR0, 3.0, 4.0, 2048);
    EXPECT_LT(r.max_gap, 1e-6);
    EXPECT_NEAR(r.slope_closed, 1.0, 1e-10);
    EXPECT_NEAR(r.slope_bvp, r.slope_closed, 1e-5);
}

TEST(Phi1, SecondOrderConvergence) {
    std::vector<double> gaps;
    for (int n : {128, 256, 512, 1024, 2048}) gaps.push_back(phi1_profile(1.3, 2.0, 3.0, n).max_gap);
    for (std::size_t k = 1; k < gaps.size(); ++k) {
        const double order = std::log2(gaps[k - 1] / gaps[k]);
        EXPECT_NEAR(order, 2.0, 0.15) << "refinement " << k;
    }
}

TEST(Phi1, ClosedFormSatisfiesOde) {
    const Phi1Closed f(1.7, 1.2, 2.0);
    const double h = 1e-4;
    for (double r : {0.2, 0.7, 1.1, 1.6}) {
        const double u = f(r), up = f.slope(r);
        const double upp = (f.slope(r + h) - f.slope(r - h)) / (2.0 * h);
        EXPECT_NEAR(upp + up / r - u / (r * r) + (1.2 - 2.0) * u, 1.2 * r, 1e-7);
        EXPECT_NEAR((f(r + h) - f(r - h)) / (2.0 * h), up, 1e-7);
    }
    EXPECT_NEAR(f(1.7), 0.0, 1e-14);
    EXPECT_THROW(Phi1Closed(1.0, 2.0, 2.0), std::invalid_argument);
}

TEST(CriticalRadius, FrozenValueAndSlope) {
    const double R0 = critical_radius(3.0, 4.0);
    EXPECT_NEAR(R0, kR0, 1e-12);
    EXPECT_NEAR(Phi1Closed(R0, 3.0, 4.0).boundary_slope(), 1.0, 1e-12);
    // slope is increasing in R: small disks are stable
    EXPECT_LT(Phi1Closed(0.5 * R0, 3.0, 4.0).boundary_slope(), 1.0);
    EXPECT_GT(Phi1Closed(1.5 * R0, 3.0, 4.0).boundary_slope(), 1.0);
    EXPECT_THROW(critical_radius(3.0, 4.0, 2.0, 3.0), std::domain_error);
}

TEST(Classify, ThreeRegimes) {
    const std::pair<double, Classification> cases[] = {
        {0.8, Classification::Stable}, {1.0, Classification::Critical}, {1.2, Classification::Unstable}};
    for (const auto& [f, expected] : cases) {
        const double R = f * kR0;
        const auto rep = classify(R, fig1_family(R), 1e-9);
        EXPECT_EQ(rep.classification, expected) << to_string(expected);
        EXPECT_TRUE(rep.all_pass());
    }
}

TEST(Classify, NamesFailedHypothesis) {
    const auto p = params_for_density(3.0, 2.0, 0.03, 1.0, 4.0);
    const auto rep = classify(1.0, p);
    EXPECT_FALSE(rep.all_pass());
    ASSERT_FALSE(rep.hypotheses.empty());
    EXPECT_EQ(rep.hypotheses[0].name, "zeta > m0");
    EXPECT_FALSE(rep.hypotheses[0].pass);
    EXPECT_EQ(rep.classification, Classification::Undetermined);
}

TEST(Classify, ThirdNeumannEigenvalue) {
    // j'_{2,1} = 3.0542369282271403
    EXPECT_NEAR(third_neumann_eigenvalue(1.0), 3.0542369282271403 * 3.0542369282271403, 1e-9);
    EXPECT_NEAR(third_neumann_eigenvalue(2.0), third_neumann_eigenvalue(1.0) / 4.0, 1e-12);
}

TEST(QFunctional, ClosedFormMatchesMinimisation) {
    for (double zeta : {0.5, 2.0, 6.0})
        for (double R : {0.5, 1.0, 2.0}) {
            const double q = q_functional(R, zeta), qd = q_functional_discrete(R, zeta, 1024);
            EXPECT_LT(std::abs(q - qd) / q, 1e-3) << "zeta " << zeta << " R " << R;
        }
    EXPECT_NEAR(q_functional(1.0, 2.0), 27.1453, 1e-3);
}

TEST(QFunctional, LowerBound) {
    for (double zeta : {0.1, 0.5, 1.0, 2.0, 4.0, 10.0})
        for (double R : {0.1, 0.5, 1.0, 2.0, 5.0})
            EXPECT_GE(q_functional(R, zeta), 2.0 * kPi * std::sqrt(zeta) * R) << zeta << " " << R;
}

TEST(QFunctional, MinimiserBeatsTrialFunctions) {
    // energy of mean-zero trial w = a + b r^2 with w(R) = 1 is never below Q
    const double R = 1.0, zeta = 2.0;
    const double b = 1.0 / (R * R - R * R / 2.0), a = 1.0 - b * R * R;  // mean of r^2 is R^2/2
    const double grad = 2.0 * kPi * 4.0 * b * b * std::pow(R, 4) / 4.0;
    const double mass = 2.0 * kPi * (a * a * R * R / 2.0 + 2.0 * a * b * std::pow(R, 4) / 4.0 + b * b * std::pow(R, 6) / 6.0);
    EXPECT_GT(grad + zeta * mass, q_functional(R, zeta));
}

TEST(Spectrum, RadiusFamilyIsExactNullVector) {
    const double R = 0.9;
    const auto st = radial_steady_state(R, fig1_family(R));
    const auto sys = assemble_operator_mode(0, st, 128);
    Eigen::VectorXd v = Eigen::VectorXd::Constant(sys.matrix.rows(), 0.0);
    const double dm = st.params.gamma / (R * R) + 2.0 * kPi * R * effective_pressure_slope(st.params);
    v.head(128).setConstant(dm);
    v(128) = 1.0;
    EXPECT_LT((sys.matrix * v).norm() / v.norm(), 1e-8);
}

TEST(Spectrum, StableMultiplicityTwo) {
    const double R = 0.8 * kR0;
    const auto sp = full_spectrum(radial_steady_state(R, fig1_family(R)), 6, 128);
    EXPECT_EQ(sp.zero_multiplicity, 2);
    EXPECT_LT(sp.max_real_excluding_zeros(), 0.0);
    for (const auto& e : sp.pairs) {
        if (std::abs(e.lambda) < 100.0) {
            EXPECT_LT(e.residual, 1e-8 * std::max(1.0, std::abs(e.lambda)));
        }
    }
}

TEST(Spectrum, CriticalKernelMatchesProfile) {
    const auto st = radial_steady_state(kR0, fig1_family(kR0));
    const int n_r = 128;
    const auto sp = full_spectrum(st, 6, n_r);
    EXPECT_EQ(sp.zero_multiplicity, 3);
    // smallest n = 1 eigenvector against m0 (phi1 - r)
    const Eigenpair* k = nullptr;
    for (const auto& e : sp.pairs)
        if (e.mode == 1 && (!k || std::abs(e.lambda) < std::abs(k->lambda))) k = &e;
    ASSERT_NE(k, nullptr);
    EXPECT_LT(std::abs(k->extrapolated), sp.zero_tol);
    const Phi1Closed f(kR0, st.m0, st.params.zeta);
    const RadialGrid g(n_r, kR0);
    std::complex<double> dot = 0.0;
    double na = 0.0, nb = 0.0;
    for (int i = 0; i < n_r; ++i) {
        const double r = g.node(i), w = r * g.h();
        const double ref = st.m0 * (f(r) - r);
        dot += w * ref * k->vector(i);
        na += w * ref * ref;
        nb += w * std::norm(k->vector(i));
    }
    EXPECT_GT(std::abs(dot) / std::sqrt(na * nb), 0.999);
}

TEST(Spectrum, UnstableHasPositiveModeOne) {
    const double R = 1.2 * kR0;
    const auto sp = full_spectrum(radial_steady_state(R, fig1_family(R)), 6, 128);
    double best = -1e300;
    for (const auto& e : sp.pairs)
        if (e.mode == 1) best = std::max(best, e.lambda.real());
    EXPECT_GT(best, 0.0);
    EXPECT_NEAR(best, 0.5656, 5e-3);
}

TEST(Spectrum, RichardsonSharpensZero) {
    const auto st = radial_steady_state(kR0, fig1_family(kR0));
    const auto sp = full_spectrum(st, 1, 256);
    const Eigenpair* k = nullptr;
    for (const auto& e : sp.pairs)
        if (e.mode == 1 && (!k || std::abs(e.lambda) < std::abs(k->lambda))) k = &e;
    ASSERT_NE(k, nullptr);
    EXPECT_LT(std::abs(k->extrapolated), std::abs(k->lambda));
}

TEST(Rayleigh, NoViolations) {
    const auto rep = rayleigh_inequality_check(1.0, 256, 100);
    EXPECT_EQ(rep.trials, 100);
    EXPECT_EQ(rep.violations, 0);
    EXPECT_LT(rep.constant_gap, 1e-9);
    EXPECT_LT(std::abs(rep.eigen_lhs), 1e-4);
    EXPECT_GT(rep.slack_constant, 0.0);
}

TEST(Rayleigh, DeterministicSeed) {
    const auto a = rayleigh_inequality_check(1.3, 128, 20, 7);
    const auto b = rayleigh_inequality_check(1.3, 128, 20, 7);
    EXPECT_EQ(a.worst_margin, b.worst_margin);
}
