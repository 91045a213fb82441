#pragma once
// Radial steady states, the mode-1 criterion, classification with hypothesis checks,
// discretised spectra of the linearised operator, the energy functional Q and the Rayleigh inequality.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "elliptic.hpp"
#include "geometry.hpp"
#include "radial.hpp"
#include "specfun.hpp"

namespace hsks {

struct SteadyState {
    double R = 1.0;
    double m0 = 0.0;
    double phi0 = 0.0;
    ModelParams params;

    /// Max of the interior and boundary residuals of the potential problem at the constant pair.
    double residual() const {
        const double interior = m0 - params.zeta * phi0 - effective_pressure(kPi * R * R, params);
        const double boundary = params.zeta * phi0 + params.gamma / R;
        return std::max(std::abs(interior), std::abs(boundary));
    }
};

inline SteadyState radial_steady_state(double R, const ModelParams& params) {
    params.validate();
    if (!(R > 0.0)) throw std::invalid_argument("radial_steady_state: R must be positive");
    SteadyState s{R, steady_density(R, params), -params.gamma / (params.zeta * R), params};
    if (!(s.m0 > 0.0))
        throw std::domain_error("radial_steady_state: nonphysical state, m0 = " + std::to_string(s.m0) + " <= 0");
    return s;
}

// ---------------------------------------------------------------------------------------------
// Mode-1 profile: (1/r)(r u')' - u/r^2 + (m0 - zeta) u = m0 r, u(0) = u(R) = 0.

/// Closed form (m0/(zeta-m0)) (R I1(k r)/I1(k R) - r), k = sqrt(zeta - m0).
struct Phi1Closed {
    double R, m0, zeta, k;

    Phi1Closed(double R_, double m0_, double zeta_) : R(R_), m0(m0_), zeta(zeta_) {
        if (!(zeta_ > m0_)) throw std::invalid_argument("phi1: requires zeta > m0");
        k = std::sqrt(zeta - m0);
    }
    double operator()(double r) const {
        return m0 / (k * k) * (R * bessel_i(1, k * r) / bessel_i(1, k * R) - r);
    }
    double slope(double r) const {
        return m0 / (k * k) * (R * k * bessel_i_prime(1, k * r) / bessel_i(1, k * R) - 1.0);
    }
    double boundary_slope() const { return slope(R); }
};

struct Phi1Result {
    RadialProfile bvp;     // finite-volume solution
    RadialProfile closed;  // closed form sampled on the same grid
    double slope_closed = 0.0;
    double slope_bvp = 0.0;
    double max_gap = 0.0;
};

inline Phi1Result phi1_profile(double R, double m0, double zeta, int n_r = 2048) {
    const Phi1Closed f(R, m0, zeta);
    const RadialGrid g(n_r, R);
    Phi1Result out;
    out.bvp = solve_mode_bvp(1, zeta - m0, sample_profile(g, 1, [&](double r) { return m0 * r; }),
                             BoundaryKind::Dirichlet, 0.0);
    out.closed = sample_profile(g, 1, f);
    out.closed.boundary_value = 0.0;
    out.closed.boundary_derivative = f.boundary_slope();
    out.slope_closed = f.boundary_slope();
    out.slope_bvp = out.bvp.boundary_derivative;
    for (int i = 0; i < g.n; ++i) out.max_gap = std::max(out.max_gap, std::abs(out.bvp.values[i] - out.closed.values[i]));
    return out;
}

/// Radius at which phi1'(R) = 1 for fixed m0 and zeta (bisection on the closed form).
inline double critical_radius(double m0, double zeta, double lo = 1e-3, double hi = 50.0) {
    auto g = [&](double R) { return Phi1Closed(R, m0, zeta).boundary_slope() - 1.0; };
    double glo = g(lo), ghi = g(hi);
    if ((glo < 0.0) == (ghi < 0.0)) throw std::domain_error("critical_radius: no sign change on bracket");
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm < 0.0) == (glo < 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------------------------

enum class Classification { Stable, Critical, Unstable, Undetermined };

inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::Stable: return "Stable";
        case Classification::Critical: return "Critical";
        case Classification::Unstable: return "Unstable";
        default: return "Undetermined";
    }
}

struct HypothesisCheck {
    std::string name;
    bool pass = false;
    double value = 0.0;  // left-hand side
    double bound = 0.0;  // right-hand side
};

struct ClassifyReport {
    Classification classification = Classification::Undetermined;
    double phi1_slope = 0.0;
    SteadyState steady;
    std::vector<HypothesisCheck> hypotheses;

    bool all_pass() const {
        return std::all_of(hypotheses.begin(), hypotheses.end(), [](const auto& h) { return h.pass; });
    }
};

/// Third Neumann eigenvalue of -Delta on B_R restricted to functions even in phi: (j'_{2,1}/R)^2.
inline double third_neumann_eigenvalue(double R) {
    const double j = besselj_prime_zero(2, 1);
    return j * j / (R * R);
}

/// Upper bound on p_eff'(pi R^2) that keeps the area mode damped.
inline double area_slope_bound(double R, double m0, const ModelParams& p) {
    return -(p.gamma / R + 2.0 * m0 + std::sqrt(2.0 * R * std::sqrt(p.zeta)) * m0) / (2.0 * kPi * R * R);
}

inline ClassifyReport classify(double R, const ModelParams& params, double tol = 1e-9) {
    ClassifyReport rep;
    rep.steady = radial_steady_state(R, params);
    const double m0 = rep.steady.m0;
    rep.hypotheses.push_back({"zeta > m0", params.zeta > m0, m0, params.zeta});
    const double l3 = third_neumann_eigenvalue(R);
    rep.hypotheses.push_back({"m0 <= lambda_3", m0 <= l3, m0, l3});
    const double slope = effective_pressure_slope(params), bound = area_slope_bound(R, m0, params);
    rep.hypotheses.push_back({"p_eff' bound", slope <= bound, slope, bound});
    if (!(params.zeta > m0)) return rep;
    rep.phi1_slope = Phi1Closed(R, m0, params.zeta).boundary_slope();
    const double d = rep.phi1_slope - 1.0;
    rep.classification = std::abs(d) <= tol ? Classification::Critical
                         : d < 0.0          ? Classification::Stable
                                            : Classification::Unstable;
    return rep;
}

// ---------------------------------------------------------------------------------------------
// Q = min { int |grad w|^2 + zeta int w^2 : w radial, mean zero, w(R) = 1 }.

inline double q_functional(double R, double zeta) {
    if (!(zeta > 0.0)) throw std::invalid_argument("q_functional: zeta must be positive");
    const double s = std::sqrt(zeta), x = s * R;
    return 2.0 * kPi * zeta * R * R * bessel_i(1, x) / (x * bessel_i(2, x));
}

/// Discrete constrained minimisation: stationarity (Euler-Lagrange with multiplier mu) solved by
/// superposition, then the energy is evaluated on the discrete minimiser.
inline double q_functional_discrete(double R, double zeta, int n_r = 1024) {
    const RadialGrid g(n_r, R);
    const auto zero = sample_profile(g, 0, [](double) { return 0.0; });
    const auto one = sample_profile(g, 0, [](double) { return -1.0; });
    // Delta w - zeta w = -mu, w(R) = 1
    const auto wa = solve_mode_bvp(0, zeta, zero, BoundaryKind::Dirichlet, 1.0);
    const auto wb = solve_mode_bvp(0, zeta, one, BoundaryKind::Dirichlet, 0.0);
    double ia = 0.0, ib = 0.0;
    for (int i = 0; i < g.n; ++i) {
        ia += wa.values[i] * g.node(i);
        ib += wb.values[i] * g.node(i);
    }
    const double mu = -ia / ib;
    std::vector<double> w(g.n);
    for (int i = 0; i < g.n; ++i) w[i] = wa.values[i] + mu * wb.values[i];
    const double h = g.h();
    double grad = 0.0, mass = 0.0;
    for (int i = 0; i + 1 < g.n; ++i) grad += g.face(i + 1) * std::pow((w[i + 1] - w[i]) / h, 2) * h;
    // half cell between the last node and the boundary
    const double slope = boundary_slope(1.0, w[g.n - 1], w[g.n - 2], h);
    grad += 0.5 * h * (g.R * slope * slope);
    for (int i = 0; i < g.n; ++i) mass += g.node(i) * w[i] * w[i] * h;
    return 2.0 * kPi * (grad + zeta * mass);
}

// ---------------------------------------------------------------------------------------------
// Linearised operator about the steady disk, one cosine mode at a time.
// Unknowns: m at the radial nodes, then the boundary amplitude (absent for n = 1).

struct ModeSystem {
    int mode = 0;
    Eigen::MatrixXd matrix;
    double R = 1.0;
    int n_r = 0;
    bool has_boundary = true;
};

inline ModeSystem assemble_operator_mode(int n, const SteadyState& s, int n_r) {
    if (n < 0) throw std::invalid_argument("assemble_operator_mode: negative mode");
    const RadialGrid g(n_r, s.R);
    const ModelParams& p = s.params;
    const double R = s.R, m0 = s.m0, zeta = p.zeta, h = g.h();
    const double pslope = effective_pressure_slope(p);
    const bool with_rho = (n != 1);
    const int N = g.n, dim = N + (with_rho ? 1 : 0);
    ModeSystem sys{n, Eigen::MatrixXd::Zero(dim, dim), R, n_r, with_rho};

    // diffusion with zero-flux boundary, divided by r to undo the flux-form weighting
    const std::vector<double> zero_w(N, 0.0);
    const auto lap = mode_flux_stencil(g, n, zero_w, BoundaryKind::Neumann).matrix;
    for (int i = 0; i < N; ++i) {
        const double inv_r = 1.0 / g.node(i);
        sys.matrix(i, i) += lap.di[i] * inv_r + m0;
        if (i > 0) sys.matrix(i, i - 1) += lap.lo[i] * inv_r;
        if (i + 1 < N) sys.matrix(i, i + 1) += lap.up[i] * inv_r;
    }
    // potential response: (Delta_n - zeta) phi = -m + 2 pi p' R rho delta_{n0}, phi(R) = gamma (1-n^2) rho / (R^2 zeta)
    std::vector<double> w(N);
    for (int i = 0; i < N; ++i) w[i] = zeta * g.node(i);
    const auto st = mode_flux_stencil(g, n, w, BoundaryKind::Dirichlet);
    const FactoredTridiagonal S(st.matrix);
    std::vector<double> col(N);
    auto fill_column = [&](int c, double bc) {
        // m rows: -m0 zeta phi (plus the pressure term for the boundary column); rho row: slope at R
        S.solve_inplace(col.data());
        for (int i = 0; i < N; ++i) sys.matrix(i, c) += -m0 * zeta * col[i];
        if (with_rho) sys.matrix(N, c) += boundary_slope(bc, col[N - 1], col[N - 2], h);
    };
    for (int c = 0; c < N; ++c) {
        // m = e_c gives the source -e_c; the stencil is r-weighted
        std::fill(col.begin(), col.end(), 0.0);
        col[c] = -g.node(c);
        fill_column(c, 0.0);
    }
    if (with_rho) {
        const double src = (n == 0) ? 2.0 * kPi * pslope * R : 0.0;
        const double bc = p.gamma * (1.0 - static_cast<double>(n) * n) / (R * R * zeta);
        for (int i = 0; i < N; ++i) col[i] = g.node(i) * src;
        col[N - 1] -= st.dirichlet_coeff * bc;
        fill_column(N, bc);
        if (n == 0)
            for (int i = 0; i < N; ++i) sys.matrix(i, N) += -2.0 * kPi * m0 * pslope * R;
    }
    return sys;
}

// ---------------------------------------------------------------------------------------------

struct Eigenpair {
    int mode = 0;
    std::complex<double> lambda;
    std::complex<double> extrapolated;  // two-grid Richardson value (equal to lambda when not matched)
    double residual = 0.0;
    Eigen::VectorXcd vector;
};

struct Spectrum {
    std::vector<Eigenpair> pairs;  // sorted by descending real part
    int zero_multiplicity = 0;     // includes the structural shift mode
    int structural_zeros = 1;      // shift (0, cos phi), frozen by construction
    double spectral_radius = 0.0;  // of the discrete matrices; grows like n_r^2
    double rate_scale = 0.0;       // continuum rate scale max(zeta, m0, 1/R^2)
    double zero_tol = 0.0;

    double max_real_excluding_zeros() const {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& p : pairs)
            if (std::abs(p.extrapolated) >= zero_tol) best = std::max(best, p.lambda.real());
        return best;
    }
};

/// Eigenpairs of one mode sorted by descending real part, with relative residuals.
inline std::vector<Eigenpair> mode_eigenpairs(const ModeSystem& sys) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.matrix, true);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver did not converge");
    const auto vals = es.eigenvalues();
    const auto vecs = es.eigenvectors();
    const Eigen::MatrixXcd A = sys.matrix.cast<std::complex<double>>();
    std::vector<Eigenpair> out;
    for (int k = 0; k < vals.size(); ++k) {
        Eigenpair e;
        e.mode = sys.mode;
        e.lambda = e.extrapolated = vals[k];
        e.vector = vecs.col(k);
        e.residual = (A * e.vector - vals[k] * e.vector).norm() / e.vector.norm();
        out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.lambda.real() > b.lambda.real(); });
    return out;
}

/// Union of the mode spectra n = 0..n_max at resolution n_r, with zeros counted after two-grid
/// Richardson extrapolation (n_r/2 and n_r) against zero_tol = 1e-6 * rate_scale. The discrete spectral
/// radius is a grid artefact (it grows like n_r^2), so it is reported but not used for the threshold.
inline Spectrum full_spectrum(const SteadyState& s, int n_max, int n_r, int richardson_candidates = 4) {
    Spectrum spec;
    for (int n = 0; n <= n_max; ++n) {
        auto fine = mode_eigenpairs(assemble_operator_mode(n, s, n_r));
        const auto coarse = mode_eigenpairs(assemble_operator_mode(n, s, n_r / 2));
        // extrapolate the eigenvalues of smallest magnitude, matched to their nearest coarse partner
        std::vector<int> order(fine.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return std::abs(fine[a].lambda) < std::abs(fine[b].lambda); });
        for (int c = 0; c < std::min<int>(richardson_candidates, static_cast<int>(order.size())); ++c) {
            auto& e = fine[order[c]];
            double best = std::numeric_limits<double>::infinity();
            std::complex<double> partner;
            for (const auto& q : coarse)
                if (std::abs(q.lambda - e.lambda) < best) {
                    best = std::abs(q.lambda - e.lambda);
                    partner = q.lambda;
                }
            e.extrapolated = (4.0 * e.lambda - partner) / 3.0;
        }
        for (auto& e : fine) {
            spec.spectral_radius = std::max(spec.spectral_radius, std::abs(e.lambda));
            spec.pairs.push_back(std::move(e));
        }
    }
    std::sort(spec.pairs.begin(), spec.pairs.end(),
              [](const auto& a, const auto& b) { return a.lambda.real() > b.lambda.real(); });
    spec.rate_scale = std::max({s.params.zeta, s.m0, 1.0 / (s.R * s.R)});
    spec.zero_tol = 1e-6 * spec.rate_scale;
    spec.zero_multiplicity = spec.structural_zeros;
    for (const auto& e : spec.pairs)
        if (std::abs(e.extrapolated) < spec.zero_tol) ++spec.zero_multiplicity;
    return spec;
}

// ---------------------------------------------------------------------------------------------
// Rayleigh-type inequality on the disk for x-symmetric m with int m cos(phi) = 0:
//   int |grad m|^2 - m0 int m^2 >= -m0 pi R^2 <m>^2   whenever m0 <= lambda_3.
// Discrete fields are stored as cosine modes on the cell-centred radial grid.

struct RayleighReport {
    int trials = 0;
    int violations = 0;
    double slack_constant = 0.0;
    double worst_margin = 0.0;  // min over trials of (lhs + m0 pi R^2 <m>^2 + slack) / ||m||^2
    double constant_gap = 0.0;  // |lhs + m0 pi R^2 <m>^2| for m = const
    double eigen_lhs = 0.0;     // lhs / ||m||^2 for the third eigenfunction
};

namespace detail {

struct ModalField {
    std::vector<std::vector<double>> modes;  // modes[n][i]
};

// int |grad m|^2 over the disk with zero-flux boundary discretisation
inline double modal_gradient(const RadialGrid& g, const ModalField& f) {
    const double h = g.h();
    double total = 0.0;
    for (std::size_t n = 0; n < f.modes.size(); ++n) {
        const auto& u = f.modes[n];
        const double w = n == 0 ? 2.0 * kPi : kPi;
        double s = 0.0;
        for (int i = 0; i + 1 < g.n; ++i) s += g.face(i + 1) * std::pow((u[i + 1] - u[i]) / h, 2) * h;
        for (int i = 0; i < g.n; ++i) s += static_cast<double>(n * n) / g.node(i) * u[i] * u[i] * h;
        total += w * s;
    }
    return total;
}

inline double modal_mass(const RadialGrid& g, const ModalField& f) {
    double total = 0.0;
    for (std::size_t n = 0; n < f.modes.size(); ++n) {
        const double w = n == 0 ? 2.0 * kPi : kPi;
        double s = 0.0;
        for (int i = 0; i < g.n; ++i) s += f.modes[n][i] * f.modes[n][i] * g.node(i) * g.h();
        total += w * s;
    }
    return total;
}

inline double modal_mean(const RadialGrid& g, const ModalField& f) {
    double s = 0.0;
    for (int i = 0; i < g.n; ++i) s += f.modes[0][i] * g.node(i) * g.h();
    return 2.0 * kPi * s / (kPi * g.R * g.R);
}

// smallest nonzero eigenvalue of the discrete Neumann Laplacian in mode n (generalised symmetric problem)
inline std::pair<double, std::vector<double>> neumann_eigen(const RadialGrid& g, int n, int which) {
    const std::vector<double> zero(g.n, 0.0);
    const auto st = mode_flux_stencil(g, n, zero, BoundaryKind::Neumann).matrix;
    // -stencil u = mu r u ; symmetrise with D = diag(sqrt(r))
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(g.n, g.n);
    for (int i = 0; i < g.n; ++i) {
        const double si = std::sqrt(g.node(i));
        K(i, i) = -st.di[i] / (si * si);
        if (i > 0) K(i, i - 1) = -st.lo[i] / (si * std::sqrt(g.node(i - 1)));
        if (i + 1 < g.n) K(i, i + 1) = -st.up[i] / (si * std::sqrt(g.node(i + 1)));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (K + K.transpose()));
    const double mu = es.eigenvalues()[which];
    std::vector<double> u(g.n);
    for (int i = 0; i < g.n; ++i) u[i] = es.eigenvectors()(i, which) / std::sqrt(g.node(i));
    return {mu, u};
}

}  // namespace detail

inline RayleighReport rayleigh_inequality_check(double R, int n_r, int trials, unsigned seed = 12345,
                                                int max_mode = 6) {
    const RadialGrid g(n_r, R);
    const double m0 = third_neumann_eigenvalue(R);
    RayleighReport rep;
    rep.trials = trials;
    auto blank = [&] {
        detail::ModalField f;
        f.modes.assign(max_mode + 1, std::vector<double>(g.n, 0.0));
        return f;
    };
    auto lhs = [&](const detail::ModalField& f) {
        return detail::modal_gradient(g, f) - m0 * detail::modal_mass(g, f);
    };
    auto bound = [&](const detail::ModalField& f) {
        const double mean = detail::modal_mean(g, f);
        return -m0 * kPi * R * R * mean * mean;
    };
    // slack calibrated on the third eigenfunction: discrete vs exact eigenvalue gap, with safety factor 2
    const auto [mu2, u2] = detail::neumann_eigen(g, 2, 0);
    rep.slack_constant = 2.0 * std::abs(mu2 - m0) / (g.h() * g.h());
    {
        auto f = blank();
        f.modes[0].assign(g.n, 1.7);
        rep.constant_gap = std::abs(lhs(f) - bound(f));
        auto e = blank();
        e.modes[2] = u2;
        rep.eigen_lhs = lhs(e) / detail::modal_mass(g, e);
    }
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        auto f = blank();
        for (int n = 0; n <= max_mode; ++n) {
            const double amp = nd(rng) / (1.0 + n);
            // smooth random radial profile: a few random cosines in r plus a polynomial part
            double c[4];
            for (double& ci : c) ci = nd(rng);
            for (int i = 0; i < g.n; ++i) {
                const double x = g.node(i) / R;
                double v = c[0] + c[1] * std::cos(kPi * x) + c[2] * std::cos(2 * kPi * x) + c[3] * std::cos(3 * kPi * x);
                if (n > 0) v *= std::pow(x, n);  // regular at the origin
                f.modes[n][i] = amp * v;
            }
        }
        // enforce int m cos(phi) = 0
        double num = 0.0, den = 0.0;
        for (int i = 0; i < g.n; ++i) {
            num += f.modes[1][i] * g.node(i);
            den += g.node(i) * g.node(i) * g.node(i);
        }
        for (int i = 0; i < g.n; ++i) f.modes[1][i] -= num / den * g.node(i) * g.node(i);
        const double norm2 = detail::modal_mass(g, f);
        const double slack = rep.slack_constant * g.h() * g.h() * norm2;
        const double margin = lhs(f) - bound(f) + slack;
        if (margin < 0.0) ++rep.violations;
        rep.worst_margin = std::min(rep.worst_margin, margin / norm2);
    }
    return rep;
}

}  // namespace hsks
