#pragma once
// Bifurcation function F(R), its root and transversality, and the two-term traveling-wave expansion.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "angular.hpp"
#include "elliptic.hpp"
#include "geometry.hpp"
#include "radial.hpp"
#include "specfun.hpp"
#include "stability.hpp"

namespace hsks {

/// Average myosin density carried by the steady disk of radius R.
inline double lambda_of_r(double R, const ModelParams& p) { return steady_density(R, p); }

/// Convention for the argument of I_1' in F: R*kappa (consistent with psi) or kappa alone (Literal).
enum class BesselArgument { Scaled, Literal };

inline double f_of_r(double R, const ModelParams& p, BesselArgument arg = BesselArgument::Scaled) {
    const double L = lambda_of_r(R, p);
    if (!(p.zeta > L)) throw std::invalid_argument("f_of_r: requires zeta > Lambda(R)");
    const double k = std::sqrt(p.zeta - L);
    const double dprime = bessel_i_prime(1, arg == BesselArgument::Scaled ? R * k : k);
    return p.zeta * bessel_i(1, R * k) / (k * k * k * dprime) - R * L / (k * k);
}

struct BifurcationRoot {
    double R0 = 0.0;
    double slope = 0.0;  // F'(R0)
    bool degenerate = false;
    std::uintmax_t evaluations = 0;
};

/// Root of F on [lo, hi]: the first sign change on a 256-point scan of the admissible part (zeta > Lambda),
/// refined by TOMS 748 to 1e-13; slope by central difference.
inline BifurcationRoot find_bifurcation_radius(const ModelParams& p, double lo, double hi,
                                               BesselArgument arg = BesselArgument::Scaled) {
    if (!(lo > 0.0 && hi > lo)) throw std::invalid_argument("find_bifurcation_radius: need 0 < lo < hi");
    auto F = [&](double R) { return f_of_r(R, p, arg); };
    auto admissible = [&](double R) { return p.zeta > lambda_of_r(R, p); };
    constexpr int scan = 256;
    double a = 0.0, fa = 0.0, b = 0.0, fb = 0.0, fscale = 0.0;
    bool have_prev = false, found = false;
    for (int k = 0; k <= scan && !found; ++k) {
        const double R = lo + (hi - lo) * k / scan;
        if (!admissible(R)) {
            have_prev = false;
            continue;
        }
        const double fR = F(R);
        fscale = std::max(fscale, std::abs(fR));
        if (have_prev && (fa < 0.0) != (fR < 0.0)) {
            b = R;
            fb = fR;
            found = true;
        } else {
            a = R;
            fa = fR;
            have_prev = true;
        }
    }
    if (!found)
        throw std::domain_error("find_bifurcation_radius: F has no sign change on [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
    std::uintmax_t iters = 200;
    auto tol = [](double x, double y) { return std::abs(y - x) < 1e-13; };
    const auto br = boost::math::tools::toms748_solve(F, a, b, fa, fb, tol, iters);
    BifurcationRoot out;
    out.R0 = 0.5 * (br.first + br.second);
    out.evaluations = iters;
    const double h = 1e-6 * out.R0;
    out.slope = (F(out.R0 + h) - F(out.R0 - h)) / (2.0 * h);
    out.degenerate = std::abs(out.slope) < 1e-6 * fscale / (hi - lo);
    return out;
}

/// psi(r, R) on the unit disk: -R Lambda r / k^2 + zeta I1(R k r) / (k^3 I1'(R k)).
inline double psi_profile(double r, double R, const ModelParams& p) {
    const double L = lambda_of_r(R, p);
    if (!(p.zeta > L)) throw std::invalid_argument("psi_profile: requires zeta > Lambda(R)");
    const double k = std::sqrt(p.zeta - L);
    return -R * L * r / (k * k) + p.zeta * bessel_i(1, R * k * r) / (k * k * k * bessel_i_prime(1, R * k));
}

// ---------------------------------------------------------------------------------------------

/// Two-term expansion about the bifurcating disk:
///   boundary r = R0 + V^2 (rho20 + rho22 cos 2phi), potential phi0 + V phi1(s) cos phi + V^2 phi2(s, phi),
///   density normalisation (m0 + V^2 mu2) exp(Phi - phi0 - V x).
/// Potential profiles live on the reference disk of the radial-scaling map s -> s (R0 + rho)/R0.
struct TravelingWave {
    double R0 = 0.0;
    ModelParams params;
    double m0 = 0.0;
    double phi0 = 0.0;
    RadialProfile phi1;
    RadialProfile phi2_mode0, phi2_mode2;
    double rho2_mode0 = 0.0, rho2_mode2 = 0.0;
    double mu2 = 0.0;             // V^2 correction of the normalisation constant
    double lambda2_tilde = 0.0;   // mu2 exp(-phi0)
    double density2 = 0.0;        // V^2 correction of the average density Lambda along the branch
    double closure_condition = 0.0;
    double solvability_defect = 0.0;  // O(V^3) mode-1 Fredholm defect of the final expansion
    double valid_V = 0.0;

    double average_density(double V) const { return m0 + V * V * density2; }

    /// Boundary displacement at velocity V.
    BoundaryShape shape(double V) const {
        return BoundaryShape(R0, {V * V * rho2_mode0, 0.0, V * V * rho2_mode2});
    }
    /// O(V) profile at physical radius r (closed form, analytic past R0).
    double phi1_at(double r) const { return Phi1Closed(R0, m0, params.zeta)(r); }
    double phi1_slope(double r) const { return Phi1Closed(R0, m0, params.zeta).slope(r); }

    /// Phi at reference radius s (s = R0 on the boundary) and angle phi. The O(V) term is evaluated at the
    /// physical radius s a/R0 so that it stays smooth through the origin; the O(V^2) terms use s directly.
    double potential_at(double s, double phi, double V) const {
        const double a = R0 + V * V * (rho2_mode0 + rho2_mode2 * std::cos(2.0 * phi));
        const bool edge = s >= R0;
        const double p20 = edge ? phi2_mode0.boundary_value : phi2_mode0.at(s);
        const double p22 = edge ? phi2_mode2.boundary_value : phi2_mode2.at(s);
        return phi0 + V * phi1_at(s * a / R0) * std::cos(phi) + V * V * (p20 + p22 * std::cos(2.0 * phi));
    }
    /// d/ds of potential_at at the boundary.
    double potential_slope_boundary(double phi, double V) const {
        const double a = R0 + V * V * (rho2_mode0 + rho2_mode2 * std::cos(2.0 * phi));
        return V * phi1_slope(a) * (a / R0) * std::cos(phi) +
               V * V * (phi2_mode0.boundary_derivative + phi2_mode2.boundary_derivative * std::cos(2.0 * phi));
    }
    /// potential_at on node i of the expansion grid, without interpolation of the O(V^2) profiles.
    double potential_node(int i, double phi, double V) const {
        const double s = phi1.grid.node(i);
        const double a = R0 + V * V * (rho2_mode0 + rho2_mode2 * std::cos(2.0 * phi));
        return phi0 + V * phi1_at(s * a / R0) * std::cos(phi) +
               V * V * (phi2_mode0.values[i] + phi2_mode2.values[i] * std::cos(2.0 * phi));
    }
};

namespace detail {

// Expansion with the O(V^2) average-density correction prescribed.
inline TravelingWave tw_expand_with_density(double R0, const ModelParams& params, int n_r, double density2) {
    params.validate();
    TravelingWave tw;
    tw.R0 = R0;
    tw.params = params;
    tw.m0 = lambda_of_r(R0, params);
    tw.phi0 = -params.gamma / (params.zeta * R0);
    const double m0 = tw.m0, zeta = params.zeta, gamma = params.gamma;
    if (!(zeta > m0)) throw std::invalid_argument("tw_expand: requires zeta > m0");
    const double k2 = zeta - m0;
    const Phi1Closed closed(R0, m0, zeta);
    if (std::abs(closed.boundary_slope() - 1.0) > 1e-8)
        throw std::invalid_argument("tw_expand: R0 is not a bifurcation radius (phi1'(R0) = " +
                                    std::to_string(closed.boundary_slope()) + ")");
    const RadialGrid g(n_r, R0);
    tw.phi1 = sample_profile(g, 1, closed);
    tw.phi1.boundary_value = 0.0;
    tw.phi1.boundary_derivative = closed.boundary_slope();

    // (phi1 - r)^2 cos^2(phi) / 2 = s (1 + cos 2phi) with s = (phi1 - r)^2 / 4
    auto s = [&](double r) { return 0.25 * std::pow(closed(r) - r, 2); };
    const auto src = sample_profile(g, 0, [&](double r) { return -m0 * s(r); });
    auto src2 = src;
    src2.mode = 2;
    tw.phi2_mode2 = solve_mode_bvp(2, k2, src2, BoundaryKind::Neumann, 0.0);
    tw.rho2_mode2 = -zeta * R0 * R0 * tw.phi2_mode2.boundary_value / (3.0 * gamma);

    // mode 0: phi2 = P + c, c = (mu2 - 2 pi p' R0 rho20) / k2
    const auto P = solve_mode_bvp(0, k2, src, BoundaryKind::Neumann, 0.0);
    double intP = 0.0, ints = 0.0;
    for (int i = 0; i < g.n; ++i) {
        intP += 2.0 * kPi * P.values[i] * g.node(i) * g.h();
        ints += 2.0 * kPi * s(g.node(i)) * g.node(i) * g.h();
    }
    const double pp = effective_pressure_slope(params), A = kPi * R0 * R0;
    // unknowns (mu2, rho20): curvature condition at mode 0 and average density m0 + V^2 density2 at order V^2
    Eigen::Matrix2d M;
    M << zeta / k2, -zeta * 2.0 * kPi * pp * R0 / k2 - gamma / (R0 * R0),
        A + m0 * A / k2, -m0 * A * 2.0 * kPi * pp * R0 / k2;
    const Eigen::Vector2d rhs(-zeta * P.boundary_value, -m0 * (intP + ints) + density2 * A);
    const Eigen::JacobiSVD<Eigen::Matrix2d> svd(M);
    tw.closure_condition = svd.singularValues()(0) / svd.singularValues()(1);
    if (!std::isfinite(tw.closure_condition) || tw.closure_condition > 1e12)
        throw std::domain_error("tw_expand: singular mode-0 closure, condition number " +
                                std::to_string(tw.closure_condition));
    const Eigen::Vector2d sol = M.partialPivLu().solve(rhs);
    tw.mu2 = sol(0);
    tw.rho2_mode0 = sol(1);
    tw.lambda2_tilde = tw.mu2 * std::exp(-tw.phi0);
    tw.density2 = density2;
    const double c = (tw.mu2 - 2.0 * kPi * pp * R0 * tw.rho2_mode0) / k2;
    tw.phi2_mode0 = P;
    for (double& v : tw.phi2_mode0.values) v += c;
    tw.phi2_mode0.boundary_value += c;

    // |rho| <= 0.9 R0: the boundary stays at least R0/10 away from the origin
    const double amp = std::abs(tw.rho2_mode0) + std::abs(tw.rho2_mode2);
    tw.valid_V = amp > 0.0 ? std::sqrt(0.9 * R0 / amp) : std::numeric_limits<double>::infinity();
    return tw;
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------

/// Traveling-wave shape and fields on the reference grid of the radial-scaling map.
struct TwFields {
    BoundaryShape shape;
    PolarField m;
    PolarField phi;
    double normalisation = 0.0;  // Lambda |Omega| / int exp(Phi - V x)
    MapKind kind = MapKind::RadialScaling;
};

namespace detail {

// int f over the mapped domain for a radial-scaling map: x = s a(phi)/R0 e_r, dA = s (a/R0)^2 ds dphi.
template <class F>
double radial_scaling_integral(const BoundaryShape& shape, int n_phi, F&& f) {
    const double R0 = shape.R;
    double total = 0.0;
    for (int j = 0; j < n_phi; ++j) {
        const double ph = 2.0 * kPi * j / n_phi;
        const double a = R0 + shape.rho(ph);
        const double q = boost::math::quadrature::gauss<double, 64>::integrate(
            [&](double s) { return f(s, ph, a) * s; }, 0.0, R0);
        total += q * (a / R0) * (a / R0) * 2.0 * kPi / n_phi;
    }
    return total;
}

}  // namespace detail

/// Lambda |Omega| / int exp(Phi - phi0 - V x): the factor turning exp(Phi - phi0 - V x) into the myosin density.
inline double tw_normalisation(const TravelingWave& tw, double V, int n_phi = 128) {
    const auto shape = tw.shape(V);
    const double integral = detail::radial_scaling_integral(shape, std::max(n_phi, 64), [&](double s, double ph, double a) {
        return std::exp(tw.potential_at(s, ph, V) - tw.phi0 - V * s * a / tw.R0 * std::cos(ph));
    });
    return tw.average_density(V) * area(shape) / integral;
}

inline TwFields tw_fields(const TravelingWave& tw, double V, int n_r = 64, int n_phi = 128) {
    if (std::abs(V) > tw.valid_V) throw std::invalid_argument("tw_fields: |V| beyond valid_V");
    TwFields out;
    out.shape = tw.shape(V);
    const RadialGrid g(n_r, tw.R0);
    out.m = PolarField(g, n_phi);
    out.phi = PolarField(g, n_phi);
    const bool same = g.n == tw.phi1.grid.n;
    auto expo = [&](double s, double ph, double a, double Phi) {
        return std::exp(Phi - tw.phi0 - V * s * a / tw.R0 * std::cos(ph));
    };
    out.normalisation = tw_normalisation(tw, V, n_phi);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < n_phi; ++j) {
            const double ph = out.m.phi(j), s = g.node(i);
            const double a = tw.R0 + out.shape.rho(ph);
            const double Phi = same ? tw.potential_node(i, ph, V) : tw.potential_at(s, ph, V);
            out.phi.at(i, j) = Phi;
            out.m.at(i, j) = out.normalisation * expo(s, ph, a, Phi);
        }
    return out;
}

/// Boundary myosin density m(R0 + rho(phi), phi) on an angular grid.
inline std::vector<double> tw_boundary_myosin(const TravelingWave& tw, double V, int n_phi) {
    const auto f = tw_fields(tw, V, 32, 64);
    std::vector<double> out(n_phi);
    for (int j = 0; j < n_phi; ++j) {
        const double ph = 2.0 * kPi * j / n_phi;
        const double a = tw.R0 + f.shape.rho(ph);
        out[j] = f.normalisation * std::exp(tw.potential_at(tw.R0, ph, V) - tw.phi0 - V * a * std::cos(ph));
    }
    return out;
}

struct MassVelocityCurve {
    std::vector<double> velocities;
    std::vector<double> masses;        // truncated normalisation (m0 + V^2 mu2) e^{-phi0} int e^{Phi - V x}
    std::vector<double> masses_exact;  // (m0 + V^2 density2) |Omega(V)|, the exact-normalisation mass
    double critical_mass = 0.0;
};

inline double tw_mass(const TravelingWave& tw, double V) {
    const auto shape = tw.shape(V);
    const double integral = detail::radial_scaling_integral(shape, 128, [&](double s, double ph, double a) {
        return std::exp(tw.potential_at(s, ph, V) - tw.phi0 - V * s * a / tw.R0 * std::cos(ph));
    });
    return (tw.m0 + V * V * tw.mu2) * integral;
}

inline MassVelocityCurve mass_vs_velocity(const TravelingWave& tw, const std::vector<double>& V_grid) {
    MassVelocityCurve c;
    c.critical_mass = tw.m0 * kPi * tw.R0 * tw.R0;
    for (double V : V_grid) {
        if (std::abs(V) > tw.valid_V) throw std::invalid_argument("mass_vs_velocity: V beyond valid_V");
        c.velocities.push_back(V);
        c.masses.push_back(tw_mass(tw, V));
        c.masses_exact.push_back(tw.average_density(V) * area(tw.shape(V)));
    }
    return c;
}

// ---------------------------------------------------------------------------------------------

/// Residuals of the traveling-wave problem evaluated on the expansion at velocity V:
/// interior  Delta Phi + m - zeta Phi - p_eff(|Omega|), boundary  d_nu(Phi - V x)  and  zeta Phi + gamma kappa.
struct TwResidualFields {
    PolarField interior;
    std::vector<double> neumann, curvature;
};

struct TwResidual {
    double interior = 0.0;
    double neumann = 0.0;
    double curvature = 0.0;
    double total() const { return std::max({interior, neumann, curvature}); }
};

inline TwResidualFields tw_residual_fields(const TravelingWave& tw, double V, int n_phi = 64) {
    const RadialGrid& g = tw.phi1.grid;
    const int N = g.n;
    const auto shape = tw.shape(V);
    const auto fields = tw_fields(tw, V, N, n_phi);
    const auto geo = build_map_geometry(shape, g, n_phi, MapKind::RadialScaling);
    MappedOperator D(geo);
    std::vector<double> b(n_phi), d(n_phi);
    for (int j = 0; j < n_phi; ++j) {
        const double ph = fields.phi.phi(j);
        b[j] = tw.potential_at(tw.R0, ph, V);
        d[j] = tw.potential_slope_boundary(ph, V);
    }
    TwResidualFields out;
    D.apply(fields.phi, b, d, out.interior);
    const double p = effective_pressure(area(shape), tw.params);
    for (std::size_t k = 0; k < out.interior.values.size(); ++k)
        out.interior.values[k] = out.interior.values[k] / geo.J[k] + fields.m.values[k] -
                                 tw.params.zeta * fields.phi.values[k] - p;
    // boundary: physical gradient from (d_s, d_phi) through the radial-scaling map at s = R0
    AngularTransform tr(n_phi);
    const auto db = tr.derivative(b, 1);
    const auto kappa = curvature(shape, n_phi);
    const auto smp = shape.samples(n_phi);
    out.neumann.resize(n_phi);
    out.curvature.resize(n_phi);
    for (int j = 0; j < n_phi; ++j) {
        const double ph = fields.phi.phi(j);
        const double a = tw.R0 + smp.rho[j], a1 = smp.d1[j];
        const double g_r = tw.R0 * d[j] / a;
        const double g_t = (db[j] - a1 * g_r) / a;
        const double nr = a / std::hypot(a, a1), nt = -a1 / std::hypot(a, a1);
        out.neumann[j] = g_r * nr + g_t * nt - V * (std::cos(ph) * nr - std::sin(ph) * nt);
        out.curvature[j] = tw.params.zeta * b[j] + tw.params.gamma * kappa[j];
    }
    return out;
}

inline TwResidual tw_residual(const TravelingWave& tw, double V, int n_phi = 64) {
    const auto f = tw_residual_fields(tw, V, n_phi);
    auto amax = [](std::span<const double> v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    };
    return {amax(f.interior.values), amax(f.neumann), amax(f.curvature)};
}

/// Fredholm defect of the O(V^3) mode-1 problem. Adding V^3 u(r) cos(phi) to the potential shifts the
/// mode-1 residuals by V^3 (L u, u'(R0), zeta u(R0)) with L = Delta_1 - (zeta - m0); pairing with the
/// regular kernel w = I1(k r) gives the condition
///   -int r3 w r dr + R0 N3 w(R0) - R0 D3 w'(R0) / zeta = 0.
/// The O(V^3) coefficients come from a fit of the odd residual series V S1 + V^3 S3 + V^5 S5, whose
/// O(V) part absorbs the discretisation error of the first-order term.
inline double tw_solvability_defect(const TravelingWave& tw, double V_max, int n_phi = 32) {
    const RadialGrid& g = tw.phi1.grid;
    const double k = std::sqrt(tw.params.zeta - tw.m0), R0 = tw.R0;
    const double wR = bessel_i(1, k * R0), dwR = k * bessel_i_prime(1, k * R0);
    AngularTransform tr(n_phi);
    auto defect = [&](double V) {
        const auto f = tw_residual_fields(tw, V, n_phi);
        double S = 0.0;
        for (int i = 0; i < g.n; ++i) {
            const double r = g.node(i);
            S -= tr.cosine_coefficients(f.interior.row(i))[1] * bessel_i(1, k * r) * r * g.h();
        }
        S += R0 * tr.cosine_coefficients(f.neumann)[1] * wR;
        S -= R0 * tr.cosine_coefficients(f.curvature)[1] * dwR / tw.params.zeta;
        return S;
    };
    Eigen::Matrix3d A;
    Eigen::Vector3d y;
    for (int q = 0; q < 3; ++q) {
        const double V = V_max / (1 << q);
        A.row(q) << V, V * V * V, std::pow(V, 5);
        y(q) = defect(V);
    }
    return A.partialPivLu().solve(y)(1);
}

enum class TwClosure {
    Solvability,      // density correction from the O(V^3) mode-1 solvability condition
    MassConsistency,  // average density pinned to Lambda(R0)
};

/// Two-term expansion at the bifurcation radius R0. The O(V^2) mode-0 block is closed by the curvature
/// condition plus the average density m0 + V^2 density2; density2 comes from the chosen closure.
inline TravelingWave tw_expand(double R0, const ModelParams& params, int n_r = 1024,
                               TwClosure closure = TwClosure::Solvability) {
    auto tw = detail::tw_expand_with_density(R0, params, n_r, 0.0);
    if (closure == TwClosure::MassConsistency) return tw;
    // the defect is affine in density2; a second secant step absorbs the fit error
    // higher odd powers scale with (V^2 |rho2| / R0); stay well inside valid_V
    const double V_max = std::min(0.1, 0.125 * tw.valid_V);
    double d0 = 0.0, S0 = tw_solvability_defect(tw, V_max);
    double d1 = tw.m0;
    for (int it = 0; it < 2; ++it) {
        tw = detail::tw_expand_with_density(R0, params, n_r, d1);
        const double S1 = tw_solvability_defect(tw, V_max);
        if (!(std::abs(S1 - S0) > 1e-12 * std::max(std::abs(S0), 1.0)))
            throw std::domain_error("tw_expand: solvability condition does not depend on the density correction");
        const double d2 = d1 - S1 * (d1 - d0) / (S1 - S0);
        d0 = d1;
        S0 = S1;
        d1 = d2;
    }
    tw = detail::tw_expand_with_density(R0, params, n_r, d1);
    tw.solvability_defect = tw_solvability_defect(tw, V_max);
    return tw;
}

// ---------------------------------------------------------------------------------------------
// Figure presets: each fixes (m0, zeta, gamma); p_h places the steady density m0 at the
// closed-form critical radius and k_e is an area stiffness satisfying the area-mode hypothesis.

struct FigurePreset {
    std::string name;
    double m0, zeta, gamma, k_e;
    std::vector<double> velocities;
    double reported_R0;  // value quoted with the figure (0 if none)

    double critical_R() const { return critical_radius(m0, zeta); }
    ModelParams params() const { return params_for_density(m0, zeta, gamma, critical_R(), k_e); }
};

inline FigurePreset fig1_preset() { return {"fig1", 3.0, 4.0, 0.03, 4.0, {0.0, 0.1, 0.2, 0.3}, 0.501}; }
inline FigurePreset fig2_preset() {
    std::vector<double> v;
    for (int k = 0; k <= 40; ++k) v.push_back(0.01 * k);
    return {"fig2", 1.1, 2.1, 0.75, 0.5, v, 0.0};
}

}  // namespace hsks
