#pragma once
// Model constants, boundary shapes, curvature and the boundary-fitted map of the reference disk.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "angular.hpp"
#include "radial.hpp"

namespace hsks {

inline constexpr double kPi = std::numbers::pi;

struct ModelParams {
    double zeta = 1.0;   // adhesion drag
    double gamma = 0.0;  // surface tension
    double p_h = 0.0;    // homeostatic pressure
    double k_e = 0.0;    // area stiffness

    void validate() const {
        if (!(zeta > 0.0)) throw std::invalid_argument("ModelParams: zeta must be positive");
        if (!(gamma >= 0.0)) throw std::invalid_argument("ModelParams: gamma must be non-negative");
        if (!(k_e >= 0.0)) throw std::invalid_argument("ModelParams: k_e must be non-negative");
    }
};

/// p_eff(area) = p_h - k_e * area.
inline double effective_pressure(double area, const ModelParams& p) {
    if (!(area > 0.0)) throw std::invalid_argument("effective_pressure: area must be positive");
    return p.p_h - p.k_e * area;
}
inline double effective_pressure_slope(const ModelParams& p) { return -p.k_e; }

/// Average density of the steady disk of radius R: p_eff(pi R^2) - gamma / R.
inline double steady_density(double R, const ModelParams& p) {
    return effective_pressure(kPi * R * R, p) - p.gamma / R;
}

/// Parameters whose steady disk of radius R carries density m0; p_h absorbs the remainder.
inline ModelParams params_for_density(double m0, double zeta, double gamma, double R, double k_e) {
    ModelParams p{zeta, gamma, 0.0, k_e};
    p.p_h = m0 + gamma / R + k_e * kPi * R * R;
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------------------------
// First-order dual numbers carrying partials in (r, phi).

template <class T>
struct Dual2 {
    T v{}, dr{}, dp{};
};

template <class T>
Dual2<T> operator+(const Dual2<T>& a, const Dual2<T>& b) { return {a.v + b.v, a.dr + b.dr, a.dp + b.dp}; }
template <class T>
Dual2<T> operator-(const Dual2<T>& a, const Dual2<T>& b) { return {a.v - b.v, a.dr - b.dr, a.dp - b.dp}; }
template <class T>
Dual2<T> operator*(const Dual2<T>& a, const Dual2<T>& b) {
    return {a.v * b.v, a.dr * b.v + a.v * b.dr, a.dp * b.v + a.v * b.dp};
}
template <class T>
Dual2<T> operator/(const Dual2<T>& a, const Dual2<T>& b) {
    const T inv = T(1) / b.v;
    const T q = a.v * inv;
    return {q, (a.dr - q * b.dr) * inv, (a.dp - q * b.dp) * inv};
}
template <class T>
Dual2<T> operator*(double s, const Dual2<T>& a) { return {s * a.v, s * a.dr, s * a.dp}; }
template <class T>
Dual2<T> dsqrt(const Dual2<T>& a) {
    using std::sqrt;
    const T s = sqrt(a.v);
    const T d = T(0.5) / s;
    return {s, a.dr * d, a.dp * d};
}

// ---------------------------------------------------------------------------------------------

/// Boundary r = R + rho(phi) with rho an even cosine series, plus the centre abscissa.
struct BoundaryShape {
    double R = 1.0;
    std::vector<double> rho_cos;  // rho_hat_0 .. rho_hat_K
    double Xc = 0.0;

    BoundaryShape() = default;
    BoundaryShape(double radius, std::vector<double> coeffs, double xc = 0.0)
        : R(radius), rho_cos(std::move(coeffs)), Xc(xc) {
        if (!(R > 0.0)) throw std::invalid_argument("BoundaryShape: base radius must be positive");
    }

    static BoundaryShape circle(double radius) { return BoundaryShape(radius, {0.0}); }

    /// Build from even samples on a uniform angular grid; odd content is rejected.
    static BoundaryShape from_samples(double radius, std::span<const double> samples, double xc = 0.0) {
        const int n = static_cast<int>(samples.size());
        double scale = 0.0, asym = 0.0;
        for (int j = 0; j < n; ++j) {
            scale = std::max(scale, std::abs(samples[j]));
            asym = std::max(asym, std::abs(samples[j] - samples[(n - j) % n]));
        }
        if (asym > 1e-12 * std::max(1.0, scale))
            throw std::invalid_argument("BoundaryShape: sine content in boundary samples");
        AngularTransform tr(n);
        return BoundaryShape(radius, tr.cosine_coefficients(samples), xc);
    }

    int max_mode() const { return static_cast<int>(rho_cos.size()) - 1; }

    double coeff(int k) const { return (k >= 0 && k < static_cast<int>(rho_cos.size())) ? rho_cos[k] : 0.0; }

    /// rho and its first two angular derivatives at phi.
    void eval(double phi, double& rho, double& d1, double& d2) const {
        rho = d1 = d2 = 0.0;
        for (int k = 0; k < static_cast<int>(rho_cos.size()); ++k) {
            const double c = std::cos(k * phi), s = std::sin(k * phi);
            rho += rho_cos[k] * c;
            d1 -= k * rho_cos[k] * s;
            d2 -= static_cast<double>(k) * k * rho_cos[k] * c;
        }
    }
    double rho(double phi) const {
        double r, a, b;
        eval(phi, r, a, b);
        return r;
    }

    /// Samples of rho, rho', rho'' on the angular grid.
    struct Samples {
        std::vector<double> rho, d1, d2;
    };
    Samples samples(int n_phi) const {
        Samples s{std::vector<double>(n_phi), std::vector<double>(n_phi), std::vector<double>(n_phi)};
        for (int j = 0; j < n_phi; ++j) eval(2.0 * kPi * j / n_phi, s.rho[j], s.d1[j], s.d2[j]);
        return s;
    }

    /// Throws if R + rho <= 0 somewhere (checked on a fine sampling).
    void check_nondegenerate() const {
        const int n = std::max(256, 8 * static_cast<int>(rho_cos.size()));
        for (int j = 0; j < n; ++j)
            if (R + rho(2.0 * kPi * j / n) <= 0.0)
                throw std::domain_error("BoundaryShape: degenerate domain (R + rho <= 0)");
    }
};

/// kappa = ((R+rho)^2 + 2 rho'^2 - rho''(R+rho)) / ((R+rho)^2 + rho'^2)^{3/2} at each grid node.
inline std::vector<double> curvature(const BoundaryShape& shape, int n_phi) {
    shape.check_nondegenerate();
    const auto s = shape.samples(n_phi);
    std::vector<double> kappa(n_phi);
    for (int j = 0; j < n_phi; ++j) {
        const double a = shape.R + s.rho[j];
        const double q = a * a + s.d1[j] * s.d1[j];
        kappa[j] = (a * a + 2.0 * s.d1[j] * s.d1[j] - s.d2[j] * a) / (q * std::sqrt(q));
    }
    return kappa;
}

/// First variation of the curvature at `shape` in direction drho (given as samples of drho, drho', drho'').
inline std::vector<double> curvature_variation(const BoundaryShape& shape, int n_phi, std::span<const double> v,
                                               std::span<const double> v1, std::span<const double> v2) {
    const auto s = shape.samples(n_phi);
    std::vector<double> out(n_phi);
    for (int j = 0; j < n_phi; ++j) {
        const double a = shape.R + s.rho[j], p = s.d1[j], pp = s.d2[j];
        const double N = a * a + 2.0 * p * p - pp * a;
        const double q = a * a + p * p;
        const double dN = 2.0 * a * v[j] + 4.0 * p * v1[j] - v2[j] * a - pp * v[j];
        const double dq = 2.0 * a * v[j] + 2.0 * p * v1[j];
        out[j] = dN / std::pow(q, 1.5) - 1.5 * N * dq / std::pow(q, 2.5);
    }
    return out;
}

/// |Omega| = int (R + rho)^2 / 2 dphi, exact for the cosine series.
inline double area(const BoundaryShape& shape) {
    double sum = 2.0 * kPi * std::pow(shape.R + shape.coeff(0), 2);
    for (int k = 1; k < static_cast<int>(shape.rho_cos.size()); ++k) sum += kPi * shape.rho_cos[k] * shape.rho_cos[k];
    return 0.5 * sum;
}

/// Move the cos(phi) component of rho into the centre abscissa.
inline BoundaryShape recenter(const BoundaryShape& shape) {
    BoundaryShape out = shape;
    if (out.rho_cos.size() > 1) {
        out.Xc += out.rho_cos[1];
        out.rho_cos[1] = 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Boundary-fitted map. In the polar frame at reference angle phi a point is (r + eta) e_r + sigma e_phi.

/// Quintic smoothstep: 0 below R/2, 1 above 2R/3, C^2 in between.
inline double cutoff(double r, double R) {
    const double t = (r - 0.5 * R) / (R / 6.0);
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}
inline double cutoff_slope(double r, double R) {
    const double t = (r - 0.5 * R) / (R / 6.0);
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return 30.0 * t * t * (1.0 - t) * (1.0 - t) / (R / 6.0);
}

enum class MapKind { BoundaryFitted, RadialScaling };

/// eta and sigma with partials in (r, phi). Inputs rho, rho' carry their phi-derivatives.
template <class T>
void map_offsets(MapKind kind, double R, double eps, double r, const Dual2<T>& rho, const Dual2<T>& drho,
                 Dual2<T>& eta, Dual2<T>& sigma) {
    if (kind == MapKind::RadialScaling) {
        const Dual2<T> rr{T(r), T(1), T(0)};
        eta = (eps / R) * (rr * rho);
        sigma = Dual2<T>{};
        return;
    }
    const Dual2<T> chi{T(cutoff(r, R)), T(cutoff_slope(r, R)), T(0)};
    if (chi.v == T(0) && chi.dr == T(0)) {
        eta = sigma = Dual2<T>{};
        return;
    }
    const Dual2<T> depth{T(R - r), T(-1), T(0)};
    const Dual2<T> Rc{T(R), T(0), T(0)};
    const Dual2<T> a = Rc + eps * rho;
    const Dual2<T> S = dsqrt((eps * eps) * (drho * drho) + a * a);
    eta = chi * (eps * (drho * drho * depth) / ((a + S) * S) + rho);
    sigma = chi * (depth * drho / S);
}

/// Image of reference point (r, phi) under the map.
inline std::pair<double, double> boundary_map(const BoundaryShape& shape, double eps, double r, double phi,
                                              MapKind kind = MapKind::BoundaryFitted) {
    if (r < 0.0 || r > shape.R * (1.0 + 1e-12)) throw std::domain_error("boundary_map: r outside [0,R]");
    double p, p1, p2;
    shape.eval(phi, p, p1, p2);
    if (shape.R + eps * p <= 0.0) throw std::domain_error("boundary_map: degenerate domain");
    Dual2<double> eta, sigma;
    map_offsets<double>(kind, shape.R, eps, r, {p, 0.0, p1}, {p1, 0.0, p2}, eta, sigma);
    const double c = std::cos(phi), s = std::sin(phi);
    const double rad = r + eps * eta.v, tan = eps * sigma.v;
    return {rad * c - tan * s, rad * s + tan * c};
}

/// Jacobian determinant of the map at (r, phi).
inline double map_jacobian(const BoundaryShape& shape, double eps, double r, double phi,
                           MapKind kind = MapKind::BoundaryFitted) {
    double p, p1, p2;
    shape.eval(phi, p, p1, p2);
    Dual2<double> eta, sigma;
    map_offsets<double>(kind, shape.R, eps, r, {p, 0.0, p1}, {p1, 0.0, p2}, eta, sigma);
    const double er = eps * eta.dr, ep = eps * eta.dp, sr = eps * sigma.dr, sp = eps * sigma.dp, s = eps * sigma.v;
    return (1.0 + er) * (r + eps * eta.v) + sp * (1.0 + er) + s * sr - sr * ep;
}

/// Sampled metric data of the map on the tensor grid, at nodes (n_r x n_phi) and radial faces ((n_r+1) x n_phi).
struct MapGeometry {
    RadialGrid grid;
    int n_phi = 0;
    MapKind kind = MapKind::BoundaryFitted;
    // nodes
    std::vector<double> J, A_pr, A_pp;
    // faces
    std::vector<double> Jf, A_rr_f, A_rp_f;
    // polar-frame components of the tangent vectors (nodes then faces), kept for mesh-velocity terms
    std::vector<double> Xr_r, Xr_p, Xp_r, Xp_p;
    std::vector<double> Xr_r_f, Xr_p_f, Xp_r_f, Xp_p_f;
    // offsets eta, sigma at nodes and faces
    std::vector<double> eta, sigma, eta_f, sigma_f;

    int node_index(int i, int j) const { return i * n_phi + j; }
};

namespace detail {

struct PointMetric {
    double eta, sigma, xr_r, xr_p, xp_r, xp_p, J;
};

template <class T>
struct PointMetricT {
    T eta, sigma, J;
};

template <class T>
PointMetricT<T> point_metric(MapKind kind, double R, double r, T rho, T d1, T d2) {
    Dual2<T> eta, sigma;
    map_offsets<T>(kind, R, 1.0, r, {rho, T(0), d1}, {d1, T(0), d2}, eta, sigma);
    const T xr_r = T(1) + eta.dr, xr_p = sigma.dr;
    const T xp_r = eta.dp - sigma.v, xp_p = T(r) + eta.v + sigma.dp;
    return {eta.v, sigma.v, xr_r * xp_p - xr_p * xp_r};
}

inline PointMetric point_metric_full(MapKind kind, double R, double r, double rho, double d1, double d2) {
    Dual2<double> eta, sigma;
    map_offsets<double>(kind, R, 1.0, r, {rho, 0.0, d1}, {d1, 0.0, d2}, eta, sigma);
    PointMetric m{};
    m.eta = eta.v;
    m.sigma = sigma.v;
    m.xr_r = 1.0 + eta.dr;
    m.xr_p = sigma.dr;
    m.xp_r = eta.dp - sigma.v;
    m.xp_p = r + eta.v + sigma.dp;
    m.J = m.xr_r * m.xp_p - m.xr_p * m.xp_r;
    return m;
}

}  // namespace detail

/// Build the sampled metric for the shape's map on the given grid (grid.R must equal shape.R).
inline MapGeometry build_map_geometry(const BoundaryShape& shape, const RadialGrid& grid, int n_phi,
                                      MapKind kind = MapKind::BoundaryFitted) {
    shape.check_nondegenerate();
    MapGeometry g;
    g.grid = grid;
    g.n_phi = n_phi;
    g.kind = kind;
    const int N = grid.n;
    const auto s = shape.samples(n_phi);
    const std::size_t nn = static_cast<std::size_t>(N) * n_phi, nf = static_cast<std::size_t>(N + 1) * n_phi;
    for (auto* v : {&g.J, &g.A_pr, &g.A_pp, &g.Xr_r, &g.Xr_p, &g.Xp_r, &g.Xp_p, &g.eta, &g.sigma}) v->assign(nn, 0.0);
    for (auto* v : {&g.Jf, &g.A_rr_f, &g.A_rp_f, &g.Xr_r_f, &g.Xr_p_f, &g.Xp_r_f, &g.Xp_p_f, &g.eta_f, &g.sigma_f})
        v->assign(nf, 0.0);
    for (int i = 0; i < N; ++i) {
        const double r = grid.node(i);
        for (int j = 0; j < n_phi; ++j) {
            const auto m = detail::point_metric_full(kind, shape.R, r, s.rho[j], s.d1[j], s.d2[j]);
            if (!(m.J > 0.0)) throw std::domain_error("build_map_geometry: map folds (non-positive Jacobian)");
            const std::size_t k = static_cast<std::size_t>(i) * n_phi + j;
            const double dot = m.xr_r * m.xp_r + m.xr_p * m.xp_p;
            g.J[k] = m.J;
            g.A_pr[k] = -dot / m.J;
            g.A_pp[k] = (m.xr_r * m.xr_r + m.xr_p * m.xr_p) / m.J;
            g.Xr_r[k] = m.xr_r;
            g.Xr_p[k] = m.xr_p;
            g.Xp_r[k] = m.xp_r;
            g.Xp_p[k] = m.xp_p;
            g.eta[k] = m.eta;
            g.sigma[k] = m.sigma;
        }
    }
    for (int i = 0; i <= N; ++i) {
        const double r = grid.face(i);
        for (int j = 0; j < n_phi; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * n_phi + j;
            const auto m = detail::point_metric_full(kind, shape.R, r, s.rho[j], s.d1[j], s.d2[j]);
            g.Xr_r_f[k] = m.xr_r;
            g.Xr_p_f[k] = m.xr_p;
            g.Xp_r_f[k] = m.xp_r;
            g.Xp_p_f[k] = m.xp_p;
            g.eta_f[k] = m.eta;
            g.sigma_f[k] = m.sigma;
            g.Jf[k] = m.J;
            if (i == 0) continue;  // the origin face carries no flux
            if (!(m.J > 0.0)) throw std::domain_error("build_map_geometry: map folds (non-positive Jacobian)");
            const double dot = m.xr_r * m.xp_r + m.xr_p * m.xp_p;
            g.A_rr_f[k] = (m.xp_r * m.xp_r + m.xp_p * m.xp_p) / m.J;
            g.A_rp_f[k] = -dot / m.J;
        }
    }
    return g;
}

/// Linear response of the offsets (eta, sigma) and of J to a shape change with samples (v, v', v''),
/// by complex-step differentiation (exact to rounding).
struct MapSensitivity {
    std::vector<double> d_eta, d_sigma, d_J;            // nodes
    std::vector<double> d_eta_f, d_sigma_f, d_J_f;      // faces
};

inline MapSensitivity map_sensitivity(const BoundaryShape& shape, const RadialGrid& grid, int n_phi,
                                      std::span<const double> v, std::span<const double> v1,
                                      std::span<const double> v2, MapKind kind = MapKind::BoundaryFitted) {
    using C = std::complex<double>;
    constexpr double step = 1e-30;
    const auto s = shape.samples(n_phi);
    const int N = grid.n;
    MapSensitivity out;
    out.d_eta.assign(static_cast<std::size_t>(N) * n_phi, 0.0);
    out.d_sigma = out.d_eta;
    out.d_J = out.d_eta;
    out.d_eta_f.assign(static_cast<std::size_t>(N + 1) * n_phi, 0.0);
    out.d_sigma_f = out.d_eta_f;
    out.d_J_f = out.d_eta_f;
    for (int j = 0; j < n_phi; ++j) {
        const C rho(s.rho[j], step * v[j]), d1(s.d1[j], step * v1[j]), d2(s.d2[j], step * v2[j]);
        for (int i = 0; i < N; ++i) {
            const auto m = detail::point_metric<C>(kind, shape.R, grid.node(i), rho, d1, d2);
            const std::size_t k = static_cast<std::size_t>(i) * n_phi + j;
            out.d_eta[k] = m.eta.imag() / step;
            out.d_sigma[k] = m.sigma.imag() / step;
            out.d_J[k] = m.J.imag() / step;
        }
        for (int i = 0; i <= N; ++i) {
            const auto m = detail::point_metric<C>(kind, shape.R, grid.face(i), rho, d1, d2);
            const std::size_t k = static_cast<std::size_t>(i) * n_phi + j;
            out.d_eta_f[k] = m.eta.imag() / step;
            out.d_sigma_f[k] = m.sigma.imag() / step;
            out.d_J_f[k] = m.J.imag() / step;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------------------------

/// Scalar field on the tensor grid (radius x angle) of the reference disk, row-major by radius.
struct PolarField {
    RadialGrid grid;
    int n_phi = 0;
    std::vector<double> values;

    PolarField() = default;
    PolarField(const RadialGrid& g, int nphi, double fill = 0.0)
        : grid(g), n_phi(nphi), values(static_cast<std::size_t>(g.n) * nphi, fill) {}

    int n_r() const { return grid.n; }
    double& at(int i, int j) { return values[static_cast<std::size_t>(i) * n_phi + j]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n_phi + j]; }
    std::span<double> row(int i) { return {values.data() + static_cast<std::size_t>(i) * n_phi, std::size_t(n_phi)}; }
    std::span<const double> row(int i) const {
        return {values.data() + static_cast<std::size_t>(i) * n_phi, std::size_t(n_phi)};
    }
    double phi(int j) const { return 2.0 * kPi * j / n_phi; }

    bool all_finite() const {
        return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
    }

    /// Largest |f(phi) - f(-phi)| over the grid.
    double asymmetry() const {
        double a = 0.0;
        for (int i = 0; i < grid.n; ++i)
            for (int j = 1; j < n_phi / 2; ++j) a = std::max(a, std::abs(at(i, j) - at(i, n_phi - j)));
        return a;
    }

    /// Ratio of the highest retained cosine coefficient to the largest one, over all rows.
    double spectral_tail() const {
        AngularTransform tr(n_phi);
        double top = 0.0, tail = 0.0;
        for (int i = 0; i < grid.n; ++i) {
            const auto a = tr.cosine_coefficients(row(i));
            for (double c : a) top = std::max(top, std::abs(c));
            tail = std::max(tail, std::abs(a.back()));
        }
        return top > 0.0 ? tail / top : 0.0;
    }
};

}  // namespace hsks
