#pragma once
// Screened Poisson solvers: per-mode radial BVPs and the potential on the mapped disk.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/IterativeSolvers>

#include "angular.hpp"
#include "geometry.hpp"
#include "radial.hpp"

namespace hsks {

/// Solves (1/r)(r u')' - n^2 u / r^2 - zeta_eff u = source on (0, R) with a Dirichlet or Neumann
/// condition at R. Second order on the cell-centred grid.
inline RadialProfile solve_mode_bvp(int n, double zeta_eff, const RadialProfile& source, BoundaryKind kind,
                                    double bc_value) {
    const RadialGrid& g = source.grid;
    if (g.n < 16) throw std::invalid_argument("solve_mode_bvp: resolution too low (n_r < 16)");
    if (n < 0) throw std::invalid_argument("solve_mode_bvp: negative mode");
    if (kind == BoundaryKind::Neumann && n == 0 && zeta_eff <= 0.0)
        throw std::domain_error("solve_mode_bvp: singular operator (Neumann, n = 0, zeta_eff <= 0)");
    std::vector<double> w(g.n);
    for (int i = 0; i < g.n; ++i) w[i] = zeta_eff * g.node(i);
    const auto st = mode_flux_stencil(g, n, w, kind);
    std::vector<double> rhs(g.n);
    for (int i = 0; i < g.n; ++i) rhs[i] = g.node(i) * source.values[i];
    if (kind == BoundaryKind::Dirichlet)
        rhs[g.n - 1] -= st.dirichlet_coeff * bc_value;
    else
        rhs[g.n - 1] -= g.R / g.h() * bc_value;
    RadialProfile out{g, n, {}, 0.0, 0.0};
    try {
        out.values = st.matrix.solve(rhs);
    } catch (const std::runtime_error&) {
        throw std::domain_error("solve_mode_bvp: singular operator");
    }
    for (double v : out.values)
        if (!std::isfinite(v)) throw std::domain_error("solve_mode_bvp: singular operator");
    const double h = g.h();
    if (kind == BoundaryKind::Dirichlet) {
        out.boundary_value = bc_value;
        out.boundary_derivative = boundary_slope(bc_value, out.values[g.n - 1], out.values[g.n - 2], h);
    } else {
        out.boundary_derivative = bc_value;
        out.boundary_value = boundary_value_from_slope(bc_value, out.values[g.n - 1], out.values[g.n - 2], h);
    }
    return out;
}

/// Profile sampled from a function on the grid nodes.
template <class F>
RadialProfile sample_profile(const RadialGrid& g, int mode, F&& f) {
    RadialProfile p{g, mode, std::vector<double>(g.n), 0.0, 0.0};
    for (int i = 0; i < g.n; ++i) p.values[i] = f(g.node(i));
    p.boundary_value = f(g.R);
    return p;
}

// ---------------------------------------------------------------------------------------------

/// Per-Fourier-mode disk operator  flux(u) - k^2 u / r - w_i u  with homogeneous boundary data,
/// factored once; solves on whole polar fields through row FFTs.
class DiskModeSolver {
public:
    DiskModeSolver() = default;
    DiskModeSolver(const RadialGrid& g, int n_phi, std::span<const double> diag_weight, BoundaryKind kind)
        : g_(g), n_phi_(n_phi) {
        for (int k = 0; k <= n_phi / 2; ++k) {
            // the spectral angular operator annihilates the Nyquist mode; match it here
            const int keff = (k == n_phi / 2) ? 0 : k;
            auto st = mode_flux_stencil(g, keff, diag_weight, kind);
            factors_.emplace_back(st.matrix);
        }
        spec_.resize(static_cast<std::size_t>(g.n) * n_phi);
    }

    /// In place: field <- P^{-1} field.
    void solve(PolarField& f) {
        const int N = g_.n, n = n_phi_;
        Eigen::FFT<double> fft;
        std::vector<double> row(n);
        std::vector<std::complex<double>> s(n), back(n);
        for (int i = 0; i < N; ++i) {
            auto r = f.row(i);
            row.assign(r.begin(), r.end());
            fft.fwd(s, row);
            std::copy(s.begin(), s.end(), spec_.begin() + static_cast<std::ptrdiff_t>(i) * n);
        }
        std::vector<double> re(N), im(N);
        for (int k = 0; k <= n / 2; ++k) {
            for (int i = 0; i < N; ++i) {
                re[i] = spec_[static_cast<std::size_t>(i) * n + k].real();
                im[i] = spec_[static_cast<std::size_t>(i) * n + k].imag();
            }
            factors_[k].solve_inplace(re.data());
            factors_[k].solve_inplace(im.data());
            for (int i = 0; i < N; ++i) {
                spec_[static_cast<std::size_t>(i) * n + k] = {re[i], im[i]};
                if (k > 0 && k < n / 2) spec_[static_cast<std::size_t>(i) * n + (n - k)] = {re[i], -im[i]};
            }
        }
        for (int i = 0; i < N; ++i) {
            std::copy(spec_.begin() + static_cast<std::ptrdiff_t>(i) * n,
                      spec_.begin() + static_cast<std::ptrdiff_t>(i + 1) * n, s.begin());
            fft.inv(back, s);
            auto r = f.row(i);
            for (int j = 0; j < n; ++j) r[j] = back[j].real();
        }
    }

private:
    RadialGrid g_;
    int n_phi_ = 0;
    std::vector<FactoredTridiagonal> factors_;
    std::vector<std::complex<double>> spec_;
};

// ---------------------------------------------------------------------------------------------

/// Flux-form operator D[u] = d_a (A^{ab} d_b u) on the reference grid, A = J g^{-1}.
/// Radial direction finite volume, angular direction spectral. Divided by J it is the physical Laplacian.
class MappedOperator {
public:
    explicit MappedOperator(const MapGeometry& geo)
        : geo_(&geo), tr_(geo.n_phi), du_phi_(static_cast<std::size_t>(geo.grid.n) * geo.n_phi) {}

    const MapGeometry& geometry() const { return *geo_; }

    /// Radial slope of u at every node (central; parity ghost through the origin; one-sided at R).
    void radial_slope(const PolarField& u, std::span<const double> b, std::vector<double>& out) const {
        const int N = geo_->grid.n, n = geo_->n_phi;
        const double h = geo_->grid.h();
        out.assign(static_cast<std::size_t>(N) * n, 0.0);
        for (int j = 0; j < n; ++j) {
            const int jo = (j + n / 2) % n;
            out[j] = (u.at(1, j) - u.at(0, jo)) / (2.0 * h);
            for (int i = 1; i < N - 1; ++i)
                out[static_cast<std::size_t>(i) * n + j] = (u.at(i + 1, j) - u.at(i - 1, j)) / (2.0 * h);
            out[static_cast<std::size_t>(N - 1) * n + j] =
                (-u.at(N - 2, j) / 3.0 - u.at(N - 1, j) + 4.0 * b[j] / 3.0) / h;
        }
    }

    /// out = D[u]; b = boundary values, d = radial slopes at R.
    void apply(const PolarField& u, std::span<const double> b, std::span<const double> d, PolarField& out) {
        const MapGeometry& g = *geo_;
        const int N = g.grid.n, n = g.n_phi;
        const double h = g.grid.h();
        for (int i = 0; i < N; ++i) tr_.derivative(u.row(i), {du_phi_.data() + static_cast<std::size_t>(i) * n, std::size_t(n)}, 1);
        std::vector<double> db_phi = tr_.derivative(b, 1);
        radial_slope(u, b, du_r_);
        out = PolarField(g.grid, n);
        std::vector<double> flux_lo(n, 0.0), flux_hi(n), G(n), dG(n);
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < n; ++j) {
                const std::size_t fk = static_cast<std::size_t>(i + 1) * n + j;
                if (i + 1 < N) {
                    const double dr = (u.at(i + 1, j) - u.at(i, j)) / h;
                    const double dp = 0.5 * (du_phi_[static_cast<std::size_t>(i) * n + j] +
                                             du_phi_[static_cast<std::size_t>(i + 1) * n + j]);
                    flux_hi[j] = g.A_rr_f[fk] * dr + g.A_rp_f[fk] * dp;
                } else {
                    flux_hi[j] = g.A_rr_f[fk] * d[j] + g.A_rp_f[fk] * db_phi[j];
                }
                const std::size_t k = static_cast<std::size_t>(i) * n + j;
                G[j] = g.A_pr[k] * du_r_[k] + g.A_pp[k] * du_phi_[k];
            }
            tr_.derivative(G, dG, 1);
            for (int j = 0; j < n; ++j) out.at(i, j) = (flux_hi[j] - flux_lo[j]) / h + dG[j];
            std::swap(flux_lo, flux_hi);
        }
    }

    AngularTransform& transform() { return tr_; }

private:
    const MapGeometry* geo_;
    AngularTransform tr_;
    std::vector<double> du_phi_, du_r_;
};

// ---------------------------------------------------------------------------------------------

struct PotentialOptions {
    int max_iter = 200;  // outer defect-correction sweeps
    double tol = 1e-10;  // on the max J-weighted residual, relative to max(1, source size)
    MapKind kind = MapKind::BoundaryFitted;
};

struct PotentialSolution {
    PolarField phi;
    std::vector<double> boundary_value;  // -gamma kappa / zeta
    std::vector<double> boundary_slope;  // d phi / dr at R (normal derivative for the boundary-fitted map)
    int iterations = 0;
    double residual = 0.0;
    double contraction = 0.0;  // observed residual reduction factor per iteration
};

/// Matrix-free linear map for Eigen's GMRES: y = op(x), preconditioner z = pre(x).
class LinearMap;

}  // namespace hsks

namespace Eigen::internal {
template <>
struct traits<hsks::LinearMap> : public traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace hsks {

class LinearMap : public Eigen::EigenBase<LinearMap> {
public:
    using Scalar = double;
    using RealScalar = double;
    using StorageIndex = int;
    using Apply = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

    LinearMap(Eigen::Index n, Apply op) : n_(n), op_(std::move(op)) {}
    Eigen::Index rows() const { return n_; }
    Eigen::Index cols() const { return n_; }
    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const { op_(x, y); }

    template <class Rhs>
    Eigen::Product<LinearMap, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
        return Eigen::Product<LinearMap, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
    }

private:
    Eigen::Index n_;
    Apply op_;
};

/// Preconditioner adaptor; the action is supplied through set().
class MapPreconditioner {
public:
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

    MapPreconditioner() = default;
    void set(LinearMap::Apply f) { f_ = std::move(f); }
    template <class M> MapPreconditioner& analyzePattern(const M&) { return *this; }
    template <class M> MapPreconditioner& factorize(const M&) { return *this; }
    template <class M> MapPreconditioner& compute(const M&) { return *this; }
    template <class Rhs>
    Eigen::VectorXd solve(const Rhs& b) const {
        Eigen::VectorXd x(b.size());
        f_(Eigen::VectorXd(b), x);
        return x;
    }
    Eigen::ComputationInfo info() const { return Eigen::Success; }

private:
    LinearMap::Apply f_;
};

}  // namespace hsks

namespace Eigen::internal {
template <class Rhs>
struct generic_product_impl<hsks::LinearMap, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<hsks::LinearMap, Rhs, generic_product_impl<hsks::LinearMap, Rhs>> {
    template <class Dest>
    static void scaleAndAddTo(Dest& dst, const hsks::LinearMap& lhs, const Rhs& rhs, const double& alpha) {
        Eigen::VectorXd y(lhs.rows());
        lhs.apply(rhs, y);
        dst.noalias() += alpha * y;
    }
};
}  // namespace Eigen::internal

namespace hsks {

/// Defect correction on the true residual, each correction solved by GMRES with the disk operator as
/// preconditioner. residual(x, r) must return r = rhs - L x (with inhomogeneous data) and its monitored norm;
/// op applies the homogeneous linear part L.
struct KrylovReport {
    int iterations = 0;
    double residual = 0.0;
    double contraction = 0.0;
};

template <class ResidualFn>
KrylovReport krylov_defect_correction(Eigen::VectorXd& x, ResidualFn&& residual, const LinearMap& L,
                                      const LinearMap::Apply& precond, int max_iter, double tol, const char* who) {
    Eigen::GMRES<LinearMap, MapPreconditioner> gmres;
    gmres.preconditioner().set(precond);
    gmres.set_restart(40);
    gmres.setMaxIterations(120);
    gmres.setTolerance(1e-11);
    gmres.compute(L);
    KrylovReport rep;
    Eigen::VectorXd r(x.size());
    double prev = 0.0;
    for (int it = 0; it <= max_iter; ++it) {
        const double rmax = residual(x, r);
        rep.iterations = it;
        rep.residual = rmax;
        if (it > 0 && prev > 0.0) rep.contraction = rmax / prev;
        if (rmax < tol) return rep;
        if (!std::isfinite(rmax) || (it > 3 && rmax > 10.0 * prev))
            throw std::runtime_error(std::string(who) + ": iteration diverges, residual " + std::to_string(rmax));
        if (it == max_iter) break;
        prev = rmax;
        const Eigen::VectorXd dx = gmres.solve(r);
        x += dx;
    }
    throw std::runtime_error(std::string(who) + ": no convergence after " + std::to_string(max_iter) +
                             " iterations, residual " + std::to_string(rep.residual));
}

/// Reusable solver for  Delta phi + m = zeta phi + c  on the mapped disk with Dirichlet data.
class PotentialSolver {
public:
    PotentialSolver(const RadialGrid& g, int n_phi, double zeta) : g_(g), n_phi_(n_phi), zeta_(zeta) {
        std::vector<double> w(g.n);
        for (int i = 0; i < g.n; ++i) w[i] = zeta * g.node(i);
        pre_ = DiskModeSolver(g, n_phi, w, BoundaryKind::Dirichlet);
    }

    /// Solve D[phi] - zeta J phi = J (c - m) with phi = b on the boundary.
    PotentialSolution solve(const MapGeometry& geo, const PolarField& m, double c, std::span<const double> b,
                            const PotentialOptions& opt = {}, const PolarField* guess = nullptr) {
        const int N = g_.n, n = n_phi_;
        const Eigen::Index size = static_cast<Eigen::Index>(N) * n;
        MappedOperator D(geo);
        PolarField u(g_, n), Du;
        std::vector<double> d(n), zero(n, 0.0);
        const double h = g_.h();
        // L x for homogeneous boundary data
        auto apply_hom = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
            std::copy(x.data(), x.data() + size, u.values.begin());
            for (int j = 0; j < n; ++j) d[j] = boundary_slope(0.0, u.at(N - 1, j), u.at(N - 2, j), h);
            D.apply(u, zero, d, Du);
            y.resize(size);
            for (Eigen::Index k = 0; k < size; ++k) y[k] = Du.values[k] - zeta_ * geo.J[k] * x[k];
        };
        auto precond = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
            PolarField f(g_, n);
            std::copy(x.data(), x.data() + size, f.values.begin());
            pre_.solve(f);
            y = Eigen::Map<const Eigen::VectorXd>(f.values.data(), size);
        };
        auto residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
            std::copy(x.data(), x.data() + size, u.values.begin());
            for (int j = 0; j < n; ++j) d[j] = boundary_slope(b[j], u.at(N - 1, j), u.at(N - 2, j), h);
            D.apply(u, b, d, Du);
            double rmax = 0.0;
            r.resize(size);
            for (Eigen::Index k = 0; k < size; ++k) {
                const double J = geo.J[k];
                r[k] = J * (c - m.values[k]) - (Du.values[k] - zeta_ * J * x[k]);
                rmax = std::max(rmax, std::abs(r[k]));
            }
            return rmax;
        };
        Eigen::VectorXd x(size);
        if (guess && guess->values.size() == static_cast<std::size_t>(size)) {
            x = Eigen::Map<const Eigen::VectorXd>(guess->values.data(), size);
        } else {
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < n; ++j) x[static_cast<Eigen::Index>(i) * n + j] = b[j];
        }
        // tolerance relative to the source size (floored at 1) so that it stays above rounding
        double scale = 1.0;
        for (Eigen::Index k = 0; k < size; ++k) scale = std::max(scale, std::abs(geo.J[k] * (c - m.values[k])));
        for (double v : b) scale = std::max(scale, zeta_ * std::abs(v) * g_.R);
        const LinearMap L(size, apply_hom);
        const auto rep = krylov_defect_correction(x, residual, L, precond, opt.max_iter, opt.tol * scale, "solve_phi_on_disk");
        PotentialSolution sol;
        sol.phi = PolarField(g_, n);
        std::copy(x.data(), x.data() + size, sol.phi.values.begin());
        sol.boundary_value.assign(b.begin(), b.end());
        sol.boundary_slope.resize(n);
        for (int j = 0; j < n; ++j) sol.boundary_slope[j] = boundary_slope(b[j], sol.phi.at(N - 1, j), sol.phi.at(N - 2, j), h);
        sol.iterations = rep.iterations;
        sol.residual = rep.residual;
        sol.contraction = rep.contraction;
        return sol;
    }

private:
    RadialGrid g_;
    int n_phi_;
    double zeta_;
    DiskModeSolver pre_;
};

/// Potential for myosin m on the mapped disk of `shape`: Delta phi + m = zeta phi + p_eff(|Omega|),
/// zeta phi = -gamma kappa on the boundary.
inline PotentialSolution solve_phi_on_disk(const PolarField& m, const BoundaryShape& shape, const ModelParams& params,
                                           const PotentialOptions& opt = {}) {
    params.validate();
    if (std::abs(m.grid.R - shape.R) > 1e-14 * shape.R)
        throw std::invalid_argument("solve_phi_on_disk: field grid radius differs from shape base radius");
    const auto geo = build_map_geometry(shape, m.grid, m.n_phi, opt.kind);
    const auto kappa = curvature(shape, m.n_phi);
    std::vector<double> b(m.n_phi);
    for (int j = 0; j < m.n_phi; ++j) b[j] = -params.gamma * kappa[j] / params.zeta;
    PotentialSolver solver(m.grid, m.n_phi, params.zeta);
    return solver.solve(geo, m, effective_pressure(area(shape), params), b, opt);
}

/// Linearised potential on B_R:  Delta S + m = zeta S + p_eff'(pi R^2) R int rho dphi,
/// S = gamma/(R^2 zeta) (rho'' + rho) on the boundary; solved mode by mode.
inline PotentialSolution s_phi(const PolarField& m, const BoundaryShape& rho, const ModelParams& params) {
    params.validate();
    const RadialGrid& g = m.grid;
    const double R = g.R;
    const int n = m.n_phi;
    AngularTransform tr(n);
    const int K = n / 2;
    // cosine coefficients of m per radius
    std::vector<std::vector<double>> mc(g.n);
    for (int i = 0; i < g.n; ++i) mc[i] = tr.cosine_coefficients(m.row(i));
    PotentialSolution out;
    out.phi = PolarField(g, n, 0.0);
    std::vector<double> bcoef(K + 1, 0.0), scoef(K + 1, 0.0);
    const double slope = effective_pressure_slope(params);
    for (int k = 0; k <= K; ++k) {
        RadialProfile src{g, k, std::vector<double>(g.n), 0.0, 0.0};
        for (int i = 0; i < g.n; ++i) src.values[i] = -mc[i][k];
        if (k == 0)
            for (double& v : src.values) v += slope * R * 2.0 * kPi * rho.coeff(0);
        const double bc = params.gamma / (R * R * params.zeta) * (1.0 - static_cast<double>(k) * k) * rho.coeff(k);
        const auto u = solve_mode_bvp(k, params.zeta, src, BoundaryKind::Dirichlet, bc);
        bcoef[k] = bc;
        scoef[k] = u.boundary_derivative;
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < n; ++j) out.phi.at(i, j) += u.values[i] * std::cos(k * 2.0 * kPi * j / n);
    }
    out.boundary_value = tr.from_cosine(bcoef);
    out.boundary_slope = tr.from_cosine(scoef);
    return out;
}

}  // namespace hsks
