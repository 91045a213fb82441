#pragma once
// Cell-centred radial grid on [0, R], tridiagonal solves and radial profiles.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace hsks {

/// Uniform cell-centred grid: node i sits at (i + 1/2) h, faces at i h.
struct RadialGrid {
    int n = 0;
    double R = 1.0;

    RadialGrid() = default;
    RadialGrid(int n_r, double radius) : n(n_r), R(radius) {
        if (n_r < 4) throw std::invalid_argument("RadialGrid: need at least 4 cells");
        if (!(radius > 0.0)) throw std::invalid_argument("RadialGrid: radius must be positive");
    }
    double h() const { return R / n; }
    double node(int i) const { return (i + 0.5) * h(); }
    double face(int i) const { return i * h(); }
    std::vector<double> nodes() const {
        std::vector<double> r(n);
        for (int i = 0; i < n; ++i) r[i] = node(i);
        return r;
    }
};

enum class BoundaryKind { Dirichlet, Neumann };

/// Second-order one-sided derivative at R from the boundary value and the last two nodes.
inline double boundary_slope(double ub, double u_last, double u_prev, double h) {
    return (8.0 * ub - 9.0 * u_last + u_prev) / (3.0 * h);
}

/// Boundary value recovered from a prescribed slope (inverse of boundary_slope).
inline double boundary_value_from_slope(double slope, double u_last, double u_prev, double h) {
    return (9.0 * u_last - u_prev + 3.0 * h * slope) / 8.0;
}

/// Tridiagonal system lo[i] x[i-1] + di[i] x[i] + up[i] x[i+1] = b[i].
struct Tridiagonal {
    std::vector<double> lo, di, up;

    explicit Tridiagonal(int n = 0) : lo(n, 0.0), di(n, 0.0), up(n, 0.0) {}
    int size() const { return static_cast<int>(di.size()); }

    std::vector<double> solve(std::span<const double> b) const {
        const int n = size();
        std::vector<double> c(n), x(b.begin(), b.end());
        double beta = di[0];
        if (beta == 0.0) throw std::runtime_error("Tridiagonal: singular pivot");
        x[0] /= beta;
        for (int i = 1; i < n; ++i) {
            c[i] = up[i - 1] / beta;
            beta = di[i] - lo[i] * c[i];
            if (beta == 0.0) throw std::runtime_error("Tridiagonal: singular pivot");
            x[i] = (x[i] - lo[i] * x[i - 1]) / beta;
        }
        for (int i = n - 2; i >= 0; --i) x[i] -= c[i + 1] * x[i + 1];
        return x;
    }

    std::vector<double> apply(std::span<const double> x) const {
        const int n = size();
        std::vector<double> y(n);
        for (int i = 0; i < n; ++i) {
            y[i] = di[i] * x[i];
            if (i > 0) y[i] += lo[i] * x[i - 1];
            if (i + 1 < n) y[i] += up[i] * x[i + 1];
        }
        return y;
    }
};

/// Pre-factored tridiagonal system for repeated solves with the same matrix.
class FactoredTridiagonal {
public:
    FactoredTridiagonal() = default;
    explicit FactoredTridiagonal(const Tridiagonal& t) : lo_(t.lo), c_(t.size()), inv_beta_(t.size()) {
        const int n = t.size();
        double beta = t.di[0];
        for (int i = 0; i < n; ++i) {
            if (i > 0) {
                c_[i] = t.up[i - 1] / beta;
                beta = t.di[i] - t.lo[i] * c_[i];
            }
            if (beta == 0.0) throw std::runtime_error("FactoredTridiagonal: singular pivot");
            inv_beta_[i] = 1.0 / beta;
        }
    }

    /// In-place solve on a strided view x[offset + i*stride].
    void solve_inplace(double* x, int stride = 1) const {
        const int n = static_cast<int>(inv_beta_.size());
        x[0] *= inv_beta_[0];
        for (int i = 1; i < n; ++i) x[i * stride] = (x[i * stride] - lo_[i] * x[(i - 1) * stride]) * inv_beta_[i];
        for (int i = n - 2; i >= 0; --i) x[i * stride] -= c_[i + 1] * x[(i + 1) * stride];
    }

private:
    std::vector<double> lo_, c_, inv_beta_;
};

/// Finite-volume matrix of r * [(1/r)(r u')' - n^2 u / r^2] - shift * weight_i * u on the grid,
/// i.e. the flux-difference form times h^-1. The outer face closure is applied for the given kind:
/// Dirichlet uses boundary_slope (its known-value part is returned through dirichlet_coeff),
/// Neumann leaves the boundary flux to the right-hand side.
struct ModeStencil {
    Tridiagonal matrix;
    double dirichlet_coeff = 0.0;  // coefficient multiplying the boundary value in the last row
};

inline ModeStencil mode_flux_stencil(const RadialGrid& g, int n, std::span<const double> diag_weight,
                                     BoundaryKind kind) {
    const int N = g.n;
    const double h = g.h();
    ModeStencil s{Tridiagonal(N), 0.0};
    auto& T = s.matrix;
    for (int i = 0; i < N; ++i) {
        const double r = g.node(i);
        if (i > 0) {
            const double f = g.face(i) / (h * h);
            T.lo[i] += f;
            T.di[i] -= f;
        }
        if (i < N - 1) {
            const double f = g.face(i + 1) / (h * h);
            T.up[i] += f;
            T.di[i] -= f;
        }
        T.di[i] -= static_cast<double>(n) * n / r;
        T.di[i] -= diag_weight[i];
    }
    if (kind == BoundaryKind::Dirichlet) {
        const double f = g.R / h;  // flux R * slope, divided by h
        T.di[N - 1] += f * (-9.0 / (3.0 * h));
        T.lo[N - 1] += f * (1.0 / (3.0 * h));
        s.dirichlet_coeff = f * 8.0 / (3.0 * h);
    }
    return s;
}

/// Sampled radial function on a RadialGrid with boundary data.
struct RadialProfile {
    RadialGrid grid;
    int mode = 0;
    std::vector<double> values;
    double boundary_value = 0.0;
    double boundary_derivative = 0.0;

    /// Value at the origin implied by parity.
    double origin_value() const {
        if (mode != 0) return 0.0;
        // even extension: quadratic through u_0, u_1 symmetric about 0
        return (9.0 * values[0] - values[1]) / 8.0;
    }

    /// Cubic Lagrange interpolation using parity ghosts near 0 and the boundary value at R.
    double at(double r) const {
        const int N = grid.n;
        const double h = grid.h();
        if (r < 0.0 || r > grid.R * (1.0 + 1e-12)) throw std::domain_error("RadialProfile::at: r outside [0,R]");
        auto node_x = [&](int k) { return k == N ? grid.R : (k + 0.5) * h; };
        auto node_v = [&](int k) {
            if (k == N) return boundary_value;
            if (k < 0) {
                const double sign = (mode % 2 == 0) ? 1.0 : -1.0;
                return sign * values[-k - 1];
            }
            return values[k];
        };
        int k0 = static_cast<int>(std::floor(r / h - 0.5)) - 1;  // first of four stencil nodes
        if (k0 < -2) k0 = -2;
        if (k0 + 3 > N) k0 = N - 3;
        double xs[4], vs[4];
        for (int a = 0; a < 4; ++a) {
            const int k = k0 + a;
            xs[a] = (k < 0) ? -(-k - 0.5) * h : node_x(k);
            vs[a] = node_v(k);
        }
        double sum = 0.0;
        for (int a = 0; a < 4; ++a) {
            double w = 1.0;
            for (int b = 0; b < 4; ++b)
                if (b != a) w *= (r - xs[b]) / (xs[a] - xs[b]);
            sum += w * vs[a];
        }
        return sum;
    }
};

}  // namespace hsks
