#pragma once
// Time stepping of the free-boundary problem on the boundary-fitted reference disk.
// Myosin is advanced in conservative form q = J m (J = map Jacobian) with arbitrary Lagrangian-Eulerian fluxes:
//   d(J m)/dt = D[m] + d_a( m ( -A^{ab} d_b phi + J c^a ) ),
// c = contravariant components of (frame velocity e_x + mesh velocity). Diffusion is implicit, the rest explicit.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "angular.hpp"
#include "bifurcation.hpp"
#include "elliptic.hpp"
#include "geometry.hpp"
#include "radial.hpp"

namespace hsks {

/// Number of boundary cosine modes kept on an angular grid of n_phi points (2/3 rule).
inline int dealiased_modes(int n_phi) { return n_phi / 3; }

struct SimState {
    double time = 0.0;
    BoundaryShape shape;
    PolarField myosin;     // m at the mapped points of the reference grid
    PolarField potential;  // last solved potential (warm start)
    ModelParams params;
};

enum class FrameMode { Centered, Fixed };

/// Centered: the frame velocity keeps the cos(phi) boundary mode at zero. Fixed: prescribed frame velocity.
struct Frame {
    FrameMode mode = FrameMode::Centered;
    double velocity = 0.0;
};

/// Semi-discrete tendencies at one state.
struct Tendency {
    std::vector<double> rho_rate;  // cosine coefficients 0..K
    double center_rate = 0.0;
    PolarField transport;  // explicit part of d(J m)/dt
    PolarField diffusion;  // D[m] with zero boundary flux
    std::vector<double> jacobian_rate;
    PotentialSolution potential;
    double dt_advective = 0.0;  // 0.5 h / |grad phi|
    double dt_boundary = 0.0;   // 0.1 R / |d_nu phi|
};

class Simulator {
public:
    Simulator(const ModelParams& params, int n_r, int n_phi, double R)
        : params_(params), grid_(n_r, R), n_phi_(n_phi), K_(dealiased_modes(n_phi)), potential_(grid_, n_phi, params.zeta) {
        params.validate();
        if (n_r < 8 || n_phi < 8 || n_phi % 2 != 0) throw std::invalid_argument("Simulator: grid too coarse or odd n_phi");
    }

    const RadialGrid& grid() const { return grid_; }
    int n_phi() const { return n_phi_; }
    int boundary_modes() const { return K_; }
    const ModelParams& params() const { return params_; }
    PotentialOptions& potential_options() { return popt_; }

    /// Map geometry of `shape`, cached on the last shape seen. Throws when the collar of the map is close to
    /// folding (J / r below min_jacobian_ratio somewhere), where the discretisation loses accuracy.
    const MapGeometry& geometry(const BoundaryShape& shape) {
        if (!geo_ || geo_shape_.R != shape.R || geo_shape_.rho_cos != shape.rho_cos) {
            auto g = build_map_geometry(shape, grid_, n_phi_);
            const double q = jacobian_ratio(g);
            if (q < min_jacobian_ratio)
                throw std::domain_error("Simulator: boundary-fitted map near folding (min J/r " + std::to_string(q) + ")");
            geo_ = std::move(g);
            geo_shape_ = shape;
        }
        return *geo_;
    }

    static double jacobian_ratio(const MapGeometry& g) {
        double q = std::numeric_limits<double>::infinity();
        for (int i = 0; i < g.grid.n; ++i)
            for (int j = 0; j < g.n_phi; ++j) q = std::min(q, g.J[static_cast<std::size_t>(i) * g.n_phi + j] / g.grid.node(i));
        return q;
    }

    double min_jacobian_ratio = 0.25;

    /// Total myosin: sum of J m over cells.
    double mass(const SimState& s) {
        const auto& g = geometry(s.shape);
        double sum = 0.0;
        for (std::size_t k = 0; k < g.J.size(); ++k) sum += g.J[k] * s.myosin.values[k];
        return sum * grid_.h() * 2.0 * kPi / n_phi_;
    }

    /// Shape with the coefficient vector padded or cut to the dealiased length.
    BoundaryShape normalise_shape(const BoundaryShape& shape) const {
        BoundaryShape out = shape;
        out.rho_cos.resize(static_cast<std::size_t>(K_) + 1, 0.0);
        return out;
    }

    /// Neumann diffusion D[u]: boundary value from the one-sided zero-slope closure, zero boundary flux.
    void diffusion(const MapGeometry& geo, const PolarField& u, PolarField& out) const {
        const int N = grid_.n;
        std::vector<double> b(n_phi_), d(n_phi_, 0.0);
        for (int j = 0; j < n_phi_; ++j) b[j] = boundary_value_from_slope(0.0, u.at(N - 1, j), u.at(N - 2, j), grid_.h());
        MappedOperator D(geo);
        D.apply(u, b, d, out);
    }

    Tendency tendency(const SimState& s, const Frame& frame = {}) {
        const int N = grid_.n, n = n_phi_;
        const double h = grid_.h();
        const auto& geo = geometry(s.shape);
        const auto kappa = curvature(s.shape, n);
        std::vector<double> bval(n);
        for (int j = 0; j < n; ++j) bval[j] = -params_.gamma * kappa[j] / params_.zeta;
        Tendency t;
        t.potential = potential_.solve(geo, s.myosin, effective_pressure(area(s.shape), params_), bval, popt_,
                                       s.potential.values.empty() ? nullptr : &s.potential);

        // boundary: d rho/dt = (S / a) d_nu phi - U (cos phi + rho' sin phi / a)
        AngularTransform tr(n);
        const auto sm = s.shape.samples(n);
        std::vector<double> g(n), q(n);
        double max_dn = 0.0;
        for (int j = 0; j < n; ++j) {
            const double ph = 2.0 * kPi * j / n, a = s.shape.R + sm.rho[j];
            const double S = std::hypot(a, sm.d1[j]);
            g[j] = S / a * t.potential.boundary_slope[j];
            q[j] = std::cos(ph) + sm.d1[j] * std::sin(ph) / a;
            max_dn = std::max(max_dn, std::abs(t.potential.boundary_slope[j]));
        }
        const auto gc = tr.cosine_coefficients(g), qc = tr.cosine_coefficients(q);
        t.center_rate = frame.mode == FrameMode::Centered ? gc[1] / qc[1] : frame.velocity;
        t.rho_rate.assign(static_cast<std::size_t>(K_) + 1, 0.0);
        for (int k = 0; k <= K_; ++k) t.rho_rate[k] = gc[k] - t.center_rate * qc[k];
        if (frame.mode == FrameMode::Centered) t.rho_rate[1] = 0.0;

        // mesh velocity from the boundary rate
        const auto vs = BoundaryShape(s.shape.R, t.rho_rate).samples(n);
        const auto sens = map_sensitivity(s.shape, grid_, n, vs.rho, vs.d1, vs.d2);
        t.jacobian_rate = sens.d_J;

        // potential gradient in reference coordinates
        std::vector<double> dphi_r, dphi_p(static_cast<std::size_t>(N) * n);
        MappedOperator D(geo);
        D.radial_slope(t.potential.phi, t.potential.boundary_value, dphi_r);
        for (int i = 0; i < N; ++i)
            tr.derivative(t.potential.phi.row(i), {dphi_p.data() + static_cast<std::size_t>(i) * n, std::size_t(n)}, 1);

        const double U = t.center_rate;
        std::vector<double> cphi(n), sphi(n);
        for (int j = 0; j < n; ++j) {
            cphi[j] = std::cos(2.0 * kPi * j / n);
            sphi[j] = std::sin(2.0 * kPi * j / n);
        }
        // J c^r = v x X_phi, J c^phi = X_r x v in the polar frame at the reference angle
        auto jc_r = [&](double vr, double vp, double xpr, double xpp) { return vr * xpp - vp * xpr; };
        auto jc_p = [&](double vr, double vp, double xrr, double xrp) { return xrr * vp - xrp * vr; };

        t.transport = PolarField(grid_, n);
        std::vector<double> flux_lo(n, 0.0), flux_hi(n), Fp(n), dFp(n);
        double max_grad = 0.0;
        const auto& m = s.myosin;
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i + 1 < N) {
                    const std::size_t f = static_cast<std::size_t>(i + 1) * n + j;
                    const double mf = 0.5 * (m.at(i, j) + m.at(i + 1, j));
                    const double dr = (t.potential.phi.at(i + 1, j) - t.potential.phi.at(i, j)) / h;
                    const double dp = 0.5 * (dphi_p[static_cast<std::size_t>(i) * n + j] + dphi_p[f]);
                    const double vr = U * cphi[j] + sens.d_eta_f[f], vp = -U * sphi[j] + sens.d_sigma_f[f];
                    const double W = jc_r(vr, vp, geo.Xp_r_f[f], geo.Xp_p_f[f]);
                    flux_hi[j] = mf * (-(geo.A_rr_f[f] * dr + geo.A_rp_f[f] * dp) + W);
                } else {
                    flux_hi[j] = 0.0;  // no flux through the moving boundary
                }
                const std::size_t k = static_cast<std::size_t>(i) * n + j;
                const double vr = U * cphi[j] + sens.d_eta[k], vp = -U * sphi[j] + sens.d_sigma[k];
                const double W = jc_p(vr, vp, geo.Xr_r[k], geo.Xr_p[k]);
                Fp[j] = m.values[k] * (-(geo.A_pr[k] * dphi_r[k] + geo.A_pp[k] * dphi_p[k]) + W);
                max_grad = std::max({max_grad, std::abs(dphi_r[k]), std::abs(dphi_p[k]) / grid_.node(i)});
            }
            tr.derivative(Fp, dFp, 1);
            for (int j = 0; j < n; ++j) t.transport.at(i, j) = (flux_hi[j] - flux_lo[j]) / h + dFp[j];
            std::swap(flux_lo, flux_hi);
        }
        diffusion(geo, m, t.diffusion);
        t.dt_advective = max_grad > 0.0 ? 0.5 * h / max_grad : std::numeric_limits<double>::infinity();
        t.dt_boundary = max_dn > 0.0 ? 0.1 * s.shape.R / max_dn : std::numeric_limits<double>::infinity();
        return t;
    }

    /// dm/dt at fixed reference point, from d(J m)/dt = D[m] + transport.
    PolarField myosin_rate(const SimState& s, const Tendency& t) {
        const auto& geo = geometry(s.shape);
        PolarField out(grid_, n_phi_);
        for (std::size_t k = 0; k < out.values.size(); ++k)
            out.values[k] = (t.diffusion.values[k] + t.transport.values[k] - s.myosin.values[k] * t.jacobian_rate[k]) / geo.J[k];
        return out;
    }

    /// One IMEX Euler step: boundary, centre and transport explicit, diffusion implicit on the new geometry.
    SimState step(const SimState& s, double dt, const Frame& frame = {}) {
        if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
        const auto t = tendency(s, frame);
        if (dt > t.dt_advective || dt > t.dt_boundary)
            throw std::domain_error("step: CFL violation (dt " + std::to_string(dt) + ", advective bound " +
                                    std::to_string(t.dt_advective) + ", boundary bound " + std::to_string(t.dt_boundary) + ")");
        const std::size_t size = s.myosin.values.size();
        PolarField q(grid_, n_phi_);
        {
            const auto& geo = geometry(s.shape);
            for (std::size_t k = 0; k < size; ++k) q.values[k] = geo.J[k] * s.myosin.values[k] + dt * t.transport.values[k];
        }
        SimState next;
        next.time = s.time + dt;
        next.params = s.params;
        next.shape = s.shape;
        for (int k = 0; k <= K_; ++k) next.shape.rho_cos[k] += dt * t.rho_rate[k];
        next.shape.Xc += dt * t.center_rate;
        const auto& geo = geometry(next.shape);
        next.myosin = implicit_diffusion(geo, q, dt, s.myosin);
        next.potential = t.potential.phi;
        const double lo = *std::min_element(next.myosin.values.begin(), next.myosin.values.end());
        if (!(lo >= 0.0)) throw std::domain_error("step: myosin positivity lost (min " + std::to_string(lo) + ")");
        return next;
    }

    /// Solve J m - dt D[m] = q; the result is then rebuilt as (q + dt D[m]) / J so that the sum of J m equals
    /// the sum of q to rounding.
    PolarField implicit_diffusion(const MapGeometry& geo, const PolarField& q, double dt, const PolarField& guess) {
        const int N = grid_.n, n = n_phi_;
        const Eigen::Index size = static_cast<Eigen::Index>(N) * n;
        if (!pre_ || pre_dt_ != dt) {
            std::vector<double> w(N);
            for (int i = 0; i < N; ++i) w[i] = grid_.node(i) / dt;
            pre_ = DiskModeSolver(grid_, n, w, BoundaryKind::Neumann);
            pre_dt_ = dt;
        }
        PolarField u(grid_, n), Du;
        auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
            std::copy(x.data(), x.data() + size, u.values.begin());
            diffusion(geo, u, Du);
            y.resize(size);
            for (Eigen::Index k = 0; k < size; ++k) y[k] = geo.J[k] * x[k] - dt * Du.values[k];
        };
        auto precond = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
            PolarField f(grid_, n);
            std::copy(x.data(), x.data() + size, f.values.begin());
            pre_->solve(f);
            y = -Eigen::Map<const Eigen::VectorXd>(f.values.data(), size) / dt;
        };
        double scale = 0.0;
        for (double v : q.values) scale = std::max(scale, std::abs(v));
        auto residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
            Eigen::VectorXd y;
            apply(x, y);
            r = Eigen::Map<const Eigen::VectorXd>(q.values.data(), size) - y;
            return r.lpNorm<Eigen::Infinity>();
        };
        Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(guess.values.data(), size);
        const LinearMap L(size, apply);
        krylov_defect_correction(x, residual, L, precond, 50, 1e-13 * std::max(1.0, scale), "implicit_diffusion");
        std::copy(x.data(), x.data() + size, u.values.begin());
        diffusion(geo, u, Du);
        PolarField out(grid_, n);
        for (Eigen::Index k = 0; k < size; ++k) out.values[k] = (q.values[k] + dt * Du.values[k]) / geo.J[k];
        return out;
    }

private:
    ModelParams params_;
    RadialGrid grid_;
    int n_phi_;
    int K_;
    PotentialSolver potential_;
    PotentialOptions popt_;
    std::optional<MapGeometry> geo_;
    BoundaryShape geo_shape_;
    std::optional<DiskModeSolver> pre_;
    double pre_dt_ = 0.0;
};

// ---------------------------------------------------------------------------------------------
// Initial states

/// Validated state from a shape and a myosin field on the reference grid of that shape.
/// The cos(phi) boundary mode is moved into the centre; boundary modes beyond the dealiased range are dropped.
inline SimState init_state(const BoundaryShape& shape, const PolarField& m, const ModelParams& params) {
    params.validate();
    shape.check_nondegenerate();
    if (std::abs(m.grid.R - shape.R) > 1e-14 * shape.R)
        throw std::invalid_argument("init_state: field grid radius differs from the shape base radius");
    if (!m.all_finite()) throw std::invalid_argument("init_state: non-finite myosin");
    if (*std::min_element(m.values.begin(), m.values.end()) <= 0.0)
        throw std::invalid_argument("init_state: myosin must be positive");
    if (m.asymmetry() > 1e-12 * std::abs(m.values[0]))
        throw std::invalid_argument("init_state: myosin is not symmetric about the x-axis");
    SimState s;
    s.shape = recenter(shape);
    s.shape.rho_cos.resize(static_cast<std::size_t>(dealiased_modes(m.n_phi)) + 1, 0.0);
    s.shape.check_nondegenerate();
    s.myosin = m;
    s.params = params;
    return s;
}

/// Steady disk of radius R with density m0 = p_eff(pi R^2) - gamma / R.
inline SimState steady_state_init(const ModelParams& params, double R, int n_r, int n_phi) {
    const double m0 = steady_density(R, params);
    if (!(m0 > 0.0)) throw std::domain_error("steady_state_init: steady density is not positive");
    return init_state(BoundaryShape::circle(R), PolarField(RadialGrid(n_r, R), n_phi, m0), params);
}

/// Steady disk perturbed by relative amplitude delta. mode >= 0 excites that angular mode only (boundary and
/// myosin, the boundary part skipped for modes 0 and 1); mode < 0 excites modes 0..3 together.
/// The myosin is rescaled afterwards so the total mass equals that of the unperturbed disk.
inline SimState perturbed_state_init(const ModelParams& params, double R, int n_r, int n_phi, double delta, int mode) {
    const double m0 = steady_density(R, params);
    if (!(m0 > 0.0)) throw std::domain_error("perturbed_state_init: steady density is not positive");
    const int K = dealiased_modes(n_phi);
    std::vector<int> modes;
    if (mode < 0) modes = {0, 1, 2, 3};
    else modes = {mode};
    BoundaryShape shape(R, std::vector<double>(static_cast<std::size_t>(K) + 1, 0.0));
    const RadialGrid g(n_r, R);
    PolarField m(g, n_phi, m0);
    const double weights[] = {1.0, 0.8, 0.6, 0.5};
    for (std::size_t a = 0; a < modes.size(); ++a) {
        const int k = modes[a];
        if (k > K) throw std::invalid_argument("perturbed_state_init: mode beyond the boundary resolution");
        const double w = mode < 0 ? weights[a] : 1.0;
        if (k >= 2) shape.rho_cos[k] += 0.5 * w * delta * R;
        for (int i = 0; i < n_r; ++i) {
            const double x = g.node(i) / R;
            const double f = k == 0 ? x * x - 0.5 : std::pow(x, k);
            for (int j = 0; j < n_phi; ++j) m.at(i, j) += w * delta * m0 * f * std::cos(k * m.phi(j));
        }
    }
    SimState s = init_state(shape, m, params);
    Simulator sim(params, n_r, n_phi, R);
    const double scale = m0 * kPi * R * R / sim.mass(s);
    for (double& v : s.myosin.values) v *= scale;
    return s;
}

namespace detail {

// Myosin of the expanded traveling wave at a physical point relative to its centre.
inline double tw_myosin_at(const TravelingWave& tw, double V, double norm, double x, double y) {
    const double r = std::hypot(x, y), th = std::atan2(y, x);
    const double a = tw.R0 + V * V * (tw.rho2_mode0 + tw.rho2_mode2 * std::cos(2.0 * th));
    const double s = r * tw.R0 / a;
    return norm * std::exp(tw.potential_at(std::min(s, tw.R0 * 1.5), th, V) - tw.phi0 - V * x);
}

}  // namespace detail

/// Expanded traveling wave at velocity V sampled on the boundary-fitted grid of `shape`, with the wave's
/// centre placed at x = offset. Boundary modes beyond the dealiased range are dropped.
inline SimState tw_state_on_shape(const TravelingWave& tw, double V, const BoundaryShape& shape, double offset,
                                  int n_r, int n_phi) {
    const double norm = tw_normalisation(tw, V);
    const RadialGrid g(n_r, tw.R0);
    PolarField m(g, n_phi);
    for (int i = 0; i < n_r; ++i)
        for (int j = 0; j < n_phi; ++j) {
            const auto [x, y] = boundary_map(shape, 1.0, g.node(i), m.phi(j));
            m.at(i, j) = detail::tw_myosin_at(tw, V, norm, x - offset, y);
        }
    SimState s;
    s.shape = shape;
    s.shape.rho_cos.resize(static_cast<std::size_t>(dealiased_modes(n_phi)) + 1, 0.0);
    s.myosin = m;
    s.params = tw.params;
    return s;
}

/// State seeded from the expansion at velocity V (centred, shape V^2 rho2).
inline SimState tw_seed_init(const TravelingWave& tw, double V, int n_r, int n_phi) {
    if (std::abs(V) > tw.valid_V) throw std::invalid_argument("tw_seed_init: |V| beyond valid_V");
    auto s = tw_state_on_shape(tw, V, tw.shape(V), 0.0, n_r, n_phi);
    return init_state(s.shape, s.myosin, s.params);
}

// ---------------------------------------------------------------------------------------------
// Trajectories

enum class InitKind { Steady, Perturbed, TwSeed };

struct SimConfig {
    ModelParams params;
    double radius = 1.0;  // steady radius; for tw_seed a guess for the bifurcation radius
    int n_r = 64, n_phi = 128;
    double dt = 1e-4, t_end = 1.0;
    int sample_every = 100;
    InitKind init = InitKind::Steady;
    double amplitude = 1e-3;
    int mode = -1;
    double velocity = 0.1;  // tw_seed only
    double tol_converge = 1e-10;
    double blowup_tol = 0.5;  // |rho| relative to the base radius
};

enum class SimEvent { Finished, Converged, Blowup, PositivityLoss, Error };

inline const char* to_string(SimEvent e) {
    switch (e) {
        case SimEvent::Finished: return "finished";
        case SimEvent::Converged: return "converged";
        case SimEvent::Blowup: return "blowup";
        case SimEvent::PositivityLoss: return "positivity_loss";
        case SimEvent::Error: return "error";
    }
    return "?";
}

struct Observables {
    double time, mass, area, center, rho_norm, m_dev;
    double deviation() const { return rho_norm + m_dev; }
};

struct Trajectory {
    std::vector<SimState> states;
    std::vector<Observables> series;
    SimEvent event = SimEvent::Finished;
    std::string message;
    int steps = 0;
};

/// L2 norm of rho over the angle, from its cosine coefficients.
inline double boundary_norm(const BoundaryShape& s) {
    double sum = 2.0 * kPi * s.coeff(0) * s.coeff(0);
    for (int k = 1; k <= s.max_mode(); ++k) sum += kPi * s.rho_cos[k] * s.rho_cos[k];
    return std::sqrt(sum);
}

inline Observables observe(Simulator& sim, const SimState& s) {
    Observables o{};
    o.time = s.time;
    o.mass = sim.mass(s);
    o.area = area(s.shape);
    o.center = s.shape.Xc;
    o.rho_norm = boundary_norm(s.shape);
    const auto& geo = sim.geometry(s.shape);
    const double mean = o.mass / o.area, w = sim.grid().h() * 2.0 * kPi / sim.n_phi();
    double sum = 0.0;
    for (std::size_t k = 0; k < geo.J.size(); ++k) sum += geo.J[k] * std::pow(s.myosin.values[k] - mean, 2);
    o.m_dev = std::sqrt(sum * w);
    return o;
}

/// Integrates from `initial` until t_end or an event. Step errors end the run with the partial trajectory kept.
inline Trajectory run(Simulator& sim, SimState initial, const SimConfig& cfg) {
    Trajectory tr;
    SimState s = std::move(initial);
    tr.states.push_back(s);
    tr.series.push_back(observe(sim, s));
    const long total = std::lround(cfg.t_end / cfg.dt);
    for (long k = 1; k <= total; ++k) {
        try {
            s = sim.step(s, cfg.dt);
        } catch (const std::domain_error& e) {
            tr.event = std::string(e.what()).find("positivity") != std::string::npos ? SimEvent::PositivityLoss : SimEvent::Error;
            tr.message = e.what();
            break;
        } catch (const std::exception& e) {
            tr.event = SimEvent::Error;
            tr.message = e.what();
            break;
        }
        tr.steps = static_cast<int>(k);
        const bool sample = k % cfg.sample_every == 0 || k == total;
        if (!sample) continue;
        const auto o = observe(sim, s);
        tr.states.push_back(s);
        tr.series.push_back(o);
        if (o.deviation() < cfg.tol_converge) {
            tr.event = SimEvent::Converged;
            break;
        }
        if (o.rho_norm / std::sqrt(2.0 * kPi) > cfg.blowup_tol * s.shape.R || !s.myosin.all_finite()) {
            tr.event = SimEvent::Blowup;
            break;
        }
    }
    return tr;
}

/// Initial state for a config. For tw_seed the bifurcation radius is located near cfg.radius.
inline SimState initial_state(const SimConfig& cfg) {
    switch (cfg.init) {
        case InitKind::Steady: return steady_state_init(cfg.params, cfg.radius, cfg.n_r, cfg.n_phi);
        case InitKind::Perturbed:
            return perturbed_state_init(cfg.params, cfg.radius, cfg.n_r, cfg.n_phi, cfg.amplitude, cfg.mode);
        case InitKind::TwSeed: {
            const auto root = find_bifurcation_radius(cfg.params, 0.2 * cfg.radius, 5.0 * cfg.radius);
            const auto tw = tw_expand(root.R0, cfg.params);
            return tw_seed_init(tw, cfg.velocity, cfg.n_r, cfg.n_phi);
        }
    }
    throw std::invalid_argument("initial_state: unknown init kind");
}

inline Trajectory run(const SimConfig& cfg) {
    auto s0 = initial_state(cfg);
    Simulator sim(cfg.params, cfg.n_r, cfg.n_phi, s0.shape.R);
    return run(sim, std::move(s0), cfg);
}

/// Exponential decay rate (positive when decaying) of the deviation, by least squares over the last decade.
inline double decay_rate(const Trajectory& tr) {
    const auto& s = tr.series;
    if (s.size() < 3) throw std::domain_error("decay_rate: insufficient decay (too few samples)");
    const double first = s.front().deviation() > 0.0 ? s.front().deviation() : s[1].deviation();
    const double last = s.back().deviation();
    if (!(last > 0.0) || first / last < std::exp(3.0))
        throw std::domain_error("decay_rate: insufficient decay (fewer than 3 e-foldings)");
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    int cnt = 0;
    for (const auto& o : s) {
        const double d = o.deviation();
        if (!(d > 0.0) || d > 10.0 * last) continue;
        const double y = std::log(d);
        st += o.time;
        sy += y;
        stt += o.time * o.time;
        sty += o.time * y;
        ++cnt;
    }
    if (cnt < 3) throw std::domain_error("decay_rate: insufficient decay (final decade under-sampled)");
    const double slope = (cnt * sty - st * sy) / (cnt * stt - st * st);
    return -slope;
}

/// Weighted distance between two states on the same reference grid: |rho_a - rho_b| + |m_a - m_b|_J.
inline double state_distance(Simulator& sim, const SimState& a, const SimState& b) {
    const int K = std::max(a.shape.max_mode(), b.shape.max_mode());
    std::vector<double> d(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) d[k] = a.shape.coeff(k) - b.shape.coeff(k);
    const double rho = boundary_norm(BoundaryShape(a.shape.R, d));
    const auto& geo = sim.geometry(a.shape);
    double sum = 0.0;
    for (std::size_t k = 0; k < geo.J.size(); ++k) sum += geo.J[k] * std::pow(a.myosin.values[k] - b.myosin.values[k], 2);
    return rho + std::sqrt(sum * sim.grid().h() * 2.0 * kPi / sim.n_phi());
}

}  // namespace hsks
