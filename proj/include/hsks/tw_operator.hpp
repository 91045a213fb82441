#pragma once
// Linearisation of the co-moving dynamics about a traveling wave.
// The operator is the Jacobian of the simulator's semi-discrete right-hand side in the frame moving with
// velocity V (no recentering), taken by central differences. Unknowns are the x-symmetric half of the
// myosin grid (angles 0..pi) and the boundary cosine coefficients. Myosin is the pulled-back field on the
// boundary-fitted grid, which is a similarity transform of the Eulerian perturbation: spectra coincide.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bifurcation.hpp"
#include "simulator.hpp"

namespace hsks {

/// Result of correcting a wave state to a zero of the discrete co-moving rate.
struct DiscreteTw {
    SimState state;
    double initial_residual = 0.0;  // max |rate| at the seed
    double residual = 0.0;          // max |rate| at the result
    int iterations = 0;
    bool converged = false;
};

/// Which state the operator linearises about: the expansion itself, or the discrete wave obtained from it by
/// refine_tw. The expansion leaves an O(V^3) defect that the stiff discrete operator amplifies near the boundary.
enum class TwBackground { Expansion, Discrete };

struct TwOperator {
    Eigen::MatrixXd matrix;
    Eigen::MatrixXd seed_matrix;  // Jacobian at the expanded wave (chord matrix for refine_tw)
    Eigen::VectorXd weights;          // L2 quadrature weights: int m^2 dx + int rho^2 dphi
    Eigen::VectorXd background_rate;  // rate at the linearisation state
    Eigen::VectorXd seed_rate;        // rate at the expanded wave
    SimState seed;                    // expanded wave on the grid
    SimState background;              // linearisation state
    TwBackground kind = TwBackground::Discrete;
    std::optional<DiscreteTw> refinement;
    double m_step = 0.0, rho_step = 0.0;
    double V = 0.0;
    int n_r = 0, n_phi = 0, K = 0;

    int half() const { return n_phi / 2 + 1; }
    int m_size() const { return n_r * half(); }
    int size() const { return m_size() + K + 1; }
    double norm(const Eigen::VectorXd& v) const { return std::sqrt((weights.array() * v.array().square()).sum()); }
};

namespace detail {

inline Eigen::VectorXd reduce_state(const PolarField& m, std::span<const double> rho, int K) {
    const int hf = m.n_phi / 2 + 1;
    Eigen::VectorXd v(m.n_r() * hf + K + 1);
    for (int i = 0; i < m.n_r(); ++i)
        for (int j = 0; j < hf; ++j) v[i * hf + j] = m.at(i, j);
    for (int k = 0; k <= K; ++k) v[m.n_r() * hf + k] = k < static_cast<int>(rho.size()) ? rho[k] : 0.0;
    return v;
}

inline SimState perturb_state(const SimState& s, const Eigen::VectorXd& v, double eps, int K) {
    SimState out = s;
    const int n = s.myosin.n_phi, hf = n / 2 + 1, N = s.myosin.n_r();
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < hf; ++j) {
            const double d = eps * v[i * hf + j];
            out.myosin.at(i, j) += d;
            if (j > 0 && j < n / 2) out.myosin.at(i, n - j) += d;
        }
    for (int k = 0; k <= K; ++k) out.shape.rho_cos[k] += eps * v[N * hf + k];
    return out;
}

inline Eigen::VectorXd fixed_frame_rate(Simulator& sim, const SimState& s, double V) {
    const auto t = sim.tendency(s, Frame{FrameMode::Fixed, V});
    return reduce_state(sim.myosin_rate(s, t), t.rho_rate, sim.boundary_modes());
}

}  // namespace detail

namespace detail {

// Central-difference Jacobian of the co-moving rate in reduced coordinates.
inline Eigen::MatrixXd rate_jacobian(Simulator& sim, const SimState& s, double V, double m_step, double rho_step) {
    const int K = sim.boundary_modes();
    const Eigen::Index size = reduce_state(s.myosin, s.shape.rho_cos, K).size();
    const Eigen::Index msize = size - K - 1;
    Eigen::MatrixXd A(size, size);
    for (Eigen::Index c = 0; c < size; ++c) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(size);
        e[c] = 1.0;
        const double eps = c < msize ? m_step : rho_step;
        const auto plus = fixed_frame_rate(sim, perturb_state(s, e, eps, K), V);
        const auto minus = fixed_frame_rate(sim, perturb_state(s, e, -eps, K), V);
        A.col(c) = (plus - minus) / (2.0 * eps);
    }
    return A;
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Gradient of the discrete total myosin sum(J m) w: J w for the myosin entries, sum(m dJ/drho_k) w for the shape.
inline Eigen::VectorXd mass_gradient(Simulator& sim, const SimState& s) {
    const int n = sim.n_phi(), K = sim.boundary_modes(), N = sim.grid().n, hf = n / 2 + 1;
    const auto& geo = sim.geometry(s.shape);
    const double w = sim.grid().h() * 2.0 * kPi / n;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N) * hf + K + 1);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < hf; ++j)
            g[i * hf + j] = geo.J[static_cast<std::size_t>(i) * n + j] * w * ((j == 0 || j == n / 2) ? 1.0 : 2.0);
    for (int k = 0; k <= K; ++k) {
        std::vector<double> c(static_cast<std::size_t>(k) + 1, 0.0);
        c[k] = 1.0;
        const auto vs = BoundaryShape(s.shape.R, c).samples(n);
        const auto sens = map_sensitivity(s.shape, sim.grid(), n, vs.rho, vs.d1, vs.d2);
        double sum = 0.0;
        for (std::size_t q = 0; q < sens.d_J.size(); ++q) sum += s.myosin.values[q] * sens.d_J[q];
        g[static_cast<Eigen::Index>(N) * hf + k] = sum * w;
    }
    return g;
}

}  // namespace detail

/// Chord-Newton solve of rate(s) = 0 at velocity V with the cos(phi) coefficient pinned to its seed value
/// (fixes the translation); the total myosin is left free. `jac` is the Jacobian at or near the seed and is
/// never refreshed. Converged once max |rate| < tol * max(1, max m); iterations then continue down to the
/// rounding floor.
inline DiscreteTw refine_tw(Simulator& sim, const SimState& seed, double V, const Eigen::MatrixXd& jac,
                            double tol = 1e-8, int max_iter = 40) {
    const int K = sim.boundary_modes();
    const Eigen::Index size = jac.rows(), msize = size - K - 1;
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(size + 1, size);
    aug.topRows(size) = jac;
    aug(size, msize + 1) = 1.0;
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver(aug);
    const double scale = std::max(detail::max_abs(seed.myosin.values), 1.0);

    DiscreteTw out;
    out.state = seed;
    Eigen::VectorXd F = detail::fixed_frame_rate(sim, out.state, V);
    out.initial_residual = out.residual = F.lpNorm<Eigen::Infinity>();
    while (out.iterations < max_iter) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size + 1);
        rhs.head(size) = -F;
        const Eigen::VectorXd delta = solver.solve(rhs);
        auto next = detail::perturb_state(out.state, delta, 1.0, K);
        const Eigen::VectorXd Fn = detail::fixed_frame_rate(sim, next, V);
        const double r = Fn.lpNorm<Eigen::Infinity>();
        if (!(r < out.residual)) break;
        const bool stalled = r > 0.5 * out.residual && out.residual <= tol * scale;
        out.state = std::move(next);
        F = Fn;
        out.residual = r;
        ++out.iterations;
        if (stalled) break;
    }
    out.converged = out.residual <= tol * scale;
    return out;
}

/// Discrete linearised traveling-wave operator at velocity V.
inline TwOperator assemble_tw_operator(const TravelingWave& tw, double V, int n_r, int n_phi,
                                       TwBackground background = TwBackground::Discrete) {
    if (std::abs(V) > tw.valid_V) throw std::invalid_argument("assemble_tw_operator: |V| beyond valid_V");
    TwOperator op;
    op.V = V;
    op.n_r = n_r;
    op.n_phi = n_phi;
    op.K = dealiased_modes(n_phi);
    op.kind = background;
    op.seed = tw_state_on_shape(tw, V, tw.shape(V), 0.0, n_r, n_phi);
    Simulator sim(tw.params, n_r, n_phi, tw.R0);
    sim.potential_options().tol = 1e-12;
    // warm start for every perturbed solve
    op.seed.potential = sim.tendency(op.seed, Frame{FrameMode::Fixed, V}).potential.phi;
    op.m_step = 1e-6 * detail::max_abs(op.seed.myosin.values);
    op.rho_step = 1e-6 * tw.R0;
    op.background = op.seed;
    op.seed_matrix = detail::rate_jacobian(sim, op.seed, V, op.m_step, op.rho_step);
    op.matrix = op.seed_matrix;
    op.seed_rate = detail::fixed_frame_rate(sim, op.seed, V);
    if (background == TwBackground::Discrete) {
        const auto ref = refine_tw(sim, op.seed, V, op.seed_matrix);
        if (!ref.converged)
            throw std::runtime_error("assemble_tw_operator: discrete wave not found (residual " + std::to_string(ref.residual) + ")");
        op.refinement = ref;
        op.background = ref.state;
        op.matrix = detail::rate_jacobian(sim, op.background, V, op.m_step, op.rho_step);
    }
    op.background_rate = detail::fixed_frame_rate(sim, op.background, V);

    const int hf = op.half();
    const auto& geo = sim.geometry(op.background.shape);
    const double w = sim.grid().h() * 2.0 * kPi / n_phi;
    op.weights.resize(op.size());
    for (int i = 0; i < n_r; ++i)
        for (int j = 0; j < hf; ++j)
            op.weights[i * hf + j] = geo.J[static_cast<std::size_t>(i) * n_phi + j] * w * ((j == 0 || j == n_phi / 2) ? 1.0 : 2.0);
    for (int k = 0; k <= op.K; ++k) op.weights[op.m_size() + k] = k == 0 ? 2.0 * kPi : kPi;
    return op;
}

/// Derivative of a discrete state under translation in +x: the boundary moves by
/// cos + rho' sin / (R + rho) (truncated to the kept modes) and the myosin is carried along,
/// d m/d x0 = grad m . (mesh displacement - e_x), with grid derivatives of the discrete field.
inline Eigen::VectorXd discrete_shift(Simulator& sim, const SimState& s) {
    const int n = sim.n_phi(), K = sim.boundary_modes(), N = sim.grid().n;
    const double h = sim.grid().h();
    AngularTransform tr(n);
    const auto sm = s.shape.samples(n);
    std::vector<double> shift_rho(n);
    for (int j = 0; j < n; ++j) {
        const double ph = 2.0 * kPi * j / n;
        shift_rho[j] = std::cos(ph) + sm.d1[j] * std::sin(ph) / (s.shape.R + sm.rho[j]);
    }
    auto coeffs = tr.cosine_coefficients(shift_rho);
    coeffs.resize(static_cast<std::size_t>(K) + 1);
    const auto vs = BoundaryShape(s.shape.R, coeffs).samples(n);
    const auto sens = map_sensitivity(s.shape, sim.grid(), n, vs.rho, vs.d1, vs.d2);

    const auto& geo = sim.geometry(s.shape);
    // myosin has no zero-slope condition at R (the boundary flux balances advection): one-sided at the last node
    std::vector<double> b(n, 0.0), dm_r, dm_p(static_cast<std::size_t>(N) * n);
    MappedOperator(geo).radial_slope(s.myosin, b, dm_r);
    for (int j = 0; j < n; ++j)
        dm_r[static_cast<std::size_t>(N - 1) * n + j] =
            (3.0 * s.myosin.at(N - 1, j) - 4.0 * s.myosin.at(N - 2, j) + s.myosin.at(N - 3, j)) / (2.0 * h);
    for (int i = 0; i < N; ++i)
        tr.derivative(s.myosin.row(i), {dm_p.data() + static_cast<std::size_t>(i) * n, std::size_t(n)}, 1);

    PolarField dm(sim.grid(), n);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < n; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * n + j;
            const double ph = 2.0 * kPi * j / n;
            const double ur = sens.d_eta[k] - std::cos(ph), up = sens.d_sigma[k] + std::sin(ph);
            const double cr = (ur * geo.Xp_p[k] - up * geo.Xp_r[k]) / geo.J[k];
            const double cp = (geo.Xr_r[k] * up - geo.Xr_p[k] * ur) / geo.J[k];
            dm.at(i, j) = cr * dm_r[k] + cp * dm_p[k];
        }
    return detail::reduce_state(dm, coeffs, K);
}

/// Shift direction, velocity derivative and mass covector of the background wave in the operator's coordinates.
struct TwKernelVectors {
    Eigen::VectorXd shift;     // d/dx0 of the translated wave
    Eigen::VectorXd velocity;  // d/dV along the family
    Eigen::VectorXd mass;      // gradient of the discrete total myosin
};

inline TwKernelVectors tw_kernel_vectors(const TwOperator& op, const TravelingWave& tw) {
    const int n = op.n_phi, K = op.K;
    const double V = op.V;
    Simulator sim(tw.params, op.n_r, n, tw.R0);
    sim.potential_options().tol = 1e-12;

    TwKernelVectors out;
    out.shift = discrete_shift(sim, op.background);

    // family derivative: expansion states, or discrete waves refined from them with the operator as chord Jacobian
    const double dv = op.kind == TwBackground::Discrete ? 1e-3 : 1e-4;
    auto at_velocity = [&](double v) {
        auto s = tw_state_on_shape(tw, v, tw.shape(v), 0.0, op.n_r, n);
        if (op.kind == TwBackground::Expansion) return s;
        s.potential = op.background.potential;
        const auto ref = refine_tw(sim, s, v, op.seed_matrix);
        if (!ref.converged) throw std::runtime_error("tw_kernel_vectors: discrete wave not found at V +- dv");
        return ref.state;
    };
    const auto vp = at_velocity(V + dv), vn = at_velocity(V - dv);
    out.velocity = (detail::reduce_state(vp.myosin, vp.shape.rho_cos, K) - detail::reduce_state(vn.myosin, vn.shape.rho_cos, K)) / (2.0 * dv);

    out.mass = detail::mass_gradient(sim, op.background);
    return out;
}

struct TwMassReport {
    double adjoint_residual = 0.0;  // max over columns of |mass^T A| / (|mass|^T |A|)
    double orthogonality = 0.0;     // |mass . shift| / (dual norm of mass * |shift|)
    double divergence_identity = 0.0;  // (int d_x m dx - oint m nu_x ds) / oint |m nu_x| ds on the expanded wave
};

inline TwMassReport tw_mass_eigenvector_check(const TwOperator& op, const TravelingWave& tw, const TwKernelVectors& kv) {
    TwMassReport rep;
    for (int c = 0; c < op.size(); ++c) {
        const double num = std::abs(kv.mass.dot(op.matrix.col(c)));
        const double den = kv.mass.cwiseAbs().dot(op.matrix.col(c).cwiseAbs());
        if (den > 0.0) rep.adjoint_residual = std::max(rep.adjoint_residual, num / den);
    }
    const double dual = std::sqrt((kv.mass.array().square() / op.weights.array()).sum());
    rep.orthogonality = std::abs(kv.mass.dot(kv.shift)) / (dual * op.norm(kv.shift));

    // divergence theorem on the continuous wave
    const double V = op.V;
    const double norm = tw_normalisation(tw, V);
    const auto shape = tw.shape(V);
    auto m_at = [&](double x, double y) { return detail::tw_myosin_at(tw, V, norm, x, y); };
    const double dx = 1e-5 * tw.R0;
    const double interior = detail::radial_scaling_integral(shape, 128, [&](double s, double ph, double a) {
        const double r = s * a / tw.R0, x = r * std::cos(ph), y = r * std::sin(ph);
        return (m_at(x + dx, y) - m_at(x - dx, y)) / (2.0 * dx);
    });
    double boundary = 0.0, scale = 0.0;
    const int nb = 256;
    for (int j = 0; j < nb; ++j) {
        const double ph = 2.0 * kPi * j / nb;
        double rho, d1, d2;
        shape.eval(ph, rho, d1, d2);
        const double a = shape.R + rho;
        const double f = m_at(a * std::cos(ph), a * std::sin(ph)) * (a * std::cos(ph) + d1 * std::sin(ph));
        boundary += f * 2.0 * kPi / nb;
        scale += std::abs(f) * 2.0 * kPi / nb;
    }
    rep.divergence_identity = std::abs(interior - boundary) / scale;
    return rep;
}

struct TwKernelReport {
    std::vector<std::complex<double>> eigenvalues;  // by increasing magnitude
    double shift_residual = 0.0;        // |A v1| / |v1|
    double generalized_residual = 0.0;  // |A v2 - v1| / |v1|
    double background_residual = 0.0;  // |F(background)| / |v1|
    TwMassReport mass;
};

inline TwKernelReport tw_kernel_check(const TwOperator& op, const TravelingWave& tw) {
    const auto kv = tw_kernel_vectors(op, tw);
    TwKernelReport rep;
    const double n1 = op.norm(kv.shift);
    rep.shift_residual = op.norm(op.matrix * kv.shift) / n1;
    rep.generalized_residual = op.norm(op.matrix * kv.velocity - kv.shift) / n1;
    rep.background_residual = op.norm(op.background_rate) / n1;
    rep.mass = tw_mass_eigenvector_check(op, tw, kv);
    Eigen::EigenSolver<Eigen::MatrixXd> es(op.matrix, false);
    for (int k = 0; k < es.eigenvalues().size(); ++k) rep.eigenvalues.push_back(es.eigenvalues()[k]);
    std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
              [](auto a, auto b) { return std::abs(a) < std::abs(b); });
    return rep;
}

/// The kernel checks on two grids (n_r and n_r / 2, same n_phi). Each quantity that vanishes for the continuous
/// operator is compared with an a-posteriori estimate of its discretisation error, |q(h) - q(2h)| / (2^p - 1)
/// with p = 1: the quintic cutoff of the map is only C^2, and the collar terms converge at first order.
struct TwKernelStudy {
    TwKernelReport fine, coarse;
    int n_r_fine = 0, n_r_coarse = 0;
    double order = 1.0;
    double eigenvalue_budget = 0.0;    // largest estimate over the three smallest eigenvalues
    double generalized_budget = 0.0;   // estimate for the generalized-eigenvector residual
    double adjoint_budget = 0.0;       // estimate for the mass annihilation, floored at the Jacobian's rounding
    static constexpr double shift_tolerance = 1e-3;

    bool eigenvalues_within_budget() const {
        for (int k = 0; k < 3; ++k)
            if (std::abs(fine.eigenvalues[k]) > eigenvalue_budget) return false;
        return true;
    }
    bool shift_ok() const { return fine.shift_residual < shift_tolerance; }
    bool generalized_ok() const { return fine.generalized_residual <= generalized_budget; }
    bool adjoint_ok() const { return fine.mass.adjoint_residual <= adjoint_budget; }
};

inline TwKernelStudy tw_kernel_study(const TravelingWave& tw, double V, int n_r, int n_phi,
                                     TwBackground background = TwBackground::Discrete) {
    TwKernelStudy st;
    st.n_r_fine = n_r;
    st.n_r_coarse = n_r / 2;
    st.coarse = tw_kernel_check(assemble_tw_operator(tw, V, st.n_r_coarse, n_phi, background), tw);
    st.fine = tw_kernel_check(assemble_tw_operator(tw, V, n_r, n_phi, background), tw);
    const double div = std::pow(2.0, st.order) - 1.0;
    for (int k = 0; k < 3; ++k)
        st.eigenvalue_budget = std::max(st.eigenvalue_budget, std::abs(st.fine.eigenvalues[k] - st.coarse.eigenvalues[k]) / div);
    st.generalized_budget = std::abs(st.fine.generalized_residual - st.coarse.generalized_residual) / div;
    // central differences with relative step 1e-6 leave ~1e-10 relative rounding in each Jacobian entry
    st.adjoint_budget = std::max(std::abs(st.fine.mass.adjoint_residual - st.coarse.mass.adjoint_residual) / div, 1e-8);
    return st;
}

}  // namespace hsks
