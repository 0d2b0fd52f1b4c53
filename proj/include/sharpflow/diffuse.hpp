#pragma once

// Radially symmetric (or flat 1D) solver for the fourth-order phase-field
// gradient flow in the rescaled time t1:
//
//   eps^4 u_t1 = -eps^2 w - 2 b^2 psi_uu(u) w + 2 eps^2 div(a^2 grad w)
//   w          = b^2 psi_u(u) - eps^2 div(a^2 grad u)
//
// Space: node-centred finite volumes, so the discrete operator is symmetric in
// the volume-weighted inner product and the r = 0 symmetry limit comes out of
// the cell geometry. At the outer boundary w = 0 and
// eps a^2 u_r + (2/eps) a^2 w_r = 0 are imposed through boundary fluxes; with
// that closure the semi-discrete system is an exact gradient flow of the
// discrete energy.
//
// Time: linearised implicit Euler with the full banded Jacobian (forward-mode
// duals, five colours), step-doubling error control.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "sharpflow/banded.hpp"
#include "sharpflow/dual.hpp"
#include "sharpflow/errors.hpp"
#include "sharpflow/fields.hpp"
#include "sharpflow/geometry.hpp"

namespace sharpflow {

enum class Metric { spherical, planar };

/// Uniform node grid. Spherical: r_i = i h on [0, r_max], the centre is a
/// symmetry point. Planar: x_i = x_lo + i h, both ends are physical
/// boundaries.
struct Grid {
    Metric metric = Metric::spherical;
    double x_lo = 0.0;
    double x_hi = 1.0;
    std::size_t n = 2;

    double h() const { return (x_hi - x_lo) / static_cast<double>(n - 1); }
    double x(std::size_t i) const { return i + 1 == n ? x_hi : x_lo + static_cast<double>(i) * h(); }
    double r_max() const { return x_hi; }

    std::vector<double> nodes() const {
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = x(i);
        return r;
    }

    /// Area element of a face at coordinate s (per steradian when spherical).
    double area(double s) const { return metric == Metric::spherical ? s * s : 1.0; }

    /// Measure of the cell [lo, hi].
    double volume(double lo, double hi) const {
        return metric == Metric::spherical ? (hi * hi * hi - lo * lo * lo) / 3.0 : hi - lo;
    }

    /// 4 pi for the sphere (energy per full domain), 1 per unit area otherwise.
    double measure_factor() const { return metric == Metric::spherical ? 4.0 * std::numbers::pi : 1.0; }

    static Grid spherical(double r_max, std::size_t n_points) {
        if (!(r_max > 0.0) || n_points < 3) throw std::invalid_argument("Grid::spherical: need r_max > 0, n >= 3");
        return {Metric::spherical, 0.0, r_max, n_points};
    }
    static Grid planar(double lo, double hi, std::size_t n_points) {
        if (!(hi > lo) || n_points < 3) throw std::invalid_argument("Grid::planar: need hi > lo, n >= 3");
        return {Metric::planar, lo, hi, n_points};
    }
};

struct PhaseState {
    std::vector<double> u;
    std::vector<double> w;
    double t1 = 0.0;
};

struct EnergyReport {
    double F_eps = 0.0;
    double gradient = 0.0;
    double potential = 0.0;
    double residual = 0.0;
};

struct StepAttempt {
    PhaseState next;
    double error = 0.0; ///< sup-norm difference between one full and two half steps
};

struct DtPolicy {
    double tol = 1e-7; ///< local error target on u (sup norm)
    double dt_initial = 1e-8;
    double dt_min = 1e-16;
    double dt_max = 1e-3;
    double output_interval = 0.0; ///< 0: record every accepted step
    double safety = 0.9;
    std::size_t max_steps = 10'000'000;
};

struct DiffuseRecord {
    double t1 = 0.0;
    double radius = 0.0;
    double F_eps = 0.0;
    double dt1 = 0.0;
};

struct DiffuseTrajectory {
    std::vector<DiffuseRecord> records;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    /// Largest F(u^{n+1}) - F(u^n) over accepted steps (negative if strictly
    /// dissipative throughout).
    double max_energy_increase = -std::numeric_limits<double>::infinity();
    std::size_t energy_increases = 0; ///< accepted steps with F^{n+1} > F^n
};

/// Second-order stencil, or the same stencil with the h^2/12 correction of its
/// leading truncation error (fourth order for the planar, constant-a case).
enum class Stencil { standard, corrected };

/// Banded Jacobian in row-major band form: row i holds columns i-bw..i+bw.
struct BandJacobian {
    std::size_t n = 0;
    std::size_t bw = 0;
    std::vector<double> data;

    std::size_t width() const { return 2 * bw + 1; }
    double& at(std::size_t i, std::size_t k) { return data[i * width() + k]; }
    double at(std::size_t i, std::size_t k) const { return data[i * width() + k]; }
    bool valid(std::size_t i, std::size_t k) const { return i + k >= bw && i + k - bw < n; }
};

/// Jacobian of a residual whose row i depends on u[i-bw..i+bw] only, by
/// forward-mode differentiation with 2 bw + 1 column colours. `f` maps
/// (span<const Dual> u, span<Dual> out).
template <class Residual>
void banded_jacobian(std::span<const double> u, std::size_t bw, Residual&& f, BandJacobian& J) {
    const std::size_t n = u.size();
    const std::size_t colours = 2 * bw + 1;
    std::vector<Dual> ud(n), out(n);
    J.n = n;
    J.bw = bw;
    J.data.assign(n * colours, 0.0);
    for (std::size_t c = 0; c < colours; ++c) {
        for (std::size_t j = 0; j < n; ++j) ud[j] = Dual(u[j], j % colours == c ? 1.0 : 0.0);
        f(std::span<const Dual>(ud), std::span<Dual>(out));
        for (std::size_t i = 0; i < n; ++i) {
            // the single column of colour c in i-bw..i+bw, as an offset from i-bw
            const std::size_t k = (c + colours - (i + colours - bw % colours) % colours) % colours;
            if (J.valid(i, k)) J.at(i, k) = out[i].d;
        }
    }
}

/// Solves (I - dt J) x = rhs in place.
inline void solve_shifted(const BandJacobian& J, double dt, std::span<double> rhs) {
    const int bw = static_cast<int>(J.bw);
    BandedMatrix A(J.n, bw, bw);
    for (std::size_t i = 0; i < J.n; ++i)
        for (std::size_t k = 0; k < J.width(); ++k) {
            if (!J.valid(i, k)) continue;
            const std::size_t j = i + k - J.bw;
            A(i, j) = (i == j ? 1.0 : 0.0) - dt * J.at(i, k);
        }
    A.solve_in_place(rhs);
}

/// Grid, eps and the coefficient fields, pre-sampled onto nodes and faces.
///
/// With S the symmetric flux matrix (S u)_i = sum_faces kappa_f (u_j - u_i),
/// kappa_f = area_f a_f^2 / h, and M = diag(V_i a_i^2), the discrete operator
/// is L = S - c S M^{-1} S (c = h^2/12 when corrected, else 0), so that
/// div(a^2 grad u) ~ L u / V. Then
///   E  = (eps/2) (-u.L u) + (1/eps) sum V b^2 psi(u) + (1/eps^3) sum V w^2
///   w0 = b^2 psi_u(u) - eps^2 L u / V,   w = w0 with physical boundary nodes zeroed
///   eps^4 u_t1 = -(eps^3 / V) dE/du = -eps^2 w0 - 2 b^2 psi_uu(u) w + 2 eps^2 L w / V
/// which is the interior equation plus a boundary closure carrying w = 0 and
/// eps Q_u + (2/eps) Q_w = 0 for the outward fluxes Q.
class DiffuseProblem {
public:
    DiffuseProblem(Grid grid, double eps, const CoefficientField& a, const CoefficientField& b,
                   Stencil stencil = Stencil::corrected)
        : grid_(grid), eps_(eps), a_(a), b_(b), stencil_(stencil) {
        if (!(eps > 0.0)) throw std::invalid_argument("DiffuseProblem: eps must be positive");
        const std::size_t n = grid_.n;
        const double h = grid_.h();
        b2_.resize(n);
        vol_.resize(n);
        inv_m_.resize(n);
        kappa_.resize(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            const double bi = eval_field(b, at(grid_.x(i))).value;
            const double ai = eval_field(a, at(grid_.x(i))).value;
            b2_[i] = bi * bi;
            const double lo = i == 0 ? grid_.x_lo : 0.5 * (grid_.x(i - 1) + grid_.x(i));
            const double hi = i + 1 == n ? grid_.x_hi : 0.5 * (grid_.x(i) + grid_.x(i + 1));
            vol_[i] = grid_.volume(lo, hi);
            inv_m_[i] = 1.0 / (vol_[i] * ai * ai);
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double s = 0.5 * (grid_.x(i) + grid_.x(i + 1));
            const double af = eval_field(a, at(s)).value;
            kappa_[i] = grid_.area(s) * af * af / h;
        }
        corr_ = stencil == Stencil::corrected ? h * h / 12.0 : 0.0;
        left_open_ = grid_.metric == Metric::planar;
    }

    static DiffuseProblem spherical(const CoefficientField& a, const CoefficientField& b, double eps, double r_max,
                                    std::size_t n_points, Stencil st = Stencil::corrected) {
        return {Grid::spherical(r_max, n_points), eps, a, b, st};
    }
    static DiffuseProblem planar(const CoefficientField& a, const CoefficientField& b, double eps, double lo,
                                 double hi, std::size_t n_points, Stencil st = Stencil::corrected) {
        return {Grid::planar(lo, hi, n_points), eps, a, b, st};
    }

    const Grid& grid() const { return grid_; }
    double eps() const { return eps_; }
    std::size_t size() const { return grid_.n; }
    Stencil stencil() const { return stencil_; }
    const CoefficientField& a() const { return a_; }
    const CoefficientField& b() const { return b_; }
    std::span<const double> volumes() const { return vol_; }
    std::span<const double> b_squared() const { return b2_; }
    bool left_boundary() const { return left_open_; }

    /// Stencil half-width of w0 in u.
    std::size_t w_halfwidth() const { return corr_ > 0.0 ? 2 : 1; }
    /// Stencil half-width of the right-hand side in u.
    std::size_t rhs_halfwidth() const { return 2 * w_halfwidth(); }

    /// h <= eps / 8.
    bool resolves_interface() const { return grid_.h() <= eps_ / 8.0 * (1.0 + 1e-12); }

    /// out = L u.
    template <class T> void apply_L(std::span<const T> u, std::span<T> out) const {
        const std::size_t n = size();
        flux(u, out);
        if (corr_ == 0.0) return;
        std::vector<T> q(n), sq(n);
        for (std::size_t i = 0; i < n; ++i) q[i] = out[i] * inv_m_[i];
        flux(std::span<const T>(q), std::span<T>(sq));
        for (std::size_t i = 0; i < n; ++i) out[i] -= corr_ * sq[i];
    }

    /// w0 = b^2 psi_u(u) - eps^2 L u / V (no boundary masking).
    template <class T> void natural_w(std::span<const T> u, std::span<T> w0) const {
        apply_L(u, w0);
        const double e2 = eps_ * eps_;
        for (std::size_t i = 0; i < size(); ++i) w0[i] = b2_[i] * DoubleWell::psi_u(u[i]) - (e2 / vol_[i]) * w0[i];
    }

    /// Zero w at the physical boundary nodes.
    template <class T> void mask_boundary(std::span<T> w) const {
        w[size() - 1] = T(0.0);
        if (left_open_) w[0] = T(0.0);
    }

    /// Right-hand side u_t1 = F(u).
    template <class T> void rhs(std::span<const T> u, std::span<T> F) const {
        const std::size_t n = size();
        std::vector<T> w0(n), w(n), Lw(n);
        natural_w(u, std::span<T>(w0));
        std::copy(w0.begin(), w0.end(), w.begin());
        mask_boundary(std::span<T>(w));
        apply_L(std::span<const T>(w), std::span<T>(Lw));
        const double e2 = eps_ * eps_;
        const double ie4 = 1.0 / (e2 * e2);
        for (std::size_t i = 0; i < n; ++i) {
            const T reaction = e2 * w0[i] + 2.0 * b2_[i] * DoubleWell::psi_uu(u[i]) * w[i];
            F[i] = -ie4 * (reaction - (2.0 * e2 / vol_[i]) * Lw[i]);
        }
    }

    std::vector<double> assemble_w(std::span<const double> u) const {
        check_size(u);
        std::vector<double> w(size());
        natural_w<double>(u, w);
        mask_boundary<double>(w);
        return w;
    }

    std::vector<double> rhs(std::span<const double> u) const {
        check_size(u);
        std::vector<double> F(size());
        rhs<double>(u, F);
        return F;
    }

    /// Discrete functional, times 4 pi on the sphere.
    EnergyReport energy(std::span<const double> u) const {
        check_size(u);
        const std::size_t n = size();
        const auto w = assemble_w(u);
        const double m = grid_.measure_factor();
        EnergyReport e;
        // -u.L u = sum kappa (du)^2 + c sum (S u)_i^2 / M_i
        std::vector<double> su(n);
        flux(u, std::span<double>(su));
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double du = u[i + 1] - u[i];
            e.gradient += kappa_[i] * du * du;
        }
        if (corr_ > 0.0) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += su[i] * su[i] * inv_m_[i];
            e.gradient += corr_ * s;
        }
        e.gradient *= 0.5 * eps_ * m;
        for (std::size_t i = 0; i < n; ++i) {
            e.potential += vol_[i] * b2_[i] * DoubleWell::psi(u[i]);
            e.residual += vol_[i] * w[i] * w[i];
        }
        e.potential *= m / eps_;
        e.residual *= m / (eps_ * eps_ * eps_);
        e.F_eps = e.gradient + e.potential + e.residual;
        return e;
    }

    /// u0 = tanh(beta (r - R0) / eps) with beta = b/a at the front point.
    PhaseState initial_state(double R0) const {
        const Vec3 p = at(R0);
        const double beta = eval_field(b_, p).value / eval_field(a_, p).value;
        PhaseState s;
        s.u.resize(size());
        for (std::size_t i = 0; i < size(); ++i) s.u[i] = std::tanh(beta * (grid_.x(i) - R0) / eps_);
        s.w = assemble_w(s.u);
        return s;
    }

    PhaseState uniform_state(double value) const {
        PhaseState s;
        s.u.assign(size(), value);
        s.w = assemble_w(s.u);
        return s;
    }

    double front_radius(const PhaseState& s) const {
        const auto r = grid_.nodes();
        return extract_front_radius(s.u, r);
    }

    static Vec3 at(double s) { return {s, 0.0, 0.0}; }

private:
    /// out = S u.
    template <class T> void flux(std::span<const T> u, std::span<T> out) const {
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) {
            T f = T(0.0);
            if (i + 1 < n) f += kappa_[i] * (u[i + 1] - u[i]);
            if (i > 0) f -= kappa_[i - 1] * (u[i] - u[i - 1]);
            out[i] = f;
        }
    }

    void check_size(std::span<const double> u) const {
        if (u.size() != size()) throw std::invalid_argument("DiffuseProblem: field size does not match grid");
    }

    Grid grid_;
    double eps_;
    CoefficientField a_, b_;
    Stencil stencil_;
    std::vector<double> b2_, vol_, inv_m_, kappa_;
    double corr_ = 0.0;
    bool left_open_ = false;
};

class DiffuseSolver {
public:
    explicit DiffuseSolver(DiffuseProblem p) : p_(std::move(p)) {}

    const DiffuseProblem& problem() const { return p_; }

    void jacobian(std::span<const double> u, BandJacobian& J) const {
        banded_jacobian(u, p_.rhs_halfwidth(), [this](std::span<const Dual> x, std::span<Dual> F) { p_.rhs<Dual>(x, F); },
                        J);
    }

    /// Linearised implicit Euler: (I - dt J(u)) du = dt F(u).
    std::vector<double> euler(std::span<const double> u, const BandJacobian& J, std::span<const double> F,
                              double dt) const {
        std::vector<double> du(F.begin(), F.end());
        for (double& v : du) v *= dt;
        solve_shifted(J, dt, du);
        std::vector<double> out(u.begin(), u.end());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += du[i];
        return out;
    }

    /// Full step and two half steps; the half-step result is kept.
    StepAttempt attempt(const PhaseState& s, double dt) const {
        if (!(dt > 0.0)) throw std::invalid_argument("step: dt1 must be positive");
        const std::size_t n = p_.size();
        BandJacobian J;
        jacobian(s.u, J);
        std::vector<double> F(n);
        p_.rhs<double>(s.u, F);
        const auto big = euler(s.u, J, F, dt);
        const auto mid = euler(s.u, J, F, 0.5 * dt);
        jacobian(mid, J);
        p_.rhs<double>(mid, F);
        StepAttempt out;
        out.next.u = euler(mid, J, F, 0.5 * dt);
        out.next.t1 = s.t1 + dt;
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = out.next.u[i];
            if (!std::isfinite(v) || std::abs(v) > 10.0) {
                std::ostringstream os;
                os << "|u| = " << std::abs(v) << " at node " << i << ", t1 = " << out.next.t1;
                throw Blowup(os.str());
            }
            err = std::max(err, std::abs(v - big[i]));
        }
        out.error = err;
        out.next.w = p_.assemble_w(out.next.u);
        return out;
    }

    /// Accepts the step or throws StepRejected when the error estimate exceeds
    /// tol.
    PhaseState step(const PhaseState& s, double dt, double tol = 1e-6) const {
        StepAttempt a = attempt(s, dt);
        if (a.error > tol) {
            std::ostringstream os;
            os << "error estimate " << a.error << " > " << tol << " at dt1 = " << dt;
            throw StepRejected(os.str());
        }
        return std::move(a.next);
    }

    /// Adaptive integration to t1_end. Records the initial state, every
    /// output_interval of t1 (or every accepted step when 0), and the final
    /// state.
    DiffuseTrajectory run_to(PhaseState& s, double t1_end, const DtPolicy& pol) const {
        DiffuseTrajectory tr;
        double F = p_.energy(s.u).F_eps;
        tr.records.push_back({s.t1, p_.front_radius(s), F, 0.0});
        if (!(t1_end > s.t1)) return tr;
        double dt = std::min(pol.dt_initial, pol.dt_max);
        const double t_tiny = 1e-14 * std::max(1.0, std::abs(t1_end));
        // output times from a counter so the schedule does not drift
        const double t_start = s.t1;
        std::size_t k_out = 1;
        const auto out_time = [&](std::size_t k) {
            if (pol.output_interval <= 0.0) return t1_end;
            const double t = t_start + static_cast<double>(k) * pol.output_interval;
            return t >= t1_end - t_tiny ? t1_end : t;
        };
        double next_out = out_time(k_out);
        while (t1_end - s.t1 > t_tiny) {
            if (tr.accepted + tr.rejected >= pol.max_steps) throw StepSizeUnderflow("step budget exhausted");
            const double target = next_out;
            const bool clipped = s.t1 + dt >= target - t_tiny;
            const double h = clipped ? target - s.t1 : dt;
            StepAttempt a = attempt(s, h);
            const double fac = a.error > 0.0 ? pol.safety * std::sqrt(pol.tol / a.error) : 4.0;
            if (a.error > pol.tol) {
                ++tr.rejected;
                dt = h * std::clamp(fac, 0.1, 0.9);
                if (dt < pol.dt_min) {
                    std::ostringstream os;
                    os << "dt1 = " << dt << " below dt_min at t1 = " << s.t1;
                    throw StepSizeUnderflow(os.str());
                }
                continue;
            }
            ++tr.accepted;
            const double F_new = p_.energy(a.next.u).F_eps;
            const double dF = F_new - F;
            tr.max_energy_increase = std::max(tr.max_energy_increase, dF);
            if (dF > 0.0) ++tr.energy_increases;
            F = F_new;
            s = std::move(a.next);
            if (clipped) s.t1 = target;
            if (t1_end - s.t1 <= t_tiny) s.t1 = t1_end;
            const double grown = std::min(pol.dt_max, h * std::clamp(fac, 0.2, 4.0));
            dt = clipped ? std::max(dt, grown) : grown;
            const bool at_output = pol.output_interval <= 0.0 || (clipped && target == next_out);
            if (at_output || t1_end - s.t1 <= t_tiny) {
                tr.records.push_back({s.t1, p_.front_radius(s), F, h});
                if (pol.output_interval > 0.0 && clipped && target == next_out) next_out = out_time(++k_out);
            }
        }
        return tr;
    }

    /// Fixed-step integration without error control.
    void advance_fixed(PhaseState& s, double dt, std::size_t steps) const {
        BandJacobian J;
        std::vector<double> F(p_.size());
        for (std::size_t k = 0; k < steps; ++k) {
            jacobian(s.u, J);
            p_.rhs<double>(s.u, F);
            s.u = euler(s.u, J, F, dt);
            s.t1 += dt;
        }
        s.w = p_.assemble_w(s.u);
    }

private:
    DiffuseProblem p_;
};

/// Discrete equilibrium of the flat problem: Newton on w0(u) = 0 (natural,
/// unmasked w) with node `pin` held at 0 for the odd kink. Such a state has
/// zero boundary fluxes, so it is an exact fixed point of the solver.
inline std::vector<double> relax_kink(const DiffuseProblem& p, std::vector<double> u, std::size_t pin,
                                      double tol = 1e-15, int max_iter = 60) {
    const std::size_t n = p.size();
    if (u.size() != n || pin >= n) throw std::invalid_argument("relax_kink: bad sizes");
    auto G = [&](auto ux, auto out) {
        p.natural_w(ux, out);
        out[pin] = ux[pin];
    };
    BandJacobian J;
    std::vector<double> r(n);
    for (int it = 0; it < max_iter; ++it) {
        banded_jacobian(u, p.w_halfwidth(), [&](std::span<const Dual> x, std::span<Dual> o) { G(x, o); }, J);
        G(std::span<const double>(u), std::span<double>(r));
        // J du = -r  <=>  (I - 1 (J + I)) du = r
        for (std::size_t i = 0; i < n; ++i) J.at(i, J.bw) += 1.0;
        solve_shifted(J, 1.0, r);
        double step = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            u[i] += r[i];
            step = std::max(step, std::abs(r[i]));
        }
        if (step < tol) return u;
    }
    return u;
}

} // namespace sharpflow
