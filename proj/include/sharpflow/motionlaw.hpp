#pragma once

// Sharp-interface motion law for the inhomogeneous fourth-order flow:
// drift coefficients A, B, C, D, the assembled normal velocity V, and a time
// integrator for radially symmetric fronts.

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string_view>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "sharpflow/errors.hpp"
#include "sharpflow/fields.hpp"
#include "sharpflow/geometry.hpp"
#include "sharpflow/profile.hpp"

namespace sharpflow {

/// Coefficients of Delta_x W1 = A z U0_zz + B U0_z + C z^2 U0_z^2 + D z^2 U0 U0_zz.
struct DriftCoefficients {
    double A = 0.0, B = 0.0, C = 0.0, D = 0.0;
};

enum class DriftForm {
    printed,   ///< the four published expressions, term by term
    rederived, ///< projection of the chain-rule expansion of Delta_x W1
};

inline void check_point_fields(const PointFields& f) {
    if (!(f.a.value > 0.0) || !(f.b.value > 0.0)) {
        std::ostringstream os;
        os << "drift coefficients need a > 0 and b > 0, got a = " << f.a.value << ", b = " << f.b.value;
        throw PositivityViolation(os.str());
    }
}

/// The published A, B, C, D, transcribed literally. grad_H is the tangential
/// gradient of H and lap_s_H stands in for Delta_x H.
inline DriftCoefficients drift_coefficients(const PointFields& f, double H, const Vec3& grad_H, double lap_s_H) {
    check_point_fields(f);
    const double a = f.a.value, b = f.b.value;
    const Vec3 &ga = f.a.grad, &gb = f.b.grad;
    const double la = f.a.lap, lb = f.b.lap;
    const double ga2 = norm2(ga), gb2 = norm2(gb), gab = dot(ga, gb);
    const double gbH = dot(gb, grad_H), gaH = dot(ga, grad_H);

    DriftCoefficients c;
    c.A = 2.0 * ga2 * H - 2.0 * (a * a) / (b * b) * gb2 * H - 2.0 * (a * a) / b * gbH + 2.0 * a * gaH -
          (a * a) / b * lb * H + a * la * H + 2.0 * a / b * gab * H - 2.0 * ga2 / b * H;
    c.B = -a * H * la - 2.0 * a * gaH - 2.0 * a / b * gab * H - (a * a) / b * H * lb - 2.0 * (a * a) / b * gbH -
          a * a * lap_s_H;
    c.C = 2.0 * a * gb2 / b * H - 4.0 * gab * H - 2.0 * b / a * ga2 * H;
    c.D = 2.0 * a / b * gb2 * H - 2.0 * gab * H + 2.0 * b / a * ga2 * H;
    return c;
}

/// A, B, C, D obtained by expanding W1 = -F S(G z), F = a b H, G = b/a,
/// S = sech^2:
///   Delta_x W1 = -Delta F S - z S' (2 grad F . grad G + F Delta G) - z^2 F |grad G|^2 S''
/// and projecting on the basis {z U0_zz, U0_z, z^2 U0_z^2, z^2 U0 U0_zz}
/// (S'' = 4S - 6S^2).
inline DriftCoefficients drift_coefficients_rederived(const PointFields& f, double H, const Vec3& grad_H,
                                                      double lap_s_H) {
    check_point_fields(f);
    const double a = f.a.value, b = f.b.value;
    const Vec3 &ga = f.a.grad, &gb = f.b.grad;
    const double F = a * b * H;
    const Vec3 gF = ga * (b * H) + gb * (a * H) + grad_H * (a * b);
    const double lF = f.a.lap * b * H + a * f.b.lap * H + a * b * lap_s_H +
                      2.0 * (dot(ga, gb) * H + dot(ga, grad_H) * b + dot(gb, grad_H) * a);
    const double beta = f.ratio.ratio;
    const Vec3& gG = f.ratio.grad;

    DriftCoefficients c;
    c.A = -(2.0 * dot(gF, gG) + F * f.ratio.lap) / (beta * beta);
    c.B = -lF / beta;
    c.C = 2.0 * F * norm2(gG) / (beta * beta);
    c.D = c.C;
    return c;
}

inline DriftCoefficients drift_coefficients(DriftForm form, const PointFields& f, double H, const Vec3& grad_H,
                                            double lap_s_H) {
    return form == DriftForm::printed ? drift_coefficients(f, H, grad_H, lap_s_H)
                                      : drift_coefficients_rederived(f, H, grad_H, lap_s_H);
}

/// V and its labelled summands. V is the left-to-right sum of `components`.
struct MotionTerms {
    DriftCoefficients drift;
    std::array<double, 9> components{};
    double V = 0.0;

    static constexpr std::array<std::string_view, 9> labels = {
        "a^2 H",
        "4 H a^4 (K - H^2/4)",
        "2 a^3 H^2 grad a . grad d",
        "(a^5/b) H Delta(b/a)",
        "-(2 pi^2/15) a^6 H |grad(b/a)|^2",
        "-a^2 A",
        "2 a^2 B",
        "a b C (2 pi^2/15 - 1)",
        "-(pi^2/15) a b D",
    };
};

inline MotionTerms assemble_motion(const PointFields& f, const FrontGeometry& g, const DriftCoefficients& d) {
    const double a = f.a.value, b = f.b.value, H = g.H;
    const double a2 = a * a, a3 = a2 * a, a4 = a2 * a2;
    MotionTerms m;
    m.drift = d;
    m.components = {
        a2 * H,
        4.0 * H * a4 * (g.K - H * H / 4.0),
        2.0 * a3 * H * H * dot(f.a.grad, g.normal),
        (a4 * a / b) * H * f.ratio.lap,
        -(2.0 * pi2 / 15.0) * a3 * a3 * H * norm2(f.ratio.grad),
        -a2 * d.A,
        2.0 * a2 * d.B,
        a * b * d.C * (2.0 * pi2 / 15.0 - 1.0),
        -(pi2 / 15.0) * a * b * d.D,
    };
    double v = 0.0;
    for (double c : m.components) v += c;
    m.V = v;
    return m;
}

inline double velocity(const PointFields& f, const FrontGeometry& g, const DriftCoefficients& d) {
    return assemble_motion(f, g, d).V;
}

/// V from the third-order balance, with every integral evaluated by
/// quadrature of the inner functions:
///   V i2 = a^2 H i2 + 24 a^2 b^2 H M[U0 U2 U0_z^2] + 2 a^4 H (H^2 - 2K) M[z U0_z U0_zz]
///        + 2 a^2 H M[U0_z W2_z] + 2 a^2 A M[z U0_z U0_zz] + 2 a^2 B i2
///        + 2 a^2 C M[z^2 U0_z^3] + 2 a^2 D M[z^2 U0 U0_z U0_zz]
/// alpha enters W2 and g; it drops out through odd/even symmetry.
inline double velocity_from_balance(const PointFields& f, const FrontGeometry& g, const DriftCoefficients& d,
                                    double alpha) {
    const double a = f.a.value, b = f.b.value, H = g.H;
    const InnerProfile p = make_profile(a, b);
    const MomentTable t = moments(p, CorrectionInputs::from(f, g.H, g.K, g.normal, alpha), false);
    const double a2 = a * a;
    const double i2 = t.i2.quadrature;
    const double m1 = t.m_zUzUzz.quadrature;
    const double rhs = a2 * H * i2 + 24.0 * a2 * b * b * H * t.m_U0U2Uz2.quadrature +
                       2.0 * a2 * a2 * H * (H * H - 2.0 * g.K) * m1 + 2.0 * a2 * H * t.m_UzW2z.quadrature +
                       2.0 * a2 * d.A * m1 + 2.0 * a2 * d.B * i2 + 2.0 * a2 * d.C * t.m_z2Uz3.quadrature +
                       2.0 * a2 * d.D * t.m_z2U0UzUzz.quadrature;
    return rhs / i2;
}

/// Front data of a sphere of radius R centred at the origin, at (R, 0, 0).
inline FrontGeometry sphere_front(double R) {
    return surface_geometry(AnalyticSurface::sphere(R), Vec3{R, 0.0, 0.0}).front;
}

/// Normal velocity of a centred sphere of radius R in radially symmetric fields.
inline double sphere_velocity(const CoefficientField& a, const CoefficientField& b, double R,
                              DriftForm form = DriftForm::printed) {
    const FrontGeometry g = sphere_front(R);
    const PointFields f = sample_point_fields(a, b, g.p);
    return velocity(f, g, drift_coefficients(form, f, g.H, g.grad_s_H, g.lap_s_H));
}

struct RadialFrontState {
    double R = 1.0;
    double t1 = 0.0;
};

struct SharpRecord {
    double t1 = 0.0, R = 0.0, V = 0.0;
};

struct SharpTrajectory {
    std::vector<SharpRecord> records;
    std::optional<double> extinction_time; ///< set when the front collapsed before t_end
    std::size_t steps = 0, rejected = 0;
};

struct SharpOptions {
    DriftForm drift = DriftForm::printed;
    /// Times at which to record (ascending, within [t1_0, t_end]); empty means
    /// every accepted step.
    std::vector<double> output_times;
};

/// Integrates dR/dt1 = -V(R) (V > 0 moves the front toward the enclosed
/// Omega-, i.e. shrinks it) with Dormand-Prince 5(4), relative and absolute
/// tolerance `tol`. Stops at t_end, or at collapse (R < 10 tol, or the time
/// left to extinction below 1e-12 relative), in which case the extinction time
/// is extrapolated with R^2 ~ (t_ext - t).
inline SharpTrajectory evolve_sharp_radial(const RadialFrontState& init, const CoefficientField& a,
                                           const CoefficientField& b, double t_end, double tol,
                                           const SharpOptions& opt = {}) {
    namespace ode = boost::numeric::odeint;
    if (!(init.R > 0.0)) throw std::invalid_argument("evolve_sharp_radial: R must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("evolve_sharp_radial: tol must be positive");
    if (!a.radially_symmetric() || !b.radially_symmetric())
        throw std::invalid_argument("evolve_sharp_radial: fields must be radially symmetric about the origin");

    using State = std::array<double, 1>;
    const auto V = [&](double R) { return sphere_velocity(a, b, R, opt.drift); };
    const auto rhs = [&](const State& x, State& dxdt, double) {
        // trial stages may overshoot through R = 0; a huge slope forces rejection
        dxdt[0] = x[0] > 0.0 ? -V(x[0]) : -1e300;
    };

    SharpTrajectory out;
    const auto record = [&](double t, double R) { out.records.push_back({t, R, V(R)}); };

    auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<State>());
    State x{init.R};
    double t = init.t1;
    const double stop_R = 10.0 * tol;
    std::size_t next_out = 0;
    while (next_out < opt.output_times.size() && opt.output_times[next_out] < t) ++next_out;
    if (opt.output_times.empty() || (next_out < opt.output_times.size() && opt.output_times[next_out] == t)) {
        record(t, x[0]);
        if (!opt.output_times.empty()) ++next_out;
    }

    double dt = std::min(1e-3, std::max(t_end - t, 0.0)) * std::min(1.0, init.R * init.R);
    const double dt_min = 1e-15 * std::max(1.0, std::abs(t_end));
    while (t < t_end) {
        double target = t_end;
        if (next_out < opt.output_times.size()) target = std::min(target, opt.output_times[next_out]);
        const bool clipped = t + dt >= target;
        double trial = clipped ? target - t : dt;

        const State saved = x;
        const double t_before = t;
        if (stepper.try_step(rhs, x, t, trial) == ode::fail) {
            ++out.rejected;
            dt = trial;
            if (dt < dt_min) throw StepSizeUnderflow("sharp integrator step fell below 1e-15");
            continue;
        }
        if (!(x[0] > 0.0) || !std::isfinite(x[0])) {
            // accepted a step through R = 0: undo it and retry shorter
            const double taken = t - t_before;
            x = saved;
            t = t_before;
            stepper.reset();
            ++out.rejected;
            dt = 0.25 * taken;
            if (dt < dt_min) throw StepSizeUnderflow("sharp integrator cannot resolve the collapse");
            continue;
        }
        ++out.steps;
        // a step shortened to hit an output time should not shrink the size
        dt = clipped ? std::max(dt, trial) : trial;
        if (clipped) t = target;

        // Near collapse R^2 ~ 2 R |V| (t_ext - t); once the remaining time is
        // below what t can resolve, R < 10 tol is out of reach.
        const double remaining = x[0] / (2.0 * std::abs(V(x[0])));
        if (x[0] < stop_R || remaining < 1e-12 * std::max(1.0, std::abs(t))) {
            out.extinction_time = t + remaining;
            record(t, x[0]);
            return out;
        }
        if (opt.output_times.empty()) {
            record(t, x[0]);
        } else if (next_out < opt.output_times.size() && t >= opt.output_times[next_out]) {
            record(opt.output_times[next_out], x[0]);
            ++next_out;
        }
    }
    if (!opt.output_times.empty() && (out.records.empty() || out.records.back().t1 < t)) record(t, x[0]);
    return out;
}

/// Closed form for a = b = 1: R(t1) = sqrt(R0^2 - 4 t1).
inline double unit_sphere_radius(double R0, double t1) { return std::sqrt(std::max(0.0, R0 * R0 - 4.0 * t1)); }

} // namespace sharpflow
