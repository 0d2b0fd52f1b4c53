#pragma once

// Inner-layer machinery in the stretched variable z = d / eps: the tanh
// profile U0, the linearised operator L, the first and second order
// corrections, and the moment integrals that enter the velocity balance.
//
// Derivative convention: U0_z means d/dz of U0(z) = tanh(beta z), so
// U0_z = beta sech^2(beta z).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include "sharpflow/errors.hpp"
#include "sharpflow/fields.hpp"
#include "sharpflow/quadrature.hpp"

namespace sharpflow {

inline constexpr double pi2 = std::numbers::pi * std::numbers::pi;

/// U0(z) = tanh(beta z), beta = b / a, and its z-derivatives.
class InnerProfile {
public:
    explicit InnerProfile(double beta) : beta_(beta) {
        if (!(beta > 0.0) || !std::isfinite(beta)) throw PositivityViolation("profile slope beta must be positive");
    }

    double beta() const { return beta_; }

    double U(double z) const { return std::tanh(beta_ * z); }
    double Uz(double z) const { return beta_ * sech2(beta_ * z); }
    double Uzz(double z) const { return -2.0 * beta_ * beta_ * std::tanh(beta_ * z) * sech2(beta_ * z); }
    double Uzzz(double z) const {
        const double s = sech2(beta_ * z);
        return beta_ * beta_ * beta_ * (4.0 * s - 6.0 * s * s);
    }

    /// Truncation half-width max(20, 40/beta); sech^4 at the edge is below 1e-16
    /// for every beta.
    double window() const { return std::max(20.0, 40.0 / beta_); }

private:
    static double sech2(double s) {
        const double c = std::cosh(s);
        return 1.0 / (c * c);
    }
    double beta_;
};

inline InnerProfile make_profile(double a_val, double b_val) {
    if (!(a_val > 0.0) || !(b_val > 0.0)) {
        std::ostringstream os;
        os << "make_profile needs a > 0 and b > 0, got a = " << a_val << ", b = " << b_val;
        throw PositivityViolation(os.str());
    }
    return InnerProfile(b_val / a_val);
}

/// Residual a^2 U0_zz - b^2 psi_u(U0) of the zeroth-order inner equation.
inline double zeroth_order_residual(const InnerProfile& p, double z, double a_val, double b_val) {
    return a_val * a_val * p.Uzz(z) - b_val * b_val * DoubleWell::psi_u(p.U(z));
}

/// Test function for apply_L. If `dzz` is set it is used as the exact second
/// derivative, otherwise a central difference with step `h` is taken.
struct TestFunction {
    std::function<double(double)> value;
    std::function<double(double)> dzz{};
    double h = 1e-4;
};

/// (L phi)(z) = a^2 phi_zz - b^2 psi_uu(U0(z)) phi(z).
inline double apply_L(const InnerProfile& p, const TestFunction& phi, double z, double a_val, double b_val) {
    double d2;
    if (phi.dzz) {
        d2 = phi.dzz(z);
    } else {
        const double h = phi.h;
        d2 = (phi.value(z + h) - 2.0 * phi.value(z) + phi.value(z - h)) / (h * h);
    }
    return a_val * a_val * d2 - b_val * b_val * DoubleWell::psi_uu(p.U(z)) * phi.value(z);
}

inline constexpr double solvability_tolerance = 1e-8;

/// First-order solvability: mu = -a^2 H. The induced right-hand side
/// L U1 = -(a^2 H + mu) U0_z is projected on U0_z by quadrature and must vanish.
inline double solve_mu(double a_val, double H, std::optional<double> b_val = std::nullopt) {
    const double mu = -a_val * a_val * H;
    const InnerProfile p = make_profile(a_val, b_val.value_or(a_val));
    const double coeff = -(a_val * a_val * H + mu);
    const double residual = quad::symmetric([&](double z) { return coeff * p.Uz(z) * p.Uz(z); }, p.window()).value;
    if (std::abs(residual) > solvability_tolerance) {
        std::ostringstream os;
        os << "int (L U1) U0_z dz = " << residual;
        throw SolvabilityResidualTooLarge(os.str());
    }
    return mu;
}

/// Front and coefficient data the second-order corrections depend on, all at
/// the front point p(x).
struct CorrectionInputs {
    double a = 1.0;
    double b = 1.0;
    double H = 0.0;
    double K = 0.0;
    double grad_a_dot_normal = 0.0; ///< grad a . grad d
    double lap_ratio = 0.0;         ///< Delta (b/a)
    double grad_ratio_sq = 0.0;     ///< |grad (b/a)|^2
    double alpha = 0.0;             ///< free constant in W2 (see build_W2)

    static CorrectionInputs from(const PointFields& f, double H, double K, const Vec3& normal, double alpha = 0.0) {
        return {f.a.value, f.b.value, H, K, dot(f.a.grad, normal), f.ratio.lap, norm2(f.ratio.grad), alpha};
    }
};

/// W2(z) = [H^2 (a^2 z / 2 + alpha) + a H (grad a . grad d) z] U0_z, with its
/// z-derivative.
struct W2Function {
    InnerProfile profile;
    double H2 = 0.0, a2 = 0.0, alpha = 0.0, drift = 0.0; // drift = a H (grad a . grad d)

    double operator()(double z) const { return (H2 * (0.5 * a2 * z + alpha) + drift * z) * profile.Uz(z); }
    double dz(double z) const {
        return (0.5 * H2 * a2 + drift) * profile.Uz(z) + (H2 * (0.5 * a2 * z + alpha) + drift * z) * profile.Uzz(z);
    }
};

inline W2Function build_W2(const InnerProfile& p, double a_val, double H, double grad_a_dot_normal, double alpha) {
    return {p, H * H, a_val * a_val, alpha, a_val * H * grad_a_dot_normal};
}

/// Coefficients of g_z = c1 z U0_z^2 - c0 U0_z^2 + kappa z^2 U0 U0_z^2 where
///   c1    = a^2 H^2 / 2 - 2 a^2 K - a H (grad a . grad d) - (a^3 / b) Delta(b/a)
///   c0    = alpha H^2 + 2 a (grad a . grad d)
///   kappa = 2 (a^3 / b) |grad(b/a)|^2
struct GzCoefficients {
    double c1 = 0.0, c0 = 0.0, kappa = 0.0;

    static GzCoefficients from(const CorrectionInputs& in) {
        const double a = in.a, b = in.b;
        return {0.5 * a * a * in.H * in.H - 2.0 * a * a * in.K - a * in.H * in.grad_a_dot_normal -
                    (a * a * a / b) * in.lap_ratio,
                in.alpha * in.H * in.H + 2.0 * a * in.grad_a_dot_normal, 2.0 * (a * a * a / b) * in.grad_ratio_sq};
    }

    double operator()(const InnerProfile& p, double z) const {
        const double uz = p.Uz(z);
        return (c1 * z - c0 + kappa * z * z * p.U(z)) * uz * uz;
    }
};

inline constexpr double g_end_tolerance = 1e-10;

/// Second-order correction U2 = f U0_z, tabulated on the truncation window.
/// g solves (a^2 f_z U0_z^2)_z = (right-hand side of L U2) U0_z, i.e. g_z as in
/// GzCoefficients, with g(-Z) = 0. g is stored in two halves integrated from
/// the nearest end, which needs g(+Z) = 0: the second-order solvability
/// condition. f(0) = 0 enforces U2(0) = 0.
class SecondOrderCorrection {
public:
    SecondOrderCorrection(const InnerProfile& p, const CorrectionInputs& in, std::size_t panels_per_unit = 10)
        : profile_(p), in_(in), gz_(GzCoefficients::from(in)) {
        const double Z = p.window();
        const auto gz = [p, c = gz_](double z) { return c(p, z); };
        g_total_ = quad::symmetric(gz, Z).value;
        if (std::abs(g_total_) > g_end_tolerance) {
            std::ostringstream os;
            os << "g(+Z) - g(-Z) = " << g_total_ << " (needs alpha H^2 = -2 a grad a . grad d)";
            throw WindowTooSmall(os.str());
        }
        const auto n = static_cast<std::size_t>(std::ceil(Z * p.beta() * panels_per_unit)) + 1;
        g_left_ = quad::CumulativeTable(gz, -Z, 0.0, n, quad::CumulativeTable::Anchor::left);
        g_right_ = quad::CumulativeTable(gz, 0.0, Z, n, quad::CumulativeTable::Anchor::right);

        // beyond |beta z| = 150, U0_z^2 underflows relative to g and U2 is ~0
        f_half_ = std::min(Z, 150.0 / p.beta());
        const double a2 = in.a * in.a;
        const auto fz = [this, a2](double z) {
            const double uz = profile_.Uz(z);
            return g(z) / (a2 * uz * uz);
        };
        const auto nf = static_cast<std::size_t>(std::ceil(f_half_ * p.beta() * panels_per_unit)) + 1;
        f_left_ = quad::CumulativeTable(fz, -f_half_, 0.0, nf, quad::CumulativeTable::Anchor::right);
        f_right_ = quad::CumulativeTable(fz, 0.0, f_half_, nf, quad::CumulativeTable::Anchor::left);
    }

    // The tables capture `this`.
    SecondOrderCorrection(const SecondOrderCorrection&) = delete;
    SecondOrderCorrection& operator=(const SecondOrderCorrection&) = delete;

    const InnerProfile& profile() const { return profile_; }
    const GzCoefficients& gz_coefficients() const { return gz_; }
    double g_end_residual() const { return g_total_; }

    double g(double z) const { return z <= 0.0 ? g_left_(z) : g_right_(z); }
    double gz(double z) const { return gz_(profile_, z); }
    double f(double z) const { return z <= 0.0 ? f_left_(z) : f_right_(z); }
    double U2(double z) const {
        if (std::abs(z) > f_half_) return 0.0;
        return f(z) * profile_.Uz(z);
    }

    /// Right-hand side of L U2 (before multiplication by U0_z).
    double rhs(double z) const {
        const double uz = profile_.Uz(z);
        const double a = in_.a, b = in_.b;
        return gz_.c1 * z * uz - gz_.c0 * uz -
               (a * a * a * a / (b * b)) * in_.grad_ratio_sq * z * z * profile_.Uzz(z);
    }

private:
    InnerProfile profile_;
    CorrectionInputs in_;
    GzCoefficients gz_;
    double g_total_ = 0.0;
    double f_half_ = 0.0;
    quad::CumulativeTable g_left_, g_right_, f_left_, f_right_;
};

/// int U0 U2 U0_z^2 by direct quadrature of the tabulated U2.
inline double direct_U0U2Uz2(const SecondOrderCorrection& c) {
    const InnerProfile& p = c.profile();
    return quad::symmetric([&](double z) { return p.U(z) * c.U2(z) * p.Uz(z) * p.Uz(z); }, p.window(), 1e-13).value;
}

/// One moment integral: closed form under the d/dz reading, the printed form
/// where it differs, and adaptive quadrature.
struct MomentEntry {
    std::string name;
    double closed = 0.0;
    double quadrature = 0.0;
    std::optional<double> printed;

    double diff() const { return std::abs(closed - quadrature); }
};

struct MomentTable {
    double beta = 1.0;
    MomentEntry i2;          ///< int U0_z^2
    MomentEntry m_zUzUzz;    ///< int z U0_z U0_zz
    MomentEntry m_zU0Uz2;    ///< int z U0 U0_z^2
    MomentEntry m_U0Uz2;     ///< int U0 U0_z^2
    MomentEntry m_U0U2Uz2;   ///< int U0 U2 U0_z^2
    MomentEntry m_UzW2z;     ///< int U0_z W2_z
    MomentEntry m_z2Uz3;     ///< int z^2 U0_z^3
    MomentEntry m_z2U0UzUzz; ///< int z^2 U0 U0_z U0_zz
    MomentEntry m_z2U02Uz2;  ///< int z^2 U0^2 U0_z^2

    std::array<const MomentEntry*, 9> entries() const {
        return {&i2, &m_zUzUzz, &m_zU0Uz2, &m_U0Uz2, &m_U0U2Uz2, &m_UzW2z, &m_z2Uz3, &m_z2U0UzUzz, &m_z2U02Uz2};
    }
};

inline constexpr double moment_tolerance = 1e-8;

/// Fills every moment twice. int U0 U2 U0_z^2 is evaluated through the
/// reduction -(1/(6ab)) int g_z U0 dz, which holds for any alpha; the tabulated
/// U2 of SecondOrderCorrection is checked against it separately.
inline MomentTable moments(const InnerProfile& p, const CorrectionInputs& in, bool check = true) {
    const double beta = p.beta();
    const double Z = p.window();
    const double a = in.a, b = in.b;
    auto q = [&](auto&& f) { return quad::symmetric(f, Z).value; };

    MomentTable t;
    t.beta = beta;
    const double i2 = 4.0 * beta / 3.0;
    t.i2 = {"int U0_z^2", i2, q([&](double z) { return p.Uz(z) * p.Uz(z); }), std::nullopt};
    t.m_zUzUzz = {"int z U0_z U0_zz", -i2 / 2.0, q([&](double z) { return z * p.Uz(z) * p.Uzz(z); }), std::nullopt};
    t.m_zU0Uz2 = {"int z U0 U0_z^2", i2 / (4.0 * beta),
                  q([&](double z) { return z * p.U(z) * p.Uz(z) * p.Uz(z); }), std::nullopt};
    t.m_U0Uz2 = {"int U0 U0_z^2", 0.0, q([&](double z) { return p.U(z) * p.Uz(z) * p.Uz(z); }), std::nullopt};

    const GzCoefficients gz = GzCoefficients::from(in);
    const double ratio_term = 2.0 * (a * a * a / b) * in.grad_ratio_sq;
    const double u2_closed = -(1.0 / (6.0 * a * b)) * (gz.c1 * i2 / (4.0 * beta) + ratio_term * pi2 / (45.0 * beta));
    const double u2_printed = -(1.0 / 24.0) * (i2 / (b * b)) * gz.c1 -
                              (1.0 / 3.0) * (std::pow(a, 5) / (b * b * b)) * (pi2 / 45.0) * in.grad_ratio_sq;
    t.m_U0U2Uz2 = {"int U0 U2 U0_z^2", u2_closed,
                   -(1.0 / (6.0 * a * b)) * q([&](double z) { return gz(p, z) * p.U(z); }), u2_printed};

    const W2Function w2 = build_W2(p, a, in.H, in.grad_a_dot_normal, in.alpha);
    t.m_UzW2z = {"int U0_z W2_z", (a * a * in.H * in.H / 4.0 + a * in.H * in.grad_a_dot_normal / 2.0) * i2,
                 q([&](double z) { return p.Uz(z) * w2.dz(z); }), std::nullopt};

    t.m_z2Uz3 = {"int z^2 U0_z^3", 4.0 * pi2 / 45.0 - 2.0 / 3.0,
                 q([&](double z) { return z * z * p.Uz(z) * p.Uz(z) * p.Uz(z); }), std::nullopt};
    t.m_z2U0UzUzz = {"int z^2 U0 U0_z U0_zz", -2.0 * pi2 / 45.0,
                     q([&](double z) { return z * z * p.U(z) * p.Uz(z) * p.Uzz(z); }), std::nullopt};
    t.m_z2U02Uz2 = {"int z^2 U0^2 U0_z^2", pi2 / (45.0 * beta),
                    q([&](double z) { return z * z * p.U(z) * p.U(z) * p.Uz(z) * p.Uz(z); }),
                    (pi2 / 45.0) * a * a * a / b};

    if (check) {
        for (const MomentEntry* e : t.entries()) {
            if (e->diff() > moment_tolerance) {
                std::ostringstream os;
                os.precision(17);
                os << e->name << ": closed " << e->closed << " vs quadrature " << e->quadrature;
                throw QuadratureDisagreement(os.str());
            }
        }
    }
    return t;
}

/// Candidate closed forms of the three beta-dependent higher moments.
/// d/dz reading: U0_z = beta sech^2(beta z). Argument reading: U0_z stands for
/// sech^2(beta z), the derivative with respect to beta z, which rescales each
/// of these by beta^-3 relative to beta = 1.
struct ScalingCandidates {
    double dz_reading = 0.0;
    double argument_reading = 0.0;
    std::optional<double> printed;
};

inline ScalingCandidates z2Uz3_candidates(double beta) {
    const double v = 4.0 * pi2 / 45.0 - 2.0 / 3.0;
    return {v, v / (beta * beta * beta), v};
}
inline ScalingCandidates z2U0UzUzz_candidates(double beta) {
    const double v = -2.0 * pi2 / 45.0;
    return {v, v / (beta * beta * beta), v};
}
inline ScalingCandidates z2U02Uz2_candidates(double a, double b) {
    const double beta = b / a;
    return {pi2 / (45.0 * beta), pi2 / (45.0 * beta * beta * beta), (pi2 / 45.0) * a * a * a / b};
}

} // namespace sharpflow
