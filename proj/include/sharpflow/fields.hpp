#pragma once

// Spatial coefficient fields a(x), b(x) and the quartic double well.

#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sharpflow/errors.hpp"
#include "sharpflow/vec3.hpp"

namespace sharpflow {

/// psi(u) = (1 - u^2)^2 / 2 and its first three derivatives. Templated so the
/// diffuse solver can push dual numbers through it.
struct DoubleWell {
    template <class T> static T psi(const T& u) {
        const T s = 1.0 - u * u;
        return 0.5 * s * s;
    }
    template <class T> static T psi_u(const T& u) { return 2.0 * u * u * u - 2.0 * u; }
    template <class T> static T psi_uu(const T& u) { return 6.0 * u * u - 2.0; }
    template <class T> static T psi_uuu(const T& u) { return 12.0 * u; }
};

/// order in {0,1,2,3}; anything else is a programming error.
inline double eval_potential(double u, int order) {
    switch (order) {
    case 0: return DoubleWell::psi(u);
    case 1: return DoubleWell::psi_u(u);
    case 2: return DoubleWell::psi_uu(u);
    case 3: return DoubleWell::psi_uuu(u);
    default: throw std::invalid_argument("eval_potential: order must be 0..3");
    }
}

/// Value, gradient and Laplacian of a scalar field at one point.
struct FieldSample {
    double value = 0.0;
    Vec3 grad{};
    double lap = 0.0;
};

enum class FieldKind { constant, radial_bump, affine, product };

/// Analytic coefficient field from a fixed registry:
///   constant      c
///   radial_bump   base + amp * exp(-|x - center|^2 / sigma^2)
///   affine        c0 + slope . x
///   product       f1 * f2 * ...   (factors from the kinds above)
/// `floor` is the positivity bound a0 (or b0): evaluation through eval_field
/// rejects values below it.
class CoefficientField {
public:
    static CoefficientField constant(double c) {
        CoefficientField f(FieldKind::constant);
        f.params_ = {c};
        return f;
    }
    static CoefficientField radial_bump(double base, double amp, double sigma, Vec3 center = {}) {
        if (!(sigma > 0.0)) throw std::invalid_argument("radial_bump: sigma must be positive");
        CoefficientField f(FieldKind::radial_bump);
        f.params_ = {base, amp, sigma, center.x, center.y, center.z};
        return f;
    }
    static CoefficientField affine(double c0, Vec3 slope) {
        CoefficientField f(FieldKind::affine);
        f.params_ = {c0, slope.x, slope.y, slope.z};
        return f;
    }
    static CoefficientField product(std::vector<CoefficientField> factors) {
        if (factors.empty()) throw std::invalid_argument("product: needs at least one factor");
        CoefficientField f(FieldKind::product);
        for (auto& g : factors) {
            if (g.kind_ == FieldKind::product) {
                for (auto& h : g.factors_) f.factors_.push_back(std::move(h));
            } else {
                f.factors_.push_back(std::move(g));
            }
        }
        return f;
    }

    FieldKind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }
    const std::vector<CoefficientField>& factors() const { return factors_; }

    double floor() const { return floor_; }
    CoefficientField& with_floor(double f) {
        if (!(f > 0.0)) throw std::invalid_argument("field floor must be positive");
        floor_ = f;
        return *this;
    }

    /// True when the field depends on |x| only (so spheres centred at the
    /// origin stay spheres under the sharp law).
    bool radially_symmetric() const {
        switch (kind_) {
        case FieldKind::constant: return true;
        case FieldKind::radial_bump:
            return params_[1] == 0.0 || (params_[3] == 0.0 && params_[4] == 0.0 && params_[5] == 0.0);
        case FieldKind::affine: return params_[1] == 0.0 && params_[2] == 0.0 && params_[3] == 0.0;
        case FieldKind::product:
            for (const auto& g : factors_)
                if (!g.radially_symmetric()) return false;
            return true;
        }
        return false;
    }

    /// Raw analytic evaluation, no positivity check.
    FieldSample sample(const Vec3& x) const {
        switch (kind_) {
        case FieldKind::constant: return {params_[0], {}, 0.0};
        case FieldKind::radial_bump: {
            const Vec3 d = x - Vec3{params_[3], params_[4], params_[5]};
            const double s2 = params_[2] * params_[2];
            const double r2 = norm2(d);
            const double e = params_[1] * std::exp(-r2 / s2);
            return {params_[0] + e, d * (-2.0 * e / s2), e * (4.0 * r2 / (s2 * s2) - 6.0 / s2)};
        }
        case FieldKind::affine: {
            const Vec3 g{params_[1], params_[2], params_[3]};
            return {params_[0] + dot(g, x), g, 0.0};
        }
        case FieldKind::product: {
            // (fg)' = f'g + fg', (fg)'' = f''g + 2 f'.g' + fg''
            FieldSample acc{1.0, {}, 0.0};
            for (const auto& g : factors_) {
                const FieldSample s = g.sample(x);
                acc = {acc.value * s.value, acc.grad * s.value + s.grad * acc.value,
                       acc.lap * s.value + 2.0 * dot(acc.grad, s.grad) + acc.value * s.lap};
            }
            return acc;
        }
        }
        return {};
    }

    double value(const Vec3& x) const { return sample(x).value; }

    /// Round-trips through parse_field_spec in the harness.
    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        switch (kind_) {
        case FieldKind::constant: os << "constant " << params_[0]; break;
        case FieldKind::radial_bump:
            os << "bump";
            for (double p : params_) os << ' ' << p;
            break;
        case FieldKind::affine:
            os << "affine";
            for (double p : params_) os << ' ' << p;
            break;
        case FieldKind::product:
            for (std::size_t i = 0; i < factors_.size(); ++i) os << (i ? " * " : "") << factors_[i].describe();
            break;
        }
        return os.str();
    }

private:
    explicit CoefficientField(FieldKind k) : kind_(k) {}

    FieldKind kind_;
    std::vector<double> params_;
    std::vector<CoefficientField> factors_;
    double floor_ = 1e-6;
};

inline void check_positive(const CoefficientField& f, double v, const Vec3& x) {
    if (!(v > 0.0) || v < f.floor()) {
        std::ostringstream os;
        os.precision(17);
        os << "field " << f.describe() << " = " << v << " at (" << x.x << ", " << x.y << ", " << x.z
           << ") below floor " << f.floor();
        throw PositivityViolation(os.str());
    }
}

/// Checked evaluation: throws PositivityViolation if the field value at x is
/// not positive or lies below the field's floor.
inline FieldSample eval_field(const CoefficientField& f, const Vec3& x) {
    FieldSample s = f.sample(x);
    check_positive(f, s.value, x);
    return s;
}

/// Ratio b/a with its gradient and Laplacian.
struct RatioSample {
    double ratio = 0.0;
    Vec3 grad{};
    double lap = 0.0;
};

/// Quotient rule on already-evaluated samples.
///   grad(b/a) = (a grad b - b grad a) / a^2
///   lap(b/a)  = lap b / a - 2 grad a.grad b / a^2 - b lap a / a^2 + 2 b |grad a|^2 / a^3
inline RatioSample ratio_from_samples(const FieldSample& a, const FieldSample& b) {
    const double ia = 1.0 / a.value;
    RatioSample r;
    r.ratio = b.value * ia;
    r.grad = (b.grad * a.value - a.grad * b.value) / (a.value * a.value);
    r.lap = b.lap * ia - 2.0 * dot(a.grad, b.grad) * ia * ia - b.value * a.lap * ia * ia +
            2.0 * b.value * norm2(a.grad) * ia * ia * ia;
    return r;
}

inline RatioSample eval_ratio_fields(const CoefficientField& a, const CoefficientField& b, const Vec3& x) {
    return ratio_from_samples(eval_field(a, x), eval_field(b, x));
}

/// Everything the sharp law needs about the coefficients at one point.
struct PointFields {
    FieldSample a, b;
    RatioSample ratio;
};

inline PointFields sample_point_fields(const CoefficientField& a, const CoefficientField& b, const Vec3& x) {
    PointFields p{eval_field(a, x), eval_field(b, x), {}};
    p.ratio = ratio_from_samples(p.a, p.b);
    return p;
}

/// Constant-coefficient point data (no gradients).
inline PointFields constant_point_fields(double a, double b) {
    PointFields p{{a, {}, 0.0}, {b, {}, 0.0}, {}};
    p.ratio = ratio_from_samples(p.a, p.b);
    return p;
}

} // namespace sharpflow
