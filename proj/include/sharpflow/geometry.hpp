#pragma once

// Front geometry on analytic test surfaces and on discrete radial fronts.
//
// Conventions: d > 0 on the Omega+ side (outside for every surface here), the
// unit normal grad d points into Omega+, and H is the SUM of the principal
// curvatures.

#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>

#include "sharpflow/errors.hpp"
#include "sharpflow/vec3.hpp"

namespace sharpflow {

struct FrontGeometry {
    double H = 0.0;       ///< k1 + k2
    double K = 0.0;       ///< k1 k2
    double lap_s_H = 0.0; ///< Laplace-Beltrami of H on the front
    Vec3 grad_s_H{};      ///< tangential gradient of H
    Vec3 normal{};        ///< grad d at p(x)
    Vec3 p{};             ///< projection of x on the front
    double k1 = 0.0, k2 = 0.0;
};

/// Sphere of radius R centred at the origin, cylinder of radius R around the
/// z axis, or torus around the z axis (centre-circle radius R, tube radius r).
/// Omega- is always the enclosed region.
struct AnalyticSurface {
    enum class Kind { sphere, cylinder, torus };
    Kind kind = Kind::sphere;
    double R = 1.0;
    double r = 0.0;

    static AnalyticSurface sphere(double R) { return checked({Kind::sphere, R, 0.0}); }
    static AnalyticSurface cylinder(double R) { return checked({Kind::cylinder, R, 0.0}); }
    static AnalyticSurface torus(double R_major, double r_minor) {
        if (!(r_minor > 0.0 && r_minor < R_major)) throw std::invalid_argument("torus needs 0 < r_minor < R_major");
        return checked({Kind::torus, R_major, r_minor});
    }

private:
    static AnalyticSurface checked(AnalyticSurface s) {
        if (!(s.R > 0.0)) throw std::invalid_argument("surface radius must be positive");
        return s;
    }
};

struct SurfacePoint {
    double d = 0.0;
    FrontGeometry front;
};

namespace detail {
inline constexpr double medial_eps = 1e-12;

[[noreturn]] inline void medial(const Vec3& x) {
    std::ostringstream os;
    os << "projection of (" << x.x << ", " << x.y << ", " << x.z << ") is not unique";
    throw MedialAxisPoint(os.str());
}
} // namespace detail

/// Exact signed distance and front data at the projection p(x).
inline SurfacePoint surface_geometry(const AnalyticSurface& s, const Vec3& x) {
    SurfacePoint out;
    FrontGeometry& g = out.front;
    switch (s.kind) {
    case AnalyticSurface::Kind::sphere: {
        const double rho = norm(x);
        if (rho < detail::medial_eps) detail::medial(x);
        g.normal = x / rho;
        g.p = g.normal * s.R;
        out.d = rho - s.R;
        g.k1 = g.k2 = 1.0 / s.R;
        break;
    }
    case AnalyticSurface::Kind::cylinder: {
        const double rho = std::hypot(x.x, x.y);
        if (rho < detail::medial_eps) detail::medial(x);
        g.normal = {x.x / rho, x.y / rho, 0.0};
        g.p = Vec3{g.normal.x * s.R, g.normal.y * s.R, x.z};
        out.d = rho - s.R;
        g.k1 = 1.0 / s.R;
        g.k2 = 0.0;
        break;
    }
    case AnalyticSurface::Kind::torus: {
        const double rxy = std::hypot(x.x, x.y);
        if (rxy < detail::medial_eps) detail::medial(x);
        const Vec3 e_rho{x.x / rxy, x.y / rxy, 0.0};
        const double q = rxy - s.R; // offset from the centre circle in the meridian plane
        const double tube = std::hypot(q, x.z);
        if (tube < detail::medial_eps) detail::medial(x);
        const double c = q / tube, sn = x.z / tube; // cos/sin of the meridian angle theta
        g.normal = Vec3{e_rho.x * c, e_rho.y * c, sn};
        g.p = e_rho * (s.R + s.r * c) + Vec3{0.0, 0.0, s.r * sn};
        out.d = tube - s.r;
        const double ring = s.R + s.r * c;
        g.k1 = 1.0 / s.r;
        g.k2 = c / ring;
        // H(theta) = 1/r + cos(theta) / (R + r cos(theta))
        const double dH = -s.R * sn / (ring * ring);
        const Vec3 e_theta = Vec3{-e_rho.x * sn, -e_rho.y * sn, c};
        g.grad_s_H = e_theta * (dH / s.r);
        g.lap_s_H = -s.R * (s.R * c + s.r) / (s.r * s.r * ring * ring * ring);
        break;
    }
    }
    g.H = g.k1 + g.k2;
    g.K = g.k1 * g.k2;
    return out;
}

/// H - eps z (H^2 - 2K): Delta d near the front truncated after the linear term.
inline double lap_d_expansion(const FrontGeometry& f, double eps, double z) {
    if (!(eps > 0.0)) throw std::invalid_argument("lap_d_expansion: eps must be positive");
    return f.H - eps * z * (f.H * f.H - 2.0 * f.K);
}

/// Delta d(x) = k1 / (1 + k1 d) + k2 / (1 + k2 d) with curvatures at p(x).
inline double exact_lap_d(const AnalyticSurface& s, const Vec3& x) {
    const SurfacePoint sp = surface_geometry(s, x);
    const double q1 = 1.0 + sp.front.k1 * sp.d;
    const double q2 = 1.0 + sp.front.k2 * sp.d;
    if (q1 == 0.0 || q2 == 0.0) throw FocalPoint("1 + k d vanishes");
    return sp.front.k1 / q1 + sp.front.k2 / q2;
}

/// Radius of the single zero crossing of u along r, by linear interpolation
/// between the bracketing nodes. A node with u == 0 counts as the crossing.
inline double extract_front_radius(std::span<const double> u, std::span<const double> r) {
    if (u.size() != r.size() || u.size() < 2) throw std::invalid_argument("extract_front_radius: size mismatch");
    std::size_t crossings = 0;
    double where = 0.0;
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
        const bool lo = u[i] < 0.0, hi = u[i + 1] < 0.0;
        if (lo == hi) continue;
        ++crossings;
        where = r[i] - u[i] * (r[i + 1] - r[i]) / (u[i + 1] - u[i]);
    }
    if (crossings == 0) throw NoCrossing("u does not change sign");
    if (crossings > 1) {
        std::ostringstream os;
        os << crossings << " sign changes";
        throw MultipleCrossings(os.str());
    }
    return where;
}

} // namespace sharpflow
