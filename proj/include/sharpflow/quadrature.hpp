#pragma once

// Thin layer over Boost.Math quadrature: adaptive Gauss-Kronrod for moment
// integrals, fixed Gauss-Legendre panels for running integrals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace sharpflow::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;
};

/// Adaptive G7-K15 on [lo, hi]. The tolerance is relative to the first
/// whole-interval estimate, so callers integrating odd integrands should split
/// at the symmetry point (see symmetric()).
template <class F> Result adaptive(F&& f, double lo, double hi, double rel_tol = 1e-14, unsigned max_depth = 20) {
    Result r;
    r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, lo, hi, max_depth, rel_tol, &r.error);
    return r;
}

/// Integral over [-half, half] computed as two halves split at 0. Each half of
/// an odd or even tanh-type integrand is nonzero, so the relative tolerance is
/// meaningful, and the two halves see mirror-image node sets.
template <class F> Result symmetric(F&& f, double half, double rel_tol = 1e-14) {
    const Result l = adaptive(f, -half, 0.0, rel_tol);
    const Result r = adaptive(f, 0.0, half, rel_tol);
    return {l.value + r.value, l.error + r.error};
}

/// Fixed 10-point Gauss-Legendre on [lo, hi].
template <class F> double panel(F&& f, double lo, double hi) {
    if (lo == hi) return 0.0;
    return boost::math::quadrature::gauss<double, 10>::integrate(f, lo, hi);
}

/// Running integral G(z) = anchor_value + int_{anchor}^{z} integrand on a
/// uniform grid of panels. Node values are accumulated panel by panel away from
/// the anchor end; off-node values add one partial Gauss panel from the nearest
/// node on the anchor side.
class CumulativeTable {
public:
    enum class Anchor { left, right };

    CumulativeTable() = default;

    CumulativeTable(std::function<double(double)> integrand, double lo, double hi, std::size_t panels,
                    Anchor anchor, double anchor_value = 0.0)
        : f_(std::move(integrand)), lo_(lo), hi_(hi), anchor_(anchor) {
        if (!(hi > lo) || panels == 0) throw std::invalid_argument("CumulativeTable: bad range");
        h_ = (hi - lo) / static_cast<double>(panels);
        nodes_.assign(panels + 1, 0.0);
        if (anchor == Anchor::left) {
            nodes_[0] = anchor_value;
            for (std::size_t i = 0; i < panels; ++i)
                nodes_[i + 1] = nodes_[i] + panel(f_, node_z(i), node_z(i + 1));
        } else {
            nodes_[panels] = anchor_value;
            for (std::size_t i = panels; i-- > 0;)
                nodes_[i] = nodes_[i + 1] - panel(f_, node_z(i), node_z(i + 1));
        }
    }

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double node_z(std::size_t i) const { return i + 1 == nodes_.size() ? hi_ : lo_ + h_ * static_cast<double>(i); }
    const std::vector<double>& nodes() const { return nodes_; }

    double operator()(double z) const {
        z = std::clamp(z, lo_, hi_);
        const std::size_t last = nodes_.size() - 1;
        auto cell = static_cast<std::size_t>(std::floor((z - lo_) / h_));
        cell = std::min(cell, last - 1);
        if (anchor_ == Anchor::left) return nodes_[cell] + panel(f_, node_z(cell), z);
        return nodes_[cell + 1] - panel(f_, z, node_z(cell + 1));
    }

private:
    std::function<double(double)> f_;
    double lo_ = 0.0, hi_ = 0.0, h_ = 1.0;
    Anchor anchor_ = Anchor::left;
    std::vector<double> nodes_;
};

} // namespace sharpflow::quad
