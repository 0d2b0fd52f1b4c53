#pragma once

// Square banded matrix in LAPACK band storage, solved with dgbsv.

#include <cstddef>
#include <sstream>
#include <span>
#include <stdexcept>
#include <vector>

extern "C" void dgbsv_(const int* n, const int* kl, const int* ku, const int* nrhs, double* ab, const int* ldab,
                       int* ipiv, double* b, const int* ldb, int* info);

namespace sharpflow {

class BandedMatrix {
public:
    BandedMatrix(std::size_t n, int kl, int ku)
        : n_(static_cast<int>(n)), kl_(kl), ku_(ku), ld_(2 * kl + ku + 1), ab_(static_cast<std::size_t>(ld_) * n),
          ipiv_(n) {}

    std::size_t size() const { return static_cast<std::size_t>(n_); }
    int lower() const { return kl_; }
    int upper() const { return ku_; }

    void zero() { std::fill(ab_.begin(), ab_.end(), 0.0); }

    bool in_band(std::size_t i, std::size_t j) const {
        const auto d = static_cast<long>(i) - static_cast<long>(j);
        return d <= kl_ && -d <= ku_;
    }

    double& operator()(std::size_t i, std::size_t j) { return ab_[index(i, j)]; }
    double operator()(std::size_t i, std::size_t j) const { return in_band(i, j) ? ab_[index(i, j)] : 0.0; }

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const {
        for (std::size_t i = 0; i < size(); ++i) {
            double s = 0.0;
            const std::size_t j0 = i > static_cast<std::size_t>(kl_) ? i - kl_ : 0;
            const std::size_t j1 = std::min(size() - 1, i + static_cast<std::size_t>(ku_));
            for (std::size_t j = j0; j <= j1; ++j) s += ab_[index(i, j)] * x[j];
            y[i] = s;
        }
    }

    /// Overwrites rhs with A^{-1} rhs. Factorises in place: the matrix is
    /// consumed.
    void solve_in_place(std::span<double> rhs) {
        if (rhs.size() != size()) throw std::invalid_argument("BandedMatrix::solve_in_place: size mismatch");
        const int nrhs = 1;
        int info = 0;
        dgbsv_(&n_, &kl_, &ku_, &nrhs, ab_.data(), &ld_, ipiv_.data(), rhs.data(), &n_, &info);
        if (info != 0) {
            std::ostringstream os;
            os << "dgbsv failed, info = " << info;
            throw std::runtime_error(os.str());
        }
    }

private:
    std::size_t index(std::size_t i, std::size_t j) const {
        return static_cast<std::size_t>(kl_ + ku_) + i - j + j * static_cast<std::size_t>(ld_);
    }

    int n_, kl_, ku_, ld_;
    std::vector<double> ab_;
    std::vector<int> ipiv_;
};

} // namespace sharpflow
