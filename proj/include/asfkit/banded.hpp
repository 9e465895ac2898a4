#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "error.hpp"

namespace asfkit {

/// Symmetric positive-definite band matrix stored by diagonals:
/// `diag[d][i]` holds A(i, i + d) for d = 0..bandwidth.
class banded_spd {
public:
    banded_spd(std::size_t n, std::size_t bandwidth)
        : n_(n), bw_(bandwidth), diag_(bandwidth + 1, std::vector<double>(n, 0.0)) {}

    std::size_t size() const { return n_; }

    double& at(std::size_t i, std::size_t j)
    {
        if (j < i) std::swap(i, j);
        return diag_[j - i][i];
    }

    /// In-place band Cholesky (A = L L^T) followed by forward and back
    /// substitution. Throws when a pivot is not positive.
    std::vector<double> solve(std::vector<double> b) const
    {
        auto l = diag_; // l[d][i] = L(i + d, i)
        for (std::size_t j = 0; j < n_; ++j) {
            double s = l[0][j];
            for (std::size_t k = (j > bw_ ? j - bw_ : 0); k < j; ++k) s -= l[j - k][k] * l[j - k][k];
            if (!(s > 0.0)) throw singular_system_error("band matrix is not positive definite");
            l[0][j] = std::sqrt(s);
            for (std::size_t d = 1; d <= bw_ && j + d < n_; ++d) {
                const std::size_t i = j + d;
                double t = l[d][j];
                for (std::size_t k = (i > bw_ ? i - bw_ : 0); k < j; ++k) t -= l[i - k][k] * l[j - k][k];
                l[d][j] = t / l[0][j];
            }
        }
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t k = (i > bw_ ? i - bw_ : 0); k < i; ++k) b[i] -= l[i - k][k] * b[k];
            b[i] /= l[0][i];
        }
        for (std::size_t ii = n_; ii-- > 0;) {
            for (std::size_t d = 1; d <= bw_ && ii + d < n_; ++d) b[ii] -= l[d][ii] * b[ii + d];
            b[ii] /= l[0][ii];
        }
        return b;
    }

private:
    std::size_t n_;
    std::size_t bw_;
    std::vector<std::vector<double>> diag_;
};

} // namespace asfkit
