#pragma once

#include <cstddef>
#include <vector>

namespace harqperf::num {

/// Lower incomplete gamma function for integer order m >= 1, x >= 0.
/// Uses the exact integer-order identity
///   gamma(m,x) = (m-1)! * e^{-x} * sum_{k>=m} x^k/k!
/// (the tail form of (m-1)!*(1 - e^{-x} sum_{k<m} x^k/k!)), which is
/// free of cancellation for small x and large m.
double lower_incomplete_gamma(int order, double x);

/// Monic polynomial with nonpositive trailing coefficients,
///   f(y) = y^d - c[0] y^{d-1} - c[1] y^{d-2} - ... - c[d-1],
/// all c[i] >= 0 and at least one c[i] > 0. Such a polynomial has a
/// unique positive root and every other root has modulus at most that
/// root.
struct CauchyPolynomial {
    std::vector<double> coeffs;

    std::size_t degree() const { return coeffs.size(); }
    double operator()(double y) const;
    void validate() const;  // throws std::invalid_argument on a bad coefficient set
};

/// Unique positive root of a CauchyPolynomial by bisection.
/// The root is first bracketed inside (0, 1 + max_i c_i] using
/// max_i c_i^{1/i} <= y* <= 2 max_i c_i^{1/i}.
double unique_positive_root(const CauchyPolynomial& poly,
                            double rel_tol = 1e-15,
                            int max_iter = 200);

/// Minimal row-major dense square matrix.
struct SquareMatrix {
    std::size_t dim = 0;
    std::vector<double> a;

    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t d) : dim(d), a(d * d, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return a[r * dim + c]; }
    double at(std::size_t r, std::size_t c) const { return a[r * dim + c]; }
};

/// Perron root of an entrywise nonnegative matrix, computed by iterating
/// normalized matrix powers (repeated squaring with infinity-norm
/// rescaling): sp = lim ||A^{2^k}||^{1/2^k}. Converged when successive
/// log-estimates differ by < tol (relative) for three consecutive
/// squarings; throws std::runtime_error past max_iter squarings. This
/// holds machine-level relative accuracy even when several eigenvalues
/// share the dominant modulus, where vector-iteration ratios stall.
double spectral_radius(const SquareMatrix& m,
                       double tol = 1e-13,
                       long max_iter = 200);

}  // namespace harqperf::num
