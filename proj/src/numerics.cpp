#include "numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace harqperf::num {

double lower_incomplete_gamma(int order, double x) {
    if (order < 1)
        throw std::domain_error("lower_incomplete_gamma: order must be >= 1");
    if (x < 0.0 || std::isnan(x))
        throw std::domain_error("lower_incomplete_gamma: x must be >= 0");
    if (x == 0.0)
        return 0.0;

    double factorial = 1.0;
    for (int k = 2; k < order; ++k) factorial *= k;

    // Past ~650 the upper tail Gamma(m,x) is below double underflow for
    // any order this library uses; the integral is the full Gamma(m).
    if (x > 650.0)
        return factorial;

    // e^{-x} * sum_{k>=m} x^k/k!, summed forward from the first term.
    double term = std::exp(order * std::log(x) - std::lgamma(order + 1.0) - x);
    if (term == 0.0)
        return 0.0;  // x^m/m! e^{-x} below double range; the integral is as well
    double sum = 0.0;
    for (int k = order; ; ++k) {
        sum += term;
        term *= x / (k + 1);
        if (term == 0.0 || (term < sum * 1e-18 && k > order + 4)) break;
        if (k > order + 100000)
            throw std::runtime_error("lower_incomplete_gamma: series failed to converge");
    }
    return factorial * sum;
}

double CauchyPolynomial::operator()(double y) const {
    double r = y;
    for (std::size_t i = 0; i + 1 < coeffs.size(); ++i)
        r = (r - coeffs[i]) * y;
    return r - coeffs.back();
}

void CauchyPolynomial::validate() const {
    if (coeffs.empty())
        throw std::invalid_argument("CauchyPolynomial: degree must be >= 1");
    bool any_positive = false;
    for (double c : coeffs) {
        if (!(c >= 0.0) || !std::isfinite(c))
            throw std::invalid_argument("CauchyPolynomial: coefficients must be finite and >= 0");
        if (c > 0.0) any_positive = true;
    }
    if (!any_positive)
        throw std::invalid_argument("CauchyPolynomial: at least one coefficient must be > 0");
}

double unique_positive_root(const CauchyPolynomial& poly, double rel_tol, int max_iter) {
    poly.validate();

    // y* >= c_k^{1/k} for every k (plug y = c_k^{1/k} into y^k >= c_k),
    // and y* <= 2 max_k c_k^{1/k} (Fujiwara's bound). Both sit inside
    // the Cauchy bracket (0, 1 + max_k c_k].
    double lo = 0.0;
    double max_c = 0.0;
    for (std::size_t i = 0; i < poly.coeffs.size(); ++i) {
        const double c = poly.coeffs[i];
        max_c = std::max(max_c, c);
        if (c > 0.0)
            lo = std::max(lo, std::pow(c, 1.0 / static_cast<double>(i + 1)));
    }
    double hi = std::min(1.0 + max_c, 2.0 * lo);

    if (poly(lo) > 0.0) lo = 0.0;  // guard against rounding at the bound
    int doublings = 0;
    while (poly(hi) < 0.0) {
        hi *= 2.0;
        if (++doublings > 64)
            throw std::runtime_error("unique_positive_root: failed to bracket the root");
    }
    if (!(poly(lo) <= 0.0 && poly(hi) >= 0.0))
        throw std::runtime_error("unique_positive_root: sign conditions violated");

    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // bracket exhausted in double precision
        if (poly(mid) <= 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= rel_tol * hi) break;
    }
    return 0.5 * (lo + hi);
}

namespace {

SquareMatrix multiply(const SquareMatrix& a, const SquareMatrix& b) {
    const std::size_t d = a.dim;
    SquareMatrix out(d);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t k = 0; k < d; ++k) {
            const double v = a.at(r, k);
            if (v == 0.0) continue;
            for (std::size_t c = 0; c < d; ++c) out.at(r, c) += v * b.at(k, c);
        }
    return out;
}

double inf_norm(const SquareMatrix& m) {
    double best = 0.0;
    for (std::size_t r = 0; r < m.dim; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < m.dim; ++c) sum += m.at(r, c);
        best = std::max(best, sum);
    }
    return best;
}

}  // namespace

double spectral_radius(const SquareMatrix& m, double tol, long max_iter) {
    const std::size_t d = m.dim;
    if (d == 0 || m.a.size() != d * d)
        throw std::invalid_argument("spectral_radius: empty or malformed matrix");
    for (double v : m.a)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("spectral_radius: matrix must be entrywise >= 0 and finite");

    // Normalized repeated squaring: sp = lim ||A^{2^k}||^{1/2^k}. Each
    // squaring renormalizes by the infinity norm s_k, so the running
    // estimate is log s_0 + sum log(s_k)/2^k and the increments shrink
    // like |log C|/2^k for the norm-equivalence constant C. Unlike
    // vector-iteration ratios this converges at relative accuracy even
    // when several eigenvalues share the dominant modulus (the service
    // chains become nearly periodic at large theta).
    double s = inf_norm(m);
    if (s == 0.0) return 0.0;
    SquareMatrix cur = m;
    for (double& v : cur.a) v /= s;
    double log_sp = std::log(s);
    double weight = 0.5;
    int stable = 0;
    for (long k = 1; k <= max_iter; ++k) {
        cur = multiply(cur, cur);
        const double sk = inf_norm(cur);
        if (sk == 0.0) return 0.0;  // nilpotent
        for (double& v : cur.a) v /= sk;
        const double inc = weight * std::log(sk);
        log_sp += inc;
        weight *= 0.5;
        if (std::abs(inc) < tol * std::max(1.0, std::abs(log_sp))) {
            if (++stable >= 3) return std::exp(log_sp);
        } else {
            stable = 0;
        }
    }
    throw std::runtime_error("spectral_radius: did not converge in " +
                             std::to_string(max_iter) + " squarings");
}

}  // namespace harqperf::num
