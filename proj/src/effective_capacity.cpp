#include "effective_capacity.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace harqperf {

num::SquareMatrix service_mgf_matrix(const TransitionProbabilities& probs,
                                     double packet_bits, double theta) {
    num::SquareMatrix mat = transition_matrix(probs);
    const double xi = std::exp(-packet_bits * theta);
    for (std::size_t r = 0; r < mat.dim; ++r) mat.at(r, 0) *= xi;
    return mat;
}

num::CauchyPolynomial characteristic_poly(const TransitionProbabilities& probs,
                                          double packet_bits, double theta) {
    probs.validate();
    const int m = probs.deadline();
    if (m < 2)
        throw std::domain_error("characteristic_poly: needs at least two states");
    const double p0 = probs.p[0];
    if (p0 <= 0.0)
        throw std::domain_error("characteristic_poly: p_0 = 0 divides a coefficient");

    const double scale = p0 * std::exp(-packet_bits * theta);  // p_0 e^{-n theta}

    num::CauchyPolynomial poly;
    poly.coeffs.resize(m);
    poly.coeffs[0] = (1.0 - p0) / p0;
    double numerator = 1.0;   // p_{i-1} ... p_1, empty for i = 1
    double divisor = scale;   // scale^i
    for (int i = 1; i <= m - 2; ++i) {
        poly.coeffs[i] = (1.0 - probs.p[i]) * numerator / divisor;
        numerator *= probs.p[i];
        divisor *= scale;
    }
    poly.coeffs[m - 1] = numerator / divisor;

    for (double c : poly.coeffs)
        if (!std::isfinite(c))
            throw std::domain_error("characteristic_poly: coefficient overflow");
    return poly;
}

namespace {

// Root of the characteristic polynomial carried entirely in logs, for
// thetas where the coefficients e^{i n theta} overflow a double. Same
// bracket as unique_positive_root: max_k b_k^{1/k} <= y* <= twice that.
double log_char_poly_root(const TransitionProbabilities& probs, double packet_bits,
                          double theta, double rel_tol) {
    const int m = probs.deadline();
    const double log_scale = std::log(probs.p[0]) - packet_bits * theta;
    std::vector<double> log_b(m, -std::numeric_limits<double>::infinity());
    if (probs.p[0] < 1.0) log_b[0] = std::log1p(-probs.p[0]) - std::log(probs.p[0]);
    double log_numerator = 0.0;  // log(p_{i-1} ... p_1)
    for (int i = 1; i <= m - 2; ++i) {
        if (probs.p[i] < 1.0)
            log_b[i] = std::log1p(-probs.p[i]) + log_numerator - i * log_scale;
        log_numerator += std::log(probs.p[i]);
    }
    log_b[m - 1] = log_numerator - (m - 1) * log_scale;

    double u_lo = -std::numeric_limits<double>::infinity();
    for (int k = 1; k <= m; ++k)
        if (std::isfinite(log_b[k - 1])) u_lo = std::max(u_lo, log_b[k - 1] / k);

    // f(e^u) > 0  <=>  m*u > log sum_k exp(log_b_k + (m-k) u)
    auto positive = [&](double u) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int k = 1; k <= m; ++k)
            if (std::isfinite(log_b[k - 1]))
                mx = std::max(mx, log_b[k - 1] + (m - k) * u);
        double s = 0.0;
        for (int k = 1; k <= m; ++k)
            if (std::isfinite(log_b[k - 1]))
                s += std::exp(log_b[k - 1] + (m - k) * u - mx);
        return m * u > mx + std::log(s);
    };

    double u_hi = u_lo + M_LN2;
    int expand = 0;
    while (!positive(u_hi)) {
        u_hi += M_LN2;
        if (++expand > 64)
            throw std::runtime_error("effective_capacity: log-domain bracket failed");
    }
    for (int it = 0; it < 200 && u_hi - u_lo > rel_tol; ++it) {
        const double mid = 0.5 * (u_lo + u_hi);
        if (positive(mid))
            u_hi = mid;
        else
            u_lo = mid;
    }
    return 0.5 * (u_lo + u_hi);
}

}  // namespace

EffectiveCapacityResult effective_capacity(const TransitionProbabilities& probs,
                                           const ProtocolParams& params,
                                           double theta,
                                           double root_rel_tol) {
    probs.validate();
    params.validate();
    if (!(theta > 0.0) || !std::isfinite(theta))
        throw std::invalid_argument("effective_capacity: theta must be > 0");
    if (probs.deadline() != params.deadline)
        throw std::invalid_argument("effective_capacity: deadline mismatch");

    const double n = params.packet_bits;
    const double t_slot = params.slot_seconds;
    const double xi = std::exp(-n * theta);

    EffectiveCapacityResult out;
    if (params.deadline == 1) {
        // one state: a packet departs every slot, service is exactly n bits/slot
        out.spectral = xi;
        out.y_star = probs.p[0] > 0.0 ? 1.0 / probs.p[0]
                                      : std::numeric_limits<double>::quiet_NaN();
        out.rho_s_bps = n / t_slot;
        return out;
    }

    if (probs.p[0] <= 0.0) {
        out.used_spectral_fallback = true;
        out.spectral = num::spectral_radius(service_mgf_matrix(probs, n, theta));
        out.y_star = std::numeric_limits<double>::quiet_NaN();
        out.rho_s_bps = -std::log(out.spectral) / (theta * t_slot);
        return out;
    }

    try {
        const num::CauchyPolynomial poly = characteristic_poly(probs, n, theta);
        out.y_star = num::unique_positive_root(poly, root_rel_tol);
        out.spectral = probs.p[0] * xi * out.y_star;
        out.rho_s_bps = -std::log(out.spectral) / (theta * t_slot);
    } catch (const std::domain_error&) {
        // coefficient overflow: same root, solved in the log domain
        const double u = log_char_poly_root(probs, n, theta, root_rel_tol);
        const double log_sp = std::log(probs.p[0]) - n * theta + u;
        out.y_star = std::exp(u);
        out.spectral = std::exp(log_sp);
        out.rho_s_bps = -log_sp / (theta * t_slot);
    }
    return out;
}

ServiceRateLimits capacity_limits(const TransitionProbabilities& probs,
                                  const ProtocolParams& params) {
    const SteadyState ss = steady_state(probs, params);
    ServiceRateLimits out;
    out.mean_bps = params.packet_bits * ss.pi[0] / params.slot_seconds;
    out.min_bps = params.packet_bits / (params.slot_seconds * params.deadline);
    return out;
}

}  // namespace harqperf
