#pragma once

#include "harq_model.hpp"
#include "numerics.hpp"

namespace harqperf {

/// Upsilon = P * diag(e^{-n theta}, 1, ..., 1): the service chain's
/// transition matrix with the state-0 reward folded in. Its Perron root
/// is the per-slot decay of E{e^{-theta S(0,t)}}.
num::SquareMatrix service_mgf_matrix(const TransitionProbabilities& probs,
                                     double packet_bits, double theta);

/// Characteristic polynomial of the service chain in the variable
/// y = spectral / (p_0 e^{-n theta}):
///   f(y) = y^M - b_1 y^{M-1} - ... - b_M,
///   b_1     = (1-p_0)/p_0,
///   b_{i+1} = (1-p_i) p_{i-1}...p_1 / (p_0 e^{-n theta})^i,  1 <= i <= M-2,
///   b_M     = p_{M-2}...p_1 / (p_0 e^{-n theta})^{M-1},
/// with empty products equal to 1.
/// Throws std::domain_error when p_0 = 0 or a coefficient overflows;
/// callers fall back to the spectral radius of Upsilon.
num::CauchyPolynomial characteristic_poly(const TransitionProbabilities& probs,
                                          double packet_bits, double theta);

struct EffectiveCapacityResult {
    double rho_s_bps = 0.0;   // effective capacity
    double y_star = 0.0;      // positive root of the characteristic polynomial
    double spectral = 0.0;    // p_0 e^{-n theta} y_star = Perron root of Upsilon
    bool used_spectral_fallback = false;
};

/// Effective capacity rho_S(theta) = -log(spectral)/(theta T).
/// M = 1 short-circuits to n/T (deterministic one-slot service).
EffectiveCapacityResult effective_capacity(const TransitionProbabilities& probs,
                                           const ProtocolParams& params,
                                           double theta,
                                           double root_rel_tol = 1e-15);

struct ServiceRateLimits {
    double mean_bps = 0.0;  // n pi_0 / T, the theta -> 0 limit
    double min_bps = 0.0;   // n / (M T),  the theta -> inf limit
};

ServiceRateLimits capacity_limits(const TransitionProbabilities& probs,
                                  const ProtocolParams& params);

}  // namespace harqperf
