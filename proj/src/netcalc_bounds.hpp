#pragma once

#include <stdexcept>

#include "effective_capacity.hpp"
#include "harq_model.hpp"

namespace harqperf {

/// Raised when a bound query violates the stability condition
/// a <= rate - delta, or when no (theta, delta) pair is feasible.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Statistical affine lower envelope of the cumulative service:
///   E{e^{-theta S(0,t)}} <= e^{-theta (rate_bps*T*t/T ... )}
/// in per-slot terms, log E{e^{-theta S(0,t)}} <= -theta (rho_slot t - slack_bits)
/// for all t in [0, horizon_slots], with rho_slot = rate_bps * slot_seconds
/// and the expectation taken from the worst initial state.
struct ServiceEnvelope {
    double theta = 0.0;         // 1/bits
    double rate_bps = 0.0;      // certified envelope rate (rho_S(theta) - margin)
    double slack_bits = 0.0;    // sigma_S(theta) >= 0
    long horizon_slots = 0;     // prefix over which the slack was certified
    double slot_seconds = 0.0;
};

struct SlackOptions {
    double margin_bps = 0.0;     // epsilon in the (sigma, rho - epsilon) envelope
    long horizon_cap = 100000;   // abort if the slack supremum is still growing here
};

/// Constructive slack term: scans the exact worst-initial-state MGF of
/// -theta S(0,t) (column sums of Upsilon^t, tracked in log scale) and
/// returns the supremum of rho_slot*t + log(MGF_max(t))/theta. Stops
/// early once the slack sequence has stopped increasing for 10*M
/// consecutive slots; throws std::runtime_error if it still grows at
/// the horizon cap.
ServiceEnvelope service_envelope(const TransitionProbabilities& probs,
                                 const ProtocolParams& params,
                                 double theta,
                                 const SlackOptions& options = {});

/// Sample-path violation probability of a service deficit b:
///   eps'(b) = e^{theta sigma} e^{-theta b} / (1 - e^{-theta delta T}).
/// delta is a rate in bits/sec and enters per slot as theta*delta*T.
double violation_prob(const ServiceEnvelope& envelope, double delta_bps,
                      double deficit_bits);

/// Inversion of violation_prob for the deficit:
///   b = sigma - (log eps' + log(1 - e^{-theta delta T})) / theta.
double deficit_bits(const ServiceEnvelope& envelope, double delta_bps,
                    double eps_prime);

struct BoundQuery {
    double arrival_bps = 0.0;  // constant arrival rate a
    double eps_prime = 0.0;    // target violation probability, in (0,1)
    double delta_bps = 0.0;    // free parameter, 0 < delta <= rate - a
};

struct BacklogDelayBound {
    double deficit_bits = 0.0;   // b
    double backlog_bits = 0.0;   // q = a b / (rate - delta)
    double delay_seconds = 0.0;  // d = q / a = b / (rate - delta)
};

/// Backlog and delay bounds at fixed (theta, delta); throws
/// InfeasibleError when a > rate - delta.
BacklogDelayBound backlog_delay_bound(const ServiceEnvelope& envelope,
                                      const BoundQuery& query);

struct DelayOptimum {
    double theta = 0.0;
    double delta_bps = 0.0;
    double deficit_bits = 0.0;
    double backlog_bits = 0.0;
    double delay_seconds = 0.0;
    double rate_bps = 0.0;  // rho_S(theta*) at the optimum
};

struct OptimizerOptions {
    int theta_grid = 64;          // log-spaced points over [lo,hi]*(1/n)
    double theta_lo_scale = 1e-6; // theta_lo = lo_scale / n
    double theta_hi_scale = 10.0; // theta_hi = hi_scale / n
    double tol = 1e-10;           // relative interval tolerance of the searches
    bool refine_theta = true;     // golden-section pass around the best grid point
};

/// Minimizes the delay bound over theta (log grid, optionally refined)
/// and, for each theta, over delta in (0, rho_S(theta) - a] by
/// golden-section search. Deterministic for fixed options. Throws
/// InfeasibleError when the arrival rate is at or above the mean
/// service rate (no theta admits a stable bound).
DelayOptimum optimize_delay_bound(const TransitionProbabilities& probs,
                                  const ProtocolParams& params,
                                  double arrival_bps, double eps_prime,
                                  const OptimizerOptions& options = {});

}  // namespace harqperf
