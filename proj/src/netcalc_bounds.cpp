#include "netcalc_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace harqperf {

namespace {

// One step of v^T <- v^T Upsilon for the sparse layout of the service
// chain matrix (first row plus subdiagonal).
void left_apply(const num::SquareMatrix& m, std::vector<double>& v,
                std::vector<double>& scratch) {
    const std::size_t d = m.dim;
    for (std::size_t j = 0; j < d; ++j) {
        double s = v[0] * m.at(0, j);
        if (j + 1 < d) s += v[j + 1] * m.at(j + 1, j);
        scratch[j] = s;
    }
    v.swap(scratch);
}

}  // namespace

ServiceEnvelope service_envelope(const TransitionProbabilities& probs,
                                 const ProtocolParams& params,
                                 double theta,
                                 const SlackOptions& options) {
    probs.validate();
    params.validate();
    if (!(theta > 0.0) || !std::isfinite(theta))
        throw std::invalid_argument("service_envelope: theta must be > 0");
    if (options.margin_bps < 0.0)
        throw std::invalid_argument("service_envelope: margin must be >= 0");

    const EffectiveCapacityResult ec = effective_capacity(probs, params, theta);
    const double rate = ec.rho_s_bps - options.margin_bps;
    const double rho_slot = rate * params.slot_seconds;  // bits/slot

    const num::SquareMatrix upsilon =
        service_mgf_matrix(probs, params.packet_bits, theta);
    const int m = probs.deadline();

    // slack(t) = rho_slot*t + log(max_j column sum of Upsilon^t)/theta;
    // the column sums are the MGFs of -theta S(0,t) from each initial
    // state, kept normalized with an accumulated log scale.
    //
    // Both slack terms are ~rho_slot*t individually and cancel to O(1),
    // so the scan carries a numeric drift of roughly eps/theta bits per
    // slot. Growth below that slope is rounding, not a rising supremum.
    std::vector<double> v(m, 1.0), scratch(m);
    double log_scale = 0.0;
    double best = 0.0;  // slack(0) = 0; sigma tracks the raw running max
    double anchor = 0.0;
    long anchor_t = 0;
    long flat_run = 0;
    const long flat_needed = 10L * m;
    const double noise_slope = 1e-15 / theta;
    long t = 0;
    while (t < options.horizon_cap) {
        ++t;
        left_apply(upsilon, v, scratch);
        double vmax = 0.0;
        for (double x : v) vmax = std::max(vmax, x);
        log_scale += std::log(vmax);
        for (double& x : v) x /= vmax;

        const double slack = rho_slot * t + log_scale / theta;
        best = std::max(best, slack);
        if (slack > anchor + 1e-12 * std::max(1.0, std::abs(anchor)) +
                        noise_slope * static_cast<double>(t - anchor_t)) {
            anchor = slack;
            anchor_t = t;
            flat_run = 0;
        } else {
            if (++flat_run >= flat_needed) break;
        }
    }
    if (t >= options.horizon_cap && flat_run < flat_needed)
        throw std::runtime_error(
            "service_envelope: slack still growing at the horizon cap");

    ServiceEnvelope out;
    out.theta = theta;
    out.rate_bps = rate;
    out.slack_bits = std::max(best, 0.0);
    out.horizon_slots = t;
    out.slot_seconds = params.slot_seconds;
    return out;
}

double violation_prob(const ServiceEnvelope& envelope, double delta_bps,
                      double deficit_bits) {
    if (!(delta_bps > 0.0))
        throw std::invalid_argument("violation_prob: delta must be > 0");
    const double theta = envelope.theta;
    const double per_slot = theta * delta_bps * envelope.slot_seconds;
    return std::exp(theta * (envelope.slack_bits - deficit_bits)) /
           (-std::expm1(-per_slot));
}

double deficit_bits(const ServiceEnvelope& envelope, double delta_bps,
                    double eps_prime) {
    if (!(delta_bps > 0.0))
        throw std::invalid_argument("deficit_bits: delta must be > 0");
    if (!(eps_prime > 0.0 && eps_prime < 1.0))
        throw std::invalid_argument("deficit_bits: eps_prime must be in (0,1)");
    const double theta = envelope.theta;
    const double per_slot = theta * delta_bps * envelope.slot_seconds;
    return envelope.slack_bits -
           (std::log(eps_prime) + std::log(-std::expm1(-per_slot))) / theta;
}

BacklogDelayBound backlog_delay_bound(const ServiceEnvelope& envelope,
                                      const BoundQuery& query) {
    if (!(query.arrival_bps > 0.0))
        throw std::invalid_argument("backlog_delay_bound: arrival rate must be > 0");
    if (query.arrival_bps > envelope.rate_bps - query.delta_bps)
        throw InfeasibleError("backlog_delay_bound: arrival rate exceeds rate - delta");

    BacklogDelayBound out;
    out.deficit_bits = deficit_bits(envelope, query.delta_bps, query.eps_prime);
    const double residual = envelope.rate_bps - query.delta_bps;
    out.backlog_bits = query.arrival_bps * out.deficit_bits / residual;
    out.delay_seconds = out.deficit_bits / residual;
    return out;
}

namespace {

// Golden-section minimum of fn over [lo, hi]; fn must be unimodal.
template <typename F>
double golden_min(F&& fn, double lo, double hi, double rel_tol) {
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = fn(x1), f2 = fn(x2);
    while (hi - lo > rel_tol * std::max(1.0, std::abs(hi))) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = fn(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = fn(x2);
        }
    }
    return 0.5 * (lo + hi);
}

struct ThetaEval {
    bool feasible = false;
    double delta = 0.0;
    double delay = std::numeric_limits<double>::infinity();
    ServiceEnvelope envelope;
};

ThetaEval eval_theta(const TransitionProbabilities& probs,
                     const ProtocolParams& params, double theta,
                     double arrival_bps, double eps_prime, double tol) {
    ThetaEval out;
    const EffectiveCapacityResult ec = effective_capacity(probs, params, theta);
    const double headroom = ec.rho_s_bps - arrival_bps;
    if (!(headroom > 0.0)) return out;

    out.envelope = service_envelope(probs, params, theta);
    auto delay_at = [&](double delta) {
        return deficit_bits(out.envelope, delta, eps_prime) /
               (out.envelope.rate_bps - delta);
    };
    const double lo = headroom * 1e-9;
    out.delta = golden_min(delay_at, lo, headroom, tol);
    out.delay = delay_at(out.delta);
    out.feasible = true;
    return out;
}

}  // namespace

DelayOptimum optimize_delay_bound(const TransitionProbabilities& probs,
                                  const ProtocolParams& params,
                                  double arrival_bps, double eps_prime,
                                  const OptimizerOptions& options) {
    probs.validate();
    params.validate();
    if (!(arrival_bps > 0.0))
        throw std::invalid_argument("optimize_delay_bound: arrival rate must be > 0");
    if (!(eps_prime > 0.0 && eps_prime < 1.0))
        throw std::invalid_argument("optimize_delay_bound: eps_prime must be in (0,1)");

    const ServiceRateLimits limits = capacity_limits(probs, params);
    if (arrival_bps >= limits.mean_bps)
        throw InfeasibleError(
            "optimize_delay_bound: arrival rate is at or above the mean service rate");

    const double n = params.packet_bits;
    const double theta_lo = options.theta_lo_scale / n;
    const double theta_hi = options.theta_hi_scale / n;
    const int grid = std::max(options.theta_grid, 2);

    int best_idx = -1;
    ThetaEval best;
    std::vector<double> thetas(grid);
    const double log_lo = std::log(theta_lo), log_hi = std::log(theta_hi);
    for (int i = 0; i < grid; ++i) {
        thetas[i] = std::exp(log_lo + (log_hi - log_lo) * i / (grid - 1));
        ThetaEval e = eval_theta(probs, params, thetas[i], arrival_bps, eps_prime,
                                 options.tol);
        if (e.feasible && e.delay < best.delay) {
            best = e;
            best_idx = i;
        }
    }
    if (best_idx < 0)
        throw InfeasibleError("optimize_delay_bound: no feasible (theta, delta) found");
    double best_theta = thetas[best_idx];

    if (options.refine_theta) {
        const double bracket_lo = thetas[std::max(best_idx - 1, 0)];
        const double bracket_hi = thetas[std::min(best_idx + 1, grid - 1)];
        auto delay_of_log_theta = [&](double lt) {
            const ThetaEval e = eval_theta(probs, params, std::exp(lt), arrival_bps,
                                           eps_prime, options.tol);
            return e.feasible ? e.delay : std::numeric_limits<double>::infinity();
        };
        const double lt =
            golden_min(delay_of_log_theta, std::log(bracket_lo), std::log(bracket_hi),
                       1e-6);
        const ThetaEval refined =
            eval_theta(probs, params, std::exp(lt), arrival_bps, eps_prime, options.tol);
        if (refined.feasible && refined.delay < best.delay) {
            best = refined;
            best_theta = std::exp(lt);
        }
    }

    DelayOptimum out;
    out.theta = best_theta;
    out.delta_bps = best.delta;
    out.rate_bps = best.envelope.rate_bps;
    out.deficit_bits = deficit_bits(best.envelope, best.delta, eps_prime);
    out.backlog_bits = arrival_bps * out.deficit_bits / (best.envelope.rate_bps - best.delta);
    out.delay_seconds = out.deficit_bits / (best.envelope.rate_bps - best.delta);
    return out;
}

}  // namespace harqperf
