// C API over the harqperf core: exceptions become status codes, handles
// own cached model state.

#include "harqperf.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>

#include "effective_capacity.hpp"
#include "harq_model.hpp"
#include "netcalc_bounds.hpp"
#include "numerics.hpp"
#include "simulator.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename F>
hpf_status guarded(F&& fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        set_error(e.what());
        return HPF_ERR_INVALID_ARGUMENT;
    } catch (const std::domain_error& e) {
        set_error(e.what());
        return HPF_ERR_INVALID_ARGUMENT;
    } catch (const harqperf::InfeasibleError& e) {
        set_error(e.what());
        return HPF_ERR_INFEASIBLE;
    } catch (const std::runtime_error& e) {
        set_error(e.what());
        return HPF_ERR_NO_CONVERGENCE;
    } catch (const std::bad_alloc&) {
        set_error("out of memory");
        return HPF_ERR_INTERNAL;
    } catch (...) {
        set_error("unexpected error");
        return HPF_ERR_INTERNAL;
    }
}

harqperf::ProtocolParams to_params(const hpf_params& p) {
    harqperf::ProtocolParams out;
    out.packet_bits = p.packet_bits;
    out.slot_seconds = p.slot_seconds;
    out.bandwidth_hz = p.bandwidth_hz;
    out.deadline = p.deadline_slots;
    out.snr = p.snr_linear;
    out.fading_power = p.fading_power;
    switch (p.protocol) {
        case HPF_PROTOCOL_T1: out.protocol = harqperf::Protocol::T1; break;
        case HPF_PROTOCOL_CC: out.protocol = harqperf::Protocol::CC; break;
        case HPF_PROTOCOL_IR: out.protocol = harqperf::Protocol::IR; break;
        default: throw std::invalid_argument("unknown protocol");
    }
    return out;
}

harqperf::ServiceEnvelope from_c(const hpf_envelope& e) {
    harqperf::ServiceEnvelope env;
    env.theta = e.theta;
    env.rate_bps = e.rate_bps;
    env.slack_bits = e.slack_bits;
    env.horizon_slots = e.horizon_slots;
    env.slot_seconds = e.slot_seconds;
    return env;
}

}  // namespace

struct hpf_model {
    harqperf::ProtocolParams params;
    harqperf::TransitionProbabilities probs;
    harqperf::SteadyState steady;
    double kappa = 0.0;
};

struct hpf_sim_stats {
    harqperf::sim::SimStats stats;
    double slot_seconds = 0.0;
};

extern "C" {

const char* hpf_status_name(hpf_status s) {
    switch (s) {
        case HPF_OK: return "ok";
        case HPF_ERR_INVALID_ARGUMENT: return "invalid argument";
        case HPF_ERR_INFEASIBLE: return "infeasible";
        case HPF_ERR_NO_CONVERGENCE: return "no convergence";
        case HPF_ERR_INTERNAL: return "internal error";
    }
    return "unknown";
}

const char* hpf_last_error_message(void) { return g_last_error.c_str(); }

hpf_status hpf_model_create(const hpf_params* params, hpf_model** out) {
    return guarded([&]() -> hpf_status {
        if (!params || !out) throw std::invalid_argument("null argument");
        auto model = std::make_unique<hpf_model>();
        model->params = to_params(*params);
        const int grid =
            params->ir_grid > 0 ? params->ir_grid : harqperf::kIrDefaultResolution;
        model->probs = harqperf::transition_probs(model->params, grid);
        model->steady = harqperf::steady_state(model->probs, model->params);
        model->kappa = harqperf::decode_threshold(model->params);
        *out = model.release();
        return HPF_OK;
    });
}

void hpf_model_destroy(hpf_model* model) { delete model; }

int hpf_model_deadline(const hpf_model* model) {
    return model ? model->params.deadline : 0;
}

double hpf_model_decode_threshold(const hpf_model* model) {
    return model ? model->kappa : 0.0;
}

int hpf_model_degenerate_ratio(const hpf_model* model) {
    return model && model->probs.degenerate_ratio ? 1 : 0;
}

hpf_status hpf_model_transition_probs(const hpf_model* model, double* out, size_t len) {
    return guarded([&]() -> hpf_status {
        if (!model || !out) throw std::invalid_argument("null argument");
        const auto& p = model->probs.p;
        if (len < p.size()) throw std::invalid_argument("output buffer too small");
        std::memcpy(out, p.data(), p.size() * sizeof(double));
        return HPF_OK;
    });
}

hpf_status hpf_model_steady_state(const hpf_model* model, double* pi, size_t len,
                                  double* p_lost, double* throughput_bps) {
    return guarded([&]() -> hpf_status {
        if (!model) throw std::invalid_argument("null model");
        if (pi) {
            if (len < model->steady.pi.size())
                throw std::invalid_argument("output buffer too small");
            std::memcpy(pi, model->steady.pi.data(),
                        model->steady.pi.size() * sizeof(double));
        }
        if (p_lost) *p_lost = model->steady.p_lost;
        if (throughput_bps) *throughput_bps = model->steady.throughput_bps;
        return HPF_OK;
    });
}

hpf_status hpf_model_effective_capacity(const hpf_model* model, double theta,
                                        hpf_capacity* out) {
    return guarded([&]() -> hpf_status {
        if (!model || !out) throw std::invalid_argument("null argument");
        const harqperf::EffectiveCapacityResult r =
            harqperf::effective_capacity(model->probs, model->params, theta);
        out->rho_s_bps = r.rho_s_bps;
        out->y_star = r.y_star;
        out->spectral = r.spectral;
        out->used_spectral_fallback = r.used_spectral_fallback ? 1 : 0;
        return HPF_OK;
    });
}

hpf_status hpf_model_capacity_limits(const hpf_model* model, double* mean_bps,
                                     double* min_bps) {
    return guarded([&]() -> hpf_status {
        if (!model) throw std::invalid_argument("null model");
        const harqperf::ServiceRateLimits limits =
            harqperf::capacity_limits(model->probs, model->params);
        if (mean_bps) *mean_bps = limits.mean_bps;
        if (min_bps) *min_bps = limits.min_bps;
        return HPF_OK;
    });
}

hpf_status hpf_model_service_envelope(const hpf_model* model, double theta,
                                      hpf_envelope* out) {
    return guarded([&]() -> hpf_status {
        if (!model || !out) throw std::invalid_argument("null argument");
        const harqperf::ServiceEnvelope env =
            harqperf::service_envelope(model->probs, model->params, theta);
        out->theta = env.theta;
        out->rate_bps = env.rate_bps;
        out->slack_bits = env.slack_bits;
        out->horizon_slots = env.horizon_slots;
        out->slot_seconds = env.slot_seconds;
        return HPF_OK;
    });
}

hpf_status hpf_envelope_deficit_bits(const hpf_envelope* envelope, double delta_bps,
                                     double eps_prime, double* b_bits) {
    return guarded([&]() -> hpf_status {
        if (!envelope || !b_bits) throw std::invalid_argument("null argument");
        *b_bits = harqperf::deficit_bits(from_c(*envelope), delta_bps, eps_prime);
        return HPF_OK;
    });
}

hpf_status hpf_envelope_violation_prob(const hpf_envelope* envelope, double delta_bps,
                                       double b_bits, double* eps_prime) {
    return guarded([&]() -> hpf_status {
        if (!envelope || !eps_prime) throw std::invalid_argument("null argument");
        *eps_prime = harqperf::violation_prob(from_c(*envelope), delta_bps, b_bits);
        return HPF_OK;
    });
}

hpf_status hpf_model_bound_for(const hpf_model* model, double theta,
                               double arrival_bps, double delta_bps,
                               double eps_prime, hpf_bound* out) {
    return guarded([&]() -> hpf_status {
        if (!model || !out) throw std::invalid_argument("null argument");
        const harqperf::ServiceEnvelope env =
            harqperf::service_envelope(model->probs, model->params, theta);
        harqperf::BoundQuery query;
        query.arrival_bps = arrival_bps;
        query.eps_prime = eps_prime;
        query.delta_bps = delta_bps;
        const harqperf::BacklogDelayBound b = harqperf::backlog_delay_bound(env, query);
        out->deficit_bits = b.deficit_bits;
        out->backlog_bits = b.backlog_bits;
        out->delay_seconds = b.delay_seconds;
        return HPF_OK;
    });
}

hpf_status hpf_model_delay_bound(const hpf_model* model, double arrival_bps,
                                 double eps_prime, hpf_delay_optimum* out) {
    return guarded([&]() -> hpf_status {
        if (!model || !out) throw std::invalid_argument("null argument");
        const harqperf::DelayOptimum opt = harqperf::optimize_delay_bound(
            model->probs, model->params, arrival_bps, eps_prime);
        out->theta = opt.theta;
        out->delta_bps = opt.delta_bps;
        out->deficit_bits = opt.deficit_bits;
        out->backlog_bits = opt.backlog_bits;
        out->delay_seconds = opt.delay_seconds;
        out->rate_bps = opt.rate_bps;
        return HPF_OK;
    });
}

hpf_status hpf_default_packet_bits(double snr_linear, double slot_seconds,
                                   double bandwidth_hz, double fading_power,
                                   int* n_out) {
    return guarded([&]() -> hpf_status {
        if (!n_out) throw std::invalid_argument("null argument");
        *n_out = harqperf::default_packet_bits(snr_linear, slot_seconds, bandwidth_hz,
                                               fading_power);
        return HPF_OK;
    });
}

hpf_status hpf_simulate(const hpf_sim_config* config, hpf_sim_stats** out) {
    return guarded([&]() -> hpf_status {
        if (!config || !out) throw std::invalid_argument("null argument");
        harqperf::sim::SimConfig c;
        c.params = to_params(config->params);
        c.arrival_bps = config->arrival_bps;
        c.seed = config->seed;
        c.warmup_slots = config->warmup_slots;
        c.measure_slots = config->measure_slots;
        c.saturated = config->saturated != 0;
        c.record_queue_samples = config->record_queue_samples != 0;
        c.record_packets = config->record_packets != 0;
        auto wrapper = std::make_unique<hpf_sim_stats>();
        wrapper->stats = harqperf::sim::simulate_queue(c);
        wrapper->slot_seconds = c.params.slot_seconds;
        *out = wrapper.release();
        return HPF_OK;
    });
}

void hpf_sim_stats_destroy(hpf_sim_stats* stats) { delete stats; }

long long hpf_sim_stats_admitted(const hpf_sim_stats* s) { return s ? s->stats.admitted : 0; }
long long hpf_sim_stats_delivered(const hpf_sim_stats* s) { return s ? s->stats.delivered : 0; }
long long hpf_sim_stats_lost(const hpf_sim_stats* s) { return s ? s->stats.lost : 0; }
long long hpf_sim_stats_in_system(const hpf_sim_stats* s) { return s ? s->stats.in_system : 0; }
double hpf_sim_stats_fractional_bits(const hpf_sim_stats* s) {
    return s ? s->stats.fractional_bits : 0.0;
}
double hpf_sim_stats_p_lost(const hpf_sim_stats* s) { return s ? s->stats.p_lost_hat() : 0.0; }
double hpf_sim_stats_mean_delay_seconds(const hpf_sim_stats* s) {
    return s ? s->stats.mean_delivered_delay_slots() * s->slot_seconds : 0.0;
}

hpf_status hpf_sim_stats_pi0(const hpf_sim_stats* stats, double* pi0_hat,
                             double* std_err) {
    return guarded([&]() -> hpf_status {
        if (!stats) throw std::invalid_argument("null stats");
        double mean = 0.0, se = 0.0;
        stats->stats.pi0_hat(mean, se);
        if (pi0_hat) *pi0_hat = mean;
        if (std_err) *std_err = se;
        return HPF_OK;
    });
}

hpf_status hpf_sim_stats_state_occupancy(const hpf_sim_stats* stats, double* out,
                                         size_t len) {
    return guarded([&]() -> hpf_status {
        if (!stats || !out) throw std::invalid_argument("null argument");
        const std::vector<double> occ = stats->stats.occupancy_hat();
        if (len < occ.size()) throw std::invalid_argument("output buffer too small");
        std::memcpy(out, occ.data(), occ.size() * sizeof(double));
        return HPF_OK;
    });
}

hpf_status hpf_sim_stats_delay_violation(const hpf_sim_stats* stats,
                                         double threshold_seconds, int include_lost,
                                         double* fraction, double* wilson_lo,
                                         double* wilson_hi) {
    return guarded([&]() -> hpf_status {
        if (!stats) throw std::invalid_argument("null stats");
        const harqperf::sim::WilsonInterval w = stats->stats.delay_violation(
            threshold_seconds, include_lost != 0, stats->slot_seconds);
        if (fraction) *fraction = w.fraction;
        if (wilson_lo) *wilson_lo = w.lo;
        if (wilson_hi) *wilson_hi = w.hi;
        return HPF_OK;
    });
}

hpf_status hpf_sim_stats_queue_violation(const hpf_sim_stats* stats,
                                         double threshold_bits, double* fraction,
                                         double* wilson_lo, double* wilson_hi) {
    return guarded([&]() -> hpf_status {
        if (!stats) throw std::invalid_argument("null stats");
        const harqperf::sim::WilsonInterval w =
            stats->stats.queue_violation(threshold_bits);
        if (fraction) *fraction = w.fraction;
        if (wilson_lo) *wilson_lo = w.lo;
        if (wilson_hi) *wilson_hi = w.hi;
        return HPF_OK;
    });
}

hpf_status hpf_sim_stats_queue_slope(const hpf_sim_stats* stats,
                                     double* bits_per_slot) {
    return guarded([&]() -> hpf_status {
        if (!stats || !bits_per_slot) throw std::invalid_argument("null argument");
        *bits_per_slot = stats->stats.queue_slope_bits_per_slot();
        return HPF_OK;
    });
}

hpf_status hpf_sim_stats_dump_packets_csv(const hpf_sim_stats* stats,
                                          const char* path) {
    return guarded([&]() -> hpf_status {
        if (!stats || !path) throw std::invalid_argument("null argument");
        std::ofstream os(path);
        if (!os) throw std::runtime_error(std::string("cannot open ") + path);
        harqperf::sim::dump_packets_csv(stats->stats, os);
        return HPF_OK;
    });
}

hpf_status hpf_estimate_transition_probs(const hpf_params* params, uint64_t seed,
                                         long long samples, double* p_hat,
                                         double* std_err, size_t len) {
    return guarded([&]() -> hpf_status {
        if (!params || !p_hat) throw std::invalid_argument("null argument");
        const harqperf::ProtocolParams p = to_params(*params);
        if (len < static_cast<size_t>(p.deadline))
            throw std::invalid_argument("output buffer too small");
        const harqperf::sim::EstimatedProbs est =
            harqperf::sim::estimate_transition_probs(p, seed, samples);
        std::memcpy(p_hat, est.p_hat.data(), est.p_hat.size() * sizeof(double));
        if (std_err)
            std::memcpy(std_err, est.std_err.data(),
                        est.std_err.size() * sizeof(double));
        return HPF_OK;
    });
}

}  // extern "C"
