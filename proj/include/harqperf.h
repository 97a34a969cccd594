#ifndef HARQPERF_H
#define HARQPERF_H

/* C interface to libharqperf: analytic link-layer performance of HARQ
 * systems over Rayleigh block fading (per-attempt failure probabilities,
 * steady state, effective capacity, non-asymptotic backlog/delay bounds)
 * plus a seeded slot-level queue simulator for cross-validation.
 *
 * Conventions:
 *   - every fallible call returns hpf_status and writes results through
 *     out parameters; hpf_last_error_message() describes the most recent
 *     failure on the calling thread
 *   - handles are opaque; release them with the matching _destroy call
 *   - units: bits, seconds, Hz, bits/sec; SNR is linear; the QoS
 *     exponent theta is in 1/bits
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hpf_status {
    HPF_OK = 0,
    HPF_ERR_INVALID_ARGUMENT = 1,
    HPF_ERR_INFEASIBLE = 2,
    HPF_ERR_NO_CONVERGENCE = 3,
    HPF_ERR_INTERNAL = 4
} hpf_status;

typedef enum hpf_protocol {
    HPF_PROTOCOL_T1 = 0, /* each attempt decoded in isolation */
    HPF_PROTOCOL_CC = 1, /* chase combining: fading powers accumulate */
    HPF_PROTOCOL_IR = 2  /* incremental redundancy: mutual information accumulates */
} hpf_protocol;

typedef struct hpf_params {
    double packet_bits;    /* n, bits per packet */
    double slot_seconds;   /* T, slot duration */
    double bandwidth_hz;   /* B */
    int deadline_slots;    /* M >= 1, max attempts per packet */
    double snr_linear;     /* average transmit SNR (linear scale) */
    double fading_power;   /* mean fading power sigma_h^2 */
    hpf_protocol protocol;
    int ir_grid;           /* IR convolution grid; 0 selects the default (4096) */
} hpf_params;

const char* hpf_status_name(hpf_status s);
const char* hpf_last_error_message(void);

/* ---- analytic model ---------------------------------------------- */

typedef struct hpf_model hpf_model;

hpf_status hpf_model_create(const hpf_params* params, hpf_model** out);
void hpf_model_destroy(hpf_model* model);

int hpf_model_deadline(const hpf_model* model);
double hpf_model_decode_threshold(const hpf_model* model); /* kappa */
/* 1 when a 0/0 failure ratio was resolved to 0 (e.g. kappa = 0) */
int hpf_model_degenerate_ratio(const hpf_model* model);

/* Conditional decoding-failure probabilities p_0..p_{M-1}; len must be
 * at least the deadline. */
hpf_status hpf_model_transition_probs(const hpf_model* model, double* out, size_t len);

/* Stationary distribution, packet-loss probability and reliable
 * throughput. pi may be NULL when only the scalars are wanted. */
hpf_status hpf_model_steady_state(const hpf_model* model, double* pi, size_t len,
                                  double* p_lost, double* throughput_bps);

typedef struct hpf_capacity {
    double rho_s_bps; /* effective capacity */
    double y_star;    /* positive root of the characteristic polynomial */
    double spectral;  /* p_0 e^{-n theta} y_star, Perron root of the MGF matrix */
    int used_spectral_fallback;
} hpf_capacity;

hpf_status hpf_model_effective_capacity(const hpf_model* model, double theta,
                                        hpf_capacity* out);

/* theta -> 0 and theta -> infinity service-rate limits. */
hpf_status hpf_model_capacity_limits(const hpf_model* model, double* mean_bps,
                                     double* min_bps);

/* ---- backlog/delay bounds ----------------------------------------- */

typedef struct hpf_envelope {
    double theta;
    double rate_bps;   /* certified envelope rate */
    double slack_bits; /* sigma_S(theta) */
    long horizon_slots;
    double slot_seconds;
} hpf_envelope;

hpf_status hpf_model_service_envelope(const hpf_model* model, double theta,
                                      hpf_envelope* out);

/* b(eps') and eps'(b): exact inverses of each other. delta is a rate in
 * bits/sec and enters per slot as theta*delta*T. */
hpf_status hpf_envelope_deficit_bits(const hpf_envelope* envelope, double delta_bps,
                                     double eps_prime, double* b_bits);
hpf_status hpf_envelope_violation_prob(const hpf_envelope* envelope, double delta_bps,
                                       double b_bits, double* eps_prime);

typedef struct hpf_bound {
    double deficit_bits;
    double backlog_bits;
    double delay_seconds;
} hpf_bound;

/* Backlog/delay bound at explicit (theta, delta). HPF_ERR_INFEASIBLE
 * when arrival_bps > rho_S(theta) - delta. */
hpf_status hpf_model_bound_for(const hpf_model* model, double theta,
                               double arrival_bps, double delta_bps,
                               double eps_prime, hpf_bound* out);

typedef struct hpf_delay_optimum {
    double theta;
    double delta_bps;
    double deficit_bits;
    double backlog_bits;
    double delay_seconds;
    double rate_bps; /* rho_S at the optimal theta */
} hpf_delay_optimum;

/* Delay bound minimized over theta and delta. HPF_ERR_INFEASIBLE when
 * the arrival rate is at or above the mean service rate. */
hpf_status hpf_model_delay_bound(const hpf_model* model, double arrival_bps,
                                 double eps_prime, hpf_delay_optimum* out);

/* Packet size maximizing HARQ-T1 reliable throughput for the channel. */
hpf_status hpf_default_packet_bits(double snr_linear, double slot_seconds,
                                   double bandwidth_hz, double fading_power,
                                   int* n_out);

/* ---- simulator ----------------------------------------------------- */

typedef struct hpf_sim_config {
    hpf_params params;
    double arrival_bps;
    uint64_t seed;
    long warmup_slots;  /* -1: default (10% of measure_slots) */
    long measure_slots;
    int saturated;            /* nonzero: server always busy, arrivals ignored */
    int record_queue_samples; /* keep per-slot queue lengths */
    int record_packets;       /* keep per-packet records for the CSV dump */
} hpf_sim_config;

typedef struct hpf_sim_stats hpf_sim_stats;

hpf_status hpf_simulate(const hpf_sim_config* config, hpf_sim_stats** out);
void hpf_sim_stats_destroy(hpf_sim_stats* stats);

long long hpf_sim_stats_admitted(const hpf_sim_stats* stats);
long long hpf_sim_stats_delivered(const hpf_sim_stats* stats);
long long hpf_sim_stats_lost(const hpf_sim_stats* stats);
long long hpf_sim_stats_in_system(const hpf_sim_stats* stats);
double hpf_sim_stats_fractional_bits(const hpf_sim_stats* stats);
double hpf_sim_stats_p_lost(const hpf_sim_stats* stats);
double hpf_sim_stats_mean_delay_seconds(const hpf_sim_stats* stats);

/* Batch-means estimate of the state-0 occupancy with its standard error. */
hpf_status hpf_sim_stats_pi0(const hpf_sim_stats* stats, double* pi0_hat,
                             double* std_err);
hpf_status hpf_sim_stats_state_occupancy(const hpf_sim_stats* stats, double* out,
                                         size_t len);

/* Fraction of departures whose sojourn exceeded the threshold, with a
 * Wilson 95% interval. include_lost counts deadline discards too. */
hpf_status hpf_sim_stats_delay_violation(const hpf_sim_stats* stats,
                                         double threshold_seconds, int include_lost,
                                         double* fraction, double* wilson_lo,
                                         double* wilson_hi);
hpf_status hpf_sim_stats_queue_violation(const hpf_sim_stats* stats,
                                         double threshold_bits, double* fraction,
                                         double* wilson_lo, double* wilson_hi);

/* Least-squares growth rate of the queue over the measured window;
 * needs record_queue_samples. */
hpf_status hpf_sim_stats_queue_slope(const hpf_sim_stats* stats,
                                     double* bits_per_slot);

/* One CSV row per departed packet (arrival_slot, departure_slot,
 * attempts, lost_flag); needs record_packets. */
hpf_status hpf_sim_stats_dump_packets_csv(const hpf_sim_stats* stats,
                                          const char* path);

/* Monte Carlo estimate of the per-attempt conditional failure
 * probabilities from independent packet transmissions (no queue). */
hpf_status hpf_estimate_transition_probs(const hpf_params* params, uint64_t seed,
                                         long long samples, double* p_hat,
                                         double* std_err, size_t len);

#ifdef __cplusplus
}
#endif

#endif /* HARQPERF_H */
