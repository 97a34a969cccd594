#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "harq_model.hpp"

namespace harqperf::sim {

struct SimConfig {
    ProtocolParams params;
    double arrival_bps = 0.0;
    std::uint64_t seed = 1;
    long warmup_slots = -1;   // -1: default 10% of measure_slots
    long measure_slots = 0;
    int replications = 1;
    bool saturated = false;          // server always busy; arrivals ignored
    bool record_queue_samples = false;
    bool record_packets = false;     // keep per-packet records for the CSV dump

    void validate() const;
    long effective_warmup() const;
};

struct PacketRecord {
    std::int64_t arrival_slot = 0;
    std::int64_t departure_slot = 0;
    int attempts = 0;
    bool lost = false;
};

struct WilsonInterval {
    double fraction = 0.0;
    double lo = 0.0;
    double hi = 1.0;
    long long samples = 0;
};

/// Wilson 95% score interval for successes/trials.
WilsonInterval wilson_interval(long long successes, long long trials);

struct SimStats {
    std::uint64_t seed = 0;
    long measured_slots = 0;

    // whole-run packet ledger (warmup included): admitted equals
    // delivered + lost + in_system on every run, exactly
    long long admitted = 0;
    long long delivered = 0;
    long long lost = 0;
    long long in_system = 0;
    double fractional_bits = 0.0;  // arrival accumulator residue, in [0, n)

    // service-chain occupancy over measured busy slots
    std::vector<long long> state_slots;  // end-of-slot chain state counts
    long long busy_slots = 0;
    long long idle_slots = 0;

    // conditional failure counts per attempt (measured window)
    std::vector<long long> attempt_reached;
    std::vector<long long> attempt_failed;

    // per-departure sojourns in slots, measured window; lost flags parallel
    std::vector<std::uint32_t> delay_slots;
    std::vector<std::uint8_t> delay_lost;

    // optional per-slot queue lengths (packets in system), measured window
    std::vector<std::uint32_t> queue_packets;
    double packet_bits = 0.0;

    // optional full records
    std::vector<PacketRecord> packets;

    // batch means of the state-0 occupancy for a correlation-robust CI
    std::vector<double> pi0_batches;

    double p_lost_hat() const;
    double p_lost_std_err() const;
    /// Batch-means estimate: mean and standard error of pi0_hat.
    void pi0_hat(double& mean, double& std_err) const;
    std::vector<double> occupancy_hat() const;
    /// Fraction of departures with sojourn strictly above the threshold.
    WilsonInterval delay_violation(double threshold_seconds, bool include_lost,
                                   double slot_seconds) const;
    WilsonInterval queue_violation(double threshold_bits) const;
    /// Least-squares slope of queue bits vs slot over the measured window.
    double queue_slope_bits_per_slot() const;
    double mean_delivered_delay_slots() const;
};

/// Slot-level simulation of the transmitter queue: fluid arrivals
/// packetized into n-bit packets, FCFS service with per-protocol HARQ
/// decoding over i.i.d. fading, deadline discard at attempt M.
/// Deterministic for a fixed config (seed included).
SimStats simulate_queue(const SimConfig& config);

/// Replications with split seeds, run concurrently.
std::vector<SimStats> simulate_replications(const SimConfig& config);

/// Seed for replication r: splitmix64 applied to base + r * golden gamma.
std::uint64_t split_seed(std::uint64_t base, int replication);

struct EstimatedProbs {
    std::vector<double> p_hat;
    std::vector<double> std_err;
    std::vector<long long> reached;
};

/// Monte Carlo estimate of the per-attempt conditional failure
/// probabilities from independent packet transmissions (no queue): the
/// oracle for the analytic transition probabilities.
EstimatedProbs estimate_transition_probs(const ProtocolParams& params,
                                         std::uint64_t seed, long long samples);

/// One CSV row per departed packet: arrival_slot, departure_slot,
/// attempts, lost_flag. Requires record_packets.
void dump_packets_csv(const SimStats& stats, std::ostream& os);

}  // namespace harqperf::sim
