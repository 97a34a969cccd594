#include "simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <future>
#include <ostream>
#include <random>
#include <stdexcept>

namespace harqperf::sim {

namespace {

constexpr int kPi0Batches = 100;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// 53-bit uniform in [0,1); paired with inverse-CDF sampling this keeps
// runs bit-identical across platforms.
struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(seed) {}
    double uniform01() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
};

}  // namespace

std::uint64_t split_seed(std::uint64_t base, int replication) {
    return splitmix64(base + static_cast<std::uint64_t>(replication));
}

void SimConfig::validate() const {
    params.validate();
    if (measure_slots <= 0)
        throw std::invalid_argument("sim: measure_slots must be > 0");
    if (!(arrival_bps >= 0.0) || !std::isfinite(arrival_bps))
        throw std::invalid_argument("sim: arrival rate must be >= 0");
    if (replications < 1)
        throw std::invalid_argument("sim: replications must be >= 1");
    if (params.packet_bits <= 0.0 && !saturated && arrival_bps > 0.0)
        throw std::invalid_argument("sim: packet_bits must be > 0 with arrivals");
}

long SimConfig::effective_warmup() const {
    return warmup_slots >= 0 ? warmup_slots : measure_slots / 10;
}

WilsonInterval wilson_interval(long long successes, long long trials) {
    WilsonInterval out;
    out.samples = trials;
    if (trials <= 0) return out;
    const double z = 1.959963984540054;  // 95%
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double rad =
        z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    out.fraction = p;
    out.lo = std::max(0.0, center - rad);
    out.hi = std::min(1.0, center + rad);
    return out;
}

SimStats simulate_queue(const SimConfig& config) {
    config.validate();
    const ProtocolParams& params = config.params;
    const int deadline = params.deadline;
    const double kappa = decode_threshold(params);
    const double ir_threshold = 1.0 + params.snr * kappa;
    const double bits_per_slot = config.arrival_bps * params.slot_seconds;
    const double n_bits = params.packet_bits;
    const long warmup = config.effective_warmup();
    const long total = warmup + config.measure_slots;
    const ExponentialFading fading(params.fading_power);
    Rng rng(config.seed);

    SimStats stats;
    stats.seed = config.seed;
    stats.measured_slots = config.measure_slots;
    stats.packet_bits = n_bits;
    stats.state_slots.assign(deadline, 0);
    stats.attempt_reached.assign(deadline, 0);
    stats.attempt_failed.assign(deadline, 0);
    if (config.record_queue_samples) stats.queue_packets.reserve(config.measure_slots);

    std::vector<long long> batch_state0(kPi0Batches, 0), batch_busy(kPi0Batches, 0);
    const long batch_len = std::max(1L, config.measure_slots / kPi0Batches);

    std::deque<std::int64_t> queue;  // arrival slot of each waiting packet
    bool serving = false;
    std::int64_t served_arrival = 0;
    int attempts = 0;
    double cc_sum = 0.0;
    double ir_prod = 1.0;
    double frac = 0.0;

    for (long t = 1; t <= total; ++t) {
        const bool measured = t > warmup;

        // service phase: promote at the slot boundary, then one attempt
        if (!serving && (config.saturated || !queue.empty())) {
            if (config.saturated) {
                served_arrival = t - 1;
                ++stats.admitted;
            } else {
                served_arrival = queue.front();
                queue.pop_front();
            }
            serving = true;
            attempts = 0;
            cc_sum = 0.0;
            ir_prod = 1.0;
        }

        if (serving) {
            ++attempts;
            const double z = fading.sample(rng.uniform01());
            bool success = false;
            switch (params.protocol) {
                case Protocol::T1:
                    success = z >= kappa;
                    break;
                case Protocol::CC:
                    cc_sum += z;
                    success = cc_sum >= kappa;
                    break;
                case Protocol::IR:
                    ir_prod *= 1.0 + params.snr * z;
                    success = ir_prod >= ir_threshold;
                    break;
            }
            const bool departs = success || attempts == deadline;
            const int state = departs ? 0 : attempts;

            if (measured) {
                ++stats.busy_slots;
                ++stats.state_slots[state];
                ++stats.attempt_reached[attempts - 1];
                if (!success) ++stats.attempt_failed[attempts - 1];
                const long idx =
                    std::min<long>((t - warmup - 1) / batch_len, kPi0Batches - 1);
                ++batch_busy[idx];
                if (state == 0) ++batch_state0[idx];
            }

            if (departs) {
                const bool was_lost = !success;
                if (was_lost)
                    ++stats.lost;
                else
                    ++stats.delivered;
                if (measured && !config.saturated) {
                    stats.delay_slots.push_back(
                        static_cast<std::uint32_t>(t - served_arrival));
                    stats.delay_lost.push_back(was_lost ? 1 : 0);
                    if (config.record_packets)
                        stats.packets.push_back({served_arrival, t, attempts, was_lost});
                }
                serving = false;
            }
        } else if (measured) {
            ++stats.idle_slots;
        }

        // arrival phase: whole packets join at the end of the slot in
        // which their final bit arrived; service starts next boundary
        if (!config.saturated && bits_per_slot > 0.0) {
            frac += bits_per_slot;
            while (frac >= n_bits) {
                frac -= n_bits;
                ++stats.admitted;
                queue.push_back(t);
            }
        }

        if (measured && config.record_queue_samples)
            stats.queue_packets.push_back(
                static_cast<std::uint32_t>(queue.size() + (serving ? 1 : 0)));
    }

    stats.in_system = static_cast<long long>(queue.size()) + (serving ? 1 : 0);
    stats.fractional_bits = frac;
    for (int b = 0; b < kPi0Batches; ++b)
        if (batch_busy[b] > 0)
            stats.pi0_batches.push_back(static_cast<double>(batch_state0[b]) /
                                        static_cast<double>(batch_busy[b]));
    return stats;
}

std::vector<SimStats> simulate_replications(const SimConfig& config) {
    config.validate();
    std::vector<std::future<SimStats>> futures;
    futures.reserve(config.replications);
    for (int r = 0; r < config.replications; ++r) {
        SimConfig rep = config;
        rep.replications = 1;
        rep.seed = split_seed(config.seed, r);
        futures.push_back(
            std::async(std::launch::async, [rep]() { return simulate_queue(rep); }));
    }
    std::vector<SimStats> out;
    out.reserve(config.replications);
    for (auto& f : futures) out.push_back(f.get());
    return out;
}

double SimStats::p_lost_hat() const {
    const long long served = delivered + lost;
    return served > 0 ? static_cast<double>(lost) / static_cast<double>(served) : 0.0;
}

double SimStats::p_lost_std_err() const {
    const long long served = delivered + lost;
    if (served <= 0) return 0.0;
    const double p = p_lost_hat();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(served));
}

void SimStats::pi0_hat(double& mean, double& std_err) const {
    if (busy_slots <= 0) {
        mean = 0.0;
        std_err = 0.0;
        return;
    }
    mean = static_cast<double>(state_slots[0]) / static_cast<double>(busy_slots);
    std_err = 0.0;
    const std::size_t b = pi0_batches.size();
    if (b >= 2) {
        double bm = 0.0;
        for (double v : pi0_batches) bm += v;
        bm /= static_cast<double>(b);
        double ss = 0.0;
        for (double v : pi0_batches) ss += (v - bm) * (v - bm);
        std_err = std::sqrt(ss / (static_cast<double>(b - 1) * static_cast<double>(b)));
    }
}

std::vector<double> SimStats::occupancy_hat() const {
    std::vector<double> out(state_slots.size(), 0.0);
    if (busy_slots > 0)
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = static_cast<double>(state_slots[i]) / static_cast<double>(busy_slots);
    return out;
}

WilsonInterval SimStats::delay_violation(double threshold_seconds, bool include_lost,
                                         double slot_seconds) const {
    long long over = 0, total = 0;
    for (std::size_t i = 0; i < delay_slots.size(); ++i) {
        if (!include_lost && delay_lost[i]) continue;
        ++total;
        if (static_cast<double>(delay_slots[i]) * slot_seconds > threshold_seconds)
            ++over;
    }
    if (total == 0)
        throw std::runtime_error("delay_violation: no delay samples recorded");
    return wilson_interval(over, total);
}

WilsonInterval SimStats::queue_violation(double threshold_bits) const {
    if (queue_packets.empty())
        throw std::runtime_error("queue_violation: no queue samples recorded");
    long long over = 0;
    for (std::uint32_t q : queue_packets)
        if (static_cast<double>(q) * packet_bits > threshold_bits) ++over;
    return wilson_interval(over, static_cast<long long>(queue_packets.size()));
}

double SimStats::queue_slope_bits_per_slot() const {
    const std::size_t k = queue_packets.size();
    if (k < 2)
        throw std::runtime_error("queue_slope: needs recorded queue samples");
    // least-squares slope with x = 0..k-1
    const double xm = (static_cast<double>(k) - 1.0) / 2.0;
    double ym = 0.0;
    for (std::uint32_t q : queue_packets) ym += q;
    ym /= static_cast<double>(k);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double dx = static_cast<double>(i) - xm;
        sxy += dx * (static_cast<double>(queue_packets[i]) - ym);
        sxx += dx * dx;
    }
    return packet_bits * sxy / sxx;
}

double SimStats::mean_delivered_delay_slots() const {
    double sum = 0.0;
    long long count = 0;
    for (std::size_t i = 0; i < delay_slots.size(); ++i) {
        if (delay_lost[i]) continue;
        sum += delay_slots[i];
        ++count;
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

EstimatedProbs estimate_transition_probs(const ProtocolParams& params,
                                         std::uint64_t seed, long long samples) {
    params.validate();
    if (samples < 1)
        throw std::invalid_argument("estimate_transition_probs: samples must be >= 1");
    const int deadline = params.deadline;
    const double kappa = decode_threshold(params);
    const double ir_threshold = 1.0 + params.snr * kappa;
    const ExponentialFading fading(params.fading_power);
    Rng rng(seed);

    std::vector<long long> reached(deadline, 0), failed(deadline, 0);
    for (long long s = 0; s < samples; ++s) {
        double cc_sum = 0.0;
        double ir_prod = 1.0;
        for (int m = 1; m <= deadline; ++m) {
            const double z = fading.sample(rng.uniform01());
            bool success = false;
            switch (params.protocol) {
                case Protocol::T1:
                    success = z >= kappa;
                    break;
                case Protocol::CC:
                    cc_sum += z;
                    success = cc_sum >= kappa;
                    break;
                case Protocol::IR:
                    ir_prod *= 1.0 + params.snr * z;
                    success = ir_prod >= ir_threshold;
                    break;
            }
            ++reached[m - 1];
            if (success) break;
            ++failed[m - 1];
        }
    }

    EstimatedProbs out;
    out.p_hat.resize(deadline);
    out.std_err.resize(deadline);
    out.reached = reached;
    for (int m = 0; m < deadline; ++m) {
        if (reached[m] > 0) {
            const double p =
                static_cast<double>(failed[m]) / static_cast<double>(reached[m]);
            out.p_hat[m] = p;
            out.std_err[m] = std::sqrt(p * (1.0 - p) / static_cast<double>(reached[m]));
        } else {
            out.p_hat[m] = 0.0;
            out.std_err[m] = 1.0;  // no information at this attempt
        }
    }
    return out;
}

void dump_packets_csv(const SimStats& stats, std::ostream& os) {
    os << "arrival_slot,departure_slot,attempts,lost_flag\n";
    for (const PacketRecord& r : stats.packets)
        os << r.arrival_slot << ',' << r.departure_slot << ',' << r.attempts << ','
           << (r.lost ? 1 : 0) << '\n';
}

}  // namespace harqperf::sim
