#pragma once

#include <memory>
#include <vector>

#include "numerics.hpp"

namespace harqperf {

enum class Protocol { T1, CC, IR };

const char* protocol_name(Protocol p);

/// Fading-power distribution (z = |h|^2). Only the exponential model
/// (Rayleigh-distributed h) ships, but the simulator and the IR
/// convolution only touch this interface, so other channels can be
/// dropped in.
class FadingModel {
public:
    virtual ~FadingModel() = default;
    virtual double density(double z) const = 0;
    virtual double cdf(double z) const = 0;
    virtual double mean() const = 0;
    /// Inverse-CDF sample from u uniform in [0,1); keeps simulation
    /// output identical across platforms.
    virtual double sample(double u01) const = 0;
};

class ExponentialFading final : public FadingModel {
public:
    explicit ExponentialFading(double mean_power);
    double density(double z) const override;
    double cdf(double z) const override;
    double mean() const override { return mean_power_; }
    double sample(double u01) const override;

private:
    double mean_power_;
};

/// Physical and link-layer parameters of one HARQ configuration.
struct ProtocolParams {
    double packet_bits = 82.0;    // n
    double slot_seconds = 1e-4;   // T
    double bandwidth_hz = 1e6;    // B
    int deadline = 4;             // M, max transmission attempts per packet
    double snr = 1.0;             // average transmit SNR, linear
    double fading_power = 1.0;    // mean fading power sigma_h^2
    Protocol protocol = Protocol::T1;

    void validate() const;  // throws std::invalid_argument
    double symbols_per_slot() const { return slot_seconds * bandwidth_hz; }
};

/// kappa = (2^{n/(TB)} - 1) / snr: a packet decodes in one slot exactly
/// when the fading power reaches this threshold.
double decode_threshold(const ProtocolParams& params);

/// Conditional decoding-failure probabilities: p[m-1] is the failure
/// probability at attempt m given failures at attempts 1..m-1.
struct TransitionProbabilities {
    std::vector<double> p;
    /// Set when a 0/0 failure ratio was resolved to 0 (e.g. kappa = 0,
    /// or the conditioning probability underflowed).
    bool degenerate_ratio = false;

    int deadline() const { return static_cast<int>(p.size()); }
    void validate() const;
};

inline constexpr int kIrDefaultResolution = 4096;
inline constexpr int kIrMinResolution = 64;

TransitionProbabilities transition_probs_t1(const ProtocolParams& params);
TransitionProbabilities transition_probs_cc(const ProtocolParams& params);
/// HARQ-IR failure ratios from the CDF of sum_i log(1+snr*z_i),
/// computed by iterated trapezoid convolution on a uniform grid of
/// `resolution` points over [0, log(1+snr*kappa)]. Deterministic for a
/// fixed resolution.
TransitionProbabilities transition_probs_ir(const ProtocolParams& params,
                                            int resolution = kIrDefaultResolution);
/// Dispatch on params.protocol.
TransitionProbabilities transition_probs(const ProtocolParams& params,
                                         int ir_resolution = kIrDefaultResolution);

/// Column-stochastic transition matrix P of the M-state service chain:
/// P(0,j) = 1-p_j for j <= M-2, P(0,M-1) = 1, P(m,m-1) = p_{m-1}.
num::SquareMatrix transition_matrix(const TransitionProbabilities& probs);

struct SteadyState {
    std::vector<double> pi;        // stationary distribution of the chain
    double p_lost = 0.0;           // prod_j p_j, packet lost at the deadline
    double throughput_bps = 0.0;   // pi_0 (1 - p_lost) n / T
};

SteadyState steady_state(const TransitionProbabilities& probs, const ProtocolParams& params);

/// Packet size maximizing the HARQ-T1 reliable throughput
/// (1 - p(n)) n / T, scanned over integer n in [1, ceil(TB log2(1 + 20 snr))].
int default_packet_bits(double snr, double slot_seconds, double bandwidth_hz,
                        double fading_power);

}  // namespace harqperf
