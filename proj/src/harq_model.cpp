#include "harq_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace harqperf {

const char* protocol_name(Protocol p) {
    switch (p) {
        case Protocol::T1: return "t1";
        case Protocol::CC: return "cc";
        case Protocol::IR: return "ir";
    }
    return "?";
}

ExponentialFading::ExponentialFading(double mean_power) : mean_power_(mean_power) {
    if (!(mean_power > 0.0) || !std::isfinite(mean_power))
        throw std::invalid_argument("ExponentialFading: mean power must be > 0");
}

double ExponentialFading::density(double z) const {
    if (z < 0.0) return 0.0;
    return std::exp(-z / mean_power_) / mean_power_;
}

double ExponentialFading::cdf(double z) const {
    if (z <= 0.0) return 0.0;
    return -std::expm1(-z / mean_power_);
}

double ExponentialFading::sample(double u01) const {
    return -mean_power_ * std::log1p(-u01);
}

void ProtocolParams::validate() const {
    if (!(packet_bits >= 0.0) || !std::isfinite(packet_bits))
        throw std::invalid_argument("params: packet_bits must be >= 0");
    if (!(slot_seconds > 0.0) || !std::isfinite(slot_seconds))
        throw std::invalid_argument("params: slot_seconds must be > 0");
    if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz))
        throw std::invalid_argument("params: bandwidth_hz must be > 0");
    if (deadline < 1)
        throw std::invalid_argument("params: deadline must be >= 1");
    if (!(snr > 0.0) || !std::isfinite(snr))
        throw std::invalid_argument("params: snr must be > 0");
    if (!(fading_power > 0.0) || !std::isfinite(fading_power))
        throw std::invalid_argument("params: fading_power must be > 0");
}

double decode_threshold(const ProtocolParams& params) {
    params.validate();
    const double rate = params.packet_bits / params.symbols_per_slot();  // bits/symbol
    return std::expm1(rate * M_LN2) / params.snr;  // (2^rate - 1)/snr
}

void TransitionProbabilities::validate() const {
    if (p.empty())
        throw std::invalid_argument("transition probabilities: empty");
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("transition probabilities: entries must be in [0,1]");
}

TransitionProbabilities transition_probs_t1(const ProtocolParams& params) {
    const double x = decode_threshold(params) / params.fading_power;
    TransitionProbabilities out;
    out.p.assign(params.deadline, -std::expm1(-x));
    return out;
}

TransitionProbabilities transition_probs_cc(const ProtocolParams& params) {
    const double x = decode_threshold(params) / params.fading_power;
    const int deadline = params.deadline;
    TransitionProbabilities out;
    out.p.resize(deadline);
    out.p[0] = -std::expm1(-x);

    // p_{m-1} = Pr{sum of m fading powers < kappa}/Pr{sum of m-1 < kappa}
    //         = gamma(m,x) / ((m-1) gamma(m-1,x)) for the exponential channel.
    double prev = num::lower_incomplete_gamma(1, x);
    for (int m = 2; m <= deadline; ++m) {
        const double cur = num::lower_incomplete_gamma(m, x);
        if (prev <= 0.0) {
            out.p[m - 1] = 0.0;
            out.degenerate_ratio = true;
        } else {
            out.p[m - 1] = std::clamp(cur / ((m - 1) * prev), 0.0, 1.0);
        }
        prev = cur;
    }
    return out;
}

TransitionProbabilities transition_probs_ir(const ProtocolParams& params, int resolution) {
    if (resolution < kIrMinResolution)
        throw std::invalid_argument("transition_probs_ir: resolution must be >= 64");
    const double kappa = decode_threshold(params);
    const int deadline = params.deadline;
    const ExponentialFading fading(params.fading_power);

    TransitionProbabilities out;
    out.p.assign(deadline, 0.0);
    out.p[0] = fading.cdf(kappa);

    // Accumulated mutual information after m attempts is
    // sum_{i<m} log(1+snr*z_i); failure means staying below
    // c = log(1+snr*kappa). Only the mass below c matters, so the
    // convolutions can be truncated to [0,c] exactly.
    const double c = std::log1p(params.snr * kappa);
    if (c <= 0.0) {
        // zero-rate packet: never fails beyond the (zero) first attempt
        out.degenerate_ratio = deadline > 1;
        return out;
    }
    if (deadline == 1) return out;

    const int n = resolution;
    const double h = c / (n - 1);
    std::vector<double> base(n);  // density of log(1+snr*z) on the grid
    for (int j = 0; j < n; ++j) {
        const double u = j * h;
        const double eu = std::exp(u);
        base[j] = fading.density((eu - 1.0) / params.snr) * eu / params.snr;
    }
    auto trapezoid = [&](const std::vector<double>& f) {
        double s = 0.5 * (f.front() + f.back());
        for (int j = 1; j + 1 < n; ++j) s += f[j];
        return s * h;
    };

    std::vector<double> density = base, next(n);
    double cdf_prev = trapezoid(density);  // F_1(c); quadrature-consistent with the ratios below
    for (int m = 2; m <= deadline; ++m) {
        next[0] = 0.0;
        for (int j = 1; j < n; ++j) {
            double s = 0.5 * (density[0] * base[j] + density[j] * base[0]);
            for (int k = 1; k < j; ++k) s += density[k] * base[j - k];
            next[j] = s * h;
        }
        const double cdf_cur = trapezoid(next);
        if (cdf_prev <= 1e-300) {
            out.p[m - 1] = 0.0;
            out.degenerate_ratio = true;
        } else {
            out.p[m - 1] = std::clamp(cdf_cur / cdf_prev, 0.0, 1.0);
        }
        density.swap(next);
        cdf_prev = cdf_cur;
    }
    return out;
}

TransitionProbabilities transition_probs(const ProtocolParams& params, int ir_resolution) {
    switch (params.protocol) {
        case Protocol::T1: return transition_probs_t1(params);
        case Protocol::CC: return transition_probs_cc(params);
        case Protocol::IR: return transition_probs_ir(params, ir_resolution);
    }
    throw std::invalid_argument("transition_probs: unknown protocol");
}

num::SquareMatrix transition_matrix(const TransitionProbabilities& probs) {
    probs.validate();
    const std::size_t m = probs.p.size();
    num::SquareMatrix mat(m);
    for (std::size_t j = 0; j + 1 < m; ++j) {
        mat.at(0, j) = 1.0 - probs.p[j];
        mat.at(j + 1, j) = probs.p[j];
    }
    mat.at(0, m - 1) = 1.0;
    return mat;
}

SteadyState steady_state(const TransitionProbabilities& probs, const ProtocolParams& params) {
    probs.validate();
    params.validate();
    const int m = probs.deadline();

    // pi_i = pi_0 prod_{j<i} p_j; normalization gives pi_0 in closed form.
    std::vector<double> cumulative(m, 1.0);
    double norm = 1.0;
    double running = 1.0;
    for (int i = 1; i < m; ++i) {
        running *= probs.p[i - 1];
        cumulative[i] = running;
        norm += running;
    }

    SteadyState out;
    out.pi.resize(m);
    const double pi0 = 1.0 / norm;
    for (int i = 0; i < m; ++i) out.pi[i] = pi0 * cumulative[i];
    out.p_lost = running * probs.p[m - 1];
    out.throughput_bps = pi0 * (1.0 - out.p_lost) * params.packet_bits / params.slot_seconds;
    return out;
}

int default_packet_bits(double snr, double slot_seconds, double bandwidth_hz,
                        double fading_power) {
    ProtocolParams probe;
    probe.slot_seconds = slot_seconds;
    probe.bandwidth_hz = bandwidth_hz;
    probe.snr = snr;
    probe.fading_power = fading_power;
    probe.packet_bits = 1.0;
    probe.validate();

    // T1 reliable throughput is (1-p(n)) n / T for every deadline (the
    // geometric pi_0 cancels the 1 - p^M factor), so the scan needs no M.
    const int n_max = static_cast<int>(
        std::ceil(probe.symbols_per_slot() * std::log2(1.0 + 20.0 * snr)));
    int best_n = 1;
    double best = -1.0;
    for (int n = 1; n <= n_max; ++n) {
        probe.packet_bits = n;
        const double throughput =
            std::exp(-decode_threshold(probe) / fading_power) * n / slot_seconds;
        if (throughput > best) {
            best = throughput;
            best_n = n;
        }
    }
    return best_n;
}

}  // namespace harqperf
