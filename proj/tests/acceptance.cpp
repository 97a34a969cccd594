// Acceptance suite: every release criterion as one pass/fail line, with
// the measured numbers and elapsed time. Exit code is the number of
// failed criteria. The byte-identical CSV checks drive the installed CLI
// binary (HARQPERF_CLI_PATH).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "effective_capacity.hpp"
#include "harq_model.hpp"
#include "netcalc_bounds.hpp"
#include "numerics.hpp"
#include "simulator.hpp"

using namespace harqperf;

namespace {

struct Criterion {
    bool pass = true;
    std::string detail;
    void fail(const std::string& why) {
        pass = false;
        if (!detail.empty()) detail += "; ";
        detail += why;
    }
    void note(const std::string& info) {
        if (!detail.empty()) detail += "; ";
        detail += info;
    }
};

std::string fmt(double v, const char* pattern = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, v);
    return buf;
}

ProtocolParams reference_params(double snr, double n, int deadline, Protocol proto) {
    ProtocolParams p;
    p.packet_bits = n;
    p.slot_seconds = 1e-4;
    p.bandwidth_hz = 1e6;
    p.deadline = deadline;
    p.snr = snr;
    p.fading_power = 1.0;
    p.protocol = proto;
    return p;
}

constexpr double kSnr0dB = 1.0;
constexpr double kSnr5dB = 3.16227766016838;
constexpr double kSnr10dB = 10.0;
constexpr Protocol kProtocols[] = {Protocol::T1, Protocol::CC, Protocol::IR};

// 1. polynomial-root route equals the spectral-radius route, 1000 random
//    configurations, |p0 e^{-n theta} y* - sp| <= 1e-9 sp, under 5 s.
Criterion criterion1() {
    Criterion c;
    std::mt19937_64 rng(20260808);
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_real_distribution<double> prob(0.01, 0.99);
    std::uniform_real_distribution<double> logtheta(std::log(1e-4), std::log(1.0));
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        ProtocolParams params = reference_params(kSnr0dB, 82.0, dim(rng), Protocol::T1);
        TransitionProbabilities probs;
        probs.p.resize(params.deadline);
        for (double& v : probs.p) v = prob(rng);
        const double theta = std::exp(logtheta(rng));

        const EffectiveCapacityResult r = effective_capacity(probs, params, theta);
        const double via_poly = probs.p[0] * std::exp(-params.packet_bits * theta) *
                                r.y_star;
        const double sp = num::spectral_radius(
            service_mgf_matrix(probs, params.packet_bits, theta));
        const double rel = std::abs(via_poly - sp) / sp;
        worst = std::max(worst, rel);
        if (rel > 1e-9) {
            c.fail("relative gap " + fmt(rel) + " at M=" +
                   std::to_string(params.deadline) + " theta=" + fmt(theta));
            break;
        }
    }
    c.note("worst relative gap " + fmt(worst));
    return c;
}

// 2. effective-capacity limits: rho_S(1e-6*T/n) within 0.5% of the mean
//    service rate and rho_S(50/n) within 0.5% of n/(MT), all protocols,
//    0 dB, M = 4.
Criterion criterion2() {
    Criterion c;
    for (Protocol proto : kProtocols) {
        ProtocolParams params = reference_params(kSnr0dB, 82.0, 4, proto);
        const TransitionProbabilities probs = transition_probs(params);
        const ServiceRateLimits lim = capacity_limits(probs, params);

        const double theta_low = 1e-6 * params.slot_seconds / params.packet_bits;
        const double rho_low = effective_capacity(probs, params, theta_low).rho_s_bps;
        const double dev_low = std::abs(rho_low - lim.mean_bps) / lim.mean_bps;
        if (dev_low > 0.005)
            c.fail(std::string(protocol_name(proto)) + ": theta->0 deviation " +
                   fmt(dev_low * 100.0) + "% > 0.5%");

        const double theta_high = 50.0 / params.packet_bits;
        const double rho_high = effective_capacity(probs, params, theta_high).rho_s_bps;
        const double dev_high = std::abs(rho_high - lim.min_bps) / lim.min_bps;
        if (dev_high > 0.005)
            c.fail(std::string(protocol_name(proto)) + ": theta=50/n deviation " +
                   fmt(dev_high * 100.0) + "% > 0.5%");
    }
    return c;
}

// 3. protocol dominance for M in [1,10], gamma in {0,5,10} dB: packet
//    loss, throughput and effective capacity ordered IR >= CC >= T1
//    (loss reversed), with 1e-12 slack for the M = 1 ties.
Criterion criterion3() {
    Criterion c;
    for (double snr : {kSnr0dB, kSnr5dB, kSnr10dB}) {
        const int n = default_packet_bits(snr, 1e-4, 1e6, 1.0);
        for (int deadline = 1; deadline <= 10 && c.pass; ++deadline) {
            SteadyState ss[3];
            TransitionProbabilities probs[3];
            ProtocolParams params[3];
            for (int i = 0; i < 3; ++i) {
                params[i] = reference_params(snr, n, deadline, kProtocols[i]);
                probs[i] = transition_probs(params[i]);
                ss[i] = steady_state(probs[i], params[i]);
            }
            const auto where = [&](const char* what) {
                return std::string(what) + " at snr=" + fmt(snr) +
                       " M=" + std::to_string(deadline);
            };
            if (ss[2].p_lost > ss[1].p_lost + 1e-12 ||
                ss[1].p_lost > ss[0].p_lost + 1e-12)
                c.fail(where("p_lost ordering"));
            if (ss[2].throughput_bps < ss[1].throughput_bps - 1e-12 ||
                ss[1].throughput_bps < ss[0].throughput_bps - 1e-12)
                c.fail(where("throughput ordering"));
            for (double ntheta : {0.01, 0.1, 1.0}) {
                double rho[3];
                for (int i = 0; i < 3; ++i)
                    rho[i] = effective_capacity(probs[i], params[i],
                                                ntheta / params[i].packet_bits)
                                 .rho_s_bps;
                if (rho[2] < rho[1] - 1e-12 * rho[1] ||
                    rho[1] < rho[0] - 1e-12 * rho[0])
                    c.fail(where(("rho_S ordering (n*theta=" + fmt(ntheta) + ")")
                                     .c_str()));
            }
        }
    }
    return c;
}

// 4. figure-anchored delay bounds (+-20%, M = 4): 0 dB, a = 0.41 Mb/s,
//    n = 82, eps' = 1e-9 -> T1 ~ 78 ms, CC/IR ~ 5 ms; 5 dB, a = 0.81
//    Mb/s, n = 155 -> T1 ~ 11 ms, CC/IR ~ 4 ms.
Criterion criterion4() {
    Criterion c;
    struct Anchor {
        double snr, n, a_bps, expect_ms;
        Protocol proto;
        const char* label;
    };
    const Anchor anchors[] = {
        {kSnr0dB, 82.0, 0.41e6, 78.0, Protocol::T1, "0dB t1"},
        {kSnr0dB, 82.0, 0.41e6, 5.0, Protocol::CC, "0dB cc"},
        {kSnr0dB, 82.0, 0.41e6, 5.0, Protocol::IR, "0dB ir"},
        {kSnr5dB, 155.0, 0.81e6, 11.0, Protocol::T1, "5dB t1"},
        {kSnr5dB, 155.0, 0.81e6, 4.0, Protocol::CC, "5dB cc"},
        {kSnr5dB, 155.0, 0.81e6, 4.0, Protocol::IR, "5dB ir"},
    };
    for (const Anchor& a : anchors) {
        const ProtocolParams params = reference_params(a.snr, a.n, 4, a.proto);
        const TransitionProbabilities probs = transition_probs(params);
        const DelayOptimum opt = optimize_delay_bound(probs, params, a.a_bps, 1e-9);
        const double ms = opt.delay_seconds * 1e3;
        const double rel = std::abs(ms - a.expect_ms) / a.expect_ms;
        c.note(std::string(a.label) + " " + fmt(ms, "%.3f") + "ms");
        if (rel > 0.20)
            c.fail(std::string(a.label) + ": " + fmt(ms, "%.3f") + " ms vs " +
                   fmt(a.expect_ms, "%.0f") + " ms (" + fmt(rel * 100.0, "%.1f") +
                   "% off)");
    }
    return c;
}

// 5. Monte Carlo agreement at 0 dB, n = 82, M = 4: saturated occupancy
//    and loss over 1e7 slots vs the closed forms, CC's closed-form p_1
//    and the IR convolution vs their 1e7-sample oracles, all within
//    3 sigma.
Criterion criterion5() {
    Criterion c;
    const ProtocolParams t1 = reference_params(kSnr0dB, 82.0, 4, Protocol::T1);
    const SteadyState ss = steady_state(transition_probs(t1), t1);

    // frozen closed-form anchors for this configuration
    if (std::abs(ss.p_lost - 0.0818359422233161) > 1e-9)
        c.fail("analytic p_lost drifted from 0.0818359422233161");
    if (std::abs(ss.pi[0] - 0.506603414995515) > 1e-9)
        c.fail("analytic pi_0 drifted from 0.506603414995515");

    sim::SimConfig cfg;
    cfg.params = t1;
    cfg.seed = 808;
    cfg.measure_slots = 10000000;
    cfg.saturated = true;
    const sim::SimStats stats = sim::simulate_queue(cfg);
    const double se_lost = std::max(stats.p_lost_std_err(), 1e-9);
    if (std::abs(stats.p_lost_hat() - ss.p_lost) > 3.0 * se_lost)
        c.fail("p_lost_hat " + fmt(stats.p_lost_hat()) + " vs " + fmt(ss.p_lost) +
               " (3se=" + fmt(3.0 * se_lost) + ")");
    double pi0 = 0.0, se_pi0 = 0.0;
    stats.pi0_hat(pi0, se_pi0);
    if (std::abs(pi0 - ss.pi[0]) > 3.0 * std::max(se_pi0, 1e-9))
        c.fail("pi0_hat " + fmt(pi0) + " vs " + fmt(ss.pi[0]) +
               " (3se=" + fmt(3.0 * std::max(se_pi0, 1e-9)) + ")");
    c.note("p_lost_hat " + fmt(stats.p_lost_hat()) + " vs " + fmt(ss.p_lost));
    c.note("pi0_hat " + fmt(pi0) + " vs " + fmt(ss.pi[0]));

    // CC closed form
    ProtocolParams cc = t1;
    cc.protocol = Protocol::CC;
    const TransitionProbabilities cc_probs = transition_probs(cc);
    if (std::abs(cc_probs.p[1] - 0.334352604053523) > 1e-9)
        c.fail("analytic CC p_1 drifted from 0.334352604053523");
    const sim::EstimatedProbs cc_est = sim::estimate_transition_probs(cc, 809, 10000000);
    for (int m = 0; m < 4; ++m)
        if (std::abs(cc_est.p_hat[m] - cc_probs.p[m]) >
            3.0 * std::max(cc_est.std_err[m], 1e-9))
            c.fail("CC attempt " + std::to_string(m + 1) + ": " + fmt(cc_est.p_hat[m]) +
                   " vs " + fmt(cc_probs.p[m]));
    c.note("CC p1_hat " + fmt(cc_est.p_hat[1]) + " vs " + fmt(cc_probs.p[1]));

    // IR convolution vs its Monte Carlo oracle
    ProtocolParams ir = t1;
    ir.protocol = Protocol::IR;
    const TransitionProbabilities ir_probs = transition_probs(ir);
    const sim::EstimatedProbs ir_est = sim::estimate_transition_probs(ir, 810, 10000000);
    for (int m = 0; m < 4; ++m)
        if (std::abs(ir_est.p_hat[m] - ir_probs.p[m]) >
            3.0 * std::max(ir_est.std_err[m], 1e-9))
            c.fail("IR attempt " + std::to_string(m + 1) + ": oracle " +
                   fmt(ir_est.p_hat[m]) + " vs convolution " + fmt(ir_probs.p[m]));
    c.note("IR p1_hat " + fmt(ir_est.p_hat[1]) + " vs " + fmt(ir_probs.p[1]));
    return c;
}

// 6. bound soundness: 0 dB, a = 0.8 * mean rate, each protocol; the
//    empirical delay-violation frequency at d(eps') stays at or below
//    eps' for eps' in {1e-2, 1e-3}, over >= 1e7 departures.
Criterion criterion6() {
    Criterion c;
    for (Protocol proto : kProtocols) {
        const ProtocolParams params = reference_params(kSnr0dB, 82.0, 4, proto);
        const TransitionProbabilities probs = transition_probs(params);
        const ServiceRateLimits lim = capacity_limits(probs, params);
        const double a = 0.8 * lim.mean_bps;

        sim::SimConfig cfg;
        cfg.params = params;
        cfg.arrival_bps = a;
        cfg.seed = 61000 + static_cast<int>(proto);
        const double packets_per_slot = a * params.slot_seconds / params.packet_bits;
        cfg.measure_slots = static_cast<long>(1.02e7 / packets_per_slot) + 1;
        const sim::SimStats stats = sim::simulate_queue(cfg);
        const long long departures = static_cast<long long>(stats.delay_slots.size());
        if (departures < 10000000) {
            c.fail(std::string(protocol_name(proto)) + ": only " +
                   std::to_string(departures) + " departures");
            continue;
        }
        for (double eps : {1e-2, 1e-3}) {
            const DelayOptimum opt = optimize_delay_bound(probs, params, a, eps);
            const sim::WilsonInterval w =
                stats.delay_violation(opt.delay_seconds, true, params.slot_seconds);
            c.note(std::string(protocol_name(proto)) + " eps=" + fmt(eps) +
                   ": violation " + fmt(w.fraction));
            if (w.fraction > eps)
                c.fail(std::string(protocol_name(proto)) + ": violation " +
                       fmt(w.fraction) + " above eps " + fmt(eps));
        }
    }
    return c;
}

// 7. round-trip inversion to 1e-12, exact simulator conservation, and
//    byte-identical CLI CSV output for identical configurations and seeds.
Criterion criterion7() {
    Criterion c;

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        ServiceEnvelope env;
        env.theta = std::exp(std::lerp(std::log(1e-6), std::log(1.0), uni(rng)));
        env.rate_bps = 1e6;
        env.slack_bits = 300.0 * uni(rng);
        env.slot_seconds = 1e-4;
        env.horizon_slots = 1;
        const double delta = 1e6 * (0.01 + 0.98 * uni(rng));
        const double eps = std::exp(std::lerp(std::log(1e-12), std::log(0.9), uni(rng)));
        const double b = deficit_bits(env, delta, eps);
        const double eps_back = violation_prob(env, delta, b);
        if (std::abs(eps_back - eps) > 1e-12 * eps) {
            c.fail("round trip drift " + fmt(std::abs(eps_back - eps) / eps));
            break;
        }
    }

    for (Protocol proto : kProtocols) {
        sim::SimConfig cfg;
        cfg.params = reference_params(kSnr0dB, 82.0, 4, proto);
        cfg.arrival_bps = 0.38e6;
        cfg.seed = 70 + static_cast<int>(proto);
        cfg.measure_slots = 400000;
        const sim::SimStats stats = sim::simulate_queue(cfg);
        if (stats.admitted != stats.delivered + stats.lost + stats.in_system)
            c.fail(std::string(protocol_name(proto)) + ": packet ledger off");
        if (!(stats.fractional_bits >= 0.0 &&
              stats.fractional_bits < cfg.params.packet_bits))
            c.fail(std::string(protocol_name(proto)) + ": fractional bits out of range");
    }

    // identical CLI invocations give identical bytes
    const std::string cli = HARQPERF_CLI_PATH;
    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    if (run("reproduce ec-vs-theta --threads 2 --out acc_csv_a.csv") != 0 ||
        run("reproduce ec-vs-theta --threads 1 --out acc_csv_b.csv") != 0) {
        c.fail("CLI reproduce failed");
    } else {
        const std::string a = slurp("acc_csv_a.csv"), b = slurp("acc_csv_b.csv");
        if (a.empty() || a != b) c.fail("reproduce CSVs differ between runs");
    }
    if (run("simulate --protocol cc --a-Mbps 0.4 --slots 50000 --seed 99 "
            "--dump acc_dump_a.csv --out acc_sum_a.csv") != 0 ||
        run("simulate --protocol cc --a-Mbps 0.4 --slots 50000 --seed 99 "
            "--dump acc_dump_b.csv --out acc_sum_b.csv") != 0) {
        c.fail("CLI simulate failed");
    } else {
        if (slurp("acc_dump_a.csv") != slurp("acc_dump_b.csv") ||
            slurp("acc_sum_a.csv") != slurp("acc_sum_b.csv"))
            c.fail("simulate CSVs differ between identical seeds");
        if (slurp("acc_dump_a.csv").empty()) c.fail("simulate dump empty");
    }
    for (const char* f : {"acc_csv_a.csv", "acc_csv_b.csv", "acc_dump_a.csv",
                          "acc_dump_b.csv", "acc_sum_a.csv", "acc_sum_b.csv"})
        std::remove(f);
    return c;
}

// 8. stability dichotomy at a = 1.05 * mean rate: measured queue growth
//    within 5% of a - mean over 1e6 slots, and the bound reports
//    infeasibility.
Criterion criterion8() {
    Criterion c;
    const ProtocolParams params = reference_params(kSnr0dB, 82.0, 4, Protocol::T1);
    const TransitionProbabilities probs = transition_probs(params);
    const ServiceRateLimits lim = capacity_limits(probs, params);
    const double a = 1.05 * lim.mean_bps;

    sim::SimConfig cfg;
    cfg.params = params;
    cfg.arrival_bps = a;
    cfg.seed = 88;
    cfg.warmup_slots = 0;
    cfg.measure_slots = 1000000;
    cfg.record_queue_samples = true;
    const sim::SimStats stats = sim::simulate_queue(cfg);
    const double slope = stats.queue_slope_bits_per_slot();
    const double expect = (a - lim.mean_bps) * params.slot_seconds;
    c.note("growth " + fmt(slope) + " bits/slot vs expected " + fmt(expect));
    if (std::abs(slope - expect) > 0.05 * expect)
        c.fail("growth off by " + fmt(std::abs(slope - expect) / expect * 100.0) + "%");

    bool infeasible = false;
    try {
        optimize_delay_bound(probs, params, a, 1e-6);
    } catch (const InfeasibleError&) {
        infeasible = true;
    }
    if (!infeasible) c.fail("overloaded bound did not report infeasibility");
    return c;
}

struct Entry {
    const char* label;
    double budget_seconds;
    Criterion (*fn)();
};

}  // namespace

int main() {
    const Entry entries[] = {
        {"criterion 1: polynomial root matches spectral radius (1000 random)", 5.0,
         criterion1},
        {"criterion 2: effective-capacity limits at theta=1e-6*T/n and 50/n", 60.0,
         criterion2},
        {"criterion 3: protocol dominance for M in [1,10], gamma in {0,5,10} dB",
         60.0, criterion3},
        {"criterion 4: figure-anchored delay bounds (+-20%)", 60.0, criterion4},
        {"criterion 5: Monte Carlo agreement at 1e7 samples", 300.0, criterion5},
        {"criterion 6: delay-bound soundness over 1e7 departures", 600.0, criterion6},
        {"criterion 7: inversion round trip, conservation, byte-identical CSV", 60.0,
         criterion7},
        {"criterion 8: stability dichotomy at 1.05x mean rate", 120.0, criterion8},
    };

    int failures = 0;
    for (const Entry& e : entries) {
        const auto start = std::chrono::steady_clock::now();
        Criterion c = e.fn();
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        if (elapsed > e.budget_seconds)
            c.fail("runtime " + fmt(elapsed, "%.1f") + "s over budget " +
                   fmt(e.budget_seconds, "%.0f") + "s");
        std::printf("[%s] %s (%.1fs)%s%s\n", c.pass ? "PASS" : "FAIL", e.label,
                    elapsed, c.detail.empty() ? "" : " -- ", c.detail.c_str());
        if (!c.pass) ++failures;
    }
    std::printf("%d/8 criteria passed\n", 8 - failures);
    return failures;
}
