#include "self_check.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "harqperf.h"

namespace cli {

namespace {

constexpr double kSlot = 1e-4;
constexpr double kBandwidth = 1e6;
constexpr double kFading = 1.0;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

struct ModelDeleter {
    void operator()(hpf_model* m) const { hpf_model_destroy(m); }
};
using ModelPtr = std::unique_ptr<hpf_model, ModelDeleter>;

struct StatsDeleter {
    void operator()(hpf_sim_stats* s) const { hpf_sim_stats_destroy(s); }
};
using StatsPtr = std::unique_ptr<hpf_sim_stats, StatsDeleter>;

hpf_params make_params(double gamma_db, hpf_protocol proto, int deadline, double n) {
    hpf_params p{};
    p.packet_bits = n;
    p.slot_seconds = kSlot;
    p.bandwidth_hz = kBandwidth;
    p.deadline_slots = deadline;
    p.snr_linear = db_to_linear(gamma_db);
    p.fading_power = kFading;
    p.protocol = proto;
    return p;
}

ModelPtr make_model(const hpf_params& p, std::string& err) {
    hpf_model* raw = nullptr;
    if (hpf_model_create(&p, &raw) != HPF_OK) {
        err = hpf_last_error_message();
        return nullptr;
    }
    return ModelPtr(raw);
}

int auto_n(double gamma_db) {
    int n = 0;
    hpf_default_packet_bits(db_to_linear(gamma_db), kSlot, kBandwidth, kFading, &n);
    return n;
}

constexpr hpf_protocol kAll[] = {HPF_PROTOCOL_T1, HPF_PROTOCOL_CC, HPF_PROTOCOL_IR};

struct Context {
    bool fault = false;  // corrupt p_1 in local copies before rechecking
};

bool fetch_probs(const hpf_params& p, std::vector<double>& out, std::string& err) {
    ModelPtr m = make_model(p, err);
    if (!m) return false;
    out.resize(p.deadline_slots);
    if (hpf_model_transition_probs(m.get(), out.data(), out.size()) != HPF_OK) {
        err = hpf_last_error_message();
        return false;
    }
    return true;
}

void maybe_corrupt(const Context& ctx, std::vector<double>& p) {
    if (ctx.fault && p.size() > 1) p[1] = std::min(1.0, p[1] + 0.05);
}

// ---- quick checks ---------------------------------------------------

bool check_probability_ranges(const Context&, std::string& detail) {
    for (double gamma : {0.0, 5.0, 10.0}) {
        const int n = auto_n(gamma);
        for (hpf_protocol proto : kAll) {
            std::vector<double> p;
            if (!fetch_probs(make_params(gamma, proto, 6, n), p, detail)) return false;
            for (double v : p)
                if (!(v >= 0.0 && v <= 1.0)) {
                    detail = "probability out of [0,1]";
                    return false;
                }
            if (proto == HPF_PROTOCOL_T1)
                for (double v : p)
                    if (std::abs(v - p[0]) > 1e-15) {
                        detail = "T1 probabilities not flat";
                        return false;
                    }
        }
    }
    return true;
}

bool check_shared_first_attempt(const Context&, std::string& detail) {
    for (double gamma : {0.0, 5.0, 10.0}) {
        const int n = auto_n(gamma);
        double first[3];
        for (int i = 0; i < 3; ++i) {
            std::vector<double> p;
            if (!fetch_probs(make_params(gamma, kAll[i], 4, n), p, detail)) return false;
            first[i] = p[0];
        }
        if (std::abs(first[0] - first[1]) > 1e-14 ||
            std::abs(first[0] - first[2]) > 1e-14) {
            detail = "p_0 differs across protocols";
            return false;
        }
    }
    return true;
}

bool check_cumulative_dominance(const Context& ctx, std::string& detail) {
    for (double gamma : {0.0, 5.0, 10.0}) {
        const int n = auto_n(gamma);
        std::vector<double> t1, cc, ir;
        if (!fetch_probs(make_params(gamma, HPF_PROTOCOL_T1, 8, n), t1, detail) ||
            !fetch_probs(make_params(gamma, HPF_PROTOCOL_CC, 8, n), cc, detail) ||
            !fetch_probs(make_params(gamma, HPF_PROTOCOL_IR, 8, n), ir, detail))
            return false;
        maybe_corrupt(ctx, ir);
        double cum_t1 = 1.0, cum_cc = 1.0, cum_ir = 1.0;
        for (int i = 0; i < 8; ++i) {
            cum_t1 *= t1[i];
            cum_cc *= cc[i];
            cum_ir *= ir[i];
            if (cum_ir > cum_cc + 1e-12 || cum_cc > cum_t1 + 1e-12) {
                char buf[128];
                std::snprintf(buf, sizeof(buf),
                              "ordering violated at gamma=%g dB attempt %d", gamma,
                              i + 1);
                detail = buf;
                return false;
            }
        }
    }
    return true;
}

bool check_stationary_vector(const Context& ctx, std::string& detail) {
    for (hpf_protocol proto : kAll) {
        const hpf_params params = make_params(0.0, proto, 5, auto_n(0.0));
        ModelPtr m = make_model(params, detail);
        if (!m) return false;
        std::vector<double> pi(5), p(5);
        if (hpf_model_steady_state(m.get(), pi.data(), 5, nullptr, nullptr) != HPF_OK ||
            hpf_model_transition_probs(m.get(), p.data(), 5) != HPF_OK) {
            detail = hpf_last_error_message();
            return false;
        }
        maybe_corrupt(ctx, p);
        double sum = 0.0;
        for (double v : pi) sum += v;
        if (std::abs(sum - 1.0) > 1e-12) {
            detail = "pi does not sum to 1";
            return false;
        }
        // P assembled from p: first row 1-p_j with last column 1, subdiagonal p_j
        for (int r = 0; r < 5; ++r) {
            double want = 0.0;
            for (int c = 0; c < 5; ++c) {
                double entry = 0.0;
                if (r == 0) entry = (c == 4) ? 1.0 : 1.0 - p[c];
                else if (r == c + 1) entry = p[c];
                want += entry * pi[c];
            }
            if (std::abs(want - pi[r]) > 1e-12) {
                detail = "pi is not stationary for P(p)";
                return false;
            }
        }
    }
    return true;
}

bool check_loss_vs_deadline(const Context&, std::string& detail) {
    for (hpf_protocol proto : kAll) {
        double prev = 1.0;
        for (int m = 1; m <= 8; ++m) {
            ModelPtr model = make_model(make_params(0.0, proto, m, auto_n(0.0)), detail);
            if (!model) return false;
            double p_lost = 0.0;
            hpf_model_steady_state(model.get(), nullptr, 0, &p_lost, nullptr);
            if (p_lost > prev + 1e-15) {
                detail = "p_lost increased with M";
                return false;
            }
            prev = p_lost;
        }
    }
    return true;
}

bool check_throughput_ordering(const Context&, std::string& detail) {
    for (double gamma : {0.0, 5.0, 10.0}) {
        const int n = auto_n(gamma);
        double tput[3];
        for (int i = 0; i < 3; ++i) {
            ModelPtr m = make_model(make_params(gamma, kAll[i], 4, n), detail);
            if (!m) return false;
            hpf_model_steady_state(m.get(), nullptr, 0, nullptr, &tput[i]);
        }
        if (tput[2] < tput[1] - 1e-9 || tput[1] < tput[0] - 1e-9) {
            detail = "throughput ordering violated";
            return false;
        }
    }
    return true;
}

bool check_capacity_ordering(const Context&, std::string& detail) {
    for (double gamma : {0.0, 5.0}) {
        const int n = auto_n(gamma);
        for (double ntheta : {0.01, 0.1, 1.0}) {
            double rho[3];
            for (int i = 0; i < 3; ++i) {
                ModelPtr m = make_model(make_params(gamma, kAll[i], 4, n), detail);
                if (!m) return false;
                hpf_capacity cap{};
                if (hpf_model_effective_capacity(m.get(), ntheta / n, &cap) != HPF_OK) {
                    detail = hpf_last_error_message();
                    return false;
                }
                if (!(cap.spectral > 0.0 && cap.spectral <= 1.0 + 1e-12)) {
                    detail = "spectral radius outside (0,1]";
                    return false;
                }
                rho[i] = cap.rho_s_bps;
            }
            if (rho[2] < rho[1] - 1e-6 || rho[1] < rho[0] - 1e-6) {
                detail = "effective-capacity ordering violated";
                return false;
            }
        }
    }
    return true;
}

bool check_capacity_monotone_and_limits(const Context&, std::string& detail) {
    ModelPtr m = make_model(make_params(0.0, HPF_PROTOCOL_T1, 4, auto_n(0.0)), detail);
    if (!m) return false;
    const double n = auto_n(0.0);
    double mean = 0.0, min_rate = 0.0;
    hpf_model_capacity_limits(m.get(), &mean, &min_rate);

    double prev = mean * 1.001;
    for (int i = 0; i <= 30; ++i) {
        const double ntheta = 1e-3 * std::pow(30.0 / 1e-3, i / 30.0);
        hpf_capacity cap{};
        if (hpf_model_effective_capacity(m.get(), ntheta / n, &cap) != HPF_OK) {
            detail = hpf_last_error_message();
            return false;
        }
        if (cap.rho_s_bps > prev * (1.0 + 1e-9)) {
            detail = "rho_S increased with theta";
            return false;
        }
        if (cap.rho_s_bps < min_rate * (1.0 - 1e-9)) {
            detail = "rho_S fell below the minimum service rate";
            return false;
        }
        prev = cap.rho_s_bps;
    }

    hpf_capacity low{};
    hpf_model_effective_capacity(m.get(), 1e-6 / n, &low);
    if (std::abs(low.rho_s_bps - mean) > 1e-3 * mean) {
        detail = "theta->0 limit missed the mean service rate";
        return false;
    }
    return true;
}

bool check_roundtrip(const Context&, std::string& detail) {
    ModelPtr m = make_model(make_params(0.0, HPF_PROTOCOL_CC, 4, auto_n(0.0)), detail);
    if (!m) return false;
    hpf_envelope env{};
    if (hpf_model_service_envelope(m.get(), 1e-3, &env) != HPF_OK) {
        detail = hpf_last_error_message();
        return false;
    }
    for (double eps : {1e-9, 1e-6, 1e-2}) {
        double b = 0.0, eps_back = 0.0;
        if (hpf_envelope_deficit_bits(&env, 2e4, eps, &b) != HPF_OK ||
            hpf_envelope_violation_prob(&env, 2e4, b, &eps_back) != HPF_OK) {
            detail = hpf_last_error_message();
            return false;
        }
        if (std::abs(eps_back - eps) > 1e-12 * eps) {
            detail = "eps'(b(eps')) round trip drifted";
            return false;
        }
    }
    return true;
}

bool check_infeasibility_reported(const Context&, std::string& detail) {
    ModelPtr m = make_model(make_params(0.0, HPF_PROTOCOL_T1, 4, auto_n(0.0)), detail);
    if (!m) return false;
    double mean = 0.0;
    hpf_model_capacity_limits(m.get(), &mean, nullptr);
    hpf_delay_optimum opt{};
    if (hpf_model_delay_bound(m.get(), 1.05 * mean, 1e-6, &opt) != HPF_ERR_INFEASIBLE) {
        detail = "overload did not report infeasibility";
        return false;
    }
    if (hpf_model_delay_bound(m.get(), 0.8 * mean, 1e-6, &opt) != HPF_OK) {
        detail = hpf_last_error_message();
        return false;
    }
    return true;
}

bool check_delay_monotone_in_eps(const Context&, std::string& detail) {
    ModelPtr m = make_model(make_params(0.0, HPF_PROTOCOL_T1, 4, auto_n(0.0)), detail);
    if (!m) return false;
    double mean = 0.0;
    hpf_model_capacity_limits(m.get(), &mean, nullptr);
    double prev = 1e300;
    for (double eps : {1e-9, 1e-6, 1e-3, 1e-1}) {
        hpf_delay_optimum opt{};
        if (hpf_model_delay_bound(m.get(), 0.9 * mean, eps, &opt) != HPF_OK) {
            detail = hpf_last_error_message();
            return false;
        }
        if (opt.delay_seconds > prev * (1.0 + 1e-9)) {
            detail = "delay bound increased with eps'";
            return false;
        }
        prev = opt.delay_seconds;
    }
    return true;
}

// ---- full checks -----------------------------------------------------

bool check_mc_transition_probs(const Context&, std::string& detail) {
    for (hpf_protocol proto : kAll) {
        const hpf_params params = make_params(0.0, proto, 4, auto_n(0.0));
        std::vector<double> analytic;
        if (!fetch_probs(params, analytic, detail)) return false;
        double p_hat[4], se[4];
        if (hpf_estimate_transition_probs(&params, 1234 + proto, 10000000, p_hat, se,
                                          4) != HPF_OK) {
            detail = hpf_last_error_message();
            return false;
        }
        for (int i = 0; i < 4; ++i)
            if (std::abs(p_hat[i] - analytic[i]) > 3.0 * std::max(se[i], 1e-9)) {
                char buf[160];
                std::snprintf(buf, sizeof(buf),
                              "protocol %d attempt %d: |%.6f - %.6f| > 3*%.2g", proto,
                              i + 1, p_hat[i], analytic[i], se[i]);
                detail = buf;
                return false;
            }
    }
    return true;
}

bool check_mc_occupancy(const Context&, std::string& detail) {
    for (hpf_protocol proto : kAll) {
        hpf_sim_config cfg{};
        cfg.params = make_params(0.0, proto, 4, auto_n(0.0));
        cfg.seed = 777 + proto;
        cfg.warmup_slots = -1;
        cfg.measure_slots = 10000000;
        cfg.saturated = 1;
        hpf_sim_stats* raw = nullptr;
        if (hpf_simulate(&cfg, &raw) != HPF_OK) {
            detail = hpf_last_error_message();
            return false;
        }
        StatsPtr stats(raw);

        ModelPtr m = make_model(cfg.params, detail);
        if (!m) return false;
        std::vector<double> pi(4);
        double p_lost = 0.0;
        hpf_model_steady_state(m.get(), pi.data(), 4, &p_lost, nullptr);

        double pi0 = 0.0, se = 0.0;
        hpf_sim_stats_pi0(stats.get(), &pi0, &se);
        if (std::abs(pi0 - pi[0]) > 3.0 * std::max(se, 1e-9)) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "pi0_hat %.6f vs %.6f (3se=%.2g)", pi0,
                          pi[0], 3.0 * se);
            detail = buf;
            return false;
        }
        const double lost = hpf_sim_stats_lost(stats.get());
        const double served = lost + hpf_sim_stats_delivered(stats.get());
        const double plost_hat = lost / served;
        const double plost_se =
            std::sqrt(std::max(plost_hat * (1.0 - plost_hat), 1e-12) / served);
        if (std::abs(plost_hat - p_lost) > 3.0 * plost_se) {
            detail = "p_lost_hat outside 3 sigma";
            return false;
        }
    }
    return true;
}

bool check_bound_soundness(const Context&, std::string& detail) {
    for (hpf_protocol proto : kAll) {
        const hpf_params params = make_params(0.0, proto, 4, auto_n(0.0));
        ModelPtr m = make_model(params, detail);
        if (!m) return false;
        double mean = 0.0;
        hpf_model_capacity_limits(m.get(), &mean, nullptr);
        const double a = 0.8 * mean;

        hpf_sim_config cfg{};
        cfg.params = params;
        cfg.arrival_bps = a;
        cfg.seed = 31 + proto;
        cfg.warmup_slots = -1;
        const double packets_per_slot = a * kSlot / params.packet_bits;
        cfg.measure_slots = static_cast<long>(1.05e7 / packets_per_slot);
        hpf_sim_stats* raw = nullptr;
        if (hpf_simulate(&cfg, &raw) != HPF_OK) {
            detail = hpf_last_error_message();
            return false;
        }
        StatsPtr stats(raw);
        const long long departures =
            hpf_sim_stats_delivered(stats.get()) + hpf_sim_stats_lost(stats.get());
        if (departures < 10000000) {
            detail = "not enough departures for the soundness check";
            return false;
        }
        for (double eps : {1e-2, 1e-3}) {
            hpf_delay_optimum opt{};
            if (hpf_model_delay_bound(m.get(), a, eps, &opt) != HPF_OK) {
                detail = hpf_last_error_message();
                return false;
            }
            double frac = 0.0, lo = 0.0, hi = 0.0;
            hpf_sim_stats_delay_violation(stats.get(), opt.delay_seconds, 1, &frac,
                                          &lo, &hi);
            if (frac > eps) {
                char buf[160];
                std::snprintf(buf, sizeof(buf),
                              "protocol %d: violation %.3g above eps %.3g", proto,
                              frac, eps);
                detail = buf;
                return false;
            }
        }
    }
    return true;
}

bool check_stability_dichotomy(const Context&, std::string& detail) {
    const hpf_params params = make_params(0.0, HPF_PROTOCOL_T1, 4, auto_n(0.0));
    ModelPtr m = make_model(params, detail);
    if (!m) return false;
    double mean = 0.0;
    hpf_model_capacity_limits(m.get(), &mean, nullptr);

    hpf_sim_config cfg{};
    cfg.params = params;
    cfg.arrival_bps = 1.05 * mean;
    cfg.seed = 5150;
    cfg.warmup_slots = 0;
    cfg.measure_slots = 1000000;
    cfg.record_queue_samples = 1;
    hpf_sim_stats* raw = nullptr;
    if (hpf_simulate(&cfg, &raw) != HPF_OK) {
        detail = hpf_last_error_message();
        return false;
    }
    StatsPtr stats(raw);
    double slope = 0.0;
    hpf_sim_stats_queue_slope(stats.get(), &slope);
    const double expect = (cfg.arrival_bps - mean) * kSlot;
    if (std::abs(slope - expect) > 0.05 * expect) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "growth %.4g bits/slot vs expected %.4g",
                      slope, expect);
        detail = buf;
        return false;
    }
    hpf_delay_optimum opt{};
    if (hpf_model_delay_bound(m.get(), cfg.arrival_bps, 1e-6, &opt) !=
        HPF_ERR_INFEASIBLE) {
        detail = "overloaded bound did not report infeasibility";
        return false;
    }
    return true;
}

bool check_sim_conservation(const Context&, std::string& detail) {
    hpf_sim_config cfg{};
    cfg.params = make_params(0.0, HPF_PROTOCOL_CC, 4, auto_n(0.0));
    cfg.arrival_bps = 0.4e6;
    cfg.seed = 11;
    cfg.warmup_slots = -1;
    cfg.measure_slots = 500000;
    hpf_sim_stats *a = nullptr, *b = nullptr;
    if (hpf_simulate(&cfg, &a) != HPF_OK || hpf_simulate(&cfg, &b) != HPF_OK) {
        detail = hpf_last_error_message();
        hpf_sim_stats_destroy(a);
        return false;
    }
    StatsPtr sa(a), sb(b);
    if (hpf_sim_stats_admitted(sa.get()) !=
        hpf_sim_stats_delivered(sa.get()) + hpf_sim_stats_lost(sa.get()) +
            hpf_sim_stats_in_system(sa.get())) {
        detail = "packet ledger does not balance";
        return false;
    }
    if (hpf_sim_stats_fractional_bits(sa.get()) < 0.0 ||
        hpf_sim_stats_fractional_bits(sa.get()) >= cfg.params.packet_bits) {
        detail = "fractional remainder out of range";
        return false;
    }
    if (hpf_sim_stats_delivered(sa.get()) != hpf_sim_stats_delivered(sb.get()) ||
        hpf_sim_stats_mean_delay_seconds(sa.get()) !=
            hpf_sim_stats_mean_delay_seconds(sb.get())) {
        detail = "identical seeds disagreed";
        return false;
    }
    return true;
}

struct Check {
    const char* name;
    bool full_only;
    std::function<bool(const Context&, std::string&)> fn;
};

}  // namespace

int run_self_check(bool full, bool inject_fault) {
    const std::vector<Check> checks = {
        {"transition probabilities well-formed", false, check_probability_ranges},
        {"first attempt shared across protocols", false, check_shared_first_attempt},
        {"cumulative failure dominance IR <= CC <= T1", false,
         check_cumulative_dominance},
        {"stationary vector solves pi = P pi", false, check_stationary_vector},
        {"packet loss non-increasing in M", false, check_loss_vs_deadline},
        {"reliable throughput ordering", false, check_throughput_ordering},
        {"effective-capacity ordering and spectral range", false,
         check_capacity_ordering},
        {"effective capacity monotone with correct limits", false,
         check_capacity_monotone_and_limits},
        {"violation probability round trip", false, check_roundtrip},
        {"infeasibility reporting", false, check_infeasibility_reported},
        {"delay bound monotone in eps'", false, check_delay_monotone_in_eps},
        {"Monte Carlo transition probabilities (1e7)", true,
         check_mc_transition_probs},
        {"Monte Carlo occupancy and loss (1e7 slots)", true, check_mc_occupancy},
        {"delay-bound soundness at eps' 1e-2/1e-3", true, check_bound_soundness},
        {"stability dichotomy at 1.05x mean rate", true, check_stability_dichotomy},
        {"simulation conservation and determinism", true, check_sim_conservation},
    };

    Context ctx;
    ctx.fault = inject_fault;
    int failures = 0, ran = 0;
    for (const Check& c : checks) {
        if (c.full_only && !full) continue;
        ++ran;
        std::string detail;
        const bool ok = c.fn(ctx, detail);
        if (ok) {
            std::printf("[ ok ] %s\n", c.name);
        } else {
            ++failures;
            std::printf("[FAIL] %s%s%s\n", c.name, detail.empty() ? "" : ": ",
                        detail.c_str());
        }
    }
    std::printf("%d/%d checks passed (%s)\n", ran - failures, ran,
                full ? "full" : "quick");
    return failures == 0 ? 0 : 3;
}

}  // namespace cli
