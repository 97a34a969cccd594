// harqperf CLI: analytic HARQ link-layer performance, backlog/delay
// bounds, figure-reproduction sweeps, and a slot-level queue simulator.
// All computation goes through the libharqperf C API.

#include <cmath>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "experiments.hpp"
#include "harqperf.h"
#include "self_check.hpp"

namespace {

struct ParamFlags {
    std::string protocol = "t1";
    double n = 0.0;  // 0 = throughput-maximizing for the channel
    double t_us = 100.0;
    double b_mhz = 1.0;
    int deadline = 4;
    double gamma_db = 0.0;
    double sigma_h_sq = 1.0;
    int ir_grid = 0;
};

void add_param_flags(CLI::App* cmd, ParamFlags& f) {
    cmd->add_option("--protocol", f.protocol, "HARQ protocol")
        ->check(CLI::IsMember({"t1", "cc", "ir"}))
        ->capture_default_str();
    cmd->add_option("--n", f.n, "packet size in bits (0 = auto)")
        ->capture_default_str();
    cmd->add_option("--T-us", f.t_us, "slot duration [us]")->capture_default_str();
    cmd->add_option("--B-MHz", f.b_mhz, "bandwidth [MHz]")->capture_default_str();
    cmd->add_option("--M", f.deadline, "transmission deadline [slots]")
        ->capture_default_str();
    cmd->add_option("--gamma-dB", f.gamma_db, "average SNR [dB]")
        ->capture_default_str();
    cmd->add_option("--sigma-h-sq", f.sigma_h_sq, "mean fading power")
        ->capture_default_str();
    cmd->add_option("--ir-grid", f.ir_grid, "IR convolution grid (0 = 4096)")
        ->capture_default_str();
}

int status_exit(hpf_status s) {
    switch (s) {
        case HPF_OK: return 0;
        case HPF_ERR_INFEASIBLE: return 2;
        default: return 1;
    }
}

int fail(hpf_status s) {
    std::fprintf(stderr, "error (%s): %s\n", hpf_status_name(s),
                 hpf_last_error_message());
    return status_exit(s);
}

// Resolves flags into hpf_params; auto-selects n when requested.
bool resolve_params(const ParamFlags& f, hpf_params& p, int& rc) {
    p = hpf_params{};
    p.slot_seconds = f.t_us * 1e-6;
    p.bandwidth_hz = f.b_mhz * 1e6;
    p.deadline_slots = f.deadline;
    p.snr_linear = std::pow(10.0, f.gamma_db / 10.0);
    p.fading_power = f.sigma_h_sq;
    p.ir_grid = f.ir_grid;
    p.protocol = f.protocol == "cc"   ? HPF_PROTOCOL_CC
                 : f.protocol == "ir" ? HPF_PROTOCOL_IR
                                      : HPF_PROTOCOL_T1;
    if (f.n > 0.0) {
        p.packet_bits = f.n;
    } else {
        int n = 0;
        const hpf_status s = hpf_default_packet_bits(p.snr_linear, p.slot_seconds,
                                                     p.bandwidth_hz, p.fading_power, &n);
        if (s != HPF_OK) {
            rc = fail(s);
            return false;
        }
        p.packet_bits = n;
    }
    return true;
}

struct ModelGuard {
    hpf_model* m = nullptr;
    ~ModelGuard() { hpf_model_destroy(m); }
};

bool write_lines(const std::string& path, const std::string& content, int& rc) {
    if (path.empty()) {
        std::fputs(content.c_str(), stdout);
        return true;
    }
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) {
        std::fprintf(stderr, "cannot open output file: %s\n", path.c_str());
        rc = 1;
        return false;
    }
    std::fwrite(content.data(), 1, content.size(), f);
    std::fclose(f);
    return true;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

int cmd_transitions(const ParamFlags& flags, const std::string& out) {
    int rc = 0;
    hpf_params params;
    if (!resolve_params(flags, params, rc)) return rc;
    ModelGuard g;
    if (const hpf_status s = hpf_model_create(&params, &g.m); s != HPF_OK)
        return fail(s);
    std::vector<double> p(params.deadline_slots);
    hpf_model_transition_probs(g.m, p.data(), p.size());

    std::string text = "attempt,p_fail\n";
    for (std::size_t i = 0; i < p.size(); ++i)
        text += std::to_string(i + 1) + "," + fmt(p[i]) + "\n";
    if (!out.empty()) {
        if (!write_lines(out, text, rc)) return rc;
        return 0;
    }
    std::printf("protocol: %s\nn: %g bits  kappa: %.12g%s\n", flags.protocol.c_str(),
                params.packet_bits, hpf_model_decode_threshold(g.m),
                hpf_model_degenerate_ratio(g.m) ? "  (degenerate ratios -> 0)" : "");
    for (std::size_t i = 0; i < p.size(); ++i)
        std::printf("p[%zu] = %.12g\n", i, p[i]);
    return 0;
}

int cmd_steady_state(const ParamFlags& flags, const std::string& out) {
    int rc = 0;
    hpf_params params;
    if (!resolve_params(flags, params, rc)) return rc;
    ModelGuard g;
    if (const hpf_status s = hpf_model_create(&params, &g.m); s != HPF_OK)
        return fail(s);
    std::vector<double> pi(params.deadline_slots);
    double p_lost = 0.0, throughput = 0.0;
    hpf_model_steady_state(g.m, pi.data(), pi.size(), &p_lost, &throughput);

    if (!out.empty()) {
        std::string text = "state,pi\n";
        for (std::size_t i = 0; i < pi.size(); ++i)
            text += std::to_string(i) + "," + fmt(pi[i]) + "\n";
        text += "p_lost," + fmt(p_lost) + "\n";
        text += "throughput_bps," + fmt(throughput) + "\n";
        if (!write_lines(out, text, rc)) return rc;
        return 0;
    }
    std::printf("protocol: %s  n: %g bits\n", flags.protocol.c_str(),
                params.packet_bits);
    for (std::size_t i = 0; i < pi.size(); ++i)
        std::printf("pi[%zu] = %.12g\n", i, pi[i]);
    std::printf("p_lost = %.12g\nreliable throughput = %.12g bits/sec\n", p_lost,
                throughput);
    return 0;
}

int cmd_effective_capacity(const ParamFlags& flags, double theta,
                           const std::string& out) {
    int rc = 0;
    hpf_params params;
    if (!resolve_params(flags, params, rc)) return rc;
    ModelGuard g;
    if (const hpf_status s = hpf_model_create(&params, &g.m); s != HPF_OK)
        return fail(s);
    hpf_capacity cap{};
    if (const hpf_status s = hpf_model_effective_capacity(g.m, theta, &cap);
        s != HPF_OK)
        return fail(s);
    double mean = 0.0, min_rate = 0.0;
    hpf_model_capacity_limits(g.m, &mean, &min_rate);

    if (!out.empty()) {
        std::string text = "theta,rho_s_bps,y_star,sp,mean_bps,min_bps\n";
        text += fmt(theta) + "," + fmt(cap.rho_s_bps) + "," + fmt(cap.y_star) + "," +
                fmt(cap.spectral) + "," + fmt(mean) + "," + fmt(min_rate) + "\n";
        if (!write_lines(out, text, rc)) return rc;
        return 0;
    }
    std::printf("protocol: %s  n: %g bits  theta: %.6g 1/bits\n",
                flags.protocol.c_str(), params.packet_bits, theta);
    std::printf("rho_S(theta) = %.12g bits/sec\n", cap.rho_s_bps);
    std::printf("y* = %.12g  sp = %.12g%s\n", cap.y_star, cap.spectral,
                cap.used_spectral_fallback ? "  (spectral fallback)" : "");
    std::printf("mean service rate = %.12g bits/sec\nmin service rate = %.12g "
                "bits/sec\n",
                mean, min_rate);
    return 0;
}

int cmd_delay_bound(const ParamFlags& flags, double a_mbps, double eps,
                    const std::string& out) {
    int rc = 0;
    hpf_params params;
    if (!resolve_params(flags, params, rc)) return rc;
    ModelGuard g;
    if (const hpf_status s = hpf_model_create(&params, &g.m); s != HPF_OK)
        return fail(s);
    hpf_delay_optimum opt{};
    if (const hpf_status s = hpf_model_delay_bound(g.m, a_mbps * 1e6, eps, &opt);
        s != HPF_OK)
        return fail(s);

    if (!out.empty()) {
        std::string text =
            "a_Mbps,eps_prime,theta_star,delta_star_bps,b_bits,q_bits,d_seconds\n";
        text += fmt(a_mbps) + "," + fmt(eps) + "," + fmt(opt.theta) + "," +
                fmt(opt.delta_bps) + "," + fmt(opt.deficit_bits) + "," +
                fmt(opt.backlog_bits) + "," + fmt(opt.delay_seconds) + "\n";
        if (!write_lines(out, text, rc)) return rc;
        return 0;
    }
    std::printf("protocol: %s  n: %g bits  a: %g Mb/s  eps': %g\n",
                flags.protocol.c_str(), params.packet_bits, a_mbps, eps);
    std::printf("theta* = %.6g 1/bits  delta* = %.6g bits/sec  rho_S = %.6g "
                "bits/sec\n",
                opt.theta, opt.delta_bps, opt.rate_bps);
    std::printf("b = %.6g bits\nbacklog bound q = %.6g bits\ndelay bound d = %.6g "
                "seconds (%.4g ms)\n",
                opt.deficit_bits, opt.backlog_bits, opt.delay_seconds,
                opt.delay_seconds * 1e3);
    return 0;
}

int cmd_simulate(const ParamFlags& flags, double a_mbps, long slots, long warmup,
                 std::uint64_t seed, int replications, bool saturated,
                 const std::string& dump, const std::string& out) {
    int rc = 0;
    hpf_params params;
    if (!resolve_params(flags, params, rc)) return rc;

    std::string text =
        "replication,seed,admitted,delivered,lost,p_lost_hat,pi0_hat,pi0_se,"
        "mean_delay_s\n";
    for (int rep = 0; rep < replications; ++rep) {
        hpf_sim_config cfg{};
        cfg.params = params;
        cfg.arrival_bps = a_mbps * 1e6;
        cfg.seed = seed + static_cast<std::uint64_t>(rep);
        cfg.warmup_slots = warmup;
        cfg.measure_slots = slots;
        cfg.saturated = saturated ? 1 : 0;
        cfg.record_packets = (!dump.empty() && rep == 0) ? 1 : 0;

        hpf_sim_stats* stats = nullptr;
        if (const hpf_status s = hpf_simulate(&cfg, &stats); s != HPF_OK)
            return fail(s);
        double pi0 = 0.0, se = 0.0;
        hpf_sim_stats_pi0(stats, &pi0, &se);
        text += std::to_string(rep) + "," + std::to_string(cfg.seed) + "," +
                std::to_string(hpf_sim_stats_admitted(stats)) + "," +
                std::to_string(hpf_sim_stats_delivered(stats)) + "," +
                std::to_string(hpf_sim_stats_lost(stats)) + "," +
                fmt(hpf_sim_stats_p_lost(stats)) + "," + fmt(pi0) + "," + fmt(se) +
                "," + fmt(hpf_sim_stats_mean_delay_seconds(stats)) + "\n";
        if (cfg.record_packets) {
            if (const hpf_status s = hpf_sim_stats_dump_packets_csv(stats, dump.c_str());
                s != HPF_OK) {
                hpf_sim_stats_destroy(stats);
                return fail(s);
            }
        }
        hpf_sim_stats_destroy(stats);
    }
    if (!write_lines(out, text, rc)) return rc;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"analytic link-layer performance of HARQ over Rayleigh block "
                 "fading: failure probabilities, steady state, effective "
                 "capacity, backlog/delay bounds, and a validating simulator"};
    app.require_subcommand(1);
    int rc = 0;

    // transitions
    ParamFlags tr_flags;
    std::string tr_out;
    CLI::App* tr = app.add_subcommand("transitions",
                                      "per-attempt decoding-failure probabilities");
    add_param_flags(tr, tr_flags);
    tr->add_option("--out", tr_out, "write CSV here instead of stdout");
    tr->callback([&]() { rc = cmd_transitions(tr_flags, tr_out); });

    // steady-state
    ParamFlags ss_flags;
    std::string ss_out;
    CLI::App* ss = app.add_subcommand(
        "steady-state", "stationary distribution, packet loss, throughput");
    add_param_flags(ss, ss_flags);
    ss->add_option("--out", ss_out, "write CSV here instead of stdout");
    ss->callback([&]() { rc = cmd_steady_state(ss_flags, ss_out); });

    // effective-capacity
    ParamFlags ec_flags;
    std::string ec_out;
    double ec_theta = 1e-3;
    CLI::App* ec = app.add_subcommand("effective-capacity",
                                      "effective capacity at a QoS exponent");
    add_param_flags(ec, ec_flags);
    ec->add_option("--theta", ec_theta, "QoS exponent [1/bits]")
        ->required()
        ->check(CLI::PositiveNumber);
    ec->add_option("--out", ec_out, "write CSV here instead of stdout");
    ec->callback([&]() { rc = cmd_effective_capacity(ec_flags, ec_theta, ec_out); });

    // delay-bound
    ParamFlags db_flags;
    std::string db_out;
    double db_a = 0.0, db_eps = 1e-6;
    CLI::App* db = app.add_subcommand(
        "delay-bound", "optimized non-asymptotic backlog/delay bound");
    add_param_flags(db, db_flags);
    db->add_option("--a-Mbps", db_a, "constant arrival rate [Mb/s]")->required();
    db->add_option("--eps-prime", db_eps, "target violation probability")
        ->capture_default_str();
    db->add_option("--out", db_out, "write CSV here instead of stdout");
    db->callback([&]() { rc = cmd_delay_bound(db_flags, db_a, db_eps, db_out); });

    // simulate
    ParamFlags sim_flags;
    std::string sim_out, sim_dump;
    double sim_a = 0.0;
    long sim_slots = 1000000, sim_warmup = -1;
    std::uint64_t sim_seed = 1;
    int sim_reps = 1;
    bool sim_saturated = false;
    CLI::App* sim = app.add_subcommand("simulate",
                                       "seeded slot-level queue simulation");
    add_param_flags(sim, sim_flags);
    sim->add_option("--a-Mbps", sim_a, "constant arrival rate [Mb/s]");
    sim->add_option("--slots", sim_slots, "measured slots")->capture_default_str();
    sim->add_option("--warmup", sim_warmup, "warmup slots (-1 = 10% of measured)")
        ->capture_default_str();
    sim->add_option("--seed", sim_seed, "RNG seed")->capture_default_str();
    sim->add_option("--replications", sim_reps,
                    "independent replications (seeds seed+0..seed+R-1)")
        ->capture_default_str();
    sim->add_flag("--saturated", sim_saturated,
                  "server always busy (service-chain measurement mode)");
    sim->add_option("--dump", sim_dump,
                    "per-packet CSV (replication 0): arrival, departure, attempts, "
                    "lost");
    sim->add_option("--out", sim_out, "write the summary CSV here");
    sim->callback([&]() {
        rc = cmd_simulate(sim_flags, sim_a, sim_slots, sim_warmup, sim_seed, sim_reps,
                          sim_saturated, sim_dump, sim_out);
    });

    // reproduce
    std::string rep_id, rep_config, rep_out;
    unsigned rep_threads = std::max(1u, std::thread::hardware_concurrency());
    CLI::App* rep = app.add_subcommand(
        "reproduce", "figure-reproduction experiments and custom sweeps (CSV)");
    rep->add_option("figure-id", rep_id,
                    "preset id (see --list); omit when using --config");
    rep->add_option("--config", rep_config, "custom sweep JSON config");
    rep->add_option("--out", rep_out, "output CSV path (default stdout)");
    rep->add_option("--threads", rep_threads, "worker threads")
        ->capture_default_str();
    bool rep_list = false;
    rep->add_flag("--list", rep_list, "list known experiment ids");
    rep->callback([&]() {
        if (rep_list) {
            for (const std::string& name : cli::known_experiments())
                std::printf("%s\n", name.c_str());
            rc = 0;
            return;
        }
        if (rep_id.empty() && rep_config.empty()) {
            std::fprintf(stderr, "reproduce: need a figure-id or --config\n");
            rc = 1;
            return;
        }
        rc = cli::run_experiment(rep_id, rep_config, rep_out, rep_threads);
    });

    // self-check
    std::string sc_depth = "quick";
    bool sc_fault = false;
    CLI::App* sc = app.add_subcommand("self-check",
                                      "run the cross-validation suite");
    sc->add_option("--depth", sc_depth, "quick (analytic) or full (Monte Carlo)")
        ->check(CLI::IsMember({"quick", "full"}))
        ->capture_default_str();
    sc->add_flag("--fault-injection", sc_fault,
                 "corrupt one probability to prove the checks bite");
    sc->callback([&]() { rc = cli::run_self_check(sc_depth == "full", sc_fault); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // validation errors exit 1
    }
    return rc;
}
