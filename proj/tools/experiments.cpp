// Figure-reproduction presets and custom sweeps. Everything is computed
// through the shared-library C API; sweep points run on a worker pool
// and rows are written in sweep order regardless of completion order.

#include "experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "harqperf.h"

namespace cli {

namespace {

using nlohmann::json;

constexpr double kSlotSeconds = 1e-4;  // T = 100 us
constexpr double kBandwidthHz = 1e6;   // B = 1 MHz
constexpr double kFadingPower = 1.0;   // sigma_h^2 = 1

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

enum class Metric { Throughput, Pi0, PLost, RhoS, Delay };

struct Job {
    double sweep_value = 0.0;
    hpf_params params{};
    double gamma_db = 0.0;
    double theta = 0.0;      // RhoS metric
    double a_bps = 0.0;      // Delay metric
    double eps_prime = 0.0;  // Delay metric
    Metric metric = Metric::Throughput;
};

const char* protocol_label(hpf_protocol p) {
    switch (p) {
        case HPF_PROTOCOL_T1: return "t1";
        case HPF_PROTOCOL_CC: return "cc";
        case HPF_PROTOCOL_IR: return "ir";
    }
    return "?";
}

std::string metric_header(Metric m) {
    switch (m) {
        case Metric::RhoS:
            return "sweep_var,protocol,value,gamma_dB,n,M,theta,y_star,sp";
        case Metric::Delay:
            return "sweep_var,protocol,value,gamma_dB,n,M,a_Mbps,eps_prime,"
                   "theta_star,delta_star";
        default:
            return "sweep_var,protocol,value,gamma_dB,n,M";
    }
}

// One row of CSV, computed through the C API only.
std::string run_job(const Job& job) {
    std::ostringstream row;
    row << fmt(job.sweep_value) << ',' << protocol_label(job.params.protocol) << ',';

    hpf_model* model = nullptr;
    if (hpf_model_create(&job.params, &model) != HPF_OK)
        throw std::runtime_error(std::string("model: ") + hpf_last_error_message());

    const std::string context = "," + fmt(job.gamma_db) + "," +
                                fmt(job.params.packet_bits) + "," +
                                std::to_string(job.params.deadline_slots);
    switch (job.metric) {
        case Metric::Throughput: {
            double throughput = 0.0;
            hpf_model_steady_state(model, nullptr, 0, nullptr, &throughput);
            row << fmt(throughput) << context;
            break;
        }
        case Metric::Pi0: {
            std::vector<double> pi(job.params.deadline_slots);
            hpf_model_steady_state(model, pi.data(), pi.size(), nullptr, nullptr);
            row << fmt(pi[0]) << context;
            break;
        }
        case Metric::PLost: {
            double p_lost = 0.0;
            hpf_model_steady_state(model, nullptr, 0, &p_lost, nullptr);
            row << fmt(p_lost) << context;
            break;
        }
        case Metric::RhoS: {
            hpf_capacity cap{};
            if (hpf_model_effective_capacity(model, job.theta, &cap) != HPF_OK) {
                hpf_model_destroy(model);
                throw std::runtime_error(std::string("effective capacity: ") +
                                         hpf_last_error_message());
            }
            row << fmt(cap.rho_s_bps) << context << ',' << fmt(job.theta) << ','
                << fmt(cap.y_star) << ',' << fmt(cap.spectral);
            break;
        }
        case Metric::Delay: {
            hpf_delay_optimum opt{};
            const hpf_status ds =
                hpf_model_delay_bound(model, job.a_bps, job.eps_prime, &opt);
            row << (ds == HPF_OK ? fmt(opt.delay_seconds) : "inf") << context << ','
                << fmt(job.a_bps / 1e6) << ',' << fmt(job.eps_prime) << ',';
            if (ds == HPF_OK)
                row << fmt(opt.theta) << ',' << fmt(opt.delta_bps);
            else if (ds == HPF_ERR_INFEASIBLE)
                row << "nan,nan";
            else {
                hpf_model_destroy(model);
                throw std::runtime_error(std::string("delay bound: ") +
                                         hpf_last_error_message());
            }
            break;
        }
    }
    hpf_model_destroy(model);
    return row.str();
}

void parallel_rows(const std::vector<Job>& jobs, unsigned threads,
                   std::vector<std::string>& rows) {
    rows.assign(jobs.size(), {});
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        std::size_t i;
        while ((i = next.fetch_add(1)) < jobs.size() && !failed.load()) {
            try {
                rows[i] = run_job(jobs[i]);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    };
    const unsigned count = std::max(1u, threads);
    std::vector<std::thread> pool;
    for (unsigned i = 0; i + 1 < count; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failed.load()) throw std::runtime_error(first_error);
}

hpf_params preset_params(double gamma_db, double n, int deadline, hpf_protocol proto) {
    hpf_params p{};
    p.packet_bits = n;
    p.slot_seconds = kSlotSeconds;
    p.bandwidth_hz = kBandwidthHz;
    p.deadline_slots = deadline;
    p.snr_linear = db_to_linear(gamma_db);
    p.fading_power = kFadingPower;
    p.protocol = proto;
    p.ir_grid = 0;
    return p;
}

int auto_packet_bits(double gamma_db) {
    int n = 0;
    if (hpf_default_packet_bits(db_to_linear(gamma_db), kSlotSeconds, kBandwidthHz,
                                kFadingPower, &n) != HPF_OK)
        throw std::runtime_error(std::string("packet size scan: ") +
                                 hpf_last_error_message());
    return n;
}

constexpr hpf_protocol kProtocols[] = {HPF_PROTOCOL_T1, HPF_PROTOCOL_CC,
                                       HPF_PROTOCOL_IR};

struct Experiment {
    std::string comment;  // "# experiment=..." context line
    Metric metric = Metric::Throughput;
    std::vector<Job> jobs;
};

// Reliable throughput vs packet size at 5 dB.
Experiment exp_throughput_vs_n() {
    Experiment e;
    e.metric = Metric::Throughput;
    e.comment = "# experiment=throughput-vs-n swept=n gamma_dB=5 M=4 T_us=100 "
                "B_MHz=1 sigma_h_sq=1";
    const double gamma_db = 5.0;
    const int n_max = static_cast<int>(
        std::ceil(kSlotSeconds * kBandwidthHz *
                  std::log2(1.0 + 20.0 * db_to_linear(gamma_db))));
    for (int n = 1; n <= n_max; ++n)
        for (hpf_protocol proto : kProtocols) {
            Job j;
            j.sweep_value = n;
            j.gamma_db = gamma_db;
            j.params = preset_params(gamma_db, n, 4, proto);
            j.metric = Metric::Throughput;
            e.jobs.push_back(j);
        }
    return e;
}

Experiment exp_vs_deadline(Metric metric, const std::string& name) {
    Experiment e;
    e.metric = metric;
    e.comment = "# experiment=" + name +
                " swept=M gamma_dB={0,10} n=auto T_us=100 B_MHz=1 sigma_h_sq=1";
    for (double gamma_db : {0.0, 10.0}) {
        const int n = auto_packet_bits(gamma_db);
        for (int deadline = 1; deadline <= 10; ++deadline)
            for (hpf_protocol proto : kProtocols) {
                Job j;
                j.sweep_value = deadline;
                j.gamma_db = gamma_db;
                j.params = preset_params(gamma_db, n, deadline, proto);
                j.metric = metric;
                e.jobs.push_back(j);
            }
    }
    return e;
}

Experiment exp_ec_vs_theta(double gamma_db) {
    Experiment e;
    e.metric = Metric::RhoS;
    e.comment = "# experiment=ec-vs-theta swept=theta gamma_dB=" + fmt(gamma_db) +
                " M=4 n=auto T_us=100 B_MHz=1 sigma_h_sq=1";
    const int n = auto_packet_bits(gamma_db);
    const int points = 61;
    for (int i = 0; i < points; ++i) {
        const double theta =
            std::exp(std::lerp(std::log(1e-6), std::log(1e-1), i / (points - 1.0)));
        for (hpf_protocol proto : kProtocols) {
            Job j;
            j.sweep_value = theta;
            j.gamma_db = gamma_db;
            j.params = preset_params(gamma_db, n, 4, proto);
            j.theta = theta;
            j.metric = Metric::RhoS;
            e.jobs.push_back(j);
        }
    }
    return e;
}

Experiment exp_delay_vs_eps(double gamma_db, double n, double a_mbps) {
    Experiment e;
    e.metric = Metric::Delay;
    e.comment = "# experiment=delay-vs-eps swept=eps_prime gamma_dB=" + fmt(gamma_db) +
                " n=" + fmt(n) + " M=4 a_Mbps=" + fmt(a_mbps) +
                " T_us=100 B_MHz=1 sigma_h_sq=1";
    const int points = 33;
    for (int i = 0; i < points; ++i) {
        const double eps =
            std::exp(std::lerp(std::log(1e-9), std::log(1e-1), i / (points - 1.0)));
        for (hpf_protocol proto : kProtocols) {
            Job j;
            j.sweep_value = eps;
            j.gamma_db = gamma_db;
            j.params = preset_params(gamma_db, n, 4, proto);
            j.a_bps = a_mbps * 1e6;
            j.eps_prime = eps;
            j.metric = Metric::Delay;
            e.jobs.push_back(j);
        }
    }
    return e;
}

Experiment exp_delay_vs_gamma(int deadline, double a_mbps) {
    Experiment e;
    e.metric = Metric::Delay;
    e.comment = "# experiment=delay-vs-gamma swept=gamma_dB M=" +
                std::to_string(deadline) + " n=36 a_Mbps=" + fmt(a_mbps) +
                " eps_prime=1e-06 T_us=100 B_MHz=1 sigma_h_sq=1";
    for (int i = 0; i <= 20; ++i) {
        const double gamma_db = 0.5 * i;  // 0..10 dB
        for (hpf_protocol proto : kProtocols) {
            Job j;
            j.sweep_value = gamma_db;
            j.gamma_db = gamma_db;
            j.params = preset_params(gamma_db, 36, deadline, proto);
            j.a_bps = a_mbps * 1e6;
            j.eps_prime = 1e-6;
            j.metric = Metric::Delay;
            e.jobs.push_back(j);
        }
    }
    return e;
}

Experiment exp_delay_vs_a(double gamma_db, double n) {
    Experiment e;
    e.metric = Metric::Delay;
    e.comment = "# experiment=delay-vs-a swept=a_Mbps gamma_dB=" + fmt(gamma_db) +
                " n=" + fmt(n) + " M=4 eps_prime=1e-06 T_us=100 B_MHz=1 "
                "sigma_h_sq=1";
    // sweep past the strongest protocol's mean service rate so the
    // instability divergence is visible
    hpf_params ir = preset_params(gamma_db, n, 4, HPF_PROTOCOL_IR);
    hpf_model* model = nullptr;
    if (hpf_model_create(&ir, &model) != HPF_OK)
        throw std::runtime_error(hpf_last_error_message());
    double mean_ir = 0.0;
    hpf_model_capacity_limits(model, &mean_ir, nullptr);
    hpf_model_destroy(model);

    const int points = 41;
    for (int i = 0; i < points; ++i) {
        const double a = mean_ir * (0.2 + 0.85 * i / (points - 1.0));
        for (hpf_protocol proto : kProtocols) {
            Job j;
            j.sweep_value = a / 1e6;
            j.gamma_db = gamma_db;
            j.params = preset_params(gamma_db, n, 4, proto);
            j.a_bps = a;
            j.eps_prime = 1e-6;
            j.metric = Metric::Delay;
            e.jobs.push_back(j);
        }
    }
    return e;
}

using Builder = std::function<Experiment()>;

const std::map<std::string, Builder>& registry() {
    static const std::map<std::string, Builder> reg = {
        {"throughput-vs-n", exp_throughput_vs_n},
        {"fig_2_add", exp_throughput_vs_n},
        {"pi0-vs-M", [] { return exp_vs_deadline(Metric::Pi0, "pi0-vs-M"); }},
        {"fig_1", [] { return exp_vs_deadline(Metric::Pi0, "pi0-vs-M"); }},
        {"plost-vs-M", [] { return exp_vs_deadline(Metric::PLost, "plost-vs-M"); }},
        {"fig_2", [] { return exp_vs_deadline(Metric::PLost, "plost-vs-M"); }},
        {"ec-vs-theta", [] { return exp_ec_vs_theta(0.0); }},
        {"fig_3", [] { return exp_ec_vs_theta(0.0); }},
        {"fig_4", [] { return exp_ec_vs_theta(5.0); }},
        {"delay-vs-eps", [] { return exp_delay_vs_eps(0.0, 82, 0.41); }},
        {"fig_5", [] { return exp_delay_vs_eps(0.0, 82, 0.41); }},
        {"fig_6", [] { return exp_delay_vs_eps(5.0, 155, 0.81); }},
        {"delay-vs-gamma", [] { return exp_delay_vs_gamma(4, 0.16); }},
        {"fig_add_3", [] { return exp_delay_vs_gamma(4, 0.16); }},
        {"fig_add_4", [] { return exp_delay_vs_gamma(3, 0.18); }},
        {"delay-vs-a", [] { return exp_delay_vs_a(5.0, 155); }},
        {"fig_add_1", [] { return exp_delay_vs_a(5.0, 155); }},
        {"fig_add_2", [] { return exp_delay_vs_a(10.0, 252); }},
    };
    return reg;
}

// ---- custom sweeps from a JSON config ------------------------------

[[noreturn]] void config_error(const std::string& field, const std::string& why) {
    throw std::invalid_argument("config field '" + field + "': " + why);
}

double require_number(const json& j, const std::string& field, double fallback,
                      bool required) {
    if (!j.contains(field)) {
        if (required) config_error(field, "missing");
        return fallback;
    }
    if (!j[field].is_number()) config_error(field, "must be a number");
    return j[field].get<double>();
}

std::vector<double> parse_range(const json& j) {
    std::vector<double> values;
    if (j.contains("values")) {
        if (!j["values"].is_array() || j["values"].empty())
            config_error("values", "must be a non-empty array");
        for (const auto& v : j["values"]) {
            if (!v.is_number()) config_error("values", "entries must be numbers");
            values.push_back(v.get<double>());
        }
    } else if (j.contains("range")) {
        const json& r = j["range"];
        const double from = require_number(r, "from", 0.0, true);
        const double to = require_number(r, "to", 0.0, true);
        const int points = static_cast<int>(require_number(r, "points", 0.0, true));
        const bool log_scale = r.value("log", false);
        if (points < 1) config_error("range.points", "must be >= 1");
        if (!(from < to) && points > 1) config_error("range", "needs from < to");
        if (log_scale && !(from > 0.0))
            config_error("range", "log scale needs from > 0");
        for (int i = 0; i < points; ++i) {
            const double s = points == 1 ? 0.0 : i / (points - 1.0);
            values.push_back(log_scale
                                 ? std::exp(std::lerp(std::log(from), std::log(to), s))
                                 : std::lerp(from, to, s));
        }
    } else {
        config_error("range", "missing (provide 'range' or 'values')");
    }
    for (std::size_t i = 1; i < values.size(); ++i)
        if (!(values[i] > values[i - 1]))
            config_error("range", "must be strictly increasing");
    return values;
}

Experiment load_custom(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }

    static const std::map<std::string, Metric> metrics = {
        {"throughput", Metric::Throughput},
        {"pi0", Metric::Pi0},
        {"p_lost", Metric::PLost},
        {"rho_s", Metric::RhoS},
        {"delay", Metric::Delay}};
    const std::string metric_name = j.value("metric", "");
    if (!metrics.count(metric_name))
        config_error("metric", "must be one of throughput|pi0|p_lost|rho_s|delay");
    const Metric metric = metrics.at(metric_name);

    static const std::set<std::string> sweeps = {"n",         "M",        "theta",
                                                 "eps_prime", "gamma_dB", "a_Mbps"};
    const std::string sweep = j.value("sweep", "");
    if (!sweeps.count(sweep))
        config_error("sweep", "must be one of n|M|theta|eps_prime|gamma_dB|a_Mbps");

    const json params = j.value("params", json::object());
    const double t_us = require_number(params, "T_us", 100.0, false);
    const double b_mhz = require_number(params, "B_MHz", 1.0, false);
    const double sigma = require_number(params, "sigma_h_sq", 1.0, false);
    const double gamma_db = require_number(params, "gamma_dB", 0.0, false);
    const int deadline = static_cast<int>(require_number(params, "M", 4.0, false));
    const double n_bits = require_number(params, "n", 0.0, false);
    const double theta = require_number(j, "theta", 1e-4, false);
    const double a_mbps = require_number(j, "a_Mbps", 0.0, metric == Metric::Delay);
    const double eps = require_number(j, "eps_prime", 1e-6, false);

    std::vector<hpf_protocol> protos;
    if (j.contains("protocols")) {
        for (const auto& s : j["protocols"]) {
            const std::string name = s.is_string() ? s.get<std::string>() : "";
            if (name == "t1") protos.push_back(HPF_PROTOCOL_T1);
            else if (name == "cc") protos.push_back(HPF_PROTOCOL_CC);
            else if (name == "ir") protos.push_back(HPF_PROTOCOL_IR);
            else config_error("protocols", "unknown protocol '" + name + "'");
        }
        if (protos.empty()) config_error("protocols", "must be non-empty");
    } else {
        protos = {HPF_PROTOCOL_T1, HPF_PROTOCOL_CC, HPF_PROTOCOL_IR};
    }

    Experiment e;
    e.metric = metric;
    e.comment = "# experiment=custom swept=" + sweep + " metric=" + metric_name;
    for (double v : parse_range(j)) {
        double point_gamma = gamma_db, point_n = n_bits, point_theta = theta;
        double point_a = a_mbps, point_eps = eps;
        int point_m = deadline;
        if (sweep == "n") point_n = v;
        else if (sweep == "M") point_m = static_cast<int>(v);
        else if (sweep == "theta") point_theta = v;
        else if (sweep == "eps_prime") point_eps = v;
        else if (sweep == "gamma_dB") point_gamma = v;
        else point_a = v;

        for (hpf_protocol proto : protos) {
            Job job;
            job.sweep_value = v;
            job.gamma_db = point_gamma;
            job.params = preset_params(point_gamma, 1.0, point_m, proto);
            job.params.slot_seconds = t_us * 1e-6;
            job.params.bandwidth_hz = b_mhz * 1e6;
            job.params.fading_power = sigma;
            job.params.packet_bits =
                point_n > 0.0 ? point_n : auto_packet_bits(point_gamma);
            job.theta = point_theta;
            job.a_bps = point_a * 1e6;
            job.eps_prime = point_eps;
            job.metric = metric;
            e.jobs.push_back(job);
        }
    }
    return e;
}

}  // namespace

std::vector<std::string> known_experiments() {
    std::vector<std::string> out;
    for (const auto& [name, builder] : registry()) out.push_back(name);
    return out;
}

int run_experiment(const std::string& id, const std::string& config_path,
                   const std::string& out_path, unsigned threads) {
    try {
        Experiment e;
        if (!config_path.empty()) {
            e = load_custom(config_path);
        } else {
            const auto it = registry().find(id);
            if (it == registry().end()) {
                std::cerr << "unknown experiment '" << id << "'; known:";
                for (const auto& name : known_experiments()) std::cerr << ' ' << name;
                std::cerr << '\n';
                return 1;
            }
            e = it->second();
        }

        std::vector<std::string> rows;
        parallel_rows(e.jobs, threads, rows);

        std::ostream* os = &std::cout;
        std::ofstream file;
        if (!out_path.empty()) {
            file.open(out_path, std::ios::binary);
            if (!file) {
                std::cerr << "cannot open output file: " << out_path << '\n';
                return 1;
            }
            os = &file;
        }
        *os << e.comment << '\n' << metric_header(e.metric) << '\n';
        for (const std::string& row : rows) *os << row << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace cli
