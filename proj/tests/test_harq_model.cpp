#include <doctest.h>

#include <cmath>
#include <random>

#include "harq_model.hpp"
#include "oracles.hpp"
#include "simulator.hpp"

using namespace harqperf;

namespace {

ProtocolParams base_params(Protocol proto = Protocol::T1) {
    ProtocolParams p;
    p.packet_bits = 82.0;
    p.slot_seconds = 1e-4;
    p.bandwidth_hz = 1e6;
    p.deadline = 4;
    p.snr = 1.0;  // 0 dB
    p.fading_power = 1.0;
    p.protocol = proto;
    return p;
}

double cumulative(const TransitionProbabilities& probs, int upto) {
    double prod = 1.0;
    for (int j = 0; j <= upto; ++j) prod *= probs.p[j];
    return prod;
}

}  // namespace

TEST_CASE("decode threshold") {
    ProtocolParams p = base_params();
    // 2^0.82 - 1
    CHECK(decode_threshold(p) == doctest::Approx(0.76540599258131).epsilon(1e-14));
    p.packet_bits = 0.0;
    CHECK(decode_threshold(p) == 0.0);
    p.packet_bits = 100.0;
    CHECK(decode_threshold(p) == doctest::Approx(1.0).epsilon(1e-15));
    p.packet_bits = -1.0;
    CHECK_THROWS_AS(decode_threshold(p), std::invalid_argument);
}

TEST_CASE("T1 transition probabilities") {
    ProtocolParams p = base_params();
    const TransitionProbabilities probs = transition_probs_t1(p);
    REQUIRE(probs.p.size() == 4);
    for (double v : probs.p)
        CHECK(v == doctest::Approx(0.534854952804193).epsilon(1e-14));

    p.packet_bits = 0.0;
    p.deadline = 2;
    const TransitionProbabilities zero = transition_probs_t1(p);
    CHECK(zero.p[0] == 0.0);
    CHECK(zero.p[1] == 0.0);

    p.packet_bits = 1e4;  // enormous threshold: failure certain
    const TransitionProbabilities one = transition_probs_t1(p);
    CHECK(one.p[0] == doctest::Approx(1.0));
}

TEST_CASE("CC transition probabilities: closed forms") {
    ProtocolParams p = base_params(Protocol::CC);
    const TransitionProbabilities probs = transition_probs_cc(p);
    REQUIRE(probs.p.size() == 4);
    CHECK(probs.p[0] == doctest::Approx(0.534854952804193).epsilon(1e-14));
    // (1 - e^{-k}(1+k)) / (1 - e^{-k}) at k = 2^0.82 - 1
    CHECK(probs.p[1] == doctest::Approx(0.334352604053523).epsilon(1e-13));
    CHECK(probs.p[2] == doctest::Approx(0.23809400670614).epsilon(1e-13));
    CHECK(!probs.degenerate_ratio);
}

TEST_CASE("CC degenerate ratio at kappa = 0") {
    ProtocolParams p = base_params(Protocol::CC);
    p.packet_bits = 0.0;
    const TransitionProbabilities probs = transition_probs_cc(p);
    for (double v : probs.p) CHECK(v == 0.0);
    CHECK(probs.degenerate_ratio);
}

TEST_CASE("CC single attempt equals the T1 first attempt") {
    ProtocolParams p = base_params(Protocol::CC);
    p.deadline = 1;
    const TransitionProbabilities probs = transition_probs_cc(p);
    REQUIRE(probs.p.size() == 1);
    CHECK(probs.p[0] == doctest::Approx(0.534854952804193).epsilon(1e-14));
}

TEST_CASE("CC cumulative products telescope to the gamma CDF") {
    ProtocolParams p = base_params(Protocol::CC);
    p.deadline = 6;
    const double x = decode_threshold(p) / p.fading_power;
    const TransitionProbabilities probs = transition_probs_cc(p);
    double factorial = 1.0;
    for (int i = 0; i < 6; ++i) {
        if (i > 0) factorial *= i;
        const double cdf = num::lower_incomplete_gamma(i + 1, x) / factorial;
        CHECK(cumulative(probs, i) == doctest::Approx(cdf).epsilon(1e-12));
    }
}

TEST_CASE("IR transition probabilities") {
    ProtocolParams p = base_params(Protocol::IR);
    const TransitionProbabilities ir = transition_probs_ir(p);
    const TransitionProbabilities cc = transition_probs_cc(base_params(Protocol::CC));
    REQUIRE(ir.p.size() == 4);
    CHECK(ir.p[0] == doctest::Approx(0.534854952804193).epsilon(1e-14));
    // strictly better than chase combining past the first attempt
    CHECK(ir.p[1] > 0.0);
    CHECK(ir.p[1] < cc.p[1]);

    SUBCASE("grid refinement is stable") {
        const TransitionProbabilities fine = transition_probs_ir(p, 8192);
        for (int i = 0; i < 4; ++i)
            CHECK(std::abs(ir.p[i] - fine.p[i]) < 1e-6);
    }
    SUBCASE("resolution floor enforced") {
        CHECK_THROWS_AS(transition_probs_ir(p, 32), std::invalid_argument);
    }
    SUBCASE("zero threshold never fails") {
        ProtocolParams z = p;
        z.packet_bits = 0.0;
        const TransitionProbabilities probs = transition_probs_ir(z);
        for (double v : probs.p) CHECK(v == 0.0);
        CHECK(probs.degenerate_ratio);
    }
    SUBCASE("single attempt matches p_0") {
        ProtocolParams one = p;
        one.deadline = 1;
        const TransitionProbabilities probs = transition_probs_ir(one);
        REQUIRE(probs.p.size() == 1);
        CHECK(probs.p[0] == doctest::Approx(0.534854952804193).epsilon(1e-14));
    }
}

TEST_CASE("IR second attempt matches direct quadrature") {
    // F_2(c)/F_1(c) via one smooth integral: the CDF of log(1+snr*z) is
    // G(w) = 1 - exp(-(e^w - 1)/(snr*sigma)), so
    // F_2(c) = int_0^c g(u) G(c-u) du with g = G'.
    ProtocolParams p = base_params(Protocol::IR);
    for (double snr : {1.0, 3.16227766016838}) {
        p.snr = snr;
        const double kappa = decode_threshold(p);
        const double c = std::log1p(snr * kappa);
        auto G = [&](double w) { return -std::expm1(-std::expm1(w) / snr); };
        auto g = [&](double u) {
            const double eu = std::exp(u);
            return std::exp(-(eu - 1.0) / snr) * eu / snr;
        };
        const double f1 = G(c);
        const double f2 = oracle::integrate([&](double u) { return g(u) * G(c - u); },
                                            0.0, c, 1e-13);
        const TransitionProbabilities ir = transition_probs_ir(p);
        CHECK(ir.p[1] == doctest::Approx(f2 / f1).epsilon(2e-7));
        // and the grid halves the error in h^2 fashion
        const TransitionProbabilities fine = transition_probs_ir(p, 16384);
        CHECK(fine.p[1] == doctest::Approx(f2 / f1).epsilon(2e-8));
    }
}

TEST_CASE("analytic probabilities agree with the Monte Carlo oracle") {
    for (Protocol proto : {Protocol::T1, Protocol::CC, Protocol::IR}) {
        ProtocolParams p = base_params(proto);
        const TransitionProbabilities probs = transition_probs(p);
        const sim::EstimatedProbs est =
            sim::estimate_transition_probs(p, 20240 + static_cast<int>(proto), 1000000);
        for (int m = 0; m < p.deadline; ++m) {
            const double sigma = std::max(est.std_err[m], 1e-9);
            CHECK(std::abs(est.p_hat[m] - probs.p[m]) <= 3.0 * sigma);
        }
    }
}

TEST_CASE("steady state: fixed cases") {
    ProtocolParams p = base_params();
    p.deadline = 2;
    TransitionProbabilities probs;
    probs.p = {0.5, 0.5};
    const SteadyState ss = steady_state(probs, p);
    CHECK(ss.pi[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(ss.pi[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(ss.p_lost == doctest::Approx(0.25).epsilon(1e-15));

    probs.p = {0.0, 0.0};
    const SteadyState ideal = steady_state(probs, p);
    CHECK(ideal.pi[0] == 1.0);
    CHECK(ideal.pi[1] == 0.0);
    CHECK(ideal.p_lost == 0.0);
    CHECK(ideal.throughput_bps ==
          doctest::Approx(p.packet_bits / p.slot_seconds).epsilon(1e-15));
}

TEST_CASE("steady state for T1 at 0 dB, n = 82, M = 4") {
    const ProtocolParams p = base_params();
    const SteadyState ss = steady_state(transition_probs_t1(p), p);
    CHECK(ss.pi[0] == doctest::Approx(0.506603414995515).epsilon(1e-13));
    CHECK(ss.p_lost == doctest::Approx(0.0818359422233161).epsilon(1e-12));
}

TEST_CASE("pi is the stationary vector of the chain matrix") {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> prob(0.0, 1.0);
    std::uniform_int_distribution<int> dim(1, 8);
    for (int trial = 0; trial < 100; ++trial) {
        const int m = dim(rng);
        TransitionProbabilities probs;
        probs.p.resize(m);
        for (double& v : probs.p) v = prob(rng);

        ProtocolParams params = base_params();
        params.deadline = m;
        const SteadyState ss = steady_state(probs, params);

        double sum = 0.0;
        for (double v : ss.pi) sum += v;
        CHECK(std::abs(sum - 1.0) <= 1e-12);

        // independent assembly of P: first row 1-p_j (last column 1),
        // subdiagonal p_j
        for (int r = 0; r < m; ++r) {
            double want = 0.0;
            for (int c = 0; c < m; ++c) {
                double entry = 0.0;
                if (r == 0) entry = (c == m - 1) ? 1.0 : 1.0 - probs.p[c];
                else if (r == c + 1) entry = probs.p[c];
                want += entry * ss.pi[c];
            }
            CHECK(std::abs(want - ss.pi[r]) <= 1e-12);
        }

        // transition_matrix agrees with the independent assembly
        const num::SquareMatrix mat = transition_matrix(probs);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) {
                double entry = 0.0;
                if (r == 0) entry = (c == m - 1) ? 1.0 : 1.0 - probs.p[c];
                else if (r == c + 1) entry = probs.p[c];
                CHECK(mat.at(r, c) == entry);
            }
    }
}

TEST_CASE("protocol dominance: cumulative failures, loss and throughput") {
    for (double snr : {1.0, 3.16227766016838, 10.0}) {
        ProtocolParams p = base_params();
        p.snr = snr;
        p.packet_bits =
            default_packet_bits(snr, p.slot_seconds, p.bandwidth_hz, p.fading_power);
        p.deadline = 6;

        p.protocol = Protocol::T1;
        const TransitionProbabilities t1 = transition_probs(p);
        p.protocol = Protocol::CC;
        const TransitionProbabilities cc = transition_probs(p);
        p.protocol = Protocol::IR;
        const TransitionProbabilities ir = transition_probs(p);

        for (int i = 0; i < p.deadline; ++i) {
            CHECK(cumulative(ir, i) <= cumulative(cc, i) + 1e-12);
            CHECK(cumulative(cc, i) <= cumulative(t1, i) + 1e-12);
        }
        const SteadyState st1 = steady_state(t1, p);
        const SteadyState scc = steady_state(cc, p);
        const SteadyState sir = steady_state(ir, p);
        CHECK(sir.p_lost <= scc.p_lost + 1e-12);
        CHECK(scc.p_lost <= st1.p_lost + 1e-12);
        CHECK(sir.throughput_bps >= scc.throughput_bps - 1e-12);
        CHECK(scc.throughput_bps >= st1.throughput_bps - 1e-12);
    }
}

TEST_CASE("packet loss is non-increasing in the deadline") {
    for (Protocol proto : {Protocol::T1, Protocol::CC, Protocol::IR}) {
        double prev = 1.0;
        for (int m = 1; m <= 8; ++m) {
            ProtocolParams p = base_params(proto);
            p.deadline = m;
            const SteadyState ss = steady_state(transition_probs(p), p);
            CHECK(ss.p_lost <= prev + 1e-15);
            prev = ss.p_lost;
        }
    }
}

TEST_CASE("throughput-maximizing packet size matches the channel") {
    CHECK(default_packet_bits(1.0, 1e-4, 1e6, 1.0) == 82);
    CHECK(default_packet_bits(3.16227766016838, 1e-4, 1e6, 1.0) == 155);
    CHECK(default_packet_bits(10.0, 1e-4, 1e6, 1.0) == 252);
}
