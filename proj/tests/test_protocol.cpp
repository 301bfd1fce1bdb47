#include <doctest.h>

#include "dfsbqc/analytics.hpp"
#include "dfsbqc/protocol.hpp"

#include <cmath>
#include <numbers>

using namespace dfsbqc;
namespace an = dfsbqc::analytics;

namespace {

constexpr double pi = std::numbers::pi;

ProtocolConfig entanglement_cfg(const NoiseParams& d, double T, std::uint64_t seed) {
    ProtocolConfig cfg;
    cfg.protocol = Protocol::entanglement;
    cfg.channel = ChannelModel{d, T};
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("qubit-level extraction") {
    SUBCASE("control |+_t> against target |V>") {
        const QubitState plus = make_rotated_qubit(1.2);
        const QubitState v{cplx{}, cplx{1, 0}};
        CHECK(dfse_success_prob(plus, v) == doctest::Approx(0.5).epsilon(1e-14));
        Rng rng(1);
        bool saw_success = false, saw_failure = false;
        for (int i = 0; i < 64 && !(saw_success && saw_failure); ++i) {
            auto r = dfse_qubit(plus, v, rng);
            if (r.success) {
                saw_success = true;
                // target stayed V, so the control collapsed to H
                CHECK(fidelity(r.posterior, QubitState{cplx{1, 0}, cplx{}}) ==
                      doctest::Approx(1.0).epsilon(1e-12));
            } else {
                saw_failure = true;
                CHECK(fidelity(r.posterior, QubitState{cplx{}, cplx{1, 0}}) ==
                      doctest::Approx(1.0).epsilon(1e-12));
            }
        }
        CHECK(saw_success);
        CHECK(saw_failure);
    }
    SUBCASE("all-H input can never read V") {
        const QubitState h{cplx{1, 0}, cplx{}};
        CHECK(dfse_success_prob(h, h) == 0.0);
    }
    SUBCASE("symmetric channel point gives one half at every exponent") {
        const NoiseParams sym = make_noise_params(0.5, 0.5);
        const QubitState anc = normalized(QubitState{sym.a, sym.d});
        QubitState sig = normalized(QubitState{sym.a, std::polar(1.0, 0.75) * sym.d});
        Rng rng(2);
        for (int i = 0; i < 10; ++i) {
            CHECK(dfse_success_prob(sig, anc) == doctest::Approx(0.5).epsilon(1e-12));
            sig = dfse_qubit(sig, anc, rng).posterior;
        }
    }
}

TEST_CASE("state-level extraction on a projected pair") {
    // both photons in mode s; success probability 2|ad|^2/(|a|^2+|d|^2)^2
    const NoiseParams d = make_noise_params(0.8, 0.25, 0.2, 0.5, 1.1, 2.3);
    const double tk = 3 * pi / 4, tk2 = pi / 2;
    const std::uint32_t bins[2] = {1, 2};
    Rng rng(3);
    auto pair = tensor(make_single_photon(1, make_rotated_qubit(tk)),
                       make_single_photon(2, make_rotated_qubit(tk2)));
    pair = transmit(pair, ChannelModel{d, 1.0}, bins, rng);
    StateVector proj;
    proj.set_modes(pair.mode_set());
    const auto s_modes = arm_modes(bins, Arm::S);
    for (const auto& [b, amp] : pair.terms())
        if (b.total_at(s_modes) == 2) proj.add_term(b, amp);
    proj.normalize();

    const double s = std::norm(d.a) + std::norm(d.d);
    const double expect = 2.0 * std::norm(d.a) * std::norm(d.d) / (s * s);
    bool saw_success = false;
    for (std::uint64_t seed = 0; seed < 60 && !saw_success; ++seed) {
        Rng r2 = trial_rng(77, seed);
        auto res = dfse(proj, PolSite{1, Arm::S}, PolSite{2, Arm::S}, r2);
        CHECK(res.prob_v == doctest::Approx(expect).epsilon(1e-12));
        if (res.success) {
            saw_success = true;
            auto q = extract_qubit(res.posterior, PolSite{1, Arm::S});
            CHECK(fidelity(q, make_rotated_qubit(tk - tk2)) ==
                  doctest::Approx(1.0).epsilon(1e-10));
        }
    }
    CHECK(saw_success);
}

TEST_CASE("entanglement trial") {
    SUBCASE("identity channel succeeds deterministically") {
        Rng rng(4);
        auto cfg = entanglement_cfg(make_noise_params(1.0, 1.0), 1.0, 10);
        auto out = run_entanglement_trial(cfg, Angle8{3}, rng);
        REQUIRE(out.success);
        CHECK(out.channel_uses == 2);
        CHECK(fidelity(*out.output, make_rotated_qubit(Angle8{3}.radians())) ==
              doctest::Approx(1.0).epsilon(1e-12));
        // transcript records the (2,0) readout
        REQUIRE(out.transcript.size() >= 2);
        CHECK(out.transcript[0].tag == "qnd_s");
        CHECK(out.transcript[0].value == 2.0);
    }
    SUBCASE("every delivered pair succeeds for any unitary") {
        Rng rng(5);
        for (int i = 0; i < 4; ++i) {
            auto cfg = entanglement_cfg(sample_delta(rng, DeltaScheme::haar_per_arm), 1.0,
                                        100 + i);
            auto est = estimate_success(cfg, 10000);
            CHECK(est.successes == est.trials);
        }
    }
    SUBCASE("balanced moduli visit the mixed branch half the time") {
        const NoiseParams d = make_noise_params(0.5, 0.5, 0.4, 1.3, 2.2, 0.1);
        auto cfg = entanglement_cfg(d, 1.0, 11);
        int mixed = 0;
        const int trials = 20000;
        for (int i = 0; i < trials; ++i) {
            Rng rng = trial_rng(cfg.seed, i);
            auto out = run_entanglement_trial(cfg, random_angle8(rng), rng);
            REQUIRE(out.success);
            if (out.transcript[0].value == 1.0) ++mixed;
        }
        const double f = double(mixed) / trials;
        const double sigma = std::sqrt(0.25 / trials);
        CHECK(std::abs(f - 0.5) < 3 * sigma);  // |ac|^2 + |bd|^2 = 1/2 here
    }
}

TEST_CASE("success estimates") {
    SUBCASE("full transmission pins the estimate at one") {
        auto cfg = entanglement_cfg(make_noise_params(0.7, 0.3), 1.0, 21);
        auto est = estimate_success(cfg, 500);
        CHECK(est.p_hat == 1.0);
        CHECK(est.stderr_ == 0.0);
    }
    SUBCASE("half transmission estimates T^2") {
        auto cfg = entanglement_cfg(make_noise_params(0.6, 0.8, 0.2, 0.9, 1.4, 2.0), 0.5, 22);
        auto est = estimate_success(cfg, 30000);
        CHECK(std::abs(est.p_hat - 0.25) < 3 * est.stderr_);
    }
    SUBCASE("parallel and serial paths agree exactly") {
        ProtocolConfig cfg;
        cfg.protocol = Protocol::single_photon;
        cfg.pairs_per_batch = 3;
        cfg.channel = ChannelModel{make_noise_params(0.75, 0.35, 1.0, 0.1, 0.2, 0.3), 0.6};
        cfg.seed = 23;
        auto par = estimate_success(cfg, 4000);
        auto ser = estimate_success_serial(cfg, 4000);
        CHECK(par.successes == ser.successes);
        CHECK(par.p_hat == ser.p_hat);
    }
}

TEST_CASE("single-photon trial") {
    SUBCASE("equal angles produce the zero-angle qubit") {
        ProtocolConfig cfg;
        cfg.protocol = Protocol::single_photon;
        cfg.pairs_per_batch = 1;
        cfg.channel = ChannelModel{make_noise_params(0.7, 0.45, 0.8, 0.2, 1.9, 0.6), 1.0};
        bool saw_success = false;
        for (std::uint64_t i = 0; i < 40 && !saw_success; ++i) {
            Rng rng = trial_rng(31, i);
            auto out =
                run_single_photon_trial(cfg, {Angle8{5}, Angle8{5}}, rng);
            CHECK(out.channel_uses == 2);
            if (out.success) {
                saw_success = true;
                CHECK(*out.output_angle == doctest::Approx(0.0));
                CHECK(fidelity(*out.output, make_rotated_qubit(0.0)) ==
                      doctest::Approx(1.0).epsilon(1e-10));
            }
        }
        CHECK(saw_success);
    }
    SUBCASE("per-batch success rate follows the binomial formula") {
        ProtocolConfig cfg;
        cfg.protocol = Protocol::single_photon;
        cfg.pairs_per_batch = 20;
        cfg.channel = ChannelModel{make_noise_params(0.85, 0.3, 0.0, 0.7, 0.4, 2.8), 0.5};
        cfg.seed = 32;
        auto est = estimate_success(cfg, 20000);
        const double expect = an::p_single_photon(0.5, 20);
        CHECK(std::abs(est.p_hat - expect) < 3 * est.stderr_);
    }
    SUBCASE("lossless single pair succeeds half the time") {
        ProtocolConfig cfg;
        cfg.protocol = Protocol::single_photon;
        cfg.pairs_per_batch = 1;
        cfg.channel = ChannelModel{make_noise_params(0.55, 0.75, 0.3, 0.3, 0.3, 0.3), 1.0};
        cfg.seed = 33;
        auto est = estimate_success(cfg, 20000);
        CHECK(std::abs(est.p_hat - 0.5) < 3 * est.stderr_);
    }
}

TEST_CASE("coherent trial, sampling path") {
    const NoiseParams sym = make_noise_params(0.5, 0.5);

    SUBCASE("no ancilla pulse means certain failure") {
        ProtocolConfig cfg;
        cfg.protocol = Protocol::coherent;
        cfg.channel = ChannelModel{sym, 1.0};
        cfg.mu = 0.0;
        Rng rng(41);
        for (int i = 0; i < 50; ++i) {
            auto out = run_coherent_trial(cfg, Angle8{2}, rng);
            CHECK_FALSE(out.success);
            CHECK(out.channel_uses == 2);
        }
    }
    SUBCASE("matches the closed form at the symmetric point") {
        ProtocolConfig cfg;
        cfg.protocol = Protocol::coherent;
        cfg.channel = ChannelModel{sym, 0.5};
        cfg.mu = 1e5;
        cfg.seed = 42;
        auto est = estimate_success(cfg, 20000);
        const double expect = an::p_coherent(0.5, 1e5, sym);
        CHECK(std::abs(est.p_hat - expect) < 3 * est.stderr_);
    }
    SUBCASE("exact cascade tracks the trajectory estimate off the symmetric point") {
        const NoiseParams skew = make_noise_params(0.9, 0.1, 0.5, 0.1, 1.2, 2.0);
        ProtocolConfig cfg;
        cfg.protocol = Protocol::coherent;
        cfg.channel = ChannelModel{skew, 0.5};
        cfg.mu = 20.0;
        cfg.seed = 43;
        auto est = estimate_success(cfg, 20000);
        const double exact = an::p_coherent_exact_cascade(0.5, 20.0, skew);
        CHECK(std::abs(est.p_hat - exact) < 3 * est.stderr_);
    }
}

TEST_CASE("coherent trial, full state vector") {
    const NoiseParams d = make_noise_params(0.55, 0.4, 0.4, 1.0, 0.3, 2.1);
    ProtocolConfig full;
    full.protocol = Protocol::coherent;
    full.channel = ChannelModel{d, 0.6};
    full.mu = 1.0;
    full.coherent_full_vector = true;
    full.seed = 51;
    ProtocolConfig sampled = full;
    sampled.coherent_full_vector = false;
    sampled.seed = 52;

    auto est_full = estimate_success(full, 800);
    auto est_sampled = estimate_success(sampled, 40000);
    const double sigma = std::hypot(est_full.stderr_, est_sampled.stderr_);
    CHECK(std::abs(est_full.p_hat - est_sampled.p_hat) < 3 * sigma);

    SUBCASE("successful full-vector trials output the rotated qubit") {
        int seen = 0;
        for (std::uint64_t i = 0; i < 200 && seen < 5; ++i) {
            Rng rng = trial_rng(53, i);
            auto out = run_coherent_trial(full, Angle8{6}, rng);
            if (out.success) {
                ++seen;
                CHECK(fidelity(*out.output, make_rotated_qubit(Angle8{6}.radians())) >
                      1.0 - 1e-9);
            }
        }
        CHECK(seen > 0);
    }
}

TEST_CASE("trial transcripts replay deterministically") {
    ProtocolConfig cfg;
    cfg.protocol = Protocol::single_photon;
    cfg.pairs_per_batch = 4;
    cfg.channel = ChannelModel{make_noise_params(0.65, 0.5, 0.2, 0.2, 0.2, 0.2), 0.7};
    cfg.seed = 61;
    auto run_once = [&](std::uint64_t idx) {
        Rng rng = trial_rng(cfg.seed, idx);
        return run_trial(cfg, rng);
    };
    for (std::uint64_t idx : {0ull, 7ull, 123ull}) {
        auto a = run_once(idx);
        auto b = run_once(idx);
        CHECK(a.success == b.success);
        REQUIRE(a.transcript.size() == b.transcript.size());
        for (std::size_t i = 0; i < a.transcript.size(); ++i) {
            CHECK(a.transcript[i].tag == b.transcript[i].tag);
            CHECK(a.transcript[i].value == b.transcript[i].value);
        }
    }
}

TEST_CASE("angle compensation") {
    Rng rng(71);
    SUBCASE("zero measurement angle always reads plus") {
        CHECK(verify_angle_compensation(Angle8{0}, 0.0, 0, rng, 5000));
        CHECK(verify_angle_compensation(Angle8{5}, 0.0, 1, rng, 5000));
    }
    SUBCASE("pi measurement angle never reads plus") {
        CHECK(verify_angle_compensation(Angle8{2}, pi, 0, rng, 5000));
        CHECK(verify_angle_compensation(Angle8{2}, pi, 1, rng, 5000));
    }
    SUBCASE("quarter rotation lands on one half for every angle and bit") {
        for (int k = 0; k < 8; ++k)
            for (int r = 0; r < 2; ++r)
                CHECK(verify_angle_compensation(Angle8{k}, pi / 2, r, rng, 20000));
    }
}
