#include <doctest.h>

#include "dfsbqc/channel.hpp"

#include <cmath>
#include <numbers>

using namespace dfsbqc;

namespace {

constexpr double pi = std::numbers::pi;

cplx term_amp(const StateVector& st, const BasisState& b) {
    auto it = st.terms().find(b);
    return it == st.terms().end() ? cplx{} : it->second;
}

}  // namespace

TEST_CASE("noise parameter validation and sampling") {
    CHECK_THROWS(make_noise_params(1.2, 0.5));
    CHECK(noise_params_valid(make_noise_params(0.3, 0.9, 0.1, 0.2, 0.3, 0.4)));
    NoiseParams broken;
    broken.b = cplx{1.0, 0.0};  // |a|^2+|b|^2 = 2
    CHECK_FALSE(noise_params_valid(broken));
    CHECK_THROWS(validate_noise_params(broken));

    Rng rng(1);
    double sum_a2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        auto d = sample_delta(rng, DeltaScheme::haar_per_arm);
        REQUIRE(noise_params_valid(d));
        sum_a2 += std::norm(d.a);
    }
    // |a|^2 is uniform on [0,1]: mean 1/2, variance 1/12
    const double mean = sum_a2 / n;
    const double sigma = std::sqrt(1.0 / 12.0 / n);
    CHECK(std::abs(mean - 0.5) < 3 * sigma);
}

TEST_CASE("pbs split and merge") {
    const std::uint32_t bins[1] = {1};
    auto photon = make_single_photon(1, make_rotated_qubit(0.9));

    SUBCASE("split routes V to arm L") {
        auto split = pbs_split(photon, bins);
        const double r = 1.0 / std::numbers::sqrt2;
        CHECK(std::abs(term_amp(split, BasisState::single(ModeLabel{1, Arm::S, Pol::H})) -
                       cplx{r, 0}) < 1e-14);
        CHECK(std::abs(term_amp(split, BasisState::single(ModeLabel{1, Arm::L, Pol::V})) -
                       std::polar(r, 0.9)) < 1e-14);
    }
    SUBCASE("split rejects photons already in the arm register") {
        auto split = pbs_split(photon, bins);
        CHECK_THROWS(pbs_split(split, bins));
    }
    SUBCASE("merge undoes split on loss-free states") {
        auto round = pbs_merge(pbs_split(photon, bins), bins);
        CHECK(state_fidelity(round, photon) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("ideal fiber returns both polarizations in mode s") {
        Rng rng(4);
        auto out = transmit(photon, ChannelModel{make_noise_params(1.0, 1.0), 1.0}, bins, rng);
        CHECK(state_fidelity(out, photon) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("single rotated photon after a general fiber pair") {
    // (a|H>_s + b|V>_l) + e^{i t}(c|H>_l + d|V>_s), all over sqrt2
    const NoiseParams d = make_noise_params(0.65, 0.3, 0.5, 1.7, 2.9, 0.25);
    const double t = 3 * pi / 4;
    const std::uint32_t bins[1] = {1};
    Rng rng(8);
    auto out = transmit(make_single_photon(1, make_rotated_qubit(t)),
                        ChannelModel{d, 1.0}, bins, rng);
    const double r = 1.0 / std::numbers::sqrt2;
    const cplx ph = std::polar(1.0, t);
    CHECK(std::abs(term_amp(out, BasisState::single(ModeLabel{1, Arm::S, Pol::H})) - r * d.a) <
          1e-14);
    CHECK(std::abs(term_amp(out, BasisState::single(ModeLabel{1, Arm::L, Pol::V})) - r * d.b) <
          1e-14);
    CHECK(std::abs(term_amp(out, BasisState::single(ModeLabel{1, Arm::L, Pol::H})) -
                   r * ph * d.c) < 1e-14);
    CHECK(std::abs(term_amp(out, BasisState::single(ModeLabel{1, Arm::S, Pol::V})) -
                   r * ph * d.d) < 1e-14);
}

TEST_CASE("rotated pair matches the expected post-merge expression") {
    const NoiseParams d = make_noise_params(0.7, 0.4, 1.1, 0.3, 2.2, 0.9);
    const double t = pi / 2;
    const std::uint32_t bins[2] = {1, 2};
    Rng rng(9);
    auto got = transmit(rotate_z(make_bell_psi_plus(1, 2), PolSite{1, Arm::S}, t),
                        ChannelModel{d, 1.0}, bins, rng);

    // {(a|H>_s + b|V>_l)^(1) (c|H>_l + d|V>_s)^(2)
    //  + e^{it} (c|H>_l + d|V>_s)^(1) (a|H>_s + b|V>_l)^(2)} / sqrt2
    auto branch = [&](std::uint32_t bin, cplx f_sh, cplx f_lv, cplx f_lh, cplx f_sv) {
        StateVector s;
        s.set_modes(bin_modes(bin));
        s.add_term(BasisState::single(ModeLabel{bin, Arm::S, Pol::H}), f_sh);
        s.add_term(BasisState::single(ModeLabel{bin, Arm::L, Pol::V}), f_lv);
        s.add_term(BasisState::single(ModeLabel{bin, Arm::L, Pol::H}), f_lh);
        s.add_term(BasisState::single(ModeLabel{bin, Arm::S, Pol::V}), f_sv);
        return s;
    };
    StateVector t1 = tensor(branch(1, d.a, d.b, cplx{}, cplx{}),
                            branch(2, cplx{}, cplx{}, d.c, d.d));
    StateVector t2 = tensor(branch(1, cplx{}, cplx{}, d.c, d.d),
                            branch(2, d.a, d.b, cplx{}, cplx{}));
    StateVector expected;
    expected.set_modes(t1.mode_set());
    const double r = 1.0 / std::numbers::sqrt2;
    for (const auto& [b, amp] : t1.terms()) expected.add_term(b, r * amp);
    for (const auto& [b, amp] : t2.terms())
        expected.add_term(b, r * std::polar(1.0, t) * amp);

    CHECK(state_fidelity(got, expected) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("collective unitary properties") {
    const std::uint32_t bins[2] = {1, 2};

    SUBCASE("trivial parameters act as the identity") {
        auto st = pbs_split(make_single_photon(1, make_rotated_qubit(1.3)),
                            std::array<std::uint32_t, 1>{1});
        auto out = apply_collective_unitary(st, make_noise_params(1.0, 1.0),
                                            std::array<std::uint32_t, 1>{1});
        CHECK(state_fidelity(out, st) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("full column swap flips polarizations in both arms") {
        auto st = pbs_split(make_single_photon(1, make_rotated_qubit(0.0)),
                            std::array<std::uint32_t, 1>{1});
        auto out = apply_collective_unitary(st, make_noise_params(0.0, 0.0),
                                            std::array<std::uint32_t, 1>{1});
        const double r = 1.0 / std::numbers::sqrt2;
        CHECK(std::abs(std::abs(term_amp(out, BasisState::single(ModeLabel{1, Arm::S, Pol::V}))) -
                       r) < 1e-14);
        CHECK(std::abs(std::abs(term_amp(out, BasisState::single(ModeLabel{1, Arm::L, Pol::H}))) -
                       r) < 1e-14);
    }
    SUBCASE("photon number and norm are preserved on Fock states") {
        auto pulse = pbs_split(make_coherent_pulse(2.0, make_rotated_qubit(0.5), 14, 1),
                               std::array<std::uint32_t, 1>{1});
        Rng rng(2);
        auto d = sample_delta(rng, DeltaScheme::haar_per_arm);
        auto out = apply_collective_unitary(pulse, d, std::array<std::uint32_t, 1>{1});
        CHECK(out.norm_sq() == doctest::Approx(1.0).epsilon(1e-12));
        auto before = photon_number_distribution(pulse, bin_modes(1));
        auto after = photon_number_distribution(out, bin_modes(1));
        for (const auto& [n, p] : before)
            CHECK(after.at(n) == doctest::Approx(p).epsilon(1e-10));
    }
    SUBCASE("bin-by-bin application equals joint application") {
        Rng rng(3);
        auto d = sample_delta(rng, DeltaScheme::haar_per_arm);
        auto st = pbs_split(tensor(make_single_photon(1, make_rotated_qubit(0.2)),
                                   make_single_photon(2, make_rotated_qubit(2.7))),
                            bins);
        auto joint = apply_collective_unitary(st, d, bins);
        auto seq = apply_collective_unitary(
            apply_collective_unitary(st, d, std::array<std::uint32_t, 1>{1}), d,
            std::array<std::uint32_t, 1>{2});
        CHECK(state_fidelity(joint, seq) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("coherent pulse maps to the four-mode coherent state") {
        // Every pulse photon picks up the same arm rotation, so the output is
        // the coherent state over (a,d,c,b) with the V occupations traded by
        // the merge.
        const double mu = 1.5;
        const NoiseParams d = make_noise_params(0.6, 0.3, 0.8, 0.1, 1.9, 2.4);
        const int cutoff = coherent_cutoff(mu);
        Rng rng(6);
        auto out = transmit(make_coherent_pulse(mu, make_rotated_qubit(0.0), cutoff, 1),
                            ChannelModel{d, 1.0}, std::array<std::uint32_t, 1>{1}, rng);

        // direct construction: independent coherent amplitudes per mode
        const double amp0 = std::sqrt(mu / 2.0);
        const std::array<std::pair<ModeLabel, cplx>, 4> alphas{{
            {ModeLabel{1, Arm::S, Pol::H}, amp0 * d.a},
            {ModeLabel{1, Arm::S, Pol::V}, amp0 * d.d},
            {ModeLabel{1, Arm::L, Pol::H}, amp0 * d.c},
            {ModeLabel{1, Arm::L, Pol::V}, amp0 * d.b},
        }};
        StateVector direct = StateVector::vacuum({});
        for (const auto& [mode, alpha] : alphas) {
            StateVector one;
            one.set_modes({mode});
            double lognorm = -std::norm(alpha) / 2.0;
            for (int n = 0; n <= cutoff; ++n) {
                double fact = 1.0;
                for (int i = 2; i <= n; ++i) fact *= i;
                one.add_term([&] {
                    BasisState b;
                    b.set_count(mode, n);
                    return b;
                }(), std::exp(cplx{lognorm, 0.0}) * std::pow(alpha, n) / std::sqrt(fact));
            }
            direct = tensor(direct, one);
        }
        direct.normalize();
        CHECK(state_fidelity(out, direct) > 1.0 - 1e-9);
    }
}

TEST_CASE("loss channel") {
    const std::uint32_t bins[2] = {1, 2};

    SUBCASE("full transmission is the identity") {
        Rng rng(5);
        auto st = pbs_split(make_bell_psi_plus(1, 2), bins);
        auto out = apply_loss(st, 1.0, bins, rng);
        CHECK(state_fidelity(out, st) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("two photons both survive with frequency T^2") {
        Rng rng(10);
        const double T = 0.5;
        auto st = pbs_split(rotate_z(make_bell_psi_plus(1, 2), PolSite{1, Arm::S}, 1.0), bins);
        const int trials = 100000;
        int both = 0;
        for (int i = 0; i < trials; ++i) {
            auto lossy = apply_loss(st, T, bins, rng);
            int total = 0;
            for (const auto& [b, amp] : lossy.terms()) {
                total = b.total();
                break;
            }
            if (total == 2) ++both;
        }
        const double p = double(both) / trials;
        const double sigma = std::sqrt(0.25 * 0.75 / trials);
        CHECK(std::abs(p - 0.25) < 3 * sigma);
    }
    SUBCASE("thinned coherent pulse has Poisson mean T mu") {
        Rng rng(12);
        const double mu = 4.0, T = 0.25;
        auto pulse = pbs_split(
            make_coherent_pulse(mu, QubitState{cplx{1, 0}, cplx{}}, coherent_cutoff(mu), 1),
            std::array<std::uint32_t, 1>{1});
        const int trials = 20000;
        double sum = 0.0;
        for (int i = 0; i < trials; ++i) {
            auto lossy = apply_loss(pulse, T, std::array<std::uint32_t, 1>{1}, rng);
            sum += measure_photon_number(lossy, bin_modes(1), rng).outcome;
        }
        const double mean = sum / trials;
        const double sigma = std::sqrt(T * mu / trials);
        CHECK(std::abs(mean - T * mu) < 3 * sigma);
    }
    SUBCASE("zero transmission empties the line") {
        Rng rng(13);
        auto st = pbs_split(make_bell_psi_plus(1, 2), bins);
        auto out = apply_loss(st, 0.0, bins, rng);
        for (const auto& [b, amp] : out.terms()) CHECK(b.total() == 0);
    }
    SUBCASE("transmission outside [0,1] is rejected") {
        Rng rng(14);
        auto st = pbs_split(make_bell_psi_plus(1, 2), bins);
        CHECK_THROWS(apply_loss(st, 1.5, bins, rng));
    }
}
