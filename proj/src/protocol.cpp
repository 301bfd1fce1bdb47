#include "dfsbqc/protocol.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dfsbqc {

namespace {

constexpr double kFidelityGate = 1.0 - 1e-9;

void assert_output_fidelity(const QubitState& out, double angle, const char* who) {
    if (fidelity(out, make_rotated_qubit(angle)) < kFidelityGate)
        throw std::logic_error(std::string(who) +
                               ": successful branch produced a wrong output qubit");
}

void note(TrialOutcome& o, const char* tag, double v) {
    o.transcript.push_back(TranscriptEvent{tag, v});
}

}  // namespace

double Angle8::radians() const {
    if (k < 0 || k > 7) throw std::invalid_argument("Angle8: k outside 0..7");
    return double(k) * std::numbers::pi / 4.0;
}

Angle8 random_angle8(Rng& rng) {
    return Angle8{std::uniform_int_distribution<int>(0, 7)(rng)};
}

std::string to_string(Protocol p) {
    switch (p) {
        case Protocol::entanglement: return "entanglement";
        case Protocol::single_photon: return "single_photon";
        case Protocol::coherent: return "coherent";
    }
    return "?";
}

// --- DFS extraction ----------------------------------------------------------

DfseResult dfse(const StateVector& in, const PolSite& control, const PolSite& target,
                Rng& rng) {
    const StateVector after = apply_cnot_pol(in, control, target);
    PolMeasurement m = measure_pol_z(after, target, rng);
    DfseResult r;
    r.success = (m.outcome == Pol::V);
    r.prob_v = r.success ? m.prob : 1.0 - m.prob;
    r.posterior = std::move(m.posterior);
    return r;
}

double dfse_success_prob(const QubitState& control, const QubitState& target) {
    // After the CNOT the target reads V on the (control H, target V) and
    // (control V, target H) components.
    return std::norm(control.amp_h * target.amp_v) +
           std::norm(control.amp_v * target.amp_h);
}

QubitDfse dfse_qubit(const QubitState& control, const QubitState& target, Rng& rng) {
    const double pv = std::clamp(dfse_success_prob(control, target), 0.0, 1.0);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    QubitDfse r;
    r.success = u < pv;
    r.posterior = r.success
                      ? normalized(QubitState{control.amp_h * target.amp_v,
                                              control.amp_v * target.amp_h})
                      : normalized(QubitState{control.amp_h * target.amp_h,
                                              control.amp_v * target.amp_v});
    return r;
}

// --- entanglement-based protocol ----------------------------------------------

TrialOutcome run_entanglement_trial(const ProtocolConfig& cfg, Angle8 theta, Rng& rng) {
    const std::uint32_t bins_arr[2] = {1, 2};
    const std::span<const std::uint32_t> bins(bins_arr, 2);
    TrialOutcome out;
    out.channel_uses = 2;

    StateVector st = make_bell_psi_plus(1, 2);
    st = rotate_z(st, PolSite{1, Arm::S}, theta.radians());
    st = transmit(st, cfg.channel, bins, rng);

    const auto s_modes = arm_modes(bins, Arm::S);
    const auto l_modes = arm_modes(bins, Arm::L);
    auto ms = measure_photon_number(st, s_modes, rng);
    auto ml = measure_photon_number(ms.posterior, l_modes, rng);
    st = std::move(ml.posterior);
    int ns = ms.outcome, nl = ml.outcome;
    note(out, "qnd_s", ns);
    note(out, "qnd_l", nl);
    if (ns + nl != 2) return out;  // photon loss

    if (ns == 1) {
        // one photon per output mode: exchange (s,V)<->(l,H) and count again
        st = apply_pol_flip(st, 1);
        st = apply_pol_flip(st, 2);
        ms = measure_photon_number(st, s_modes, rng);
        ml = measure_photon_number(ms.posterior, l_modes, rng);
        st = std::move(ml.posterior);
        ns = ms.outcome;
        nl = ml.outcome;
        note(out, "qnd2_s", ns);
        note(out, "qnd2_l", nl);
        if (ns == 1)
            throw std::logic_error("run_entanglement_trial: (1,1) recurred after pol flip");
    }
    if (ns == 0) st = apply_arm_swap_and_x(st, bins);

    st = apply_cnot_pol(st, PolSite{1, Arm::S}, PolSite{2, Arm::S});
    const QubitState q = extract_qubit(st, PolSite{1, Arm::S});
    assert_output_fidelity(q, theta.radians(), "run_entanglement_trial");
    out.success = true;
    out.output = q;
    out.output_angle = theta.radians();
    return out;
}

// --- single-photon-based protocol ----------------------------------------------

TrialOutcome run_single_photon_trial(const ProtocolConfig& cfg,
                                     const std::vector<Angle8>& thetas, Rng& rng) {
    const int N = cfg.pairs_per_batch;
    if (N < 1) throw std::invalid_argument("run_single_photon_trial: N must be >= 1");
    if (thetas.size() != static_cast<std::size_t>(2 * N))
        throw std::invalid_argument("run_single_photon_trial: need 2N angles");
    TrialOutcome out;
    out.channel_uses = 2 * N;

    // Per-bin survival; a surviving photon's state conditioned on arrival is
    // unchanged, so pair states are built behind a lossless channel.
    std::bernoulli_distribution arrives(cfg.channel.transmission);
    std::vector<std::uint32_t> survivors;
    for (int i = 0; i < 2 * N; ++i) {
        const bool ok = arrives(rng);
        note(out, "arrived", ok ? 1.0 : 0.0);
        if (ok) survivors.push_back(static_cast<std::uint32_t>(i + 1));
    }
    note(out, "survivor_count", double(survivors.size()));

    const ChannelModel lossless{cfg.channel.delta, 1.0};
    const std::size_t pairs = survivors.size() / 2;
    for (std::size_t p = 0; p < pairs; ++p) {
        const std::uint32_t k = survivors[2 * p];
        const std::uint32_t k2 = survivors[2 * p + 1];
        const double th_k = thetas[k - 1].radians();
        const double th_k2 = thetas[k2 - 1].radians();
        const std::uint32_t pair_arr[2] = {k, k2};
        const std::span<const std::uint32_t> pair_bins(pair_arr, 2);

        StateVector st = tensor(make_single_photon(k, make_rotated_qubit(th_k)),
                                make_single_photon(k2, make_rotated_qubit(th_k2)));
        st = transmit(st, lossless, pair_bins, rng);

        const auto s_modes = arm_modes(pair_bins, Arm::S);
        const auto l_modes = arm_modes(pair_bins, Arm::L);
        auto ms = measure_photon_number(st, s_modes, rng);
        auto ml = measure_photon_number(ms.posterior, l_modes, rng);
        st = std::move(ml.posterior);
        int ns = ms.outcome;
        note(out, "pair_qnd_s", ns);
        bool resolved_from_one_one = false;
        if (ns == 1) {
            st = apply_pol_flip(st, k);
            st = apply_pol_flip(st, k2);
            ms = measure_photon_number(st, s_modes, rng);
            ml = measure_photon_number(ms.posterior, l_modes, rng);
            st = std::move(ml.posterior);
            ns = ms.outcome;
            note(out, "pair_qnd2_s", ns);
            if (ns == 1) continue;  // still unusable, spend the next pair
            resolved_from_one_one = true;
        }

        const Arm arm = (ns == 2) ? Arm::S : Arm::L;
        DfseResult ex = dfse(st, PolSite{k, arm}, PolSite{k2, arm}, rng);
        note(out, "dfse", ex.success ? 1.0 : 0.0);
        if (resolved_from_one_one && ex.prob_v < kFidelityGate)
            throw std::logic_error(
                "run_single_photon_trial: resolved pair must extract deterministically");
        if (!ex.success) continue;

        QubitState q = extract_qubit(ex.posterior, PolSite{k, arm});
        if (arm == Arm::L) q = pauli_x(q);  // flips the sign of the relative phase
        const double angle = th_k - th_k2;
        assert_output_fidelity(q, angle, "run_single_photon_trial");
        out.success = true;
        out.output = q;
        out.output_angle = angle;
        return out;
    }
    return out;
}

// --- coherent-light-assisted protocol ------------------------------------------

namespace {

TrialOutcome run_coherent_sampling(const ProtocolConfig& cfg, Angle8 theta, Rng& rng) {
    TrialOutcome out;
    out.channel_uses = 2;
    const NoiseParams& d = cfg.channel.delta;
    const double T = cfg.channel.transmission;
    const double s = std::norm(d.a) + std::norm(d.d);
    const double p_mode_s = s / 2.0;

    if (!std::bernoulli_distribution(T)(rng)) {
        note(out, "signal_lost", 1.0);
        return out;
    }
    const bool in_s = std::bernoulli_distribution(p_mode_s)(rng);
    note(out, "signal_mode_s", in_s ? 1.0 : 0.0);

    const cplx phase = std::polar(1.0, theta.radians());
    QubitState signal = in_s ? normalized(QubitState{d.a, phase * d.d})
                             : normalized(QubitState{d.b, phase * d.c});
    // Pulse photons in the signal's output mode; mode-l ancillas carry a
    // polarization flip so that outcome V means success in both modes.
    const QubitState ancilla =
        in_s ? normalized(QubitState{d.a, d.d}) : normalized(QubitState{d.b, d.c});

    const double lambda = cfg.mu * T * (in_s ? p_mode_s : 1.0 - p_mode_s);
    const long long h = std::poisson_distribution<long long>(lambda)(rng);
    note(out, "pulse_count", double(h));
    if (h < 1) return out;

    long long right = 0, left = 0;
    for (long long step = 0; step < h; ++step) {
        const QubitDfse r = dfse_qubit(signal, ancilla, rng);
        signal = r.posterior;
        (r.success ? right : left) += 1;
        if (right == left + 1) {
            note(out, "dfse_steps", double(step + 1));
            assert_output_fidelity(signal, theta.radians(), "run_coherent_trial");
            out.success = true;
            out.output = signal;
            out.output_angle = theta.radians();
            return out;
        }
    }
    note(out, "dfse_steps", double(h));
    return out;
}

TrialOutcome run_coherent_full_vector(const ProtocolConfig& cfg, Angle8 theta, Rng& rng) {
    TrialOutcome out;
    out.channel_uses = 2;
    const std::uint32_t sig_arr[1] = {1}, pul_arr[1] = {2};
    const std::span<const std::uint32_t> sig_bin(sig_arr, 1), pulse_bin(pul_arr, 1);
    const int cutoff = cfg.cutoff >= 0 ? cfg.cutoff : coherent_cutoff(cfg.mu);

    // The two bins never interact inside the channel, so they are pushed
    // through it as separate states and joined after the number readout.
    StateVector signal =
        transmit(make_single_photon(1, make_rotated_qubit(theta.radians())), cfg.channel,
                 sig_bin, rng);
    StateVector pulse =
        transmit(make_coherent_pulse(cfg.mu, make_rotated_qubit(0.0), cutoff, 2),
                 cfg.channel, pulse_bin, rng);

    auto n_sig_s = measure_photon_number(signal, arm_modes(sig_bin, Arm::S), rng);
    auto n_sig_l = measure_photon_number(n_sig_s.posterior, arm_modes(sig_bin, Arm::L), rng);
    signal = std::move(n_sig_l.posterior);
    note(out, "signal_s", n_sig_s.outcome);
    note(out, "signal_l", n_sig_l.outcome);
    if (n_sig_s.outcome + n_sig_l.outcome != 1) return out;
    const Arm m = n_sig_s.outcome == 1 ? Arm::S : Arm::L;

    auto n_pulse_s = measure_photon_number(pulse, arm_modes(pulse_bin, Arm::S), rng);
    auto n_pulse_l = measure_photon_number(n_pulse_s.posterior, arm_modes(pulse_bin, Arm::L), rng);
    pulse = std::move(n_pulse_l.posterior);
    note(out, "pulse_s", n_pulse_s.outcome);
    note(out, "pulse_l", n_pulse_l.outcome);
    const int h = (m == Arm::S) ? n_pulse_s.outcome : n_pulse_l.outcome;
    if (h < 1) return out;

    StateVector st = tensor(signal, pulse);
    const PolSite sig_site{1, m};
    long long right = 0, left = 0;
    for (int step = 0; step < h; ++step) {
        const std::uint32_t aux_bin = 100 + static_cast<std::uint32_t>(step);
        st = extract_photon(st, PolSite{2, m}, aux_bin);
        const PolSite aux{aux_bin, m};
        if (m == Arm::L) st = apply_pauli_x(st, aux);
        st = apply_cnot_pol(st, sig_site, aux);
        PolMeasurement pm = measure_pol_z(st, aux, rng);
        st = discard_site(pm.posterior, aux);
        (pm.outcome == Pol::V ? right : left) += 1;
        if (right == left + 1) {
            note(out, "dfse_steps", double(step + 1));
            const QubitState q = extract_qubit(st, sig_site);
            assert_output_fidelity(q, theta.radians(), "run_coherent_trial(full)");
            out.success = true;
            out.output = q;
            out.output_angle = theta.radians();
            return out;
        }
    }
    note(out, "dfse_steps", double(h));
    return out;
}

}  // namespace

TrialOutcome run_coherent_trial(const ProtocolConfig& cfg, Angle8 theta, Rng& rng) {
    if (cfg.mu < 0.0 || !std::isfinite(cfg.mu))
        throw std::invalid_argument("run_coherent_trial: bad mu");
    return cfg.coherent_full_vector ? run_coherent_full_vector(cfg, theta, rng)
                                    : run_coherent_sampling(cfg, theta, rng);
}

// --- batch driver ---------------------------------------------------------------

TrialOutcome run_trial(const ProtocolConfig& cfg, Rng& rng) {
    ProtocolConfig c = cfg;
    if (cfg.delta_scheme) c.channel.delta = sample_delta(rng, *cfg.delta_scheme);
    switch (c.protocol) {
        case Protocol::entanglement:
            return run_entanglement_trial(c, random_angle8(rng), rng);
        case Protocol::single_photon: {
            std::vector<Angle8> thetas(static_cast<std::size_t>(2 * c.pairs_per_batch));
            for (auto& t : thetas) t = random_angle8(rng);
            return run_single_photon_trial(c, thetas, rng);
        }
        case Protocol::coherent:
            return run_coherent_trial(c, random_angle8(rng), rng);
    }
    throw std::logic_error("run_trial: unknown protocol");
}

namespace {

Estimate finish_estimate(long long successes, long long trials) {
    Estimate e;
    e.successes = successes;
    e.trials = trials;
    e.p_hat = trials > 0 ? double(successes) / double(trials) : 0.0;
    e.stderr_ = trials > 0 ? std::sqrt(e.p_hat * (1.0 - e.p_hat) / double(trials)) : 0.0;
    return e;
}

}  // namespace

Estimate estimate_success_serial(const ProtocolConfig& cfg, long long trials) {
    if (trials < 1) throw std::invalid_argument("estimate_success: trials must be >= 1");
    long long successes = 0;
    for (long long i = 0; i < trials; ++i) {
        Rng rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(i));
        successes += run_trial(cfg, rng).success ? 1 : 0;
    }
    return finish_estimate(successes, trials);
}

Estimate estimate_success(const ProtocolConfig& cfg, long long trials) {
    if (trials < 1) throw std::invalid_argument("estimate_success: trials must be >= 1");
    long long successes = 0;
#ifdef _OPENMP
    std::atomic<bool> failed{false};
    std::string first_error;
#pragma omp parallel for schedule(static) reduction(+ : successes)
    for (long long i = 0; i < trials; ++i) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            Rng rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(i));
            successes += run_trial(cfg, rng).success ? 1 : 0;
        } catch (const std::exception& e) {
#pragma omp critical
            {
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    }
    if (failed.load()) throw std::runtime_error("estimate_success: " + first_error);
#else
    return estimate_success_serial(cfg, trials);
#endif
    return finish_estimate(successes, trials);
}

bool verify_angle_compensation(Angle8 theta, double phi_prime, int r, Rng& rng,
                               long long samples) {
    if (samples < 1) throw std::invalid_argument("verify_angle_compensation: samples >= 1");
    if (r != 0 && r != 1) throw std::invalid_argument("verify_angle_compensation: r is a bit");
    const QubitState q = make_rotated_qubit(theta.radians());
    const double xi = theta.radians() + phi_prime + double(r) * std::numbers::pi;
    long long plus = 0;
    for (long long i = 0; i < samples; ++i) {
        const int bit = measure_in_rotated_basis(q, xi, rng);
        if ((bit ^ r) == 0) ++plus;
    }
    const double freq = double(plus) / double(samples);
    const double c = std::cos(phi_prime / 2.0);
    const double expect = c * c;
    const double sigma = std::sqrt(expect * (1.0 - expect) / double(samples));
    return std::abs(freq - expect) <= 3.0 * sigma + 1e-9;
}

}  // namespace dfsbqc
