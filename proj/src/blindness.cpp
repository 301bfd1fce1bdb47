#include "dfsbqc/blindness.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dfsbqc::blindness {

namespace {

constexpr std::uint32_t kSignalBin = 1;
constexpr std::uint32_t kPulseBin = 2;

double angle_of(int k) { return double(k) * std::numbers::pi / 4.0; }

/// The server-facing form of a state: split into arm modes, optionally also
/// sent through one fixed fiber pair.
StateVector server_view(StateVector st, std::span<const std::uint32_t> bins,
                        bool delta_free) {
    st = pbs_split(st, bins);
    if (!delta_free) {
        static const NoiseParams rep = make_noise_params(0.7, 0.2, 0.3, 1.1, 2.4, 0.5);
        st = apply_collective_unitary(st, rep, bins);
        st = pbs_merge(st, bins);
    }
    return st;
}

}  // namespace

DensityMatrix2 average_rotated_qubit() {
    DensityMatrix2 rho = DensityMatrix2::Zero();
    for (int k = 0; k < 8; ++k) rho += qubit_density(make_rotated_qubit(angle_of(k))) / 8.0;
    return rho;
}

ViewPair average_entanglement_view(bool delta_free) {
    const std::uint32_t bins_arr[2] = {1, 2};
    const std::span<const std::uint32_t> bins(bins_arr, 2);

    WeightedStates lhs;
    for (int k = 0; k < 8; ++k) {
        StateVector psi = rotate_z(make_bell_psi_plus(1, 2), PolSite{1, Arm::S}, angle_of(k));
        lhs.emplace_back(1.0 / 8.0, server_view(std::move(psi), bins, delta_free));
    }

    // CNOT-conjugated (I/2 x |V><V|): the two polarization components of the
    // first photon, each with weight 1/2, pushed through the same CNOT.
    WeightedStates rhs;
    for (const Pol first : {Pol::H, Pol::V}) {
        StateVector st;
        st.set_modes({ModeLabel{1, Arm::S, Pol::H}, ModeLabel{1, Arm::S, Pol::V},
                      ModeLabel{2, Arm::S, Pol::H}, ModeLabel{2, Arm::S, Pol::V}});
        BasisState b;
        b.set_count(ModeLabel{1, Arm::S, first}, 1);
        b.set_count(ModeLabel{2, Arm::S, Pol::V}, 1);
        st.add_term(b, cplx{1.0, 0.0});
        st = apply_cnot_pol(st, PolSite{1, Arm::S}, PolSite{2, Arm::S});
        rhs.emplace_back(0.5, server_view(std::move(st), bins, delta_free));
    }

    const auto index = build_basis_index({&lhs, &rhs});
    ViewPair out;
    out.lhs = density_on_index(lhs, index);
    out.rhs = density_on_index(rhs, index);
    return out;
}

CoherentVerdict average_coherent_view(double mu, int cutoff) {
    if (cutoff < 0) cutoff = coherent_cutoff(mu);
    CoherentVerdict v;
    v.signal_trace_distance =
        trace_distance(average_rotated_qubit(), DensityMatrix2::Identity() / 2.0);

    const std::uint32_t bins_arr[2] = {kSignalBin, kPulseBin};
    const std::span<const std::uint32_t> bins(bins_arr, 2);
    const ModeLabel sig_h{kSignalBin, Arm::S, Pol::H};
    const ModeLabel sig_lv{kSignalBin, Arm::L, Pol::V};

    v.pulse_theta_independent = true;
    v.factorizes = true;
    std::string reference;
    for (int k = 0; k < 8; ++k) {
        StateVector joint =
            tensor(make_single_photon(kSignalBin, make_rotated_qubit(angle_of(k))),
                   make_coherent_pulse(mu, make_rotated_qubit(0.0), cutoff, kPulseBin));
        joint = pbs_split(joint, bins);

        // Factor the pulse out of each signal branch and require the two
        // branches to carry the same factor.
        StateVector from_h, from_lv;
        for (const auto& [b, amp] : joint.terms()) {
            BasisState rest = b;
            if (b.count(sig_h) == 1) {
                rest.set_count(sig_h, 0);
                from_h.add_term(rest, amp);
            } else if (b.count(sig_lv) == 1) {
                rest.set_count(sig_lv, 0);
                from_lv.add_term(rest, amp);
            } else {
                throw std::logic_error("average_coherent_view: stray signal pattern");
            }
        }
        from_h.set_modes(joint.mode_set());
        from_lv.set_modes(joint.mode_set());
        from_h.remove_mode(sig_h);
        from_h.remove_mode(sig_lv);
        from_lv.remove_mode(sig_h);
        from_lv.remove_mode(sig_lv);
        from_h.normalize();
        from_lv.normalize();
        if (state_fidelity(from_h, from_lv) < 1.0 - kExactTol) v.factorizes = false;

        const std::string digest = to_debug_text(from_h);
        if (k == 0) {
            reference = digest;
            v.pulse_digest = digest;
        } else if (digest != reference) {
            v.pulse_theta_independent = false;
        }
    }
    return v;
}

double derandomized_outcome_probability(double phi_prime) {
    const double c0 = std::cos(phi_prime / 2.0);
    const double c1 = std::cos((phi_prime + std::numbers::pi) / 2.0);
    return 0.5 * (c0 * c0 + c1 * c1);
}

std::vector<IdentityCheck> run_all_identities() {
    std::vector<IdentityCheck> rows;

    {
        const ViewPair v = average_entanglement_view(true);
        const double td = trace_distance(v.lhs, v.rhs);
        rows.push_back({"entanglement", "averaged_two_photon_view", td, td < kExactTol});
    }
    {
        const ViewPair v = average_entanglement_view(false);
        const double td = trace_distance(v.lhs, v.rhs);
        rows.push_back({"entanglement", "averaged_view_after_fiber", td, td < kExactTol});
    }
    {
        const double td =
            trace_distance(average_rotated_qubit(), DensityMatrix2::Identity() / 2.0);
        rows.push_back({"single_photon", "averaged_qubit_view", td, td < kExactTol});
    }
    {
        const CoherentVerdict v = average_coherent_view(2.0);
        rows.push_back({"coherent", "signal_factor_identity", v.signal_trace_distance,
                        v.signal_trace_distance < kExactTol});
        rows.push_back({"coherent", "pulse_factor_angle_free",
                        v.pulse_theta_independent && v.factorizes ? 0.0 : 1.0,
                        v.pulse_theta_independent && v.factorizes});
    }
    {
        double worst = 0.0;
        for (double phi : {0.0, std::numbers::pi / 4.0, std::numbers::pi / 2.0,
                           std::numbers::pi}) {
            worst = std::max(worst,
                             std::abs(derandomized_outcome_probability(phi) - 0.5));
        }
        rows.push_back({"all", "derandomized_outcome_uniform", worst, worst < kExactTol});
    }
    return rows;
}

}  // namespace dfsbqc::blindness
