#pragma once

#include "dfsbqc/modes.hpp"
#include "dfsbqc/rng.hpp"

#include <array>
#include <complex>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace dfsbqc {

using cplx = std::complex<double>;

/// Tolerance for exact algebraic identities.
inline constexpr double kExactTol = 1e-12;
/// Tolerance for truncation-induced error (Fock cutoffs, Poisson tails).
inline constexpr double kTruncTol = 1e-9;

/// A single-photon polarization qubit: amplitudes on |H> and |V>.
struct QubitState {
    cplx amp_h{1.0, 0.0};
    cplx amp_v{0.0, 0.0};

    double norm_sq() const { return std::norm(amp_h) + std::norm(amp_v); }
};

/// |+_theta> = (|H> + e^{i theta} |V>)/sqrt(2).
QubitState make_rotated_qubit(double theta);
QubitState normalized(const QubitState& q);
QubitState pauli_x(const QubitState& q);

/// |<a|b>|^2 for normalized qubits. Throws on non-normalized input.
double fidelity(const QubitState& a, const QubitState& b);

/// Born measurement of a qubit in the rotated basis {|+_xi>, |-_xi>}.
/// Returns 0 for the |+_xi> outcome.
int measure_in_rotated_basis(const QubitState& q, double xi, Rng& rng);

/// Normalized complex amplitudes over photon-occupation basis states.
/// Values are immutable in use: operations return new states, so a state
/// can be shared read-only across trial workers.
class StateVector {
public:
    using TermMap = std::map<BasisState, cplx>;

    StateVector() = default;
    static StateVector vacuum(std::vector<ModeLabel> modes);

    const TermMap& terms() const { return terms_; }
    const std::vector<ModeLabel>& mode_set() const { return mode_set_; }
    bool has_mode(ModeLabel m) const;

    std::size_t term_count() const { return terms_.size(); }
    double norm_sq() const;
    void normalize();

    // Construction API used by the operations below.
    void add_mode(ModeLabel m);
    void add_modes(std::span<const ModeLabel> modes);
    void remove_mode(ModeLabel m);
    void add_term(const BasisState& b, cplx amp);
    void set_modes(std::vector<ModeLabel> modes);

    /// Verifies unit norm and that every term only uses modes from the
    /// mode set. Throws std::logic_error on violation.
    void check(double tol = kExactTol) const;

private:
    TermMap terms_;
    std::vector<ModeLabel> mode_set_;  // sorted, unique
};

// --- construction -----------------------------------------------------------

/// One photon with polarization state `pol` in the input register (arm S)
/// of the given time bin.
StateVector make_single_photon(std::uint32_t time_bin, const QubitState& pol);

/// (|H>_a |V>_b + |V>_a |H>_b)/sqrt(2) across two time bins. Throws if the
/// bins coincide.
StateVector make_bell_psi_plus(std::uint32_t bin_a, std::uint32_t bin_b);

/// Truncated coherent pulse with mean photon number mu, every photon in
/// polarization state `pol`, in the input register of `time_bin`. Throws
/// if the truncated-norm deficit at `cutoff` is not below kTruncTol.
StateVector make_coherent_pulse(double mu, const QubitState& pol, int cutoff,
                                std::uint32_t time_bin);

/// Smallest cutoff whose Poisson tail mass is below `tail`.
int coherent_cutoff(double mu, double tail = kTruncTol);

StateVector tensor(const StateVector& a, const StateVector& b);
cplx overlap(const StateVector& a, const StateVector& b);
double state_fidelity(const StateVector& a, const StateVector& b);

// --- gates ------------------------------------------------------------------

/// R_z(theta) = e^{-i theta/2 Z} on the polarization qubit at `target`.
/// Throws if any basis term holds more than one photon at the site.
StateVector rotate_z(const StateVector& in, const PolSite& target, double theta);

/// Polarization CNOT (|H> = |0>, |V> = |1>). Control and target must each
/// hold exactly one photon in every basis term.
StateVector apply_cnot_pol(const StateVector& in, const PolSite& control,
                           const PolSite& target);

/// Polarization X (H <-> V) at one site.
StateVector apply_pauli_x(const StateVector& in, const PolSite& target);

/// The receiver-side mode permutation (s,H)->(s,H), (s,V)->(l,H),
/// (l,H)->(s,V), (l,V)->(l,V) on one time bin. Expects at most one photon
/// across the bin's four modes per basis term.
StateVector apply_pol_flip(const StateVector& in, std::uint32_t time_bin);

/// Arm swap S<->L followed by polarization X on the listed bins.
StateVector apply_arm_swap_and_x(const StateVector& in,
                                 std::span<const std::uint32_t> bins);

/// Generic bosonic rotation of a mode pair: a†_A -> u00 a†_A + u10 a†_B,
/// a†_B -> u01 a†_A + u11 a†_B, valid for arbitrary occupation numbers.
StateVector apply_mode_pair_unitary(const StateVector& in, ModeLabel ma,
                                    ModeLabel mb, const std::array<cplx, 4>& u);

// --- measurements -----------------------------------------------------------

/// Outcome table of a photon-number measurement summed over `modes`.
/// The probabilities sum to one.
std::map<int, double> photon_number_distribution(const StateVector& in,
                                                 std::span<const ModeLabel> modes);

struct NumberMeasurement {
    int outcome = 0;
    StateVector posterior;
    double prob = 0.0;
};

/// Born-samples the total photon number over `modes` and projects.
/// Throws on an empty mode set.
NumberMeasurement measure_photon_number(const StateVector& in,
                                        std::span<const ModeLabel> modes, Rng& rng);

struct PolMeasurement {
    Pol outcome = Pol::H;
    StateVector posterior;
    double prob = 0.0;
};

/// Z-basis polarization measurement at a singly occupied site.
PolMeasurement measure_pol_z(const StateVector& in, const PolSite& target, Rng& rng);

// --- structural helpers -----------------------------------------------------

/// Moves one photon out of the (possibly multi-photon) site `source` into
/// the fresh site (aux_bin, source.arm). Acts as |1>_aux a_mu / sqrt(n) summed
/// over the site's two modes, which on identical-photon states is the ideal
/// single-photon extraction. Throws if any term has an empty source site.
StateVector extract_photon(const StateVector& in, const PolSite& source,
                           std::uint32_t aux_bin);

/// Reads off the polarization qubit at a singly occupied site of a product
/// state. Throws if the state does not factorize there.
QubitState extract_qubit(const StateVector& in, const PolSite& site);

/// Drops a site whose occupation is identical across all basis terms
/// (e.g. a measured-out ancilla).
StateVector discard_site(const StateVector& in, const PolSite& site);

/// Debug serialization: one line per basis term, canonical order,
/// "occupation-pattern TAB re TAB im".
std::string to_debug_text(const StateVector& in);

}  // namespace dfsbqc
