#pragma once

#include "dfsbqc/density.hpp"
#include "dfsbqc/protocol.hpp"

#include <string>
#include <vector>

namespace dfsbqc::blindness {

/// (1/8) sum_k |+_{k pi/4}><+_{k pi/4}|, computed exactly. Equals I/2.
DensityMatrix2 average_rotated_qubit();

struct ViewPair {
    Eigen::MatrixXcd lhs;  ///< angle-averaged sent state
    Eigen::MatrixXcd rhs;  ///< CNOT-conjugated (I/2 x |V><V|) product state
};

/// The sender's two-photon state averaged over the eight angles versus the
/// angle-free product form, both after the splitting PBS (and, when
/// delta_free is false, additionally pushed through one fixed fiber pair,
/// which cannot change the identity). The averaging is closed under
/// theta -> theta + pi, which is what the random pi shift of the
/// measurement angles induces.
ViewPair average_entanglement_view(bool delta_free = true);

struct CoherentVerdict {
    double signal_trace_distance = 0.0;  ///< averaged signal factor vs I/2
    bool pulse_theta_independent = false;
    bool factorizes = false;             ///< joint state = signal (x) pulse
    std::string pulse_digest;            ///< canonical serialization of the pulse factor
    bool pass() const {
        return signal_trace_distance < kExactTol && pulse_theta_independent && factorizes;
    }
};

/// Checks that the sent signal qubit averages to I/2 while the ancilla pulse
/// factor is the same state for every angle (byte-identical serialization).
CoherentVerdict average_coherent_view(double mu, int cutoff = -1);

/// Exact de-randomized outcome probability
///   (cos^2(phi/2) + cos^2((phi+pi)/2)) / 2,
/// which is 1/2 for every phi.
double derandomized_outcome_probability(double phi_prime);

struct IdentityCheck {
    std::string protocol;
    std::string identity;
    double trace_distance = 0.0;
    bool pass = false;
};

/// Runs all blindness identities and returns one row per check.
std::vector<IdentityCheck> run_all_identities();

}  // namespace dfsbqc::blindness
