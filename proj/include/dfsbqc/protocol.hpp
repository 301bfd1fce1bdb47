#pragma once

#include "dfsbqc/channel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dfsbqc {

/// Rotation angle restricted to the eight values k*pi/4, k = 0..7.
struct Angle8 {
    int k = 0;
    double radians() const;
};

Angle8 random_angle8(Rng& rng);

enum class Protocol { entanglement, single_photon, coherent };

std::string to_string(Protocol p);

struct ProtocolConfig {
    Protocol protocol = Protocol::entanglement;
    ChannelModel channel;
    int pairs_per_batch = 1;   ///< N: one batch sends 2N photons (single-photon protocol)
    double mu = 0.0;           ///< mean photon number of the ancilla pulse (coherent protocol)
    int cutoff = -1;           ///< Fock truncation; -1 selects the smallest adequate cutoff
    std::uint64_t seed = 42;
    /// Runs the coherent protocol on the full Fock state vector instead of
    /// the photon-count sampling path. Only feasible for small mu.
    bool coherent_full_vector = false;
    /// When set, a fresh delta is drawn per trial instead of using
    /// channel.delta.
    std::optional<DeltaScheme> delta_scheme;
};

struct TranscriptEvent {
    std::string tag;
    double value = 0.0;
};

struct TrialOutcome {
    bool success = false;
    int channel_uses = 0;                 ///< transmitted time bins
    std::optional<QubitState> output;
    std::optional<double> output_angle;   ///< radians
    std::vector<TranscriptEvent> transcript;
};

// --- DFS extraction ----------------------------------------------------------

struct DfseResult {
    bool success = false;       ///< Z outcome on the target was |V>
    StateVector posterior;
    double prob_v = 0.0;
};

/// CNOT from control onto target followed by a Z measurement of the target.
/// Success (outcome V) heralds an undecohered control qubit.
DfseResult dfse(const StateVector& in, const PolSite& control, const PolSite& target,
                Rng& rng);

/// Probability that the extraction succeeds on a product of two qubits.
double dfse_success_prob(const QubitState& control, const QubitState& target);

struct QubitDfse {
    bool success = false;
    QubitState posterior;  ///< collapsed control qubit
};

/// Extraction computed exactly on the 4-amplitude joint state of two qubits.
QubitDfse dfse_qubit(const QubitState& control, const QubitState& target, Rng& rng);

// --- protocol trials ----------------------------------------------------------

/// Bell pair, random rotation on the first photon, both photons through the
/// channel, photon-number branching at the receiver, corrective unitaries and
/// a final CNOT. Succeeds whenever both photons arrive.
TrialOutcome run_entanglement_trial(const ProtocolConfig& cfg, Angle8 theta, Rng& rng);

/// One batch of 2N rotated photons; surviving bins are paired in arrival
/// order and each pair attempts the extraction until one succeeds.
TrialOutcome run_single_photon_trial(const ProtocolConfig& cfg,
                                     const std::vector<Angle8>& thetas, Rng& rng);

/// One rotated photon plus one coherent ancilla pulse; repeated extractions
/// against pulse photons in the signal's output mode until the successful
/// count exceeds the unsuccessful count by one, or the pulse is exhausted.
TrialOutcome run_coherent_trial(const ProtocolConfig& cfg, Angle8 theta, Rng& rng);

/// Runs one trial of cfg.protocol with angles drawn uniformly from the
/// eight-value set (and a per-trial delta when cfg.delta_scheme is set).
TrialOutcome run_trial(const ProtocolConfig& cfg, Rng& rng);

struct Estimate {
    double p_hat = 0.0;
    double stderr_ = 0.0;
    long long successes = 0;
    long long trials = 0;
};

/// Monte Carlo success estimate. Trials are independent; each derives its
/// engine from (cfg.seed, trial index), so the result is identical to the
/// serial reference regardless of the worker count.
Estimate estimate_success(const ProtocolConfig& cfg, long long trials);

/// Serial reference implementation of estimate_success, kept for testing
/// and benchmarking the parallel path.
Estimate estimate_success_serial(const ProtocolConfig& cfg, long long trials);

/// Measures |+_theta> at angle xi = theta + phi_prime + r*pi over `samples`
/// shots and checks that the de-randomized outcome (bit XOR r) hits "+" with
/// frequency cos^2(phi_prime/2) within three binomial standard errors.
bool verify_angle_compensation(Angle8 theta, double phi_prime, int r, Rng& rng,
                               long long samples);

}  // namespace dfsbqc
