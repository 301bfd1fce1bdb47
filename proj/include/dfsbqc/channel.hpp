#pragma once

#include "dfsbqc/state.hpp"

namespace dfsbqc {

/// Collective-unitary fiber parameters. The two fibers act as
///   arm S: |H> -> a|H> + b|V>        arm L: |V> -> c|H> + d|V>
/// with |a|^2+|b|^2 = |c|^2+|d|^2 = 1. Only these columns are ever excited
/// by protocol inputs; the completion is fixed as |V> -> -b*|H> + a*|V>
/// (arm S) and |H> -> d*|H> - c*|V> (arm L) so each arm is a well-formed
/// unitary.
struct NoiseParams {
    cplx a{1.0, 0.0};
    cplx b{0.0, 0.0};
    cplx c{0.0, 0.0};
    cplx d{1.0, 0.0};
};

NoiseParams make_noise_params(double a_abs2, double d_abs2, double phase_a = 0.0,
                              double phase_b = 0.0, double phase_c = 0.0,
                              double phase_d = 0.0);

bool noise_params_valid(const NoiseParams& p, double tol = kExactTol);
void validate_noise_params(const NoiseParams& p);

enum class DeltaScheme { uniform_moduli, haar_per_arm };

/// Draws channel parameters: uniform_moduli picks |a|^2 and |d|^2 uniformly
/// with uniform phases; haar_per_arm draws each arm's unitary Haar-uniformly
/// (for 2x2 unitaries the observable first column has the same law).
NoiseParams sample_delta(Rng& rng, DeltaScheme scheme);

/// One fiber pair: the unitary parameters and the per-photon transmission.
/// Immutable, sharable across trial workers; the parameters are held
/// constant within a trial (collectivity).
struct ChannelModel {
    NoiseParams delta;
    double transmission = 1.0;
};

/// Sender-side PBS: H photons stay in arm S, V photons are routed to arm L,
/// for each listed bin. Throws if a bin already has photons in arm L.
StateVector pbs_split(const StateVector& in, std::span<const std::uint32_t> bins);

/// Receiver-side PBS bookkeeping: H from arm S lands in output mode s,
/// V from arm S in mode l, H from arm L in mode l, V from arm L in mode s.
/// With trivial fibers this undoes pbs_split exactly.
StateVector pbs_merge(const StateVector& in, std::span<const std::uint32_t> bins);

/// Applies the same arm unitaries to every listed bin. Throws on
/// non-unitary parameters.
StateVector apply_collective_unitary(const StateVector& in, const NoiseParams& p,
                                     std::span<const std::uint32_t> bins);

/// Monte Carlo photon loss: for each mode of the listed bins the number of
/// lost photons is Born-sampled and the state is projected accordingly.
/// Each photon independently survives with probability `transmission`.
StateVector apply_loss(const StateVector& in, double transmission,
                       std::span<const std::uint32_t> bins, Rng& rng);

/// Full channel for the listed bins: split, collective unitary, loss, merge.
StateVector transmit(const StateVector& in, const ChannelModel& ch,
                     std::span<const std::uint32_t> bins, Rng& rng);

}  // namespace dfsbqc
