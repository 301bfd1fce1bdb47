#pragma once

#include "dfsbqc/channel.hpp"

#include <cstdint>

namespace dfsbqc::analytics {

/// Entanglement protocol: both photons must arrive, so the success
/// probability is T^2.
double p_entanglement(double T);

/// Single-photon protocol with 2N photons per batch:
///   sum_M binom(2N,M) T^M (1-T)^(2N-M) (1 - 2^-floor(M/2)).
double p_single_photon(double T, int N);

/// Exact binomial coefficient; throws std::overflow_error beyond uint64.
std::uint64_t binomial_u64(unsigned n, unsigned k);

/// Catalan number binom(2t,t)/(t+1), exact. Guarded up to t = 33.
std::uint64_t catalan(int t);

/// Probability that a right-biased walk (step-right probability q) reaches
/// the absorbing boundary one site to the right within max_steps steps:
///   sum_{t'=0..floor((max_steps-1)/2)} C_{t'} (1-q)^{t'} q^{t'+1}.
double walk_absorption(double q, long long max_steps);

/// Unlimited-step absorption probability, closed form min(1, q/(1-q))
/// with the boundary case q = 1/2 -> 1.
double walk_absorption_limit(double q);

/// The same limit obtained from the series itself. Away from q = 1/2 the
/// series is summed directly; at q = 1/2 the partial sum is completed with
/// its exact reflection-principle remainder C(2n+2, n+1) 4^-(n+1), which the
/// unit tests verify in exact integer arithmetic.
double walk_absorption_series(double q);

/// Partial sum value at q = 1/2 after `steps` steps via the remainder
/// identity above (exact for odd horizons).
double walk_absorption_symmetric_partial(long long steps);

/// Per-step extraction success weights of the two output-mode walks.
/// q1 is the mode-s success probability 2|ad|^2/(|a|^2+|d|^2)^2.
double q1(const NoiseParams& delta);
/// q2 as conventionally displayed is the mode-l FAILURE weight
/// {2-2(|a|^2+|d|^2)+|a|^4+|d|^4}/(2-|a|^2-|d|^2)^2.
double q2(const NoiseParams& delta);
/// Mode-l success probability 2|bc|^2/(|b|^2+|c|^2)^2 = 1 - q2.
double q2_success(const NoiseParams& delta);

/// Success probability of one extraction attempt on a photon pair, summed
/// over the four number-measurement branches. Equals 1/2 for every valid
/// delta.
double per_pair_success(const NoiseParams& delta);

/// Coherent protocol success probability as the Poisson/binomial double sum
/// over pulse photon numbers with the walk-absorption bracket per output
/// mode. Evaluated through the exact Poisson-thinning collapse (the two
/// sums marginalize to Poisson(mu T w) over usable ancilla counts), which
/// makes large mu tractable. n_max = -1 truncates each branch at Poisson
/// upper-tail mass < 1e-9; an explicit n_max is validated against the same
/// bound.
double p_coherent(double T, double mu, const NoiseParams& delta, int n_max = -1);

/// Literal nested evaluation of the same double sum, kept as an independent
/// small-mu oracle for p_coherent.
double p_coherent_double_sum(double T, double mu, const NoiseParams& delta,
                             int n_max = -1);

/// Large-mu limit of p_coherent(T)/T:
///   -(s/2) (-1+|1-2q1|)/(2(1-q1)) - (1-s/2) (-1+|1-2q2'|)/(2(1-q2'))
/// with s = |a|^2+|d|^2 and q2' the mode-l success probability; equal to the
/// weighted min(1, q/(1-q)) absorption limits.
double p_coherent_limit_coeff(const NoiseParams& delta);

/// Success probability of the repeated-extraction cascade with exactly
/// `ancilla_count` ancilla photons, enumerated over all outcome sequences
/// with per-step probabilities taken from the exact collapsed two-qubit
/// state (not an i.i.d. walk). Rejects more than 40 ancillas.
double oracle_dfse_cascade(const NoiseParams& delta, Arm mode, int ancilla_count);

/// Coherent-protocol success probability with the exact cascade in place of
/// the i.i.d. walk bracket; requires Poisson ancilla counts to fit under
/// `ancilla_cap` with tail mass < 1e-9.
double p_coherent_exact_cascade(double T, double mu, const NoiseParams& delta,
                                int ancilla_cap = 40);

/// Smallest n with Poisson(lambda) upper-tail mass below `tail`.
int poisson_nmax(double lambda, double tail = 1e-9);

/// Upper-tail mass P(X > n) for X ~ Poisson(lambda).
double poisson_upper_tail(double lambda, long long n);

}  // namespace dfsbqc::analytics
