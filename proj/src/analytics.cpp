#include "dfsbqc/analytics.hpp"

#include "dfsbqc/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace dfsbqc::analytics {

namespace {

void require_unit_interval(double x, const char* who) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(std::string(who) + ": outside [0,1]");
}

double catalan_ratio(long long j) {
    // C_{j+1} / C_j = 2 (2j+1) / (j+2)
    return 2.0 * double(2 * j + 1) / double(j + 2);
}

/// Poisson pmf over 0..n_hi; switches to the log-gamma form for large rates,
/// where e^{-lambda} underflows.
std::vector<double> poisson_pmf_table(double lambda, long long n_hi) {
    std::vector<double> pmf(static_cast<std::size_t>(n_hi) + 1, 0.0);
    if (lambda < 600.0) {
        double p = std::exp(-lambda);
        for (long long n = 0; n <= n_hi; ++n) {
            pmf[n] = p;
            p *= lambda / double(n + 1);
        }
    } else {
        for (long long n = 0; n <= n_hi; ++n) {
            const double lp = n * std::log(lambda) - lambda - std::lgamma(double(n) + 1.0);
            pmf[n] = lp < -745.0 ? 0.0 : std::exp(lp);
        }
    }
    return pmf;
}

long long poisson_window_hi(double lambda) {
    return static_cast<long long>(std::ceil(lambda + 20.0 * std::sqrt(lambda) + 50.0));
}

struct WalkWeights {
    double success = 0.0;  // step-right probability
    bool valid = false;
};

WalkWeights mode_weights(const NoiseParams& delta, Arm mode) {
    WalkWeights w;
    const double s = std::norm(delta.a) + std::norm(delta.d);
    if (mode == Arm::S) {
        if (s <= 0.0) return w;
        w.success = q1(delta);
    } else {
        if (2.0 - s <= 0.0) return w;
        w.success = q2_success(delta);
    }
    w.valid = true;
    return w;
}

/// Cumulative absorption sums W[j] = sum_{t'=0..j} C_{t'} (1-q)^{t'} q^{t'+1}.
std::vector<double> walk_cumulative(double q, long long jmax) {
    std::vector<double> W(static_cast<std::size_t>(jmax) + 1, 0.0);
    KahanSum acc;
    double term = q;
    for (long long j = 0; j <= jmax; ++j) {
        acc.add(term);
        W[j] = acc.value();
        term *= catalan_ratio(j) * (1.0 - q) * q;
    }
    return W;
}

}  // namespace

double p_entanglement(double T) {
    require_unit_interval(T, "p_entanglement");
    return T * T;
}

std::uint64_t binomial_u64(unsigned n, unsigned k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 r = 1;
    for (unsigned i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
        if (r > std::numeric_limits<std::uint64_t>::max())
            throw std::overflow_error("binomial_u64: overflow");
    }
    return static_cast<std::uint64_t>(r);
}

std::uint64_t catalan(int t) {
    if (t < 0) throw std::invalid_argument("catalan: negative index");
    if (t > 33) throw std::overflow_error("catalan: exceeds exact 64-bit range");
    return binomial_u64(2 * unsigned(t), unsigned(t)) / (unsigned(t) + 1);
}

double p_single_photon(double T, int N) {
    require_unit_interval(T, "p_single_photon");
    if (N < 1) throw std::invalid_argument("p_single_photon: N must be >= 1");
    if (T == 0.0) return 0.0;
    if (T == 1.0) return 1.0 - std::ldexp(1.0, -N);
    const int twoN = 2 * N;
    KahanSum acc;
    for (int M = 2; M <= twoN; ++M) {  // floor(M/2) = 0 terms vanish
        double pmf;
        if (N <= 31) {
            pmf = double(binomial_u64(unsigned(twoN), unsigned(M))) * std::pow(T, M) *
                  std::pow(1.0 - T, twoN - M);
        } else {
            const double lb = std::lgamma(double(twoN) + 1.0) - std::lgamma(double(M) + 1.0) -
                              std::lgamma(double(twoN - M) + 1.0);
            pmf = std::exp(lb + M * std::log(T) + (twoN - M) * std::log1p(-T));
        }
        acc.add(pmf * (1.0 - std::ldexp(1.0, -(M / 2))));
    }
    return acc.value();
}

double walk_absorption(double q, long long max_steps) {
    require_unit_interval(q, "walk_absorption");
    if (max_steps <= 0) return 0.0;
    const long long jmax = (max_steps - 1) / 2;
    if (jmax > 100000000LL) throw std::invalid_argument("walk_absorption: horizon too large");
    KahanSum acc;
    double term = q;
    for (long long j = 0; j <= jmax; ++j) {
        acc.add(term);
        term *= catalan_ratio(j) * (1.0 - q) * q;
        if (term == 0.0) break;
    }
    return acc.value();
}

double walk_absorption_limit(double q) {
    require_unit_interval(q, "walk_absorption_limit");
    if (q >= 0.5) return 1.0;
    return q / (1.0 - q);
}

double walk_absorption_symmetric_partial(long long steps) {
    if (steps <= 0) return 0.0;
    const long long n = (steps - 1) / 2;
    // 1 - C(2n+2, n+1) 4^-(n+1); the remainder via lgamma for large n,
    // via the asymptotic 1/sqrt(pi m) once lgamma would lose the digits.
    const double m = double(n) + 1.0;
    double remainder;
    if (n < 1000000) {
        remainder = std::exp(std::lgamma(2.0 * m + 1.0) - 2.0 * std::lgamma(m + 1.0) -
                             2.0 * m * std::numbers::ln2);
    } else {
        remainder = 1.0 / std::sqrt(std::numbers::pi * m) * (1.0 - 1.0 / (8.0 * m));
    }
    return 1.0 - remainder;
}

double walk_absorption_series(double q) {
    require_unit_interval(q, "walk_absorption_series");
    if (std::abs(q - 0.5) < 1e-15) {
        // Direct partial sums close only like t^-1/2 here. The partial sum
        // has the exact complement C(2n+2, n+1) 4^-(n+1) (checked in exact
        // integer arithmetic by the unit tests), so the series is evaluated
        // at a horizon deep enough for the complement to drop below 1e-15.
        return walk_absorption_symmetric_partial(2000000000000000000LL);
    }
    KahanSum acc;
    double term = q;
    long long j = 0;
    while (true) {
        acc.add(term);
        term *= catalan_ratio(j) * (1.0 - q) * q;
        ++j;
        if (term == 0.0 || term < 1e-18 * (acc.value() + 1e-300)) break;
        if (j > 20000000LL) break;  // ratio 4q(1-q) < 1 ends far earlier
    }
    return acc.value();
}

double q1(const NoiseParams& delta) {
    const double s = std::norm(delta.a) + std::norm(delta.d);
    if (s <= 0.0) throw std::domain_error("q1: |a|^2 + |d|^2 = 0");
    return 2.0 * std::norm(delta.a) * std::norm(delta.d) / (s * s);
}

double q2(const NoiseParams& delta) {
    const double s = std::norm(delta.a) + std::norm(delta.d);
    const double u = 2.0 - s;
    if (u <= 0.0) throw std::domain_error("q2: |a|^2 + |d|^2 = 2");
    const double a2 = std::norm(delta.a), d2 = std::norm(delta.d);
    return (2.0 - 2.0 * s + a2 * a2 + d2 * d2) / (u * u);
}

double q2_success(const NoiseParams& delta) {
    const double bc2 = std::norm(delta.b) + std::norm(delta.c);
    if (bc2 <= 0.0) throw std::domain_error("q2_success: |b|^2 + |c|^2 = 0");
    return 2.0 * std::norm(delta.b) * std::norm(delta.c) / (bc2 * bc2);
}

double per_pair_success(const NoiseParams& delta) {
    const double s = std::norm(delta.a) + std::norm(delta.d);
    double p = 0.0;
    if (s > 0.0) p += s * s / 4.0 * q1(delta);
    if (s < 2.0) p += (2.0 - s) * (2.0 - s) / 4.0 * q2_success(delta);
    p += 0.5 * (std::norm(delta.a) * std::norm(delta.c) +
                std::norm(delta.b) * std::norm(delta.d));
    return p;
}

int poisson_nmax(double lambda, double tail) {
    if (lambda < 0.0 || !std::isfinite(lambda)) throw std::invalid_argument("poisson_nmax: bad rate");
    if (lambda == 0.0) return 0;
    const long long hi = poisson_window_hi(lambda);
    const auto pmf = poisson_pmf_table(lambda, hi);
    // suffix sums from the far right; the mass beyond `hi` is negligible
    double suffix = 0.0;
    long long n_min = hi;
    for (long long n = hi; n >= 0; --n) {
        suffix += pmf[n];
        if (suffix >= tail) {
            n_min = n;
            break;
        }
        n_min = n - 1;
    }
    return static_cast<int>(std::max<long long>(n_min, 0));
}

double poisson_upper_tail(double lambda, long long n) {
    if (lambda <= 0.0) return 0.0;
    const long long hi = poisson_window_hi(lambda);
    if (n >= hi) return 0.0;
    const auto pmf = poisson_pmf_table(lambda, hi);
    KahanSum acc;
    for (long long k = hi; k > n; --k) acc.add(pmf[k]);
    return acc.value();
}

namespace {

double coherent_branch(double lambda, double q_succ, int n_max) {
    if (lambda <= 0.0) return 0.0;
    long long nb;
    if (n_max > 0) {
        if (poisson_upper_tail(lambda, n_max) >= 1e-9)
            throw std::invalid_argument("p_coherent: n_max leaves tail mass above 1e-9");
        nb = n_max;
    } else {
        nb = poisson_nmax(lambda, 1e-9);
    }
    if (nb < 1) return 0.0;
    const auto W = walk_cumulative(q_succ, (nb - 1) / 2);
    const auto pmf = poisson_pmf_table(lambda, nb);
    KahanSum acc;
    for (long long t = 1; t <= nb; ++t) acc.add(pmf[t] * W[(t - 1) / 2]);
    return acc.value();
}

}  // namespace

double p_coherent(double T, double mu, const NoiseParams& delta, int n_max) {
    require_unit_interval(T, "p_coherent");
    if (mu < 0.0 || !std::isfinite(mu)) throw std::invalid_argument("p_coherent: bad mu");
    validate_noise_params(delta);
    const double lambda = mu * T;
    if (lambda == 0.0) return 0.0;
    const double s = std::norm(delta.a) + std::norm(delta.d);
    const double ps = s / 2.0;
    double total = 0.0;
    if (ps > 0.0) total += ps * coherent_branch(lambda * ps, q1(delta), n_max);
    if (ps < 1.0) total += (1.0 - ps) * coherent_branch(lambda * (1.0 - ps), q2_success(delta), n_max);
    return T * total;
}

double p_coherent_double_sum(double T, double mu, const NoiseParams& delta, int n_max) {
    require_unit_interval(T, "p_coherent_double_sum");
    if (mu < 0.0) throw std::invalid_argument("p_coherent_double_sum: bad mu");
    validate_noise_params(delta);
    const double lambda = mu * T;
    if (lambda == 0.0) return 0.0;
    const long long nb = n_max > 0 ? n_max : poisson_nmax(lambda, 1e-9);
    if (nb > 400)
        throw std::invalid_argument("p_coherent_double_sum: nested evaluation kept for small mu");
    const double s = std::norm(delta.a) + std::norm(delta.d);
    const double ps = s / 2.0;
    const long long jmax = std::max<long long>((nb - 1) / 2, 0);
    const auto Ws = ps > 0.0 ? walk_cumulative(q1(delta), jmax) : std::vector<double>{};
    const auto Wl = ps < 1.0 ? walk_cumulative(q2_success(delta), jmax) : std::vector<double>{};
    const auto pmf = poisson_pmf_table(lambda, nb);
    KahanSum acc;
    for (long long n = 1; n <= nb; ++n) {
        double binom = double(n);  // C(n,1)
        for (long long t = 1; t <= n; ++t) {
            double inner = 0.0;
            if (ps > 0.0)
                inner += std::pow(ps, double(t + 1)) * std::pow(1.0 - ps, double(n - t)) *
                         Ws[(t - 1) / 2];
            if (ps < 1.0)
                inner += std::pow(1.0 - ps, double(t + 1)) * std::pow(ps, double(n - t)) *
                         Wl[(t - 1) / 2];
            acc.add(pmf[n] * binom * inner);
            binom *= double(n - t) / double(t + 1);
        }
    }
    return T * acc.value();
}

double p_coherent_limit_coeff(const NoiseParams& delta) {
    validate_noise_params(delta);
    auto bracket = [](double q) {
        if (q >= 1.0) return 1.0;
        return -(-1.0 + std::abs(1.0 - 2.0 * q)) / (2.0 * (1.0 - q));
    };
    const double s = std::norm(delta.a) + std::norm(delta.d);
    double coeff = 0.0;
    if (s > 0.0) coeff += s / 2.0 * bracket(q1(delta));
    if (s < 2.0) coeff += (1.0 - s / 2.0) * bracket(q2_success(delta));
    return coeff;
}

namespace {

/// Collapsed signal qubit after e more failures than successes: amplitudes
/// proportional to (alpha^e, beta^e), computed through the modulus ratio so
/// large exponents stay finite.
QubitState exponent_state(double alpha, double beta, int e) {
    double h, v;
    if (alpha >= beta) {
        h = 1.0;
        v = std::pow(beta / alpha, double(e));
    } else {
        h = std::pow(alpha / beta, double(e));
        v = 1.0;
    }
    return normalized(QubitState{cplx{h, 0.0}, cplx{v, 0.0}});
}

}  // namespace

double oracle_dfse_cascade(const NoiseParams& delta, Arm mode, int ancilla_count) {
    if (ancilla_count < 0) throw std::invalid_argument("oracle_dfse_cascade: negative count");
    if (ancilla_count > 40)
        throw std::invalid_argument("oracle_dfse_cascade: enumeration bounded at 40 ancillas");
    validate_noise_params(delta);
    const auto w = mode_weights(delta, mode);
    if (!w.valid) throw std::domain_error("oracle_dfse_cascade: degenerate mode weight");
    const double alpha = mode == Arm::S ? std::abs(delta.a) : std::abs(delta.b);
    const double beta = mode == Arm::S ? std::abs(delta.d) : std::abs(delta.c);
    const QubitState anc = exponent_state(alpha, beta, 1);
    // Success probability per step from the exact collapsed two-qubit state.
    std::vector<double> p_step(static_cast<std::size_t>(ancilla_count) + 2, 0.0);
    for (int e = 1; e <= ancilla_count + 1; ++e)
        p_step[e] = dfse_success_prob(exponent_state(alpha, beta, e), anc);
    // f[e] = success probability with r steps remaining at exponent e;
    // absorption at e = 0 succeeds regardless of the steps left.
    std::vector<double> f(static_cast<std::size_t>(ancilla_count) + 3, 0.0);
    std::vector<double> g(f.size(), 0.0);
    f[0] = 1.0;
    for (int r = 1; r <= ancilla_count; ++r) {
        g[0] = 1.0;
        for (int e = 1; e <= ancilla_count + 1; ++e)
            g[e] = p_step[e] * f[e - 1] + (1.0 - p_step[e]) * f[e + 1];
        std::swap(f, g);
    }
    return ancilla_count == 0 ? 0.0 : f[1];
}

double p_coherent_exact_cascade(double T, double mu, const NoiseParams& delta,
                                int ancilla_cap) {
    require_unit_interval(T, "p_coherent_exact_cascade");
    validate_noise_params(delta);
    const double lambda = mu * T;
    if (lambda == 0.0) return 0.0;
    const double s = std::norm(delta.a) + std::norm(delta.d);
    const double ps = s / 2.0;
    double total = 0.0;
    for (const Arm mode : {Arm::S, Arm::L}) {
        const double weight = mode == Arm::S ? ps : 1.0 - ps;
        if (weight <= 0.0) continue;
        const double lam = lambda * weight;
        if (poisson_upper_tail(lam, ancilla_cap) >= 1e-9)
            throw std::invalid_argument(
                "p_coherent_exact_cascade: ancilla counts exceed the enumeration cap");
        const auto pmf = poisson_pmf_table(lam, ancilla_cap);
        KahanSum acc;
        for (int h = 1; h <= ancilla_cap; ++h)
            acc.add(pmf[h] * oracle_dfse_cascade(delta, mode, h));
        total += weight * acc.value();
    }
    return T * total;
}

}  // namespace dfsbqc::analytics
