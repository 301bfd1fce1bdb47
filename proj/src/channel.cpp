#include "dfsbqc/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dfsbqc {

NoiseParams make_noise_params(double a_abs2, double d_abs2, double phase_a,
                              double phase_b, double phase_c, double phase_d) {
    if (a_abs2 < 0.0 || a_abs2 > 1.0 || d_abs2 < 0.0 || d_abs2 > 1.0)
        throw std::invalid_argument("make_noise_params: moduli squared outside [0,1]");
    NoiseParams p;
    p.a = std::polar(std::sqrt(a_abs2), phase_a);
    p.b = std::polar(std::sqrt(1.0 - a_abs2), phase_b);
    p.c = std::polar(std::sqrt(1.0 - d_abs2), phase_c);
    p.d = std::polar(std::sqrt(d_abs2), phase_d);
    return p;
}

bool noise_params_valid(const NoiseParams& p, double tol) {
    return std::abs(std::norm(p.a) + std::norm(p.b) - 1.0) <= tol &&
           std::abs(std::norm(p.c) + std::norm(p.d) - 1.0) <= tol;
}

void validate_noise_params(const NoiseParams& p) {
    if (!noise_params_valid(p))
        throw std::invalid_argument("NoiseParams: |a|^2+|b|^2 and |c|^2+|d|^2 must equal 1");
}

NoiseParams sample_delta(Rng& rng, DeltaScheme scheme) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> uph(0.0, 2.0 * std::numbers::pi);
    // For 2x2 unitaries a Haar draw puts |a|^2 uniform on [0,1] with uniform
    // phases, which coincides with the uniform-moduli scheme on the column
    // the protocols can observe.
    (void)scheme;
    const double a2 = u01(rng);
    const double pa = uph(rng), pb = uph(rng);
    const double d2 = u01(rng);
    const double pc = uph(rng), pd = uph(rng);
    return make_noise_params(a2, d2, pa, pb, pc, pd);
}

StateVector pbs_split(const StateVector& in, std::span<const std::uint32_t> bins) {
    for (auto bin : bins) {
        const ModeLabel lh{bin, Arm::L, Pol::H}, lv{bin, Arm::L, Pol::V};
        for (const auto& [b, amp] : in.terms()) {
            if (b.count(lh) > 0 || b.count(lv) > 0)
                throw std::invalid_argument("pbs_split: photon already in arm register");
        }
    }
    StateVector out;
    out.set_modes(in.mode_set());
    for (const auto& [b, amp] : in.terms()) {
        BasisState nb = b;
        for (auto bin : bins) {
            const int nv = nb.count(ModeLabel{bin, Arm::S, Pol::V});
            nb.set_count(ModeLabel{bin, Arm::S, Pol::V}, 0);
            nb.set_count(ModeLabel{bin, Arm::L, Pol::V}, nv);
        }
        out.add_term(nb, amp);
    }
    for (auto bin : bins) out.add_modes(bin_modes(bin));
    out.check();
    return out;
}

StateVector pbs_merge(const StateVector& in, std::span<const std::uint32_t> bins) {
    // Output bookkeeping: (S,H)->s,H  (S,V)->l,V  (L,H)->l,H  (L,V)->s,V,
    // i.e. the V occupations of the two arms trade places.
    StateVector out;
    out.set_modes(in.mode_set());
    for (const auto& [b, amp] : in.terms()) {
        BasisState nb = b;
        for (auto bin : bins) {
            const ModeLabel sv{bin, Arm::S, Pol::V}, lv{bin, Arm::L, Pol::V};
            const int x = nb.count(sv), y = nb.count(lv);
            nb.set_count(sv, y);
            nb.set_count(lv, x);
        }
        out.add_term(nb, amp);
    }
    for (auto bin : bins) out.add_modes(bin_modes(bin));
    out.check();
    return out;
}

StateVector apply_collective_unitary(const StateVector& in, const NoiseParams& p,
                                     std::span<const std::uint32_t> bins) {
    validate_noise_params(p);
    const std::array<cplx, 4> us{p.a, -std::conj(p.b), p.b, std::conj(p.a)};
    const std::array<cplx, 4> ul{std::conj(p.d), p.c, -std::conj(p.c), p.d};
    StateVector cur = in;
    for (auto bin : bins) {
        cur = apply_mode_pair_unitary(cur, ModeLabel{bin, Arm::S, Pol::H},
                                      ModeLabel{bin, Arm::S, Pol::V}, us);
        cur = apply_mode_pair_unitary(cur, ModeLabel{bin, Arm::L, Pol::H},
                                      ModeLabel{bin, Arm::L, Pol::V}, ul);
    }
    return cur;
}

StateVector apply_loss(const StateVector& in, double transmission,
                       std::span<const std::uint32_t> bins, Rng& rng) {
    if (transmission < 0.0 || transmission > 1.0)
        throw std::invalid_argument("apply_loss: transmission outside [0,1]");
    if (transmission == 1.0) return in;
    const double T = transmission;
    // C(n,k) T^(n-k) (1-T)^k, the probability that k of n photons are lost
    auto lose_pmf = [T](int n, int k) {
        double coeff = 1.0;
        for (int i = 0; i < k; ++i) coeff *= double(n - i) / double(i + 1);
        return coeff * std::pow(T, n - k) * std::pow(1.0 - T, k);
    };
    StateVector cur = in;
    for (auto bin : bins) {
        for (const auto& mode : bin_modes(bin)) {
            if (!cur.has_mode(mode)) continue;
            int max_n = 0;
            for (const auto& [b, amp] : cur.terms()) max_n = std::max(max_n, b.count(mode));
            if (max_n == 0) continue;
            // Born weights over k = photons lost from this mode
            std::vector<double> w(max_n + 1, 0.0);
            for (const auto& [b, amp] : cur.terms()) {
                const int n = b.count(mode);
                const double p2 = std::norm(amp);
                if (T > 0.0) {
                    double factor = std::pow(T, n);  // k = 0
                    for (int k = 0; k <= n; ++k) {
                        w[k] += p2 * factor;
                        if (k < n) factor *= (1.0 - T) / T * double(n - k) / double(k + 1);
                    }
                } else {
                    w[n] += p2;  // every photon is lost
                }
            }
            const int k = static_cast<int>(sample_discrete(w, rng));
            StateVector next;
            next.set_modes(cur.mode_set());
            for (const auto& [b, amp] : cur.terms()) {
                const int n = b.count(mode);
                if (n < k) continue;
                const double kraus = std::sqrt(lose_pmf(n, k));
                if (kraus == 0.0) continue;
                BasisState nb = b;
                nb.set_count(mode, n - k);
                next.add_term(nb, amp * kraus);
            }
            next.normalize();
            cur = std::move(next);
        }
    }
    cur.check();
    return cur;
}

StateVector transmit(const StateVector& in, const ChannelModel& ch,
                     std::span<const std::uint32_t> bins, Rng& rng) {
    StateVector st = pbs_split(in, bins);
    st = apply_collective_unitary(st, ch.delta, bins);
    st = apply_loss(st, ch.transmission, bins, rng);
    return pbs_merge(st, bins);
}

}  // namespace dfsbqc
