#include "dfsbqc/state.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace dfsbqc {

namespace {

constexpr int kMaxPhotons = 128;

const double* sqrt_fact_table() {
    static const auto table = [] {
        static double t[kMaxPhotons + 1];
        long double acc = 1.0L;
        t[0] = 1.0;
        for (int n = 1; n <= kMaxPhotons; ++n) {
            acc *= std::sqrt(static_cast<long double>(n));
            t[n] = static_cast<double>(acc);
        }
        return t;
    }();
    return table;
}

double sqrt_fact(int n) {
    if (n < 0 || n > kMaxPhotons) throw std::invalid_argument("sqrt_fact: out of range");
    return sqrt_fact_table()[n];
}

double binom_d(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    k = std::min(k, n - k);
    for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
    return r;
}

}  // namespace

std::size_t sample_discrete(std::span<const double> weights, Rng& rng) {
    double total = 0.0;
    for (double w : weights) {
        if (w < -kTruncTol) throw std::runtime_error("sample_discrete: negative weight");
        total += std::max(0.0, w);
    }
    if (total <= 0.0) throw std::runtime_error("sample_discrete: zero total weight");
    const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += std::max(0.0, weights[i]);
        if (u < acc) return i;
    }
    return weights.size() - 1;
}

// --- qubits ------------------------------------------------------------------

QubitState make_rotated_qubit(double theta) {
    if (!std::isfinite(theta)) throw std::invalid_argument("make_rotated_qubit: non-finite angle");
    const double r = 1.0 / std::numbers::sqrt2;
    return QubitState{cplx{r, 0.0}, std::polar(r, theta)};
}

QubitState normalized(const QubitState& q) {
    const double n = std::sqrt(q.norm_sq());
    if (n <= 0.0) throw std::invalid_argument("normalized: zero qubit");
    return QubitState{q.amp_h / n, q.amp_v / n};
}

QubitState pauli_x(const QubitState& q) { return QubitState{q.amp_v, q.amp_h}; }

static void require_normalized(const QubitState& q, const char* who) {
    if (std::abs(q.norm_sq() - 1.0) > kTruncTol)
        throw std::invalid_argument(std::string(who) + ": qubit not normalized");
}

double fidelity(const QubitState& a, const QubitState& b) {
    require_normalized(a, "fidelity");
    require_normalized(b, "fidelity");
    return std::norm(std::conj(a.amp_h) * b.amp_h + std::conj(a.amp_v) * b.amp_v);
}

int measure_in_rotated_basis(const QubitState& q, double xi, Rng& rng) {
    require_normalized(q, "measure_in_rotated_basis");
    const QubitState plus = make_rotated_qubit(xi);
    const double p_plus =
        std::norm(std::conj(plus.amp_h) * q.amp_h + std::conj(plus.amp_v) * q.amp_v);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return u < p_plus ? 0 : 1;
}

// --- StateVector basics ------------------------------------------------------

StateVector StateVector::vacuum(std::vector<ModeLabel> modes) {
    StateVector s;
    s.set_modes(std::move(modes));
    s.add_term(BasisState{}, cplx{1.0, 0.0});
    return s;
}

bool StateVector::has_mode(ModeLabel m) const {
    return std::binary_search(mode_set_.begin(), mode_set_.end(), m);
}

double StateVector::norm_sq() const {
    double n = 0.0;
    for (const auto& [b, amp] : terms_) n += std::norm(amp);
    return n;
}

void StateVector::normalize() {
    const double n = std::sqrt(norm_sq());
    if (n <= 0.0) throw std::runtime_error("StateVector::normalize: zero state");
    for (auto& [b, amp] : terms_) amp /= n;
}

void StateVector::add_mode(ModeLabel m) {
    auto it = std::lower_bound(mode_set_.begin(), mode_set_.end(), m);
    if (it == mode_set_.end() || *it != m) mode_set_.insert(it, m);
}

void StateVector::add_modes(std::span<const ModeLabel> modes) {
    for (const auto& m : modes) add_mode(m);
}

void StateVector::remove_mode(ModeLabel m) {
    auto it = std::lower_bound(mode_set_.begin(), mode_set_.end(), m);
    if (it != mode_set_.end() && *it == m) mode_set_.erase(it);
}

void StateVector::add_term(const BasisState& b, cplx amp) {
    auto [it, inserted] = terms_.try_emplace(b, amp);
    if (!inserted) it->second += amp;
}

void StateVector::set_modes(std::vector<ModeLabel> modes) {
    std::sort(modes.begin(), modes.end());
    modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
    mode_set_ = std::move(modes);
}

void StateVector::check(double tol) const {
    if (std::abs(norm_sq() - 1.0) > tol)
        throw std::logic_error("StateVector: norm drifted from 1");
    for (const auto& [b, amp] : terms_) {
        for (const auto& e : b.entries()) {
            if (!has_mode(ModeLabel::decode(e.first)))
                throw std::logic_error("StateVector: term uses mode outside mode set");
        }
    }
}

// --- construction ------------------------------------------------------------

StateVector make_single_photon(std::uint32_t time_bin, const QubitState& pol) {
    require_normalized(pol, "make_single_photon");
    StateVector s;
    s.set_modes(site_modes(PolSite{time_bin, Arm::S}));
    if (pol.amp_h != cplx{})
        s.add_term(BasisState::single(ModeLabel{time_bin, Arm::S, Pol::H}), pol.amp_h);
    if (pol.amp_v != cplx{})
        s.add_term(BasisState::single(ModeLabel{time_bin, Arm::S, Pol::V}), pol.amp_v);
    s.check();
    return s;
}

StateVector make_bell_psi_plus(std::uint32_t bin_a, std::uint32_t bin_b) {
    if (bin_a == bin_b) throw std::invalid_argument("make_bell_psi_plus: equal time bins");
    StateVector s;
    auto ma = site_modes(PolSite{bin_a, Arm::S});
    auto mb = site_modes(PolSite{bin_b, Arm::S});
    ma.insert(ma.end(), mb.begin(), mb.end());
    s.set_modes(ma);
    const double r = 1.0 / std::numbers::sqrt2;
    BasisState hv;
    hv.set_count(ModeLabel{bin_a, Arm::S, Pol::H}, 1);
    hv.set_count(ModeLabel{bin_b, Arm::S, Pol::V}, 1);
    BasisState vh;
    vh.set_count(ModeLabel{bin_a, Arm::S, Pol::V}, 1);
    vh.set_count(ModeLabel{bin_b, Arm::S, Pol::H}, 1);
    s.add_term(hv, cplx{r, 0.0});
    s.add_term(vh, cplx{r, 0.0});
    s.check();
    return s;
}

int coherent_cutoff(double mu, double tail) {
    if (mu < 0.0 || !std::isfinite(mu)) throw std::invalid_argument("coherent_cutoff: bad mu");
    if (mu == 0.0) return 0;
    if (mu > 400.0)
        throw std::invalid_argument("coherent_cutoff: mu too large for a Fock vector");
    double pmf = std::exp(-mu);
    double remaining = 1.0 - pmf;
    int n = 0;
    while (remaining >= tail) {
        ++n;
        pmf *= mu / n;
        remaining -= pmf;
        if (n > kMaxPhotons) throw std::runtime_error("coherent_cutoff: cutoff out of range");
    }
    return n;
}

StateVector make_coherent_pulse(double mu, const QubitState& pol, int cutoff,
                                std::uint32_t time_bin) {
    require_normalized(pol, "make_coherent_pulse");
    if (mu < 0.0 || !std::isfinite(mu)) throw std::invalid_argument("make_coherent_pulse: bad mu");
    if (cutoff < 0 || cutoff > kMaxPhotons)
        throw std::invalid_argument("make_coherent_pulse: bad cutoff");
    if (mu > 0.0 && cutoff < coherent_cutoff(mu))
        throw std::invalid_argument("make_coherent_pulse: cutoff leaves tail mass above 1e-9");

    const ModeLabel mh{time_bin, Arm::S, Pol::H};
    const ModeLabel mv{time_bin, Arm::S, Pol::V};
    StateVector s;
    s.set_modes({mh, mv});
    for (int n = 0; n <= cutoff; ++n) {
        // |n> amplitude e^{-mu/2} mu^{n/2}/sqrt(n!), photons all in `pol`
        if (n > 0 && mu == 0.0) break;
        const double c =
            (n == 0) ? std::exp(-mu / 2.0)
                     : std::exp(-mu / 2.0 + 0.5 * n * std::log(mu) - std::log(sqrt_fact(n)));
        for (int k = 0; k <= n; ++k) {
            const cplx amp = c * std::sqrt(binom_d(n, k)) * std::pow(pol.amp_h, k) *
                             std::pow(pol.amp_v, n - k);
            if (amp == cplx{}) continue;
            BasisState b;
            b.set_count(mh, k);
            b.set_count(mv, n - k);
            s.add_term(b, amp);
        }
    }
    s.normalize();
    s.check();
    return s;
}

StateVector tensor(const StateVector& a, const StateVector& b) {
    for (const auto& m : b.mode_set())
        if (a.has_mode(m)) throw std::invalid_argument("tensor: overlapping mode sets");
    StateVector out;
    auto modes = a.mode_set();
    modes.insert(modes.end(), b.mode_set().begin(), b.mode_set().end());
    out.set_modes(std::move(modes));
    for (const auto& [ba, va] : a.terms()) {
        for (const auto& [bb, vb] : b.terms()) {
            BasisState joint = ba;
            for (const auto& e : bb.entries())
                joint.set_count(ModeLabel::decode(e.first), e.second);
            out.add_term(joint, va * vb);
        }
    }
    out.check();
    return out;
}

cplx overlap(const StateVector& a, const StateVector& b) {
    // <a|b>, iterating the smaller term map
    const StateVector& small = a.term_count() <= b.term_count() ? a : b;
    const StateVector& big = a.term_count() <= b.term_count() ? b : a;
    const bool conj_a = (&small == &a);
    cplx acc{};
    for (const auto& [bs, amp] : small.terms()) {
        auto it = big.terms().find(bs);
        if (it == big.terms().end()) continue;
        acc += conj_a ? std::conj(amp) * it->second : std::conj(it->second) * amp;
    }
    return acc;
}

double state_fidelity(const StateVector& a, const StateVector& b) {
    return std::norm(overlap(a, b));
}

// --- gates -------------------------------------------------------------------

namespace {

template <class F>
StateVector map_terms(const StateVector& in, F&& f) {
    StateVector out;
    out.set_modes(in.mode_set());
    for (const auto& [b, amp] : in.terms()) f(b, amp, out);
    return out;
}

[[noreturn]] void occupancy_error(const char* who) {
    throw std::invalid_argument(std::string(who) + ": occupancy precondition violated");
}

}  // namespace

StateVector rotate_z(const StateVector& in, const PolSite& target, double theta) {
    const ModeLabel mh = target.mode(Pol::H);
    const ModeLabel mv = target.mode(Pol::V);
    const cplx ph = std::polar(1.0, -theta / 2.0);
    const cplx pv = std::polar(1.0, +theta / 2.0);
    auto out = map_terms(in, [&](const BasisState& b, cplx amp, StateVector& o) {
        const int nh = b.count(mh), nv = b.count(mv);
        if (nh + nv > 1) occupancy_error("rotate_z");
        o.add_term(b, nh ? amp * ph : (nv ? amp * pv : amp));
    });
    out.check();
    return out;
}

StateVector apply_cnot_pol(const StateVector& in, const PolSite& control,
                           const PolSite& target) {
    const ModeLabel ch = control.mode(Pol::H), cv = control.mode(Pol::V);
    const ModeLabel th = target.mode(Pol::H), tv = target.mode(Pol::V);
    auto out = map_terms(in, [&](const BasisState& b, cplx amp, StateVector& o) {
        const int nch = b.count(ch), ncv = b.count(cv);
        const int nth = b.count(th), ntv = b.count(tv);
        if (nch + ncv != 1 || nth + ntv != 1) occupancy_error("apply_cnot_pol");
        BasisState nb = b;
        if (ncv == 1) {  // flip the target polarization
            nb.set_count(th, ntv);
            nb.set_count(tv, nth);
        }
        o.add_term(nb, amp);
    });
    out.check();
    return out;
}

StateVector apply_pauli_x(const StateVector& in, const PolSite& target) {
    const ModeLabel th = target.mode(Pol::H), tv = target.mode(Pol::V);
    auto out = map_terms(in, [&](const BasisState& b, cplx amp, StateVector& o) {
        BasisState nb = b;
        const int nh = b.count(th), nv = b.count(tv);
        nb.set_count(th, nv);
        nb.set_count(tv, nh);
        o.add_term(nb, amp);
    });
    out.check();
    return out;
}

StateVector apply_pol_flip(const StateVector& in, std::uint32_t time_bin) {
    const ModeLabel sv{time_bin, Arm::S, Pol::V};
    const ModeLabel lh{time_bin, Arm::L, Pol::H};
    auto out = map_terms(in, [&](const BasisState& b, cplx amp, StateVector& o) {
        if (b.total_at_site(PolSite{time_bin, Arm::S}) +
                b.total_at_site(PolSite{time_bin, Arm::L}) > 1)
            occupancy_error("apply_pol_flip");
        BasisState nb = b;
        const int a = b.count(sv), c = b.count(lh);
        nb.set_count(sv, c);
        nb.set_count(lh, a);
        o.add_term(nb, amp);
    });
    out.add_modes(bin_modes(time_bin));
    out.check();
    return out;
}

StateVector apply_arm_swap_and_x(const StateVector& in,
                                 std::span<const std::uint32_t> bins) {
    auto out = map_terms(in, [&](const BasisState& b, cplx amp, StateVector& o) {
        BasisState nb = b;
        for (auto bin : bins) {
            // S<->L then H<->V: (S,H)<->(L,V) and (S,V)<->(L,H)
            const ModeLabel sh{bin, Arm::S, Pol::H}, svm{bin, Arm::S, Pol::V};
            const ModeLabel lhm{bin, Arm::L, Pol::H}, lv{bin, Arm::L, Pol::V};
            const int a = nb.count(sh), x = nb.count(svm), y = nb.count(lhm), z = nb.count(lv);
            nb.set_count(sh, z);
            nb.set_count(lv, a);
            nb.set_count(svm, y);
            nb.set_count(lhm, x);
        }
        o.add_term(nb, amp);
    });
    for (auto bin : bins) out.add_modes(bin_modes(bin));
    out.check();
    return out;
}

StateVector apply_mode_pair_unitary(const StateVector& in, ModeLabel ma, ModeLabel mb,
                                    const std::array<cplx, 4>& u) {
    // u = {u00, u01, u10, u11}: a†_A -> u00 a†_A + u10 a†_B, a†_B -> u01 a†_A + u11 a†_B
    auto out = map_terms(in, [&](const BasisState& b, cplx amp, StateVector& o) {
        const int m = b.count(ma), n = b.count(mb);
        if (m + n == 0) {
            o.add_term(b, amp);
            return;
        }
        const double denom = sqrt_fact(m) * sqrt_fact(n);
        for (int j = 0; j <= m; ++j) {
            const cplx fa = binom_d(m, j) * std::pow(u[0], j) * std::pow(u[2], m - j);
            if (fa == cplx{}) continue;
            for (int k = 0; k <= n; ++k) {
                const cplx fb = binom_d(n, k) * std::pow(u[1], k) * std::pow(u[3], n - k);
                if (fb == cplx{}) continue;
                const int na = j + k, nb2 = m + n - j - k;
                BasisState nb = b;
                nb.set_count(ma, na);
                nb.set_count(mb, nb2);
                o.add_term(nb, amp * fa * fb * (sqrt_fact(na) * sqrt_fact(nb2) / denom));
            }
        }
    });
    out.add_mode(ma);
    out.add_mode(mb);
    out.check();
    return out;
}

// --- measurements ------------------------------------------------------------

std::map<int, double> photon_number_distribution(const StateVector& in,
                                                 std::span<const ModeLabel> modes) {
    if (modes.empty())
        throw std::invalid_argument("photon_number_distribution: empty mode set");
    std::map<int, double> dist;
    for (const auto& [b, amp] : in.terms()) dist[b.total_at(modes)] += std::norm(amp);
    return dist;
}

NumberMeasurement measure_photon_number(const StateVector& in,
                                        std::span<const ModeLabel> modes, Rng& rng) {
    const auto dist = photon_number_distribution(in, modes);
    std::vector<int> outcomes;
    std::vector<double> weights;
    outcomes.reserve(dist.size());
    weights.reserve(dist.size());
    for (const auto& [n, p] : dist) {
        outcomes.push_back(n);
        weights.push_back(p);
    }
    const std::size_t idx = sample_discrete(weights, rng);
    NumberMeasurement r;
    r.outcome = outcomes[idx];
    r.prob = weights[idx];
    r.posterior.set_modes(in.mode_set());
    for (const auto& [b, amp] : in.terms())
        if (b.total_at(modes) == r.outcome) r.posterior.add_term(b, amp);
    r.posterior.normalize();
    r.posterior.check();
    return r;
}

PolMeasurement measure_pol_z(const StateVector& in, const PolSite& target, Rng& rng) {
    const ModeLabel mh = target.mode(Pol::H), mv = target.mode(Pol::V);
    double ph = 0.0, pv = 0.0;
    for (const auto& [b, amp] : in.terms()) {
        const int nh = b.count(mh), nv = b.count(mv);
        if (nh + nv != 1) occupancy_error("measure_pol_z");
        (nh ? ph : pv) += std::norm(amp);
    }
    const std::array<double, 2> w{ph, pv};
    const std::size_t idx = sample_discrete(w, rng);
    PolMeasurement r;
    r.outcome = idx == 0 ? Pol::H : Pol::V;
    r.prob = w[idx];
    r.posterior.set_modes(in.mode_set());
    const ModeLabel keep = idx == 0 ? mh : mv;
    for (const auto& [b, amp] : in.terms())
        if (b.count(keep) == 1) r.posterior.add_term(b, amp);
    r.posterior.normalize();
    r.posterior.check();
    return r;
}

// --- structural helpers ------------------------------------------------------

StateVector extract_photon(const StateVector& in, const PolSite& source,
                           std::uint32_t aux_bin) {
    const PolSite aux{aux_bin, source.arm};
    if (in.has_mode(aux.mode(Pol::H)) || in.has_mode(aux.mode(Pol::V)))
        throw std::invalid_argument("extract_photon: auxiliary site already in use");
    const ModeLabel sh = source.mode(Pol::H), sv = source.mode(Pol::V);
    auto out = map_terms(in, [&](const BasisState& b, cplx amp, StateVector& o) {
        const int j = b.count(sh), k = b.count(sv);
        const int n = j + k;
        if (n == 0) throw std::invalid_argument("extract_photon: empty source site");
        if (j > 0) {
            BasisState nb = b;
            nb.set_count(sh, j - 1);
            nb.set_count(aux.mode(Pol::H), 1);
            o.add_term(nb, amp * std::sqrt(double(j) / n));
        }
        if (k > 0) {
            BasisState nb = b;
            nb.set_count(sv, k - 1);
            nb.set_count(aux.mode(Pol::V), 1);
            o.add_term(nb, amp * std::sqrt(double(k) / n));
        }
    });
    out.add_modes(site_modes(aux));
    out.check();
    return out;
}

QubitState extract_qubit(const StateVector& in, const PolSite& site) {
    const ModeLabel mh = site.mode(Pol::H), mv = site.mode(Pol::V);
    // Group amplitudes by the occupation pattern of all other modes.
    std::map<BasisState, std::pair<cplx, cplx>> groups;
    for (const auto& [b, amp] : in.terms()) {
        const int nh = b.count(mh), nv = b.count(mv);
        if (nh + nv != 1) occupancy_error("extract_qubit");
        BasisState rest = b;
        rest.set_count(mh, 0);
        rest.set_count(mv, 0);
        auto& g = groups[rest];
        (nh ? g.first : g.second) += amp;
    }
    // Pick the heaviest group, then require every group to be proportional.
    QubitState best;
    double best_w = -1.0;
    for (const auto& [rest, g] : groups) {
        const double w = std::norm(g.first) + std::norm(g.second);
        if (w > best_w) {
            best_w = w;
            best = QubitState{g.first, g.second};
        }
    }
    const QubitState q = normalized(best);
    for (const auto& [rest, g] : groups) {
        const QubitState gq = normalized(QubitState{g.first, g.second});
        if (fidelity(gq, q) < 1.0 - kTruncTol)
            throw std::runtime_error("extract_qubit: state does not factorize at site");
    }
    return q;
}

StateVector discard_site(const StateVector& in, const PolSite& site) {
    const ModeLabel mh = site.mode(Pol::H), mv = site.mode(Pol::V);
    auto first = in.terms().begin();
    if (first == in.terms().end()) throw std::invalid_argument("discard_site: empty state");
    const int nh = first->first.count(mh), nv = first->first.count(mv);
    StateVector out;
    auto modes = in.mode_set();
    std::erase(modes, mh);
    std::erase(modes, mv);
    out.set_modes(std::move(modes));
    for (const auto& [b, amp] : in.terms()) {
        if (b.count(mh) != nh || b.count(mv) != nv)
            throw std::invalid_argument("discard_site: occupation varies across terms");
        BasisState nb = b;
        nb.set_count(mh, 0);
        nb.set_count(mv, 0);
        out.add_term(nb, amp);
    }
    out.check();
    return out;
}

std::string to_debug_text(const StateVector& in) {
    std::string out;
    char buf[64];
    for (const auto& [b, amp] : in.terms()) {
        out += to_string(b);
        std::snprintf(buf, sizeof buf, "\t%.17g\t%.17g\n", amp.real(), amp.imag());
        out += buf;
    }
    return out;
}

}  // namespace dfsbqc
