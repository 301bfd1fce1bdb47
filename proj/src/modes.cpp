#include "dfsbqc/modes.hpp"

namespace dfsbqc {

std::string to_string(const ModeLabel& m) {
    std::string s = std::to_string(m.time_bin);
    s += (m.arm == Arm::S) ? 's' : 'l';
    s += (m.pol == Pol::H) ? 'H' : 'V';
    return s;
}

void BasisState::set_count(ModeLabel m, int n) {
    const std::uint32_t key = m.encode();
    auto it = std::lower_bound(occ_.begin(), occ_.end(), key,
                               [](const Entry& e, std::uint32_t k) { return e.first < k; });
    const bool present = (it != occ_.end() && it->first == key);
    if (n <= 0) {
        if (present) occ_.erase(it);
        return;
    }
    if (present) {
        it->second = n;
    } else {
        occ_.insert(it, Entry{key, n});
    }
}

int BasisState::total() const {
    int n = 0;
    for (const auto& e : occ_) n += e.second;
    return n;
}

int BasisState::total_at(std::span<const ModeLabel> modes) const {
    int n = 0;
    for (const auto& m : modes) n += count(m);
    return n;
}

std::vector<std::pair<ModeLabel, int>> BasisState::occupations() const {
    std::vector<std::pair<ModeLabel, int>> out;
    out.reserve(occ_.size());
    for (const auto& e : occ_) out.emplace_back(ModeLabel::decode(e.first), e.second);
    return out;
}

std::string to_string(const BasisState& b) {
    if (b.empty()) return "vac";
    std::string s;
    bool first = true;
    for (const auto& e : b.entries()) {
        if (!first) s += ' ';
        first = false;
        s += to_string(ModeLabel::decode(e.first));
        s += ':';
        s += std::to_string(e.second);
    }
    return s;
}

std::vector<ModeLabel> site_modes(const PolSite& s) {
    return {s.mode(Pol::H), s.mode(Pol::V)};
}

std::vector<ModeLabel> bin_modes(std::uint32_t time_bin) {
    return {ModeLabel{time_bin, Arm::S, Pol::H}, ModeLabel{time_bin, Arm::S, Pol::V},
            ModeLabel{time_bin, Arm::L, Pol::H}, ModeLabel{time_bin, Arm::L, Pol::V}};
}

std::vector<ModeLabel> arm_modes(std::span<const std::uint32_t> bins, Arm arm) {
    std::vector<ModeLabel> out;
    out.reserve(2 * bins.size());
    for (auto b : bins) {
        out.push_back(ModeLabel{b, arm, Pol::H});
        out.push_back(ModeLabel{b, arm, Pol::V});
    }
    return out;
}

}  // namespace dfsbqc
