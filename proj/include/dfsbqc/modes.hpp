#pragma once

#include <boost/container/small_vector.hpp>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dfsbqc {

/// Spatial arm of the interferometer. Fresh photons occupy arm S (the
/// single input register); the splitting PBS routes V polarization to
/// arm L. After the merging PBS the same two labels name the receiver's
/// output modes s and l.
enum class Arm : std::uint8_t { S = 0, L = 1 };

enum class Pol : std::uint8_t { H = 0, V = 1 };

/// One optical mode: time bin, spatial arm, polarization. The ordering
/// (time_bin, arm, pol) fixes the canonical basis enumeration.
struct ModeLabel {
    std::uint32_t time_bin = 0;
    Arm arm = Arm::S;
    Pol pol = Pol::H;

    constexpr std::uint32_t encode() const {
        return (time_bin << 2) | (static_cast<std::uint32_t>(arm) << 1) |
               static_cast<std::uint32_t>(pol);
    }
    static constexpr ModeLabel decode(std::uint32_t key) {
        return ModeLabel{key >> 2, static_cast<Arm>((key >> 1) & 1u),
                         static_cast<Pol>(key & 1u)};
    }

    friend constexpr auto operator<=>(const ModeLabel&, const ModeLabel&) = default;
};

std::string to_string(const ModeLabel& m);

/// Addresses the H/V mode pair of one time bin in one arm.
struct PolSite {
    std::uint32_t time_bin = 0;
    Arm arm = Arm::S;

    constexpr ModeLabel mode(Pol p) const { return ModeLabel{time_bin, arm, p}; }
    friend constexpr auto operator<=>(const PolSite&, const PolSite&) = default;
};

/// Photon occupation numbers over a finite mode set. Zero counts are never
/// stored, so two equal states always have identical representations and
/// the default lexicographic order is canonical.
class BasisState {
public:
    using Entry = std::pair<std::uint32_t, std::int32_t>;  // (encoded mode, count >= 1)

    BasisState() = default;

    static BasisState single(ModeLabel m) {
        BasisState b;
        b.occ_.emplace_back(m.encode(), 1);
        return b;
    }

    int count(ModeLabel m) const {
        const std::uint32_t key = m.encode();
        auto it = std::lower_bound(occ_.begin(), occ_.end(), key,
                                   [](const Entry& e, std::uint32_t k) { return e.first < k; });
        return (it != occ_.end() && it->first == key) ? it->second : 0;
    }

    void set_count(ModeLabel m, int n);
    void add(ModeLabel m, int dn) { set_count(m, count(m) + dn); }

    int total() const;
    int total_at(std::span<const ModeLabel> modes) const;
    int total_at_site(const PolSite& s) const {
        return count(s.mode(Pol::H)) + count(s.mode(Pol::V));
    }

    bool empty() const { return occ_.empty(); }
    const auto& entries() const { return occ_; }
    std::vector<std::pair<ModeLabel, int>> occupations() const;

    friend bool operator==(const BasisState& a, const BasisState& b) {
        return a.occ_.size() == b.occ_.size() &&
               std::equal(a.occ_.begin(), a.occ_.end(), b.occ_.begin());
    }
    friend bool operator<(const BasisState& a, const BasisState& b) {
        return std::lexicographical_compare(a.occ_.begin(), a.occ_.end(),
                                            b.occ_.begin(), b.occ_.end());
    }

private:
    boost::container::small_vector<Entry, 8> occ_;  // sorted by encoded mode
};

std::string to_string(const BasisState& b);

std::vector<ModeLabel> site_modes(const PolSite& s);
std::vector<ModeLabel> bin_modes(std::uint32_t time_bin);
std::vector<ModeLabel> arm_modes(std::span<const std::uint32_t> bins, Arm arm);

}  // namespace dfsbqc
