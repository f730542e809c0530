#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssepwalk/core.hpp"

namespace ssepwalk {

// Occupancy of the periodic lattice: one 0/1 byte per site plus the cached
// particle count.
class LatticeConfiguration {
public:
    LatticeConfiguration() = default;

    explicit LatticeConfiguration(std::vector<std::uint8_t> occupancy)
        : occupancy_(std::move(occupancy)) {
        for (auto& v : occupancy_) v = v != 0;
        particle_count_ = count_set();
    }

    static LatticeConfiguration empty(std::int64_t L) {
        return LatticeConfiguration(std::vector<std::uint8_t>(static_cast<std::size_t>(L), 0));
    }
    static LatticeConfiguration full(std::int64_t L) {
        return LatticeConfiguration(std::vector<std::uint8_t>(static_cast<std::size_t>(L), 1));
    }

    // Parses a string of '0'/'1'. Returns false on any other character.
    static bool from_bits(std::string_view bits, LatticeConfiguration& out) {
        std::vector<std::uint8_t> occ(bits.size());
        for (std::size_t i = 0; i < bits.size(); ++i) {
            if (bits[i] != '0' && bits[i] != '1') return false;
            occ[i] = bits[i] == '1';
        }
        out = LatticeConfiguration(std::move(occ));
        return true;
    }

    std::string to_bits() const {
        std::string s(occupancy_.size(), '0');
        for (std::size_t i = 0; i < occupancy_.size(); ++i)
            if (occupancy_[i]) s[i] = '1';
        return s;
    }

    std::int64_t size() const noexcept { return static_cast<std::int64_t>(occupancy_.size()); }
    std::int64_t particle_count() const noexcept { return particle_count_; }
    int operator[](std::int64_t site) const noexcept { return occupancy_[static_cast<std::size_t>(site)]; }

    // Exchanges the occupancies across bond b; returns whether they differed.
    bool swap_bond(std::int64_t b) noexcept {
        const auto i = static_cast<std::size_t>(b);
        const auto j = i + 1 == occupancy_.size() ? 0 : i + 1;
        const bool effective = occupancy_[i] != occupancy_[j];
        std::swap(occupancy_[i], occupancy_[j]);
        return effective;
    }

    // True when the cached particle count matches the occupancy bits.
    bool consistent() const noexcept { return particle_count_ == count_set(); }

    const std::vector<std::uint8_t>& bits() const noexcept { return occupancy_; }

    friend bool operator==(const LatticeConfiguration& a, const LatticeConfiguration& b) {
        return a.particle_count_ == b.particle_count_ && a.occupancy_ == b.occupancy_;
    }

private:
    std::int64_t count_set() const noexcept {
        return std::accumulate(occupancy_.begin(), occupancy_.end(), std::int64_t{0});
    }

    std::vector<std::uint8_t> occupancy_;
    std::int64_t particle_count_ = 0;
};

}  // namespace ssepwalk
