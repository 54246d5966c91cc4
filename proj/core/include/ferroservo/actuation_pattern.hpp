#pragma once

#include "ferroservo/workspace.hpp"

#include <bitset>
#include <cstdint>

namespace ferroservo {

/// ON/OFF state of the eight solenoids; bit i is solenoid i.
class ActuationPattern {
public:
    constexpr ActuationPattern() = default;
    constexpr explicit ActuationPattern(std::uint8_t bits) : bits_(bits) {}

    static constexpr ActuationPattern all_off() { return ActuationPattern{}; }
    static constexpr ActuationPattern all_on() { return ActuationPattern{0xFF}; }

    constexpr bool on(std::size_t i) const { return ((bits_ >> i) & 1U) != 0U; }
    constexpr void set(std::size_t i, bool value) {
        const auto mask = static_cast<std::uint8_t>(1U << i);
        bits_ = value ? static_cast<std::uint8_t>(bits_ | mask)
                      : static_cast<std::uint8_t>(bits_ & ~mask);
    }
    constexpr std::uint8_t bits() const { return bits_; }
    int count() const { return static_cast<int>(std::bitset<kSolenoidCount>(bits_).count()); }

    /// Pattern shifted so that bit i moves to bit (i + k) mod 8.
    constexpr ActuationPattern rotated(int k) const {
        const int s = ((k % 8) + 8) % 8;
        const unsigned v = bits_;
        return ActuationPattern{static_cast<std::uint8_t>(((v << s) | (v >> (8 - s))) & 0xFFU)};
    }

    friend constexpr bool operator==(ActuationPattern, ActuationPattern) = default;

private:
    std::uint8_t bits_{0};
};

}  // namespace ferroservo
