#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sgorder/lattice.hpp"

namespace sgorder {

/// Ising configuration packed one bit per site; bit 1 means spin +1.
/// Bit i of word i/64 belongs to site i (site order of Lattice).
class SpinConfig {
public:
    SpinConfig() = default;

    /// All spins -1.
    explicit SpinConfig(std::size_t num_sites) : n_(num_sites), words_((num_sites + 63) / 64, 0) {}

    static SpinConfig all_up(std::size_t num_sites) {
        SpinConfig c(num_sites);
        for (std::size_t i = 0; i < num_sites; ++i) c.set(i, +1);
        return c;
    }

    static SpinConfig from_mask(std::uint64_t mask, std::size_t num_sites) {
        if (num_sites > 64) throw ShapeError("from_mask supports at most 64 sites");
        SpinConfig c(num_sites);
        if (num_sites > 0) c.words_[0] = num_sites == 64 ? mask : (mask & ((std::uint64_t{1} << num_sites) - 1));
        return c;
    }

    static SpinConfig from_spins(std::span<const int> spins) {
        SpinConfig c(spins.size());
        for (std::size_t i = 0; i < spins.size(); ++i) {
            if (spins[i] != 1 && spins[i] != -1) throw ShapeError("spin values must be +1 or -1");
            c.set(i, spins[i]);
        }
        return c;
    }

    std::vector<int> to_spins() const {
        std::vector<int> s(n_);
        for (std::size_t i = 0; i < n_; ++i) s[i] = spin(i);
        return s;
    }

    std::size_t size() const noexcept { return n_; }
    std::span<const std::uint64_t> words() const noexcept { return words_; }
    std::span<std::uint64_t> words() noexcept { return words_; }

    /// Low 64 bits; the full configuration when size() <= 64.
    std::uint64_t mask() const noexcept { return words_.empty() ? 0 : words_[0]; }

    int spin(std::size_t i) const noexcept { return ((words_[i >> 6] >> (i & 63)) & 1u) ? 1 : -1; }

    void set(std::size_t i, int value) noexcept {
        const std::uint64_t bit = std::uint64_t{1} << (i & 63);
        if (value > 0)
            words_[i >> 6] |= bit;
        else
            words_[i >> 6] &= ~bit;
    }

    void flip(std::size_t i) noexcept { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

    SpinConfig flipped() const {
        SpinConfig c = *this;
        for (std::size_t w = 0; w < words_.size(); ++w) c.words_[w] = ~words_[w];
        c.clear_padding();
        return c;
    }

    /// Sum of spins.
    std::int64_t magnetization() const noexcept {
        std::int64_t up = 0;
        for (auto w : words_) up += std::popcount(w);
        return 2 * up - static_cast<std::int64_t>(n_);
    }

    friend bool operator==(const SpinConfig&, const SpinConfig&) = default;

private:
    void clear_padding() noexcept {
        if (n_ % 64 != 0 && !words_.empty()) words_.back() &= (std::uint64_t{1} << (n_ % 64)) - 1;
    }

    std::size_t n_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Overlap R = dot / n kept as an exact rational.
struct Overlap {
    std::int64_t dot;
    std::size_t n;
    double value() const noexcept { return static_cast<double>(dot) / static_cast<double>(n); }
    friend bool operator==(const Overlap&, const Overlap&) = default;
};

/// Sum over sites of s1_x * s2_x, via popcount of the XOR.
inline std::int64_t spin_dot(const SpinConfig& a, const SpinConfig& b) {
    if (a.size() != b.size()) throw ShapeError("overlap of configurations with different sizes");
    std::int64_t disagree = 0;
    const auto wa = a.words();
    const auto wb = b.words();
    for (std::size_t w = 0; w < wa.size(); ++w) disagree += std::popcount(wa[w] ^ wb[w]);
    return static_cast<std::int64_t>(a.size()) - 2 * disagree;
}

inline Overlap overlap(const SpinConfig& a, const SpinConfig& b) { return {spin_dot(a, b), a.size()}; }

}  // namespace sgorder
