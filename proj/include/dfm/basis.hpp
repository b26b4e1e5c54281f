#pragma once

// Computational basis convention: site i (1-indexed) is bit i-1 of the basis
// index, spin-up is bit value 1.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dfm {

using BasisIndex = std::uint64_t;

enum class Spin : std::uint8_t { down = 0, up = 1 };

inline constexpr int kMaxSites = 30;

constexpr BasisIndex site_bit(int site) { return BasisIndex{1} << (site - 1); }

constexpr bool is_up(BasisIndex s, int site) { return (s >> (site - 1)) & 1U; }

constexpr BasisIndex basis_dim(int num_sites) { return BasisIndex{1} << num_sites; }

BasisIndex encode(std::span<const Spin> config);
std::vector<Spin> decode(BasisIndex index, int num_sites);

/// Parses "0101", "udud" or the arrow form. Character k describes site k+1.
std::vector<Spin> parse_config(std::string_view text);
/// Inverse of parse_config in the "0"/"1" alphabet.
std::string format_config(BasisIndex index, int num_sites);

}  // namespace dfm
