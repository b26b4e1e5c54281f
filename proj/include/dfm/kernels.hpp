#pragma once

// Amplitude-array kernels. Every kernel has an OpenMP version (namespace
// dfm::kernels) and a serial reference (dfm::kernels::serial) used by the
// tests and the benchmark.
//
// Determinism contract: results do not depend on the number of threads.
// Elementwise kernels write disjoint ranges; reductions sum fixed-size blocks
// and then combine the block partials in index order. The serial reductions
// use the same blocking, so parallel and serial agree bitwise.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dfm/basis.hpp"

namespace dfm {

using amplitude = std::complex<double>;

namespace kernels {

inline constexpr std::size_t kReductionBlock = 4096;

/// A local operator on up to three sites, compressed by row.
/// Local basis index bit k corresponds to global bit `bits[k]`.
struct SparseTerm {
  struct Entry {
    std::uint8_t col;
    amplitude value;
  };
  int arity = 0;
  std::array<int, 3> bits{};
  BasisIndex mask = 0;
  std::array<BasisIndex, 8> scatter{};
  std::array<std::uint8_t, 9> row_start{};
  std::array<Entry, 64> entries{};

  unsigned local_index(BasisIndex s) const {
    unsigned a = 0;
    for (int k = 0; k < arity; ++k) a |= static_cast<unsigned>((s >> bits[k]) & 1U) << k;
    return a;
  }
};

/// Worker count used by the parallel kernels (0 restores the runtime default).
void set_num_threads(int n);
int num_threads();

/// out = sum_t term_t * in. `out` must not alias `in`.
void apply_terms(std::span<const SparseTerm> terms, std::span<const amplitude> in,
                 std::span<amplitude> out);

/// <a|b>
amplitude dot(std::span<const amplitude> a, std::span<const amplitude> b);
double norm_squared(std::span<const amplitude> a);
/// y += alpha * x
void axpy(amplitude alpha, std::span<const amplitude> x, std::span<amplitude> y);
void scale(amplitude alpha, std::span<amplitude> x);

/// Row-major reduced density matrix over the kept bits.
/// `keep_offsets[a]` and `env_offsets[e]` are disjoint bit patterns whose OR is
/// the full basis index.
std::vector<amplitude> reduced_density(std::span<const amplitude> psi,
                                       std::span<const BasisIndex> keep_offsets,
                                       std::span<const BasisIndex> env_offsets);

namespace serial {
void apply_terms(std::span<const SparseTerm> terms, std::span<const amplitude> in,
                 std::span<amplitude> out);
amplitude dot(std::span<const amplitude> a, std::span<const amplitude> b);
double norm_squared(std::span<const amplitude> a);
void axpy(amplitude alpha, std::span<const amplitude> x, std::span<amplitude> y);
void scale(amplitude alpha, std::span<amplitude> x);
std::vector<amplitude> reduced_density(std::span<const amplitude> psi,
                                       std::span<const BasisIndex> keep_offsets,
                                       std::span<const BasisIndex> env_offsets);
}  // namespace serial

}  // namespace kernels
}  // namespace dfm
