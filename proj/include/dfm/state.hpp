#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "dfm/basis.hpp"
#include "dfm/kernels.hpp"

namespace dfm {

inline constexpr double kNormTolerance = 1e-9;

/// Normalized pure state of an L-site spin-1/2 chain in the computational basis.
class StateVector {
 public:
  /// Takes ownership of `amps`; throws unless the length is 2^L and the norm is
  /// 1 within kNormTolerance.
  StateVector(int num_sites, std::vector<amplitude> amps);

  /// Rescales `amps` to unit norm. Throws on a zero vector.
  static StateVector normalized(int num_sites, std::vector<amplitude> amps);

  int num_sites() const noexcept { return num_sites_; }
  std::size_t dim() const noexcept { return amps_.size(); }
  std::span<const amplitude> amplitudes() const noexcept { return amps_; }
  const amplitude& operator[](BasisIndex i) const { return amps_[i]; }

  /// Moves the amplitude storage out, leaving the state empty.
  std::vector<amplitude> release() && { return std::move(amps_); }

  friend bool operator==(const StateVector&, const StateVector&) = default;

 private:
  int num_sites_;
  std::vector<amplitude> amps_;
};

struct ReducedDensityMatrix {
  std::vector<int> sites;  // ascending, 1-indexed
  Eigen::MatrixXcd matrix;

  int num_sites() const { return static_cast<int>(sites.size()); }
};

StateVector product_state(int num_sites, std::span<const Spin> config);
StateVector basis_state(int num_sites, BasisIndex index);
/// (|up at L/2+1> + |up at L/2>)/sqrt2 on an otherwise all-down chain.
StateVector bell_state(int num_sites = 8);
/// (|up,down,up,down,...> + |down,up,down,up,...>)/sqrt2.
StateVector ghz_state(int num_sites);

/// Partial trace onto `keep` (1-indexed sites, any order; result is sorted).
ReducedDensityMatrix reduce(const StateVector& state, std::span<const int> keep);
/// Serial reference of reduce(), for tests.
ReducedDensityMatrix reduce_serial(const StateVector& state, std::span<const int> keep);

double expect_z(const StateVector& state, int site);
/// All <Z_i>, i = 1..L, in one pass.
std::vector<double> z_profile(const StateVector& state);

double norm(std::span<const amplitude> amps);

std::vector<int> even_sites(int num_sites);
std::vector<int> odd_sites(int num_sites);

}  // namespace dfm
