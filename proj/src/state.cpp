#include "dfm/state.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "dfm/error.hpp"

namespace dfm {

namespace {

void check_sites(int num_sites) {
  require(num_sites >= 1 && num_sites <= kMaxSites,
          "site count " + std::to_string(num_sites) + " out of range");
}

// Offsets of all bit patterns over `sites` (1-indexed), enumerated so that
// local bit k corresponds to sites[k].
std::vector<BasisIndex> pattern_offsets(std::span<const int> sites) {
  std::vector<BasisIndex> out(BasisIndex{1} << sites.size());
  for (BasisIndex a = 0; a < out.size(); ++a) {
    BasisIndex s = 0;
    for (std::size_t k = 0; k < sites.size(); ++k)
      if ((a >> k) & 1U) s |= site_bit(sites[k]);
    out[a] = s;
  }
  return out;
}

struct Partition {
  std::vector<int> keep;
  std::vector<int> env;
};

Partition partition(const StateVector& state, std::span<const int> keep_in) {
  const int n = state.num_sites();
  std::vector<int> keep(keep_in.begin(), keep_in.end());
  std::sort(keep.begin(), keep.end());
  require(!keep.empty(), "reduce: empty site subset");
  require(std::adjacent_find(keep.begin(), keep.end()) == keep.end(), "reduce: repeated site");
  require(keep.front() >= 1 && keep.back() <= n, "reduce: site out of range");
  require(static_cast<int>(keep.size()) < n, "reduce: subset must be a strict subset");
  std::vector<int> env;
  for (int i = 1; i <= n; ++i)
    if (!std::binary_search(keep.begin(), keep.end(), i)) env.push_back(i);
  return {std::move(keep), std::move(env)};
}

template <class Kernel>
ReducedDensityMatrix reduce_with(const StateVector& state, std::span<const int> keep_in,
                                 Kernel kernel) {
  auto [keep, env] = partition(state, keep_in);
  const auto keep_off = pattern_offsets(keep);
  const auto env_off = pattern_offsets(env);
  const auto flat = kernel(state.amplitudes(), keep_off, env_off);
  const auto d = static_cast<Eigen::Index>(keep_off.size());
  ReducedDensityMatrix rdm{std::move(keep), Eigen::MatrixXcd(d, d)};
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) rdm.matrix(a, b) = flat[a * d + b];
  return rdm;
}

}  // namespace

StateVector::StateVector(int num_sites, std::vector<amplitude> amps)
    : num_sites_(num_sites), amps_(std::move(amps)) {
  check_sites(num_sites);
  require(amps_.size() == basis_dim(num_sites), "amplitude vector length must be 2^L");
  const double nrm = std::sqrt(kernels::norm_squared(amps_));
  if (std::abs(nrm - 1.0) > kNormTolerance)
    fail(ErrorKind::numerical_failure, "state norm " + std::to_string(nrm) + " is not 1");
}

StateVector StateVector::normalized(int num_sites, std::vector<amplitude> amps) {
  check_sites(num_sites);
  require(amps.size() == basis_dim(num_sites), "amplitude vector length must be 2^L");
  const double nrm = std::sqrt(kernels::norm_squared(amps));
  if (!(nrm > 0.0)) fail(ErrorKind::annihilated_state, "cannot normalize a zero vector");
  kernels::scale(1.0 / nrm, amps);
  return StateVector(num_sites, std::move(amps));
}

StateVector product_state(int num_sites, std::span<const Spin> config) {
  check_sites(num_sites);
  require(static_cast<int>(config.size()) == num_sites,
          "configuration has " + std::to_string(config.size()) + " labels for " +
              std::to_string(num_sites) + " sites");
  return basis_state(num_sites, encode(config));
}

StateVector basis_state(int num_sites, BasisIndex index) {
  check_sites(num_sites);
  require(index < basis_dim(num_sites), "basis index out of range");
  std::vector<amplitude> amps(basis_dim(num_sites));
  amps[index] = 1.0;
  return StateVector(num_sites, std::move(amps));
}

StateVector bell_state(int num_sites) {
  check_sites(num_sites);
  require(num_sites % 2 == 0 && num_sites >= 4, "bell_state needs an even site count >= 4");
  const int mid = num_sites / 2;
  std::vector<amplitude> amps(basis_dim(num_sites));
  amps[site_bit(mid + 1)] = M_SQRT1_2;
  amps[site_bit(mid)] = M_SQRT1_2;
  return StateVector(num_sites, std::move(amps));
}

StateVector ghz_state(int num_sites) {
  check_sites(num_sites);
  require(num_sites % 2 == 0 && num_sites >= 4, "ghz_state needs an even site count >= 4");
  BasisIndex odd_up = 0;
  for (int i = 1; i <= num_sites; i += 2) odd_up |= site_bit(i);
  const BasisIndex even_up = odd_up << 1;
  std::vector<amplitude> amps(basis_dim(num_sites));
  amps[odd_up] = M_SQRT1_2;
  amps[even_up] = M_SQRT1_2;
  return StateVector(num_sites, std::move(amps));
}

ReducedDensityMatrix reduce(const StateVector& state, std::span<const int> keep) {
  return reduce_with(state, keep, [](auto psi, auto k, auto e) {
    return kernels::reduced_density(psi, k, e);
  });
}

ReducedDensityMatrix reduce_serial(const StateVector& state, std::span<const int> keep) {
  return reduce_with(state, keep, [](auto psi, auto k, auto e) {
    return kernels::serial::reduced_density(psi, k, e);
  });
}

double expect_z(const StateVector& state, int site) {
  require(site >= 1 && site <= state.num_sites(),
          "site " + std::to_string(site) + " out of range");
  const auto psi = state.amplitudes();
  const BasisIndex bit = site_bit(site);
  double up = 0.0, down = 0.0;
  for (BasisIndex s = 0; s < psi.size(); ++s) (s & bit ? up : down) += std::norm(psi[s]);
  return std::clamp(up - down, -1.0, 1.0);
}

std::vector<double> z_profile(const StateVector& state) {
  const int n = state.num_sites();
  const auto psi = state.amplitudes();
  const std::size_t block = kernels::kReductionBlock;
  const std::size_t nb = (psi.size() + block - 1) / block;
  // Per-block up-spin weights and total weight, combined in block order.
  std::vector<double> partial(nb * (n + 1), 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < nb; ++k) {
    double* acc = partial.data() + k * (n + 1);
    const BasisIndex hi = std::min<BasisIndex>(psi.size(), (k + 1) * block);
    for (BasisIndex s = k * block; s < hi; ++s) {
      const double p = std::norm(psi[s]);
      acc[n] += p;
      for (BasisIndex rest = s; rest; rest &= rest - 1) acc[std::countr_zero(rest)] += p;
    }
  }
  std::vector<double> up(n + 1, 0.0);
  for (std::size_t k = 0; k < nb; ++k)
    for (int i = 0; i <= n; ++i) up[i] += partial[k * (n + 1) + i];
  std::vector<double> z(n);
  for (int i = 0; i < n; ++i) z[i] = std::clamp(2.0 * up[i] - up[n], -1.0, 1.0);
  return z;
}

double norm(std::span<const amplitude> amps) { return std::sqrt(kernels::norm_squared(amps)); }

std::vector<int> even_sites(int num_sites) {
  std::vector<int> out;
  for (int i = 2; i <= num_sites; i += 2) out.push_back(i);
  return out;
}

std::vector<int> odd_sites(int num_sites) {
  std::vector<int> out;
  for (int i = 1; i <= num_sites; i += 2) out.push_back(i);
  return out;
}

}  // namespace dfm
