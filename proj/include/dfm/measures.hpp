#pragma once

#include <array>
#include <span>
#include <vector>

#include "dfm/state.hpp"

namespace dfm {

struct ConcurrenceResult {
  double value = 0.0;
  std::array<double, 4> lambdas{};  // descending, nonnegative
};

struct EntropyResult {
  double value = 0.0;
  double purity = 1.0;
};

/// Residual threshold for the eigen-decompositions behind concurrence().
inline constexpr double kEigenResidualTolerance = 1e-8;

/// Wootters concurrence of a two-site density matrix. The lambdas are the
/// square roots of the eigenvalues of rho * rho_tilde, obtained from the
/// Hermitian similar matrix sqrt(rho) rho_tilde sqrt(rho).
ConcurrenceResult concurrence(const ReducedDensityMatrix& rho);
/// Same lambdas from a general eigensolve of the non-Hermitian rho * rho_tilde.
/// Loses accuracy (~sqrt(eps)) when rho * rho_tilde is nearly nilpotent.
ConcurrenceResult concurrence_product(const ReducedDensityMatrix& rho);
/// Lambdas as the eigenvalues of r = sqrt(sqrt(rho) rho_tilde sqrt(rho)),
/// with both square roots formed explicitly.
ConcurrenceResult concurrence_sqrt(const ReducedDensityMatrix& rho);

/// |<reference|state>|
double fidelity(const StateVector& state, const StateVector& reference);

/// -log(Tr rho^2) / log(dim rho).
EntropyResult renyi2(const ReducedDensityMatrix& rho);

/// Sampled real series on a time grid.
struct TimeSeries {
  std::vector<double> t;
  std::vector<double> v;

  std::size_t size() const noexcept { return v.size(); }
};

/// Sliding-window maximum. Output sample k covers input samples k..k+window-1
/// and sits at the time of the window center, index k + (window-1)/2.
TimeSeries envelope(const TimeSeries& series, int window);

/// Indices i with v[i-1] < v[i] >= v[i+1] (strict rise, plateau tolerant).
std::vector<std::size_t> local_maxima(std::span<const double> v);

/// Normalized autocorrelation of the mean-removed series, lags 0..n-1.
std::vector<double> autocorrelation(std::span<const double> v);

/// Dominant non-zero-lag peak: the largest local maximum of the
/// autocorrelation at lags in (first zero crossing, n/2]. 0 if there is none.
double periodicity_score(std::span<const double> v);

/// Lag (in samples) of the first autocorrelation local maximum after the
/// first zero crossing; 0 if none.
std::size_t dominant_period(std::span<const double> v);

}  // namespace dfm
