#include "dfm/measures.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <deque>

#include "dfm/error.hpp"
#include "dfm/operators.hpp"

namespace dfm {

namespace {

using Mat = Eigen::MatrixXcd;

void check_two_site(const ReducedDensityMatrix& rho) {
  require(rho.matrix.rows() == 4 && rho.matrix.cols() == 4,
          "concurrence needs a 4x4 two-site density matrix");
}

Mat spin_flipped(const Mat& rho) {
  const Mat yy = ops::local_product({ops::pauli_y(), ops::pauli_y()});
  return yy * rho.conjugate() * yy;
}

// Hermitian eigen-decomposition with a residual check.
Eigen::SelfAdjointEigenSolver<Mat> hermitian_eigen(const Mat& m, const char* what) {
  const Mat herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(herm);
  if (es.info() != Eigen::Success) fail(ErrorKind::numerical_failure, std::string(what) + ": eigensolver failed");
  const Mat v = es.eigenvectors();
  const double residual = (herm * v - v * es.eigenvalues().asDiagonal()).cwiseAbs().maxCoeff();
  if (residual > kEigenResidualTolerance)
    fail(ErrorKind::numerical_failure, std::string(what) + ": eigen residual " + std::to_string(residual));
  return es;
}

Mat psd_sqrt(const Mat& m, const char* what) {
  const auto es = hermitian_eigen(m, what);
  Eigen::VectorXd d = es.eigenvalues();
  if (d.minCoeff() < -kEigenResidualTolerance)
    fail(ErrorKind::numerical_failure, std::string(what) + ": matrix is not positive semidefinite");
  d = d.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

ConcurrenceResult from_lambdas(std::array<double, 4> l) {
  std::sort(l.begin(), l.end(), std::greater<>());
  ConcurrenceResult out;
  out.lambdas = l;
  out.value = std::clamp(l[0] - l[1] - l[2] - l[3], 0.0, 1.0);
  return out;
}

}  // namespace

ConcurrenceResult concurrence(const ReducedDensityMatrix& rho) {
  check_two_site(rho);
  const Mat s = psd_sqrt(rho.matrix, "concurrence");
  const Mat r2 = s * spin_flipped(rho.matrix) * s;
  const auto es = hermitian_eigen(r2, "concurrence");
  std::array<double, 4> l{};
  for (int k = 0; k < 4; ++k) {
    const double mu = es.eigenvalues()(k);
    if (mu < -kEigenResidualTolerance)
      fail(ErrorKind::numerical_failure, "concurrence: negative eigenvalue of rho rho~");
    l[k] = std::sqrt(std::max(mu, 0.0));
  }
  return from_lambdas(l);
}

ConcurrenceResult concurrence_product(const ReducedDensityMatrix& rho) {
  check_two_site(rho);
  const Mat m = rho.matrix * spin_flipped(rho.matrix);
  Eigen::ComplexEigenSolver<Mat> es(m);
  if (es.info() != Eigen::Success) fail(ErrorKind::numerical_failure, "concurrence: eigensolver failed");
  const Mat v = es.eigenvectors();
  const double residual = (m * v - v * es.eigenvalues().asDiagonal()).cwiseAbs().maxCoeff();
  if (residual > kEigenResidualTolerance)
    fail(ErrorKind::numerical_failure, "concurrence: eigen residual " + std::to_string(residual));
  std::array<double, 4> l{};
  for (int k = 0; k < 4; ++k) l[k] = std::sqrt(std::max(es.eigenvalues()(k).real(), 0.0));
  return from_lambdas(l);
}

ConcurrenceResult concurrence_sqrt(const ReducedDensityMatrix& rho) {
  check_two_site(rho);
  const Mat s = psd_sqrt(rho.matrix, "concurrence");
  const Mat r = psd_sqrt(s * spin_flipped(rho.matrix) * s, "concurrence");
  const auto es = hermitian_eigen(r, "concurrence");
  std::array<double, 4> l{};
  for (int k = 0; k < 4; ++k) l[k] = std::max(es.eigenvalues()(k), 0.0);
  return from_lambdas(l);
}

double fidelity(const StateVector& state, const StateVector& reference) {
  require(state.dim() == reference.dim(), "fidelity: dimension mismatch");
  return std::min(std::abs(kernels::dot(reference.amplitudes(), state.amplitudes())), 1.0);
}

EntropyResult renyi2(const ReducedDensityMatrix& rho) {
  const auto d = rho.matrix.rows();
  require(d >= 2 && rho.matrix.cols() == d, "renyi2 needs a square matrix of dimension >= 2");
  const double purity = rho.matrix.cwiseAbs2().sum();
  if (!(purity > 0.0) || !std::isfinite(purity))
    fail(ErrorKind::numerical_failure, "renyi2: non-positive purity");
  const double s = -std::log(purity) / std::log(static_cast<double>(d));
  return {std::clamp(s, 0.0, 1.0), purity};
}

TimeSeries envelope(const TimeSeries& series, int window) {
  require(series.t.size() == series.v.size(), "envelope: time and value lengths differ");
  require(window >= 1, "envelope: window must be positive");
  const auto n = series.size();
  require(static_cast<std::size_t>(window) <= n, "envelope: window exceeds series length");
  TimeSeries out;
  const std::size_t w = window, half = (w - 1) / 2;
  // Monotone deque of candidate indices for the running maximum.
  std::deque<std::size_t> q;
  for (std::size_t i = 0; i < n; ++i) {
    while (!q.empty() && series.v[q.back()] <= series.v[i]) q.pop_back();
    q.push_back(i);
    if (q.front() + w <= i) q.pop_front();
    if (i + 1 >= w) {
      const std::size_t start = i + 1 - w;
      out.t.push_back(series.t[start + half]);
      out.v.push_back(series.v[q.front()]);
    }
  }
  return out;
}

std::vector<std::size_t> local_maxima(std::span<const double> v) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i)
    if (v[i - 1] < v[i] && v[i] >= v[i + 1]) out.push_back(i);
  return out;
}

std::vector<double> autocorrelation(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<double> r(n, 0.0);
  if (n == 0) return r;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = v[i] - mean;
  double c0 = 0.0;
  for (double xi : x) c0 += xi * xi;
  if (c0 <= 0.0) return r;
  for (std::size_t k = 0; k < n; ++k) {
    double c = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) c += x[i] * x[i + k];
    r[k] = c / c0;
  }
  return r;
}

namespace {
std::vector<std::size_t> peaks_after_first_zero(const std::vector<double>& r) {
  std::size_t k0 = 1;
  while (k0 < r.size() && r[k0] >= 0.0) ++k0;
  std::vector<std::size_t> out;
  const std::size_t limit = r.size() / 2;
  for (std::size_t k : local_maxima(r))
    if (k > k0 && k <= limit) out.push_back(k);
  return out;
}
}  // namespace

double periodicity_score(std::span<const double> v) {
  const auto r = autocorrelation(v);
  double best = 0.0;
  for (std::size_t k : peaks_after_first_zero(r)) best = std::max(best, r[k]);
  return best;
}

std::size_t dominant_period(std::span<const double> v) {
  const auto r = autocorrelation(v);
  const auto peaks = peaks_after_first_zero(r);
  return peaks.empty() ? 0 : peaks.front();
}

}  // namespace dfm
