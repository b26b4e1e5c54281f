#include "dfm/evolve.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <exception>

#include "dfm/error.hpp"
#include "dfm/measures.hpp"
#include "dfm/rng.hpp"

namespace dfm {

namespace {

// Largest Krylov basis held in memory at once, in bytes.
constexpr std::size_t kKrylovMemoryBudget = (std::size_t{3} << 29);
constexpr int kMinKrylovDim = 6;
constexpr int kMaxProjectionRedraws = 64;
constexpr double kAnnihilationNorm2 = 1e-20;

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

void kick_in_place(std::vector<amplitude>& psi, int site, KickOperator op, double angle) {
  const BasisIndex bit = site_bit(site);
  const auto n = static_cast<std::int64_t>(psi.size());
  if (op == KickOperator::flip_x) {
    const double c = std::cos(angle), s = std::sin(angle);
    const amplitude mis{0.0, -s};
#pragma omp parallel for schedule(static) if (n >= (1 << 14))
    for (std::int64_t i = 0; i < n; ++i) {
      const auto lo = static_cast<BasisIndex>(i);
      if (lo & bit) continue;
      const amplitude a0 = psi[lo], a1 = psi[lo | bit];
      psi[lo] = c * a0 + mis * a1;
      psi[lo | bit] = c * a1 + mis * a0;
    }
  } else {
    const bool keep_up = op == KickOperator::project_q;
#pragma omp parallel for schedule(static) if (n >= (1 << 14))
    for (std::int64_t i = 0; i < n; ++i)
      if (((static_cast<BasisIndex>(i) & bit) != 0) != keep_up) psi[i] = 0.0;
  }
  const double n2 = kernels::norm_squared(psi);
  if (n2 <= kAnnihilationNorm2)
    fail(ErrorKind::annihilated_state, "kick on site " + std::to_string(site) + " annihilated the state");
  kernels::scale(1.0 / std::sqrt(n2), psi);
}

class Recorder {
 public:
  Recorder(const ObservableSet& obs, int num_sites, std::size_t num_samples, Trajectory& out)
      : obs_(obs), out_(out) {
    if (obs.concurrence_pair) {
      const auto [a, b] = *obs.concurrence_pair;
      require(a != b && a >= 1 && b >= 1 && a <= num_sites && b <= num_sites,
              "concurrence pair must be two distinct sites of the chain");
    }
    if (obs.fidelity_reference)
      require(obs.fidelity_reference->num_sites() == num_sites, "fidelity reference has the wrong size");
    for (const auto& name : obs.scalar_names()) {
      out_.scalars.emplace_back(name, std::vector<double>{});
      out_.scalars.back().second.reserve(num_samples);
    }
    if (obs.z_profile) out_.z.reserve(num_samples);
  }

  void record(double t, const std::vector<amplitude>& psi, int num_sites, const SampleHook& hook) {
    const StateVector state(num_sites, psi);
    out_.times.push_back(t);
    if (obs_.z_profile) out_.z.push_back(z_profile(state));
    std::size_t k = 0;
    if (obs_.concurrence_pair) {
      const std::array<int, 2> pair{obs_.concurrence_pair->first, obs_.concurrence_pair->second};
      out_.scalars[k++].second.push_back(concurrence(reduce(state, pair)).value);
    }
    if (obs_.fidelity_reference) out_.scalars[k++].second.push_back(fidelity(state, *obs_.fidelity_reference));
    if (obs_.renyi_sites) out_.scalars[k++].second.push_back(renyi2(reduce(state, *obs_.renyi_sites)).value);
    if (hook) hook(t, state.amplitudes());
  }

 private:
  const ObservableSet& obs_;
  Trajectory& out_;
};

Trajectory run_trajectory(const StateVector& initial, const ModelSpec& spec,
                          const EvolutionParams& params, const NoiseSchedule* schedule,
                          const ObservableSet& observables, const SampleHook& hook) {
  validate(spec);
  validate(params);
  require(initial.num_sites() == spec.num_sites, "initial state and model sizes differ");
  const int n = spec.num_sites;
  const bool noisy = schedule != nullptr && schedule->active();
  if (noisy) validate(*schedule, n);

  const Hamiltonian h(spec);
  const double rate = params.tolerance / std::max(params.t_max, params.dt);
  KrylovPropagator prop(h, rate, params.krylov_dim, params.max_substeps);

  const auto times = sample_times(params);
  Trajectory traj;
  Recorder rec(observables, n, times.size(), traj);
  std::vector<amplitude> psi(initial.amplitudes().begin(), initial.amplitudes().end());
  std::mt19937_64 gen(noisy ? schedule->seed : 0);

  rec.record(times[0], psi, n, hook);
  double now = times[0];
  std::uint64_t next_kick = 1;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double target = times[k];
    while (noisy) {
      const double tk = static_cast<double>(next_kick) * schedule->period;
      if (tk > target && !same_time(tk, target)) break;
      prop.advance(psi, std::max(0.0, tk - now));
      now = tk;
      Kick kick{tk, 0, false};
      for (int attempt = 0; attempt < kMaxProjectionRedraws && !kick.applied; ++attempt) {
        kick.site = static_cast<int>(uniform_below(gen, static_cast<std::uint64_t>(n))) + 1;
        try {
          std::vector<amplitude> trial = psi;
          kick_in_place(trial, kick.site, schedule->op, schedule->kick_angle);
          psi = std::move(trial);
          kick.applied = true;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::annihilated_state) throw;
        }
      }
      traj.kick_log.push_back(kick);
      ++next_kick;
    }
    prop.advance(psi, std::max(0.0, target - now));
    now = target;
    rec.record(target, psi, n, hook);
  }
  return traj;
}

}  // namespace

void validate(const EvolutionParams& params) {
  require(std::isfinite(params.t_max) && params.t_max >= 0.0, "t_max must be finite and >= 0");
  require(std::isfinite(params.dt) && params.dt > 0.0, "dt must be positive");
  require(params.t_max == 0.0 || params.dt <= params.t_max, "dt must not exceed t_max");
  require(params.tolerance > 0.0, "tolerance must be positive");
  require(params.krylov_dim >= 2, "krylov_dim must be at least 2");
  require(params.max_substeps >= 1, "max_substeps must be positive");
}

std::vector<double> sample_times(const EvolutionParams& params) {
  const auto count = static_cast<std::size_t>(std::floor(params.t_max / params.dt + 1e-9)) + 1;
  std::vector<double> t(count);
  for (std::size_t k = 0; k < count; ++k) t[k] = static_cast<double>(k) * params.dt;
  return t;
}

std::string_view to_string(KickOperator op) {
  switch (op) {
    case KickOperator::flip_x: return "x";
    case KickOperator::project_q: return "q";
    case KickOperator::project_p: return "p";
  }
  return "?";
}

KickOperator parse_kick_operator(std::string_view text) {
  if (text == "x" || text == "flip-x") return KickOperator::flip_x;
  if (text == "q" || text == "project-q") return KickOperator::project_q;
  if (text == "p" || text == "project-p") return KickOperator::project_p;
  fail(ErrorKind::invalid_argument, "unknown noise operator '" + std::string(text) + "'");
}

void validate(const NoiseSchedule& schedule, int num_sites) {
  require(schedule.period > 0.0, "noise period must be positive (or inf)");
  require(schedule.num_samples >= 1, "num_samples must be at least 1");
  require(num_sites >= 1, "noise needs at least one site");
  if (schedule.op == KickOperator::flip_x)
    require(schedule.kick_angle > 0.0 && schedule.kick_angle <= std::numbers::pi,
            "kick angle must lie in (0, pi]");
}

std::vector<std::string> ObservableSet::scalar_names() const {
  std::vector<std::string> names;
  if (concurrence_pair) names.emplace_back("concurrence");
  if (fidelity_reference) names.emplace_back("fidelity");
  if (renyi_sites) names.emplace_back("renyi2");
  return names;
}

const std::vector<double>& Trajectory::scalar(std::string_view name) const {
  for (const auto& [n, v] : scalars)
    if (n == name) return v;
  fail(ErrorKind::invalid_argument, "observable '" + std::string(name) + "' was not recorded");
}

const SeriesStats& EnsembleResult::scalar(std::string_view name) const {
  for (const auto& s : scalars)
    if (s.name == name) return s;
  fail(ErrorKind::invalid_argument, "observable '" + std::string(name) + "' was not recorded");
}

KrylovPropagator::KrylovPropagator(const Hamiltonian& h, double error_rate, int krylov_dim,
                                   int max_substeps)
    : h_(h), error_rate_(error_rate), max_substeps_(max_substeps) {
  require(error_rate > 0.0, "error rate must be positive");
  const std::size_t per_vector = h.dim() * sizeof(amplitude);
  const auto fit = static_cast<int>(std::max<std::size_t>(1, kKrylovMemoryBudget / per_vector));
  krylov_dim_ = std::max(std::min(krylov_dim, fit - 1), std::min(krylov_dim, kMinKrylovDim));
  krylov_dim_ = static_cast<int>(std::min<std::size_t>(krylov_dim_, h.dim()));
  krylov_dim_ = std::max(krylov_dim_, 1);
}

void KrylovPropagator::advance(std::vector<amplitude>& psi, double duration) {
  require(psi.size() == h_.dim(), "propagator: state size mismatch");
  require(duration >= 0.0, "propagator: negative duration");
  const int m_max = krylov_dim_;
  if (basis_.size() < static_cast<std::size_t>(m_max) + 1) basis_.resize(m_max + 1);
  work_.resize(h_.dim());
  const double breakdown = 1e-12 * std::max(1.0, h_.norm_bound());

  double remaining = duration;
  int steps = 0;
  while (remaining > 1e-15 * std::max(1.0, duration)) {
    if (++steps > max_substeps_)
      fail(ErrorKind::convergence, "propagator: substep limit reached with " +
                                       std::to_string(remaining) + " time left");
    const double beta0 = std::sqrt(kernels::norm_squared(psi));
    auto& v0 = basis_[0];
    v0 = psi;
    kernels::scale(1.0 / beta0, v0);

    // Lanczos with one full re-orthogonalization pass. Stops early once the
    // basis already covers the whole remaining interval.
    std::vector<double> alpha, beta;
    bool exact = false;
    int m = 0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    auto solve_tridiagonal = [&](int size) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(size, size);
      for (int j = 0; j < size; ++j) {
        t(j, j) = alpha[j];
        if (j + 1 < size) t(j, j + 1) = t(j + 1, j) = beta[j];
      }
      es.compute(t);
      if (es.info() != Eigen::Success)
        fail(ErrorKind::numerical_failure, "propagator: tridiagonal eigensolve failed");
    };
    // Last entry of exp(-i tau T) e1. The spectral sum cancels down to
    // rounding level for short steps, so small values are recomputed with a
    // Pade exponential, which keeps their relative accuracy.
    auto last_entry = [&](int size, double tau) {
      const Eigen::MatrixXd& q = es.eigenvectors();
      amplitude last{0.0, 0.0};
      for (int k = 0; k < size; ++k) last += q(size - 1, k) * std::polar(q(0, k), -es.eigenvalues()(k) * tau);
      if (std::abs(last) > 1e-9) return std::abs(last);
      Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(size, size);
      for (int j = 0; j < size; ++j) {
        a(j, j) = amplitude(0.0, -tau * alpha[j]);
        if (j + 1 < size) a(j, j + 1) = a(j + 1, j) = amplitude(0.0, -tau * beta[j]);
      }
      return std::abs(Eigen::MatrixXcd(a.exp())(size - 1, 0));
    };
    auto error_at = [&](int size, double beta_last, double tau) { return beta_last * last_entry(size, tau); };
    for (int j = 0; j < m_max; ++j) {
      h_.apply(basis_[j], work_);
      ++matvecs_;
      const double a = kernels::dot(basis_[j], work_).real();
      alpha.push_back(a);
      kernels::axpy(-a, basis_[j], work_);
      if (j > 0) kernels::axpy(-beta[j - 1], basis_[j - 1], work_);
      for (int i = 0; i <= j; ++i) kernels::axpy(-kernels::dot(basis_[i], work_), basis_[i], work_);
      const double b = std::sqrt(kernels::norm_squared(work_));
      m = j + 1;
      if (b <= breakdown) {
        exact = true;
        break;
      }
      beta.push_back(b);
      basis_[j + 1] = work_;
      kernels::scale(1.0 / b, basis_[j + 1]);
      if (m >= 3 && m < m_max) {
        solve_tridiagonal(m);
        if (error_at(m, b, remaining) <= 0.5 * error_rate_ * remaining) break;
      }
    }
    if (m == static_cast<int>(h_.dim())) exact = true;

    solve_tridiagonal(m);
    const Eigen::MatrixXd& q = es.eigenvectors();
    const Eigen::VectorXd& e = es.eigenvalues();
    const double beta_m = exact ? 0.0 : beta[m - 1];

    auto coeffs = [&](double tau) {
      Eigen::VectorXcd c = Eigen::VectorXcd::Zero(m);
      for (int k = 0; k < m; ++k) {
        const amplitude phase = std::polar(q(0, k), -e(k) * tau);
        for (int j = 0; j < m; ++j) c(j) += q(j, k) * phase;
      }
      return c;
    };
    auto error = [&](double tau) { return beta_m == 0.0 ? 0.0 : beta_m * last_entry(m, tau); };

    double tau = remaining;
    int shrink = 0;
    while (error(tau) > 0.5 * error_rate_ * tau) {
      tau *= 0.5;
      if (++shrink > 200) fail(ErrorKind::convergence, "propagator: step size underflow");
    }
    // Bisect back up towards the largest admissible step.
    double hi = shrink > 0 ? 2.0 * tau : tau;
    for (int it = 0; shrink > 0 && it < 8; ++it) {
      const double mid = 0.5 * (tau + hi);
      if (error(mid) > 0.5 * error_rate_ * mid) hi = mid;
      else tau = mid;
    }
    const Eigen::VectorXcd c = coeffs(tau);

    std::fill(psi.begin(), psi.end(), amplitude{0.0, 0.0});
    for (int j = 0; j < m; ++j) kernels::axpy(beta0 * c(j), basis_[j], psi);
    const double nrm = std::sqrt(kernels::norm_squared(psi));
    kernels::scale(1.0 / nrm, psi);
    remaining -= tau;
    ++substeps_;
  }
}

Trajectory propagate(const StateVector& initial, const ModelSpec& spec,
                     const EvolutionParams& params, const ObservableSet& observables,
                     const SampleHook& hook) {
  return run_trajectory(initial, spec, params, nullptr, observables, hook);
}

StateVector apply_kick(const StateVector& state, int site, KickOperator op, double angle) {
  require(site >= 1 && site <= state.num_sites(), "kick site out of range");
  std::vector<amplitude> psi(state.amplitudes().begin(), state.amplitudes().end());
  kick_in_place(psi, site, op, angle);
  return StateVector(state.num_sites(), std::move(psi));
}

Trajectory propagate_noisy(const StateVector& initial, const ModelSpec& spec,
                           const EvolutionParams& params, const NoiseSchedule& schedule,
                           const ObservableSet& observables, const SampleHook& hook) {
  validate(schedule, spec.num_sites);
  return run_trajectory(initial, spec, params, &schedule, observables, hook);
}

namespace {

// Running mean and sum of squared deviations, folded in trajectory order.
struct Welford {
  std::vector<double> mean, m2;

  void add(const std::vector<double>& x, std::size_t count) {
    if (mean.empty()) {
      mean = x;
      m2.assign(x.size(), 0.0);
      return;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean[i];
      mean[i] += d / static_cast<double>(count);
      m2[i] += d * (x[i] - mean[i]);
    }
  }

  std::vector<double> stderr_(std::size_t n) const {
    std::vector<double> out(mean.size(), 0.0);
    if (n < 2) return out;
    const double nn = static_cast<double>(n);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(std::max(m2[i], 0.0) / (nn - 1.0) / nn);
    return out;
  }
};

std::vector<double> flatten(const std::vector<std::vector<double>>& z) {
  std::vector<double> out;
  for (const auto& row : z) out.insert(out.end(), row.begin(), row.end());
  return out;
}

std::vector<std::vector<double>> unflatten(const std::vector<double>& flat, std::size_t width) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < flat.size(); i += width)
    out.emplace_back(flat.begin() + i, flat.begin() + i + width);
  return out;
}

}  // namespace

EnsembleResult ensemble_average(const StateVector& initial, const ModelSpec& spec,
                                const EvolutionParams& params, const NoiseSchedule& schedule,
                                const ObservableSet& observables, std::uint64_t first_index) {
  validate(schedule, spec.num_sites);
  const std::size_t n = schedule.num_samples;
  EnsembleResult result;
  for (std::size_t k = 0; k < n; ++k) result.seeds.push_back(derive_seed(schedule.seed, first_index + k));

  // Without kicks every trajectory is identical; run one.
  const std::size_t distinct = schedule.active() ? n : 1;
  const auto names = observables.scalar_names();
  std::vector<Welford> acc(names.size());
  Welford zacc;
  constexpr std::size_t kBatch = 64;
  std::vector<Trajectory> batch;
  for (std::size_t lo = 0; lo < distinct; lo += kBatch) {
    const std::size_t len = std::min(kBatch, distinct - lo);
    batch.assign(len, Trajectory{});
    std::vector<std::exception_ptr> errors(len);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < len; ++i) {
      try {
        NoiseSchedule s = schedule;
        s.seed = result.seeds[lo + i];
        batch[i] = propagate_noisy(initial, spec, params, s, observables);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (std::size_t i = 0; i < len; ++i) {
      const Trajectory& tr = batch[i];
      const std::size_t count = lo + i + 1;
      if (result.times.empty()) result.times = tr.times;
      for (std::size_t s = 0; s < names.size(); ++s) acc[s].add(tr.scalars[s].second, count);
      if (observables.z_profile) zacc.add(flatten(tr.z), count);
      result.total_kicks += tr.kick_log.size();
    }
  }
  for (std::size_t s = 0; s < names.size(); ++s)
    result.scalars.push_back({names[s], acc[s].mean, acc[s].stderr_(distinct)});
  if (observables.z_profile) {
    const std::size_t width = spec.num_sites;
    result.z_mean = unflatten(zacc.mean, width);
    result.z_stderr = unflatten(zacc.stderr_(distinct), width);
  }
  if (!schedule.active()) result.total_kicks = 0;
  return result;
}

}  // namespace dfm
