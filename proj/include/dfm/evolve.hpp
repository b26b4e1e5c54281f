#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dfm/models.hpp"
#include "dfm/state.hpp"

namespace dfm {

struct EvolutionParams {
  double t_max = 10.0;
  double dt = 0.05;           // output sampling interval
  double tolerance = 1e-6;    // global state error budget over [0, t_max]
  int krylov_dim = 30;
  int max_substeps = 1 << 22; // per sampling interval

  friend bool operator==(const EvolutionParams&, const EvolutionParams&) = default;
};

void validate(const EvolutionParams& params);

/// Sample times k*dt, k = 0..floor(t_max/dt).
std::vector<double> sample_times(const EvolutionParams& params);

enum class KickOperator { flip_x, project_q, project_p };

std::string_view to_string(KickOperator op);
KickOperator parse_kick_operator(std::string_view text);

inline constexpr double kInfinitePeriod = std::numeric_limits<double>::infinity();

/// Periodic single-site kicks at t = n * period, n = 1, 2, ...
struct NoiseSchedule {
  double period = kInfinitePeriod;
  KickOperator op = KickOperator::flip_x;
  double kick_angle = std::numbers::pi / 2;  // flip_x only
  std::uint64_t seed = 0;
  int num_samples = 1;

  bool active() const noexcept { return std::isfinite(period); }

  friend bool operator==(const NoiseSchedule&, const NoiseSchedule&) = default;
};

void validate(const NoiseSchedule& schedule, int num_sites);

struct ObservableSet {
  bool z_profile = false;
  std::optional<std::pair<int, int>> concurrence_pair;
  std::optional<StateVector> fidelity_reference;
  std::optional<std::vector<int>> renyi_sites;

  /// Scalar observable names in output order.
  std::vector<std::string> scalar_names() const;
};

struct Kick {
  double time = 0.0;
  int site = 0;
  bool applied = true;  // false when every redraw annihilated the state
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> z;  // [sample][site - 1], if requested
  std::vector<std::pair<std::string, std::vector<double>>> scalars;
  std::vector<Kick> kick_log;

  const std::vector<double>& scalar(std::string_view name) const;
};

/// Called after every sample with (time, state amplitudes).
using SampleHook = std::function<void(double, std::span<const amplitude>)>;

/// Adaptive Lanczos propagator for exp(-i H t).
///
/// Each substep builds an orthonormal Krylov basis of dimension <= krylov_dim
/// and takes the longest step tau whose a posteriori error estimate
/// beta_m |e_m^T exp(-i tau T_m) e_1| stays below error_rate * tau.
class KrylovPropagator {
 public:
  KrylovPropagator(const Hamiltonian& h, double error_rate, int krylov_dim, int max_substeps);

  /// psi <- exp(-i H duration) psi
  void advance(std::vector<amplitude>& psi, double duration);

  std::size_t substeps() const noexcept { return substeps_; }
  std::size_t matvecs() const noexcept { return matvecs_; }

 private:
  const Hamiltonian& h_;
  double error_rate_;
  int krylov_dim_;
  int max_substeps_;
  std::size_t substeps_ = 0;
  std::size_t matvecs_ = 0;
  std::vector<std::vector<amplitude>> basis_;
  std::vector<amplitude> work_;
};

/// Noiseless evolution sampled on sample_times(params).
Trajectory propagate(const StateVector& initial, const ModelSpec& spec,
                     const EvolutionParams& params, const ObservableSet& observables,
                     const SampleHook& hook = {});

/// exp(-i angle X_j) for flip_x; projector then renormalization for project_*.
/// Throws Error(annihilated_state) when a projection leaves nothing.
StateVector apply_kick(const StateVector& state, int site, KickOperator op,
                       double angle = std::numbers::pi / 2);

/// Evolution with kicks at n * period on uniformly drawn sites, using the
/// random stream mt19937_64(schedule.seed). A sample that coincides with a
/// kick time records the post-kick state. Annihilating projections redraw the
/// site (at most 64 times) before the kick is logged as not applied.
Trajectory propagate_noisy(const StateVector& initial, const ModelSpec& spec,
                           const EvolutionParams& params, const NoiseSchedule& schedule,
                           const ObservableSet& observables, const SampleHook& hook = {});

struct SeriesStats {
  std::string name;
  std::vector<double> mean;
  std::vector<double> stderr_;  // sample standard deviation / sqrt(n)
};

struct EnsembleResult {
  std::vector<double> times;
  std::vector<SeriesStats> scalars;
  std::vector<std::vector<double>> z_mean;    // [sample][site - 1]
  std::vector<std::vector<double>> z_stderr;  // [sample][site - 1]
  std::vector<std::uint64_t> seeds;
  std::size_t total_kicks = 0;

  const SeriesStats& scalar(std::string_view name) const;
};

/// Runs schedule.num_samples trajectories, trajectory k seeded with
/// derive_seed(schedule.seed, first_index + k), and reduces them in index
/// order. Trajectories run concurrently.
EnsembleResult ensemble_average(const StateVector& initial, const ModelSpec& spec,
                                const EvolutionParams& params, const NoiseSchedule& schedule,
                                const ObservableSet& observables, std::uint64_t first_index = 0);

}  // namespace dfm
