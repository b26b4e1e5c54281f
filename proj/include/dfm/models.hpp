#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dfm/kernels.hpp"
#include "dfm/state.hpp"

namespace dfm {

enum class ModelKind { dfm, east, pxp, heisenberg };
enum class Boundary { periodic, open };

std::string_view to_string(ModelKind kind);
std::string_view to_string(Boundary bc);
ModelKind parse_model_kind(std::string_view text);
Boundary parse_boundary(std::string_view text);

struct ModelSpec {
  ModelKind kind = ModelKind::dfm;
  int num_sites = 8;
  Boundary boundary = Boundary::periodic;
  double coupling = 1.0;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Spec with the model's default boundary (open for East, periodic otherwise).
ModelSpec make_model(ModelKind kind, int num_sites);
void validate(const ModelSpec& spec);

struct LocalTerm {
  std::vector<int> support;  // 1-indexed; support[k] is local bit k
  Eigen::MatrixXcd matrix;
};

/// DFM:        Q_i P_{i+1} X_{i+2} + X_i P_{i+1} Q_{i+2}, as two terms per i
/// East:       n_i (X_{i+1} - 1), i = 1..L-1 (open) or 1..L (periodic)
/// PXP:        P_{i-1} X_i P_{i+1}
/// Heisenberg: X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1}
/// All scaled by spec.coupling; site indices wrap modulo L under PBC.
std::vector<LocalTerm> build_terms(const ModelSpec& spec);

/// Compiled matrix-free Hamiltonian.
class Hamiltonian {
 public:
  explicit Hamiltonian(const ModelSpec& spec);

  const ModelSpec& spec() const noexcept { return spec_; }
  std::span<const kernels::SparseTerm> terms() const noexcept { return terms_; }
  int num_sites() const noexcept { return spec_.num_sites; }
  std::size_t dim() const noexcept { return basis_dim(spec_.num_sites); }

  void apply(std::span<const amplitude> in, std::span<amplitude> out) const;
  void apply_serial(std::span<const amplitude> in, std::span<amplitude> out) const;

  /// Column H|s> of a basis state, as (row, value) pairs with exact zeros dropped.
  std::vector<std::pair<BasisIndex, amplitude>> column(BasisIndex s) const;

  /// Upper bound on the spectral radius (sum of local operator norms).
  double norm_bound() const noexcept { return norm_bound_; }

 private:
  ModelSpec spec_;
  std::vector<kernels::SparseTerm> terms_;
  double norm_bound_ = 0.0;
};

inline constexpr int kDenseMaxSites = 12;

/// H|psi>, unnormalized.
std::vector<amplitude> apply_h(const ModelSpec& spec, const StateVector& state);
/// Dense matrix, L <= kDenseMaxSites.
Eigen::MatrixXcd dense_h(const ModelSpec& spec);
/// <psi|H|psi>
double energy(const Hamiltonian& h, std::span<const amplitude> psi);

}  // namespace dfm
