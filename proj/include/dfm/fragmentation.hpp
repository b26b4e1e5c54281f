#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dfm/models.hpp"

namespace dfm {

enum class GroupSite : std::uint8_t { empty, right, left, full };  // ∘ ▷ ◁ •

/// Pairs sites (2k-1, 2k): ∘=(↓↓), ▷=(↑↓), ◁=(↓↑), •=(↑↑).
std::vector<GroupSite> to_group_sites(BasisIndex s, int num_sites);
BasisIndex from_group_sites(std::span<const GroupSite> groups);
std::string format_group_sites(BasisIndex s, int num_sites);

inline constexpr int kExplicitGraphMaxSites = 14;
inline constexpr int kGraphMaxSites = 20;

/// Undirected basis-state graph: edge (a, b) iff a != b and <a|H|b> != 0.
/// Stored as CSR up to kExplicitGraphMaxSites; above that neighbors are
/// generated on demand from the Hamiltonian.
class BasisGraph {
 public:
  explicit BasisGraph(const ModelSpec& spec);

  int num_sites() const noexcept { return h_.num_sites(); }
  std::size_t num_vertices() const noexcept { return h_.dim(); }
  bool is_explicit() const noexcept { return !offsets_.empty(); }

  std::vector<BasisIndex> neighbors(BasisIndex s) const;
  std::size_t degree(BasisIndex s) const;
  /// H|s> == 0 exactly.
  bool annihilated(BasisIndex s) const;

  const Hamiltonian& hamiltonian() const noexcept { return h_; }

 private:
  Hamiltonian h_;
  std::vector<std::size_t> offsets_;
  std::vector<BasisIndex> targets_;
};

BasisGraph build_adjacency(const ModelSpec& spec);

enum class SubspaceLabel { thermal, left, right, frozen, other };

std::string_view to_string(SubspaceLabel label);

struct Component {
  SubspaceLabel label = SubspaceLabel::other;
  std::size_t size = 0;
  BasisIndex representative = 0;  // smallest member
  std::vector<std::size_t> by_hamming_weight;  // index = number of up spins
};

struct SubspaceReport {
  int num_sites = 0;
  std::vector<Component> components;  // non-singleton or non-frozen, by label then size
  std::size_t frozen_count = 0;
  std::vector<std::uint32_t> component_of;  // per basis index; kFrozen for frozen states

  static constexpr std::uint32_t kFrozen = UINT32_MAX;

  const Component* find(SubspaceLabel label) const;
  std::size_t dynamic_count() const;  // components with size > 1
  SubspaceLabel label_of(BasisIndex s) const;
};

/// Breadth-first decomposition. Labels: the component of the L-Neel state
/// (up on odd sites) is L, of the R-Neel state is R, the largest remaining
/// non-singleton component is T, annihilated singletons are frozen, anything
/// else is other.
SubspaceReport components(const BasisGraph& graph);

struct Classification {
  SubspaceLabel label = SubspaceLabel::other;         // from the graph
  SubspaceLabel static_label = SubspaceLabel::other;  // from sublattice predicates
  bool agrees = false;
};

/// L: all even sites down (not all-down); R: all odd sites down; frozen:
/// H|s> = 0; otherwise T.
SubspaceLabel static_label(BasisIndex s, const Hamiltonian& h);
Classification classify_state(BasisIndex s, const ModelSpec& spec);
Classification classify_state(BasisIndex s, const SubspaceReport& report, const Hamiltonian& h);

struct Eq10Check {
  bool holds = false;
  double max_residual = 0.0;
  Eigen::MatrixXcd lhs;  // (Q1 P2 X3 + X1 P2 Q3)^2
  Eigen::MatrixXcd rhs;  // Q1 P2 + P2 Q3 + s-_1 P2 s+_3 + s+_1 P2 s-_3
};

/// Squares the two-term triangle Hamiltonian on three open sites and compares
/// it with the constrained-hopping form.
Eq10Check verify_eq10();

struct ScalingRow {
  int num_sites = 0;
  std::size_t dynamic_count = 0;
  std::size_t frozen_count = 0;
  std::vector<std::pair<SubspaceLabel, std::size_t>> sizes;
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  std::optional<int> truncated_at;  // first size that hit the resource limit
};

ScalingTable subspace_scaling(ModelKind kind, std::span<const int> sizes);

}  // namespace dfm
