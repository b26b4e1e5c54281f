#include "dfm/fragmentation.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <numeric>

#include "dfm/error.hpp"
#include "dfm/operators.hpp"

namespace dfm {

namespace {

BasisIndex odd_mask(int n) {
  BasisIndex m = 0;
  for (int i = 1; i <= n; i += 2) m |= site_bit(i);
  return m;
}

BasisIndex even_mask(int n) {
  BasisIndex m = 0;
  for (int i = 2; i <= n; i += 2) m |= site_bit(i);
  return m;
}

int label_rank(SubspaceLabel l) {
  switch (l) {
    case SubspaceLabel::thermal: return 0;
    case SubspaceLabel::left: return 1;
    case SubspaceLabel::right: return 2;
    case SubspaceLabel::other: return 3;
    case SubspaceLabel::frozen: return 4;
  }
  return 5;
}

}  // namespace

std::vector<GroupSite> to_group_sites(BasisIndex s, int num_sites) {
  require(num_sites % 2 == 0, "group-site form needs an even number of sites");
  std::vector<GroupSite> out(num_sites / 2);
  for (int k = 0; k < num_sites / 2; ++k) {
    const bool odd_up = is_up(s, 2 * k + 1), even_up = is_up(s, 2 * k + 2);
    out[k] = odd_up ? (even_up ? GroupSite::full : GroupSite::right)
                    : (even_up ? GroupSite::left : GroupSite::empty);
  }
  return out;
}

BasisIndex from_group_sites(std::span<const GroupSite> groups) {
  BasisIndex s = 0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const auto g = groups[k];
    if (g == GroupSite::right || g == GroupSite::full) s |= site_bit(2 * static_cast<int>(k) + 1);
    if (g == GroupSite::left || g == GroupSite::full) s |= site_bit(2 * static_cast<int>(k) + 2);
  }
  return s;
}

std::string format_group_sites(BasisIndex s, int num_sites) {
  static constexpr const char* symbols[] = {"∘", "▷", "◁", "•"};
  std::string out;
  for (GroupSite g : to_group_sites(s, num_sites)) out += symbols[static_cast<int>(g)];
  return out;
}

BasisGraph::BasisGraph(const ModelSpec& spec) : h_(spec) {
  if (spec.num_sites > kGraphMaxSites)
    fail(ErrorKind::resource_limit, "basis graph supports at most " +
                                        std::to_string(kGraphMaxSites) + " sites");
  if (spec.num_sites > kExplicitGraphMaxSites) return;
  const auto n = static_cast<std::int64_t>(h_.dim());
  std::vector<std::vector<BasisIndex>> adj(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < n; ++s) {
    for (const auto& [row, v] : h_.column(static_cast<BasisIndex>(s)))
      if (row != static_cast<BasisIndex>(s)) adj[s].push_back(row);
  }
  offsets_.assign(n + 1, 0);
  for (std::int64_t s = 0; s < n; ++s) offsets_[s + 1] = offsets_[s] + adj[s].size();
  targets_.reserve(offsets_.back());
  for (const auto& a : adj) targets_.insert(targets_.end(), a.begin(), a.end());
}

std::vector<BasisIndex> BasisGraph::neighbors(BasisIndex s) const {
  if (is_explicit())
    return {targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[s]),
            targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[s + 1])};
  std::vector<BasisIndex> out;
  for (const auto& [row, v] : h_.column(s))
    if (row != s) out.push_back(row);
  return out;
}

std::size_t BasisGraph::degree(BasisIndex s) const {
  return is_explicit() ? offsets_[s + 1] - offsets_[s] : neighbors(s).size();
}

bool BasisGraph::annihilated(BasisIndex s) const { return h_.column(s).empty(); }

BasisGraph build_adjacency(const ModelSpec& spec) { return BasisGraph(spec); }

std::string_view to_string(SubspaceLabel label) {
  switch (label) {
    case SubspaceLabel::thermal: return "T";
    case SubspaceLabel::left: return "L";
    case SubspaceLabel::right: return "R";
    case SubspaceLabel::frozen: return "frozen";
    case SubspaceLabel::other: return "other";
  }
  return "?";
}

const Component* SubspaceReport::find(SubspaceLabel label) const {
  for (const auto& c : components)
    if (c.label == label) return &c;
  return nullptr;
}

std::size_t SubspaceReport::dynamic_count() const {
  return static_cast<std::size_t>(
      std::count_if(components.begin(), components.end(), [](const Component& c) { return c.size > 1; }));
}

SubspaceLabel SubspaceReport::label_of(BasisIndex s) const {
  const auto id = component_of.at(s);
  return id == kFrozen ? SubspaceLabel::frozen : components[id].label;
}

SubspaceReport components(const BasisGraph& graph) {
  const int n = graph.num_sites();
  const std::size_t dim = graph.num_vertices();
  constexpr std::uint32_t unset = SubspaceReport::kFrozen - 1;
  SubspaceReport report;
  report.num_sites = n;
  report.component_of.assign(dim, unset);

  std::vector<Component> found;
  std::deque<BasisIndex> queue;
  for (BasisIndex s = 0; s < dim; ++s) {
    if (report.component_of[s] != unset) continue;
    if (graph.degree(s) == 0 && graph.annihilated(s)) {
      report.component_of[s] = SubspaceReport::kFrozen;
      ++report.frozen_count;
      continue;
    }
    const auto id = static_cast<std::uint32_t>(found.size());
    Component c;
    c.representative = s;
    c.by_hamming_weight.assign(n + 1, 0);
    report.component_of[s] = id;
    queue.push_back(s);
    while (!queue.empty()) {
      const BasisIndex u = queue.front();
      queue.pop_front();
      ++c.size;
      ++c.by_hamming_weight[std::popcount(u)];
      for (BasisIndex v : graph.neighbors(u)) {
        if (report.component_of[v] == unset) {
          report.component_of[v] = id;
          queue.push_back(v);
        }
      }
    }
    found.push_back(std::move(c));
  }

  auto label_at = [&](BasisIndex s, SubspaceLabel label) {
    const auto id = report.component_of[s];
    if (id != SubspaceReport::kFrozen && found[id].label == SubspaceLabel::other) found[id].label = label;
  };
  label_at(odd_mask(n), SubspaceLabel::left);
  label_at(even_mask(n), SubspaceLabel::right);
  std::size_t best = found.size();
  for (std::size_t i = 0; i < found.size(); ++i)
    if (found[i].label == SubspaceLabel::other && found[i].size > 1 &&
        (best == found.size() || found[i].size > found[best].size))
      best = i;
  if (best != found.size()) found[best].label = SubspaceLabel::thermal;

  std::vector<std::uint32_t> order(found.size());
  std::iota(order.begin(), order.end(), 0U);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return label_rank(found[a].label) < label_rank(found[b].label);
  });
  std::vector<std::uint32_t> remap(found.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) {
    remap[order[i]] = i;
    report.components.push_back(std::move(found[order[i]]));
  }
  for (auto& id : report.component_of)
    if (id != SubspaceReport::kFrozen) id = remap[id];
  return report;
}

SubspaceLabel static_label(BasisIndex s, const Hamiltonian& h) {
  if (h.column(s).empty()) return SubspaceLabel::frozen;
  const int n = h.num_sites();
  if ((s & even_mask(n)) == 0) return SubspaceLabel::left;
  if ((s & odd_mask(n)) == 0) return SubspaceLabel::right;
  return SubspaceLabel::thermal;
}

Classification classify_state(BasisIndex s, const SubspaceReport& report, const Hamiltonian& h) {
  Classification c;
  c.label = report.label_of(s);
  c.static_label = static_label(s, h);
  c.agrees = c.label == c.static_label;
  return c;
}

Classification classify_state(BasisIndex s, const ModelSpec& spec) {
  require(spec.num_sites % 2 == 0, "classification needs an even number of sites");
  require(s < basis_dim(spec.num_sites), "basis index out of range");
  const BasisGraph graph(spec);
  return classify_state(s, components(graph), graph.hamiltonian());
}

Eq10Check verify_eq10() {
  using namespace ops;
  const Mat h = local_product({proj_up(), proj_down(), pauli_x()}) +
                local_product({pauli_x(), proj_down(), proj_up()});
  Eq10Check out;
  out.lhs = h * h;
  out.rhs = local_product({proj_up(), proj_down(), identity()}) +
            local_product({identity(), proj_down(), proj_up()}) +
            local_product({lower(), proj_down(), raise()}) +
            local_product({raise(), proj_down(), lower()});
  out.max_residual = (out.lhs - out.rhs).cwiseAbs().maxCoeff();
  out.holds = out.max_residual <= 1e-12;
  return out;
}

ScalingTable subspace_scaling(ModelKind kind, std::span<const int> sizes) {
  ScalingTable table;
  for (int n : sizes) {
    try {
      const BasisGraph graph(make_model(kind, n));
      const SubspaceReport report = components(graph);
      ScalingRow row;
      row.num_sites = n;
      row.dynamic_count = report.dynamic_count();
      row.frozen_count = report.frozen_count;
      for (const auto& c : report.components)
        if (c.size > 1) row.sizes.emplace_back(c.label, c.size);
      table.rows.push_back(std::move(row));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::resource_limit) throw;
      table.truncated_at = n;
      break;
    }
  }
  return table;
}

}  // namespace dfm
