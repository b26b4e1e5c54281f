#include "dfm/models.hpp"

#include <map>

#include "dfm/error.hpp"
#include "dfm/operators.hpp"

namespace dfm {

namespace {

int wrap(int site, int n) { return ((site - 1) % n + n) % n + 1; }

kernels::SparseTerm compile(const LocalTerm& term) {
  kernels::SparseTerm t;
  t.arity = static_cast<int>(term.support.size());
  require(t.arity >= 1 && t.arity <= 3, "local terms act on 1 to 3 sites");
  for (int k = 0; k < t.arity; ++k) {
    t.bits[k] = term.support[k] - 1;
    t.mask |= site_bit(term.support[k]);
  }
  const unsigned d = 1U << t.arity;
  for (unsigned b = 0; b < d; ++b) {
    BasisIndex s = 0;
    for (int k = 0; k < t.arity; ++k)
      if ((b >> k) & 1U) s |= site_bit(term.support[k]);
    t.scatter[b] = s;
  }
  std::uint8_t e = 0;
  for (unsigned a = 0; a < d; ++a) {
    t.row_start[a] = e;
    for (unsigned b = 0; b < d; ++b) {
      const amplitude v = term.matrix(a, b);
      if (v != amplitude{0.0, 0.0}) t.entries[e++] = {static_cast<std::uint8_t>(b), v};
    }
  }
  t.row_start[d] = e;
  return t;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::dfm: return "dfm";
    case ModelKind::east: return "east";
    case ModelKind::pxp: return "pxp";
    case ModelKind::heisenberg: return "heisenberg";
  }
  return "?";
}

std::string_view to_string(Boundary bc) { return bc == Boundary::periodic ? "pbc" : "obc"; }

ModelKind parse_model_kind(std::string_view text) {
  for (ModelKind k : {ModelKind::dfm, ModelKind::east, ModelKind::pxp, ModelKind::heisenberg})
    if (text == to_string(k)) return k;
  fail(ErrorKind::invalid_argument, "unknown model '" + std::string(text) + "'");
}

Boundary parse_boundary(std::string_view text) {
  if (text == "pbc" || text == "periodic") return Boundary::periodic;
  if (text == "obc" || text == "open") return Boundary::open;
  fail(ErrorKind::invalid_argument, "unknown boundary '" + std::string(text) + "'");
}

ModelSpec make_model(ModelKind kind, int num_sites) {
  return {kind, num_sites, kind == ModelKind::east ? Boundary::open : Boundary::periodic, 1.0};
}

void validate(const ModelSpec& spec) {
  const int n = spec.num_sites;
  require(n >= 3 && n <= kMaxSites, "model needs 3 to " + std::to_string(kMaxSites) + " sites");
  if (spec.kind == ModelKind::dfm && spec.boundary == Boundary::periodic)
    require(n % 2 == 0, "periodic DFM needs an even number of sites, got " + std::to_string(n));
  require(std::isfinite(spec.coupling), "coupling must be finite");
}

std::vector<LocalTerm> build_terms(const ModelSpec& spec) {
  validate(spec);
  using namespace ops;
  const int n = spec.num_sites;
  const bool pbc = spec.boundary == Boundary::periodic;
  const double j = spec.coupling;
  std::vector<LocalTerm> terms;
  switch (spec.kind) {
    case ModelKind::dfm: {
      const Mat qpx = j * local_product({proj_up(), proj_down(), pauli_x()});
      const Mat xpq = j * local_product({pauli_x(), proj_down(), proj_up()});
      const int last = pbc ? n : n - 2;
      for (int i = 1; i <= last; ++i) {
        std::vector<int> sup{i, wrap(i + 1, n), wrap(i + 2, n)};
        terms.push_back({sup, qpx});
        terms.push_back({sup, xpq});
      }
      break;
    }
    case ModelKind::east: {
      const Mat flip = j * local_product({proj_up(), pauli_x() - identity()});
      const int last = pbc ? n : n - 1;
      for (int i = 1; i <= last; ++i) terms.push_back({{i, wrap(i + 1, n)}, flip});
      break;
    }
    case ModelKind::pxp: {
      const Mat pxp = j * local_product({proj_down(), pauli_x(), proj_down()});
      if (pbc) {
        for (int i = 1; i <= n; ++i) terms.push_back({{wrap(i - 1, n), i, wrap(i + 1, n)}, pxp});
      } else {
        terms.push_back({{1, 2}, j * local_product({pauli_x(), proj_down()})});
        for (int i = 2; i <= n - 1; ++i) terms.push_back({{i - 1, i, i + 1}, pxp});
        terms.push_back({{n - 1, n}, j * local_product({proj_down(), pauli_x()})});
      }
      break;
    }
    case ModelKind::heisenberg: {
      const Mat bond = j * (local_product({pauli_x(), pauli_x()}) +
                            local_product({pauli_y(), pauli_y()}) +
                            local_product({pauli_z(), pauli_z()}));
      const int last = pbc ? n : n - 1;
      for (int i = 1; i <= last; ++i) terms.push_back({{i, wrap(i + 1, n)}, bond});
      break;
    }
  }
  return terms;
}

Hamiltonian::Hamiltonian(const ModelSpec& spec) : spec_(spec) {
  for (const LocalTerm& term : build_terms(spec)) {
    terms_.push_back(compile(term));
    norm_bound_ += Eigen::JacobiSVD<Eigen::MatrixXcd>(term.matrix).singularValues()(0);
  }
}

void Hamiltonian::apply(std::span<const amplitude> in, std::span<amplitude> out) const {
  require(in.size() == dim() && out.size() == dim(), "apply: vector size mismatch");
  kernels::apply_terms(terms_, in, out);
}

void Hamiltonian::apply_serial(std::span<const amplitude> in, std::span<amplitude> out) const {
  require(in.size() == dim() && out.size() == dim(), "apply: vector size mismatch");
  kernels::serial::apply_terms(terms_, in, out);
}

std::vector<std::pair<BasisIndex, amplitude>> Hamiltonian::column(BasisIndex s) const {
  std::map<BasisIndex, amplitude> acc;
  for (const auto& t : terms_) {
    const unsigned a = t.local_index(s);
    const BasisIndex rest = s & ~t.mask;
    const unsigned d = 1U << t.arity;
    for (unsigned r = 0; r < d; ++r)
      for (unsigned e = t.row_start[r]; e < t.row_start[r + 1]; ++e)
        if (t.entries[e].col == a) acc[rest | t.scatter[r]] += t.entries[e].value;
  }
  std::vector<std::pair<BasisIndex, amplitude>> out;
  for (const auto& [row, v] : acc)
    if (v != amplitude{0.0, 0.0}) out.emplace_back(row, v);
  return out;
}

std::vector<amplitude> apply_h(const ModelSpec& spec, const StateVector& state) {
  require(spec.num_sites == state.num_sites(), "apply_h: model and state sizes differ");
  const Hamiltonian h(spec);
  std::vector<amplitude> out(h.dim());
  h.apply(state.amplitudes(), out);
  return out;
}

Eigen::MatrixXcd dense_h(const ModelSpec& spec) {
  validate(spec);
  if (spec.num_sites > kDenseMaxSites)
    fail(ErrorKind::resource_limit, "dense_h supports at most " +
                                        std::to_string(kDenseMaxSites) + " sites");
  const auto dim = static_cast<Eigen::Index>(basis_dim(spec.num_sites));
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (const LocalTerm& term : build_terms(spec))
    h += ops::embed(term.matrix, term.support, spec.num_sites);
  return h;
}

double energy(const Hamiltonian& h, std::span<const amplitude> psi) {
  std::vector<amplitude> hpsi(psi.size());
  h.apply(psi, hpsi);
  return kernels::dot(psi, hpsi).real();
}

}  // namespace dfm
