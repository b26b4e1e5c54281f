#include "dfm/kernels.hpp"

#include <omp.h>

#include <algorithm>

namespace dfm::kernels {

namespace {

std::size_t num_blocks(std::size_t n) { return (n + kReductionBlock - 1) / kReductionBlock; }

template <int Arity>
inline unsigned gather_bits(const SparseTerm& t, BasisIndex s) {
  unsigned a = 0;
  for (int k = 0; k < Arity; ++k) a |= static_cast<unsigned>((s >> t.bits[k]) & 1U) << k;
  return a;
}

// out[lo..hi) (+)= term * in, one term at a time so the per-element sum runs
// over terms in list order.
template <int Arity>
void apply_one(const SparseTerm& t, std::span<const amplitude> in, amplitude* out,
               BasisIndex lo, BasisIndex hi, bool first) {
  for (BasisIndex s = lo; s < hi; ++s) {
    const unsigned a = gather_bits<Arity>(t, s);
    const BasisIndex rest = s & ~t.mask;
    amplitude acc = first ? amplitude{0.0, 0.0} : out[s];
    for (unsigned e = t.row_start[a]; e < t.row_start[a + 1]; ++e)
      acc += t.entries[e].value * in[rest | t.scatter[t.entries[e].col]];
    out[s] = acc;
  }
}

void apply_range(std::span<const SparseTerm> terms, std::span<const amplitude> in,
                 amplitude* out, BasisIndex lo, BasisIndex hi) {
  if (terms.empty()) {
    std::fill(out + lo, out + hi, amplitude{0.0, 0.0});
    return;
  }
  bool first = true;
  for (const SparseTerm& t : terms) {
    switch (t.arity) {
      case 1: apply_one<1>(t, in, out, lo, hi, first); break;
      case 2: apply_one<2>(t, in, out, lo, hi, first); break;
      default: apply_one<3>(t, in, out, lo, hi, first); break;
    }
    first = false;
  }
}

constexpr BasisIndex kApplyChunk = 2048;

inline amplitude block_dot(const amplitude* a, const amplitude* b, std::size_t n) {
  amplitude acc{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

inline double block_norm2(const amplitude* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::norm(a[i]);
  return acc;
}

// Below this many amplitudes a parallel region costs more than it saves.
constexpr std::size_t kParallelMin = std::size_t{1} << 14;

// Gathers psi into a (keep x env) row-major matrix.
std::vector<amplitude> gather(std::span<const amplitude> psi, std::span<const BasisIndex> keep,
                              std::span<const BasisIndex> env, bool parallel) {
  const std::size_t dk = keep.size(), de = env.size();
  std::vector<amplitude> m(dk * de);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t a = 0; a < dk; ++a)
    for (std::size_t e = 0; e < de; ++e) m[a * de + e] = psi[keep[a] | env[e]];
  return m;
}

inline void density_row(const std::vector<amplitude>& m, std::size_t dk, std::size_t de,
                        std::size_t a, std::vector<amplitude>& rho) {
  const amplitude* ra = m.data() + a * de;
  for (std::size_t b = a; b < dk; ++b) {
    const amplitude* rb = m.data() + b * de;
    // rho[a][b] = sum_e psi(a,e) conj(psi(b,e))
    const amplitude v = std::conj(block_dot(ra, rb, de));
    rho[a * dk + b] = v;
    rho[b * dk + a] = std::conj(v);
  }
}

}  // namespace

void set_num_threads(int n) {
  if (n <= 0) n = omp_get_num_procs();
  omp_set_num_threads(n);
}

int num_threads() { return omp_get_max_threads(); }

void apply_terms(std::span<const SparseTerm> terms, std::span<const amplitude> in,
                 std::span<amplitude> out) {
  const BasisIndex n = in.size();
  const auto chunks = static_cast<std::int64_t>((n + kApplyChunk - 1) / kApplyChunk);
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::int64_t c = 0; c < chunks; ++c) {
    const BasisIndex lo = static_cast<BasisIndex>(c) * kApplyChunk;
    apply_range(terms, in, out.data(), lo, std::min(n, lo + kApplyChunk));
  }
}

amplitude dot(std::span<const amplitude> a, std::span<const amplitude> b) {
  const std::size_t nb = num_blocks(a.size());
  std::vector<amplitude> partial(nb);
#pragma omp parallel for schedule(static) if (a.size() >= kParallelMin)
  for (std::size_t k = 0; k < nb; ++k) {
    const std::size_t lo = k * kReductionBlock;
    const std::size_t len = std::min(kReductionBlock, a.size() - lo);
    partial[k] = block_dot(a.data() + lo, b.data() + lo, len);
  }
  amplitude acc{0.0, 0.0};
  for (const auto& p : partial) acc += p;
  return acc;
}

double norm_squared(std::span<const amplitude> a) {
  const std::size_t nb = num_blocks(a.size());
  std::vector<double> partial(nb);
#pragma omp parallel for schedule(static) if (a.size() >= kParallelMin)
  for (std::size_t k = 0; k < nb; ++k) {
    const std::size_t lo = k * kReductionBlock;
    partial[k] = block_norm2(a.data() + lo, std::min(kReductionBlock, a.size() - lo));
  }
  double acc = 0.0;
  for (double p : partial) acc += p;
  return acc;
}

void axpy(amplitude alpha, std::span<const amplitude> x, std::span<amplitude> y) {
  const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static) if (x.size() >= kParallelMin)
  for (std::int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(amplitude alpha, std::span<amplitude> x) {
  const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static) if (x.size() >= kParallelMin)
  for (std::int64_t i = 0; i < n; ++i) x[i] *= alpha;
}

std::vector<amplitude> reduced_density(std::span<const amplitude> psi,
                                       std::span<const BasisIndex> keep_offsets,
                                       std::span<const BasisIndex> env_offsets) {
  const std::size_t dk = keep_offsets.size(), de = env_offsets.size();
  const auto m = gather(psi, keep_offsets, env_offsets, psi.size() >= kParallelMin);
  std::vector<amplitude> rho(dk * dk);
  const auto rows = static_cast<std::int64_t>(dk);
#pragma omp parallel for schedule(dynamic, 1) if (psi.size() >= kParallelMin)
  for (std::int64_t a = 0; a < rows; ++a) density_row(m, dk, de, static_cast<std::size_t>(a), rho);
  return rho;
}

namespace serial {

void apply_terms(std::span<const SparseTerm> terms, std::span<const amplitude> in,
                 std::span<amplitude> out) {
  apply_range(terms, in, out.data(), 0, in.size());
}

amplitude dot(std::span<const amplitude> a, std::span<const amplitude> b) {
  amplitude acc{0.0, 0.0};
  for (std::size_t lo = 0; lo < a.size(); lo += kReductionBlock)
    acc += block_dot(a.data() + lo, b.data() + lo, std::min(kReductionBlock, a.size() - lo));
  return acc;
}

double norm_squared(std::span<const amplitude> a) {
  double acc = 0.0;
  for (std::size_t lo = 0; lo < a.size(); lo += kReductionBlock)
    acc += block_norm2(a.data() + lo, std::min(kReductionBlock, a.size() - lo));
  return acc;
}

void axpy(amplitude alpha, std::span<const amplitude> x, std::span<amplitude> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(amplitude alpha, std::span<amplitude> x) {
  for (auto& v : x) v *= alpha;
}

std::vector<amplitude> reduced_density(std::span<const amplitude> psi,
                                       std::span<const BasisIndex> keep_offsets,
                                       std::span<const BasisIndex> env_offsets) {
  const std::size_t dk = keep_offsets.size(), de = env_offsets.size();
  const auto m = gather(psi, keep_offsets, env_offsets, false);
  std::vector<amplitude> rho(dk * dk);
  for (std::size_t a = 0; a < dk; ++a) density_row(m, dk, de, a, rho);
  return rho;
}

}  // namespace serial

}  // namespace dfm::kernels
