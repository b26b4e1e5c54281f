// Serial reference kernels against their OpenMP versions.
//   bench_kernels --benchmark_filter=apply

#include <benchmark/benchmark.h>

#include <random>

#include "dfm/kernels.hpp"
#include "dfm/models.hpp"

using namespace dfm;

namespace {

std::vector<amplitude> random_vector(std::size_t n) {
  std::mt19937_64 gen(n);
  std::normal_distribution<double> g;
  std::vector<amplitude> v(n);
  for (auto& x : v) x = {g(gen), g(gen)};
  return v;
}

std::vector<BasisIndex> offsets(int first, int last) {
  std::vector<BasisIndex> out{0};
  for (int s = first; s <= last; ++s) {
    const std::size_t m = out.size();
    for (std::size_t k = 0; k < m; ++k) out.push_back(out[k] | site_bit(s));
  }
  return out;
}

template <bool Parallel>
void apply_h(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Hamiltonian h(make_model(ModelKind::dfm, n));
  const auto in = random_vector(h.dim());
  std::vector<amplitude> out(h.dim());
  for (auto _ : state) {
    if constexpr (Parallel) h.apply(in, out);
    else h.apply_serial(in, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(h.dim()));
}

template <bool Parallel>
void dot(benchmark::State& state) {
  const auto a = random_vector(basis_dim(static_cast<int>(state.range(0))));
  const auto b = random_vector(a.size() + 1);
  const std::span<const amplitude> bs(b.data(), a.size());
  for (auto _ : state) {
    amplitude r = Parallel ? kernels::dot(a, bs) : kernels::serial::dot(a, bs);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(a.size()));
}

template <bool Parallel>
void reduced_density(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto psi = random_vector(basis_dim(n));
  // half chain
  const auto keep = offsets(1, n / 2), env = offsets(n / 2 + 1, n);
  for (auto _ : state) {
    auto rho = Parallel ? kernels::reduced_density(psi, keep, env) : kernels::serial::reduced_density(psi, keep, env);
    benchmark::DoNotOptimize(rho.data());
  }
}

}  // namespace

BENCHMARK(apply_h<false>)->Name("apply/serial")->Arg(12)->Arg(16)->Arg(20)->Unit(benchmark::kMicrosecond);
BENCHMARK(apply_h<true>)->Name("apply/openmp")->Arg(12)->Arg(16)->Arg(20)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(dot<false>)->Name("dot/serial")->Arg(16)->Arg(20)->Unit(benchmark::kMicrosecond);
BENCHMARK(dot<true>)->Name("dot/openmp")->Arg(16)->Arg(20)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(reduced_density<false>)->Name("reduce/serial")->Arg(12)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(reduced_density<true>)->Name("reduce/openmp")->Arg(12)->Arg(16)->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
