// dfm: command line front end for the spin chain experiments.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dfm/error.hpp"
#include "dfm/experiment.hpp"
#include "dfm/fragmentation.hpp"
#include "dfm/kernels.hpp"

namespace {

enum Exit { ok = 0, invalid_config = 2, resource_limit = 3, numerical_failure = 4 };

struct Flags {
  std::string config_path;
  std::string model, bc, init, noise_period, noise_op, out, size_range, periods;
  int size = 0, samples = 0, threads = 0, krylov_dim = 0;
  double t_max = 0, dt = 0, tol = 0, kick_angle = 0, coupling = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> obs;
};

struct Options {
  CLI::Option* model = nullptr;
  CLI::Option* size = nullptr;
  CLI::Option* bc = nullptr;
  CLI::Option* coupling = nullptr;
  CLI::Option* init = nullptr;
  CLI::Option* t_max = nullptr;
  CLI::Option* dt = nullptr;
  CLI::Option* tol = nullptr;
  CLI::Option* krylov_dim = nullptr;
  CLI::Option* noise_period = nullptr;
  CLI::Option* noise_op = nullptr;
  CLI::Option* kick_angle = nullptr;
  CLI::Option* samples = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* obs = nullptr;
  CLI::Option* periods = nullptr;
  CLI::Option* size_range = nullptr;
};

Options add_common(CLI::App* app, Flags& f) {
  Options o;
  app->add_option("--config", f.config_path, "JSON config file; flags override its values")
      ->check(CLI::ExistingFile);
  o.model = app->add_option("--model", f.model, "dfm, east, pxp or heisenberg");
  o.size = app->add_option("--size", f.size, "number of sites L");
  o.bc = app->add_option("--bc", f.bc, "pbc or obc");
  o.coupling = app->add_option("--coupling", f.coupling, "overall energy scale");
  o.init = app->add_option("--init", f.init,
                           "all-down, neel-L, neel-R, single-up@i, double-up@i, bell, ghz, bits:<string>");
  o.t_max = app->add_option("--t-max", f.t_max, "final time");
  o.dt = app->add_option("--dt", f.dt, "sampling interval");
  o.tol = app->add_option("--tol", f.tol, "integration tolerance over [0, t_max]");
  o.krylov_dim = app->add_option("--krylov-dim", f.krylov_dim, "maximum Krylov dimension");
  o.noise_period = app->add_option("--noise-period", f.noise_period, "kick period T_X, or inf");
  o.noise_op = app->add_option("--noise-op", f.noise_op, "x, q or p");
  o.kick_angle = app->add_option("--kick-angle", f.kick_angle, "rotation angle of x kicks");
  o.samples = app->add_option("--samples", f.samples, "trajectories per point");
  o.seed = app->add_option("--seed", f.seed, "master seed");
  o.out = app->add_option("--out", f.out, "output directory");
  o.obs = app->add_option("--obs", f.obs,
                          "observables: z-profile, concurrence[:i,j], fidelity[:kind], renyi2[:even|odd|i,j,..]");
  o.periods = app->add_option("--periods", f.periods, "comma separated sweep periods, e.g. 0.5,1,inf");
  o.size_range = app->add_option("--size-range", f.size_range, "scaling table range, e.g. 4..12");
  app->add_option("--threads", f.threads, "worker threads (default: all cores)");
  return o;
}

std::vector<double> parse_periods(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(dfm::parse_period(item));
  dfm::require(!out.empty(), "empty period list");
  return out;
}

std::pair<int, int> parse_range(const std::string& text) {
  const auto pos = text.find("..");
  dfm::require(pos != std::string::npos, "size range must look like 4..12");
  try {
    const int lo = std::stoi(text.substr(0, pos));
    const int hi = std::stoi(text.substr(pos + 2));
    dfm::require(lo <= hi, "size range is empty");
    return {lo, hi};
  } catch (const std::logic_error&) {
    dfm::fail(dfm::ErrorKind::invalid_argument, "bad size range '" + text + "'");
  }
}

dfm::ExperimentConfig load_base(const Flags& f) {
  if (f.config_path.empty()) return {};
  std::ifstream in(f.config_path);
  try {
    return dfm::config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    dfm::fail(dfm::ErrorKind::invalid_argument, std::string("cannot parse config: ") + e.what());
  }
}

void apply_flags(dfm::ExperimentConfig& c, const Flags& f, const Options& o) {
  if (*o.model) {
    const auto kind = dfm::parse_model_kind(f.model);
    const double coupling = c.model.coupling;
    c.model = dfm::make_model(kind, c.model.num_sites);
    c.model.coupling = coupling;
  }
  if (*o.size) c.model.num_sites = f.size;
  if (*o.bc) c.model.boundary = dfm::parse_boundary(f.bc);
  if (*o.coupling) c.model.coupling = f.coupling;
  if (*o.init) c.initial_state = f.init;
  if (*o.t_max) c.evolution.t_max = f.t_max;
  if (*o.dt) c.evolution.dt = f.dt;
  if (*o.tol) c.evolution.tolerance = f.tol;
  if (*o.krylov_dim) c.evolution.krylov_dim = f.krylov_dim;
  if (*o.noise_period) c.noise.period = dfm::parse_period(f.noise_period);
  if (*o.noise_op) c.noise.op = dfm::parse_kick_operator(f.noise_op);
  if (*o.kick_angle) c.noise.kick_angle = f.kick_angle;
  if (*o.samples) c.noise.num_samples = f.samples;
  if (*o.seed) c.noise.seed = f.seed;
  if (*o.out) c.output_dir = f.out;
  if (*o.obs) c.observables = f.obs;
  if (*o.periods) c.sweep_periods = parse_periods(f.periods);
  if (*o.size_range) c.size_range = parse_range(f.size_range);
}

void report_run(const dfm::ExperimentConfig& c, const dfm::EnsembleResult& r) {
  std::printf("wrote %s (%zu samples, %zu trajectories, %llu kicks)\n", c.output_dir.string().c_str(),
              r.times.size(), r.seeds.size(), static_cast<unsigned long long>(r.total_kicks));
}

int run_evolve_or_sweep(const dfm::ExperimentConfig& c) {
  if (c.sweep_periods.empty()) {
    report_run(c, dfm::run_evolve(c));
  } else {
    const auto results = dfm::run_sweep(c);
    for (std::size_t k = 0; k < results.size(); ++k)
      std::printf("T_X=%s: %zu trajectories\n", dfm::format_period(c.sweep_periods[k]).c_str(),
                  results[k].seeds.size());
    std::printf("wrote %s/manifest.json\n", c.output_dir.string().c_str());
  }
  return ok;
}

int run_fragment_cmd(const dfm::ExperimentConfig& c) {
  const auto doc = dfm::run_fragment(c);
  for (const auto& comp : doc["components"])
    std::printf("%s:%s ", comp["label"].get<std::string>().c_str(), comp["size"].dump().c_str());
  std::printf("frozen %s\n", doc["frozen_count"].dump().c_str());
  if (doc.contains("scaling"))
    for (const auto& row : doc["scaling"])
      std::printf("L=%s dynamic %s frozen %s\n", row["size"].dump().c_str(), row["dynamic_count"].dump().c_str(),
                  row["frozen_count"].dump().c_str());
  std::printf("wrote %s/fragment.json\n", c.output_dir.string().c_str());
  return ok;
}

int run_check_eq10() {
  const auto check = dfm::verify_eq10();
  std::printf("max residual %.3e\n", check.max_residual);
  return check.holds && check.max_residual <= 1e-12 ? ok : numerical_failure;
}

int exit_code(dfm::ErrorKind kind) {
  switch (kind) {
    case dfm::ErrorKind::invalid_argument: return invalid_config;
    case dfm::ErrorKind::resource_limit: return resource_limit;
    default: return numerical_failure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetically constrained spin chain simulator"};
  app.set_version_flag("--version", DFM_VERSION);
  app.require_subcommand(1);

  Flags evolve_f, sweep_f, fragment_f, preset_f;
  auto* evolve = app.add_subcommand("evolve", "single run or noisy ensemble");
  const Options evolve_o = add_common(evolve, evolve_f);
  auto* sweep = app.add_subcommand("sweep", "ensembles over a list of noise periods (--periods)");
  const Options sweep_o = add_common(sweep, sweep_f);
  auto* fragment = app.add_subcommand("fragment", "connected components of the basis graph");
  const Options fragment_o = add_common(fragment, fragment_f);
  auto* preset = app.add_subcommand("preset", "run a named figure preset");
  std::string preset_name;
  preset->add_option("name", preset_name, "preset name")->required()->check(CLI::IsMember(dfm::preset_names()));
  const Options preset_o = add_common(preset, preset_f);
  auto* eq10 = app.add_subcommand("check-eq10", "verify the squared three-site term identity");
  auto* list = app.add_subcommand("list-presets", "print the preset names and their configs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : invalid_config;
  }

  try {
    auto setup = [](const Flags& f, const Options& o, dfm::ExperimentConfig base) {
      if (f.threads > 0) dfm::kernels::set_num_threads(f.threads);
      apply_flags(base, f, o);
      return base;
    };
    if (*evolve) {
      auto c = setup(evolve_f, evolve_o, load_base(evolve_f));
      c.sweep_periods.clear();
      return run_evolve_or_sweep(c);
    }
    if (*sweep) {
      auto c = setup(sweep_f, sweep_o, load_base(sweep_f));
      if (c.sweep_periods.empty()) c.sweep_periods = {c.noise.period};
      return run_evolve_or_sweep(c);
    }
    if (*fragment) return run_fragment_cmd(setup(fragment_f, fragment_o, load_base(fragment_f)));
    if (*preset) {
      dfm::ExperimentConfig base = preset_f.config_path.empty()
                                       ? dfm::preset(preset_name, *preset_o.size ? preset_f.size : 0)
                                       : load_base(preset_f);
      return run_evolve_or_sweep(setup(preset_f, preset_o, base));
    }
    if (*eq10) return run_check_eq10();
    if (*list) {
      for (const auto& name : dfm::preset_names())
        std::printf("%s %s\n", name.c_str(), dfm::to_json(dfm::preset(name)).dump().c_str());
      return ok;
    }
  } catch (const dfm::Error& e) {
    std::fprintf(stderr, "dfm: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::bad_alloc&) {
    std::fprintf(stderr, "dfm: out of memory\n");
    return resource_limit;
  }
  return ok;
}
