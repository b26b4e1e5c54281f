#include "dfm/experiment.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dfm/error.hpp"
#include "dfm/measures.hpp"
#include "dfm/rng.hpp"

#ifndef DFM_VERSION
#define DFM_VERSION "dev"
#endif

namespace dfm {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int parse_int(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::invalid_argument, "expected an integer for " + what + ", got '" + text + "'");
}

std::vector<int> parse_site_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(item, "site list"));
  return out;
}

std::pair<std::string, std::string> split_once(const std::string& text, char sep) {
  const auto pos = text.find(sep);
  if (pos == std::string::npos) return {text, ""};
  return {text.substr(0, pos), text.substr(pos + 1)};
}

json period_json(double period) {
  if (!std::isfinite(period)) return "inf";
  return period;
}

double period_from_json(const json& j) {
  if (j.is_string()) return parse_period(j.get<std::string>());
  return j.get<double>();
}

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::resource_limit, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::resource_limit, "write failed for " + path.string());
}

std::string zmap_csv(const EnsembleResult& r) {
  std::string out = "t,site,z\n";
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const std::string t = format_double(r.times[k]);
    for (std::size_t i = 0; i < r.z_mean[k].size(); ++i)
      out += t + "," + std::to_string(i + 1) + "," + format_double(r.z_mean[k][i]) + "\n";
  }
  return out;
}

std::string scalars_csv(const EnsembleResult& r) {
  std::string out = "t,name,value,stderr\n";
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const std::string t = format_double(r.times[k]);
    for (const auto& s : r.scalars)
      out += t + "," + s.name + "," + format_double(s.mean[k]) + "," + format_double(s.stderr_[k]) + "\n";
  }
  return out;
}

json seeds_json(const std::vector<std::uint64_t>& seeds) {
  json arr = json::array();
  for (auto s : seeds) arr.push_back(s);
  return arr;
}

ExperimentConfig with_model_defaults(ExperimentConfig c, ModelKind kind, int size) {
  c.model = make_model(kind, size);
  return c;
}

}  // namespace

std::string format_double(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_period(double period) {
  if (!std::isfinite(period)) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", period);
  return buf;
}

double parse_period(const std::string& text) {
  if (text == "inf" || text == "infinity" || text == "∞") return kInfinitePeriod;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && v > 0.0) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::invalid_argument, "invalid noise period '" + text + "'");
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = {{"kind", to_string(c.model.kind)},
                {"size", c.model.num_sites},
                {"bc", to_string(c.model.boundary)},
                {"coupling", c.model.coupling}};
  j["initial_state"] = c.initial_state;
  j["evolution"] = {{"t_max", c.evolution.t_max},
                    {"dt", c.evolution.dt},
                    {"tol", c.evolution.tolerance},
                    {"krylov_dim", c.evolution.krylov_dim}};
  j["noise"] = {{"period", period_json(c.noise.period)},
                {"op", to_string(c.noise.op)},
                {"kick_angle", c.noise.kick_angle},
                {"samples", c.noise.num_samples}};
  j["master_seed"] = c.noise.seed;
  j["observables"] = c.observables;
  j["output_dir"] = c.output_dir.string();
  if (!c.sweep_periods.empty()) {
    json arr = json::array();
    for (double p : c.sweep_periods) arr.push_back(period_json(p));
    j["sweep_periods"] = arr;
  }
  if (c.size_range) j["size_range"] = {c.size_range->first, c.size_range->second};
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig c;
    if (j.contains("model")) {
      const json& m = j.at("model");
      const ModelKind kind = parse_model_kind(value_or<std::string>(m, "kind", "dfm"));
      c.model = make_model(kind, value_or<int>(m, "size", 8));
      if (m.contains("bc")) c.model.boundary = parse_boundary(m.at("bc").get<std::string>());
      c.model.coupling = value_or<double>(m, "coupling", 1.0);
    }
    c.initial_state = value_or<std::string>(j, "initial_state", c.initial_state);
    if (j.contains("evolution")) {
      const json& e = j.at("evolution");
      c.evolution.t_max = value_or<double>(e, "t_max", c.evolution.t_max);
      c.evolution.dt = value_or<double>(e, "dt", c.evolution.dt);
      c.evolution.tolerance = value_or<double>(e, "tol", c.evolution.tolerance);
      c.evolution.krylov_dim = value_or<int>(e, "krylov_dim", c.evolution.krylov_dim);
    }
    if (j.contains("noise")) {
      const json& n = j.at("noise");
      if (n.contains("period")) c.noise.period = period_from_json(n.at("period"));
      if (n.contains("op")) c.noise.op = parse_kick_operator(n.at("op").get<std::string>());
      c.noise.kick_angle = value_or<double>(n, "kick_angle", c.noise.kick_angle);
      c.noise.num_samples = value_or<int>(n, "samples", c.noise.num_samples);
    }
    c.noise.seed = value_or<std::uint64_t>(j, "master_seed", 0);
    if (j.contains("observables")) c.observables = j.at("observables").get<std::vector<std::string>>();
    c.output_dir = value_or<std::string>(j, "output_dir", c.output_dir.string());
    if (j.contains("sweep_periods"))
      for (const json& p : j.at("sweep_periods")) c.sweep_periods.push_back(period_from_json(p));
    if (j.contains("size_range")) {
      const auto r = j.at("size_range").get<std::vector<int>>();
      require(r.size() == 2, "size_range needs two entries");
      c.size_range = std::pair{r[0], r[1]};
    }
    return c;
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("config: ") + e.what());
  }
}

StateVector make_initial_state(const std::string& kind, int n) {
  const auto [name, arg] = split_once(kind, kind.starts_with("bits:") ? ':' : '@');
  if (name == "all-down") return basis_state(n, 0);
  if (name == "neel-L" || name == "neel-R") {
    BasisIndex s = 0;
    for (int i = name == "neel-L" ? 1 : 2; i <= n; i += 2) s |= site_bit(i);
    return basis_state(n, s);
  }
  if (name == "single-up") {
    const int i = parse_int(arg, "single-up site");
    require(i >= 1 && i <= n, "single-up site out of range");
    return basis_state(n, site_bit(i));
  }
  if (name == "double-up") {
    const auto sites = parse_site_list(arg);
    require(sites.size() == 1 || sites.size() == 2, "double-up takes one or two sites");
    const int i = sites[0];
    require(sites.size() == 1 || sites[1] == i + 1, "double-up sites must be adjacent (i,i+1)");
    require(i >= 1 && i + 1 <= n, "double-up site out of range");
    return basis_state(n, site_bit(i) | site_bit(i + 1));
  }
  if (name == "bell") return bell_state(n);
  if (name == "ghz") return ghz_state(n);
  if (name == "bits") {
    const auto config = parse_config(arg);
    return product_state(n, config);
  }
  fail(ErrorKind::invalid_argument, "unknown initial state '" + kind + "'");
}

ObservableSet make_observables(const ExperimentConfig& config, const StateVector& initial) {
  const int n = config.model.num_sites;
  ObservableSet obs;
  for (const std::string& item : config.observables) {
    const auto [name, arg] = split_once(item, ':');
    if (name == "z-profile" || name == "z") {
      obs.z_profile = true;
    } else if (name == "concurrence") {
      if (arg.empty()) {
        obs.concurrence_pair = std::pair{n / 2, n / 2 + 1};
      } else {
        const auto sites = parse_site_list(arg);
        require(sites.size() == 2, "concurrence takes exactly two sites");
        obs.concurrence_pair = std::pair{sites[0], sites[1]};
      }
    } else if (name == "fidelity") {
      obs.fidelity_reference = arg.empty() ? initial : make_initial_state(arg, n);
    } else if (name == "renyi2") {
      if (arg.empty() || arg == "even") obs.renyi_sites = even_sites(n);
      else if (arg == "odd") obs.renyi_sites = odd_sites(n);
      else obs.renyi_sites = parse_site_list(arg);
    } else {
      fail(ErrorKind::invalid_argument, "unknown observable '" + item + "'");
    }
  }
  return obs;
}

std::vector<std::string> preset_names() {
  return {"fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c", "fig3d", "fig3e", "fig4a", "fig4b"};
}

ExperimentConfig preset(const std::string& name, int size) {
  ExperimentConfig c;
  c.output_dir = name;
  c.evolution.dt = 0.05;
  if (name.starts_with("fig2")) {
    const int n = size > 0 ? size : 24;
    c = with_model_defaults(c, ModelKind::dfm, n);
    c.observables = {"z-profile"};
    c.evolution.t_max = 20.0;
    if (name == "fig2a") c.initial_state = "neel-R";
    else if (name == "fig2b") c.initial_state = "single-up@" + std::to_string(n / 2);
    else if (name == "fig2c") {
      c.initial_state = "double-up@" + std::to_string(n / 2);
      c.evolution.t_max = 40.0;
    } else fail(ErrorKind::invalid_argument, "unknown preset '" + name + "'");
    return c;
  }
  c.evolution.t_max = 100.0;
  if (name.starts_with("fig3")) {
    c.initial_state = "bell";
    c.observables = {"concurrence"};
    if (name == "fig3a") c = with_model_defaults(c, ModelKind::dfm, size > 0 ? size : 8);
    else if (name == "fig3b") {
      c = with_model_defaults(c, ModelKind::dfm, size > 0 ? size : 8);
      c.noise.period = 1.0;
      c.noise.num_samples = 1000;
    } else if (name == "fig3c") c = with_model_defaults(c, ModelKind::east, size > 0 ? size : 8);
    else if (name == "fig3d") c = with_model_defaults(c, ModelKind::pxp, size > 0 ? size : 8);
    else if (name == "fig3e") c = with_model_defaults(c, ModelKind::heisenberg, size > 0 ? size : 8);
    else fail(ErrorKind::invalid_argument, "unknown preset '" + name + "'");
    return c;
  }
  if (name == "fig4a" || name == "fig4b") {
    c = with_model_defaults(c, ModelKind::dfm, size > 0 ? size : 8);
    c.initial_state = "ghz";
    c.observables = {name == "fig4a" ? "fidelity" : "renyi2:even"};
    c.noise.num_samples = 500;
    c.sweep_periods = {0.5, 1.0, 2.0, 4.0, 8.0, kInfinitePeriod};
    return c;
  }
  fail(ErrorKind::invalid_argument, "unknown preset '" + name + "'");
}

EnsembleResult run_evolve(const ExperimentConfig& config, std::uint64_t first_index) {
  validate(config.model);
  validate(config.evolution);
  validate(config.noise, config.model.num_sites);
  const StateVector initial = make_initial_state(config.initial_state, config.model.num_sites);
  const ObservableSet obs = make_observables(config, initial);

  EnsembleResult r =
      ensemble_average(initial, config.model, config.evolution, config.noise, obs, first_index);

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) fail(ErrorKind::resource_limit, "cannot create " + config.output_dir.string() + ": " + ec.message());
  json files = json::array();
  if (obs.z_profile) {
    write_file(config.output_dir / "zmap.csv", zmap_csv(r));
    files.push_back("zmap.csv");
  }
  if (!r.scalars.empty()) {
    write_file(config.output_dir / "scalars.csv", scalars_csv(r));
    files.push_back("scalars.csv");
  }
  json meta;
  meta["config"] = to_json(config);
  meta["code_version"] = DFM_VERSION;
  meta["seed_derivation"] = kSeedDerivation;
  meta["first_trajectory_index"] = first_index;
  meta["trajectory_seeds"] = config.noise.active() ? seeds_json(r.seeds) : json::array();
  meta["total_kicks"] = r.total_kicks;
  meta["files"] = files;
  write_file(config.output_dir / "meta.json", meta.dump(2) + "\n");
  return r;
}

std::vector<EnsembleResult> run_sweep(const ExperimentConfig& config) {
  require(!config.sweep_periods.empty(), "sweep needs at least one period");
  std::vector<EnsembleResult> results;
  json points = json::array();
  std::uint64_t next_index = 0;
  for (double period : config.sweep_periods) {
    ExperimentConfig point = config;
    point.sweep_periods.clear();
    point.noise.period = period;
    const std::string dir = "TX_" + format_period(period);
    point.output_dir = config.output_dir / dir;
    results.push_back(run_evolve(point, next_index));
    points.push_back({{"period", period_json(period)},
                      {"dir", dir},
                      {"samples", point.noise.num_samples},
                      {"first_trajectory_index", next_index},
                      {"seeds", point.noise.active() ? seeds_json(results.back().seeds) : json::array()}});
    next_index += static_cast<std::uint64_t>(point.noise.num_samples);
  }
  json manifest;
  manifest["config"] = to_json(config);
  manifest["code_version"] = DFM_VERSION;
  manifest["seed_derivation"] = kSeedDerivation;
  manifest["points"] = points;
  write_file(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
  return results;
}

json run_fragment(const ExperimentConfig& config) {
  validate(config.model);
  const ModelSpec& spec = config.model;
  const int n = spec.num_sites;
  const BasisGraph graph(spec);
  const SubspaceReport report = components(graph);

  json doc;
  doc["model"] = to_json(config)["model"];
  doc["code_version"] = DFM_VERSION;
  doc["basis_convention"] = "site i -> bit i-1, up = 1; bitstrings list site 1 first";
  json comps = json::array();
  for (const Component& c : report.components) {
    json item = {{"label", to_string(c.label)},
                 {"size", c.size},
                 {"representative", format_config(c.representative, n)},
                 {"by_hamming_weight", c.by_hamming_weight}};
    if (n % 2 == 0) item["representative_groups"] = format_group_sites(c.representative, n);
    comps.push_back(item);
  }
  doc["components"] = comps;
  doc["dynamic_count"] = report.dynamic_count();
  doc["frozen_count"] = report.frozen_count;
  json frozen = json::array();
  for (BasisIndex s = 0; s < graph.num_vertices() && frozen.size() < 64; ++s)
    if (report.component_of[s] == SubspaceReport::kFrozen) frozen.push_back(format_config(s, n));
  doc["frozen_states"] = frozen;
  if (spec.kind == ModelKind::dfm && n % 2 == 0) {
    std::size_t disagreements = 0;
    for (BasisIndex s = 0; s < graph.num_vertices(); ++s) {
      const SubspaceLabel bfs = report.label_of(s);
      const SubspaceLabel stat = static_label(s, graph.hamiltonian());
      // The static predicate only distinguishes T from everything else.
      const bool agree = bfs == stat || (stat == SubspaceLabel::thermal && bfs == SubspaceLabel::other);
      if (!agree) ++disagreements;
    }
    doc["static_predicate_disagreements"] = disagreements;
  }
  if (config.size_range) {
    std::vector<int> sizes;
    for (int l = config.size_range->first; l <= config.size_range->second; ++l)
      if (spec.kind != ModelKind::dfm || spec.boundary == Boundary::open || l % 2 == 0) sizes.push_back(l);
    json rows = json::array();
    ScalingTable table;
    for (int l : sizes) {
      try {
        ModelSpec s = spec;
        s.num_sites = l;
        const SubspaceReport r = components(BasisGraph(s));
        ScalingRow row{l, r.dynamic_count(), r.frozen_count, {}};
        for (const auto& c : r.components)
          if (c.size > 1) row.sizes.emplace_back(c.label, c.size);
        table.rows.push_back(row);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::resource_limit) throw;
        table.truncated_at = l;
        break;
      }
    }
    for (const ScalingRow& row : table.rows) {
      json sizes_json = json::array();
      for (const auto& [label, size] : row.sizes) sizes_json.push_back({{"label", to_string(label)}, {"size", size}});
      rows.push_back({{"size", row.num_sites},
                      {"dynamic_count", row.dynamic_count},
                      {"frozen_count", row.frozen_count},
                      {"components", sizes_json}});
    }
    doc["scaling"] = rows;
    doc["truncated_at"] = table.truncated_at ? json(*table.truncated_at) : json(nullptr);
  }
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) fail(ErrorKind::resource_limit, "cannot create " + config.output_dir.string());
  write_file(config.output_dir / "fragment.json", doc.dump(2) + "\n");
  return doc;
}

}  // namespace dfm
