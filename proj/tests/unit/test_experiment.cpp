#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "dfm/error.hpp"
#include "dfm/experiment.hpp"
#include "dfm/kernels.hpp"

using namespace dfm;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dfm_experiment_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_noisy(const fs::path& out) {
  ExperimentConfig c;
  c.model = make_model(ModelKind::dfm, 6);
  c.initial_state = "ghz";
  c.evolution.t_max = 2.0;
  c.evolution.dt = 0.25;
  c.noise.period = 0.5;
  c.noise.num_samples = 5;
  c.noise.seed = 77;
  c.observables = {"z-profile", "concurrence:3,4", "fidelity", "renyi2:even"};
  c.output_dir = out;
  return c;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string l;
  while (std::getline(ss, l)) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(0.3 + 1e-17)) == 0.3 + 1e-17);
  CHECK(format_period(kInfinitePeriod) == "inf");
  CHECK(format_period(0.5) == "0.5");
  CHECK(parse_period("inf") == kInfinitePeriod);
  CHECK(parse_period("2") == 2.0);
  CHECK_THROWS_AS(parse_period("-1"), Error);
  CHECK_THROWS_AS(parse_period("soon"), Error);
}

TEST_CASE("configs round-trip through JSON") {
  for (const auto& name : preset_names()) {
    const ExperimentConfig c = preset(name);
    CHECK(config_from_json(to_json(c)) == c);
    CHECK(config_from_json(nlohmann::json::parse(to_json(c).dump())) == c);
  }
  ExperimentConfig c = small_noisy("x");
  c.size_range = std::pair{4, 10};
  c.model.coupling = 0.3;
  c.noise.op = KickOperator::project_q;
  CHECK(config_from_json(to_json(c)) == c);
  CHECK(to_json(preset("fig4a"))["sweep_periods"].back() == "inf");
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"model", {{"kind", "ising"}}}}), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"evolution", {{"dt", "fast"}}}}), Error);
}

TEST_CASE("partial configs fall back to defaults") {
  const ExperimentConfig c = config_from_json(nlohmann::json{{"model", {{"kind", "east"}, {"size", 6}}}});
  CHECK(c.model.boundary == Boundary::open);
  CHECK(c.model.num_sites == 6);
  CHECK(c.initial_state == ExperimentConfig{}.initial_state);
}

TEST_CASE("presets") {
  CHECK(preset("fig2a").model.num_sites == 24);
  CHECK(preset("fig2b").initial_state == "single-up@12");
  CHECK(preset("fig2c", 16).initial_state == "double-up@8");
  CHECK(preset("fig2c").evolution.t_max == 40.0);
  CHECK(preset("fig3b").noise.num_samples == 1000);
  CHECK(preset("fig3b").noise.period == 1.0);
  CHECK(preset("fig3c").model.kind == ModelKind::east);
  CHECK(preset("fig3c").model.boundary == Boundary::open);
  CHECK(preset("fig4b").sweep_periods.size() == 6);
  CHECK(preset("fig4b").noise.num_samples == 500);
  CHECK(preset("fig4b").observables == std::vector<std::string>{"renyi2:even"});
  CHECK_THROWS_AS(preset("fig5"), Error);
}

TEST_CASE("initial states and observables") {
  CHECK(make_initial_state("neel-L", 4)[0b0101] == amplitude(1.0));
  CHECK(make_initial_state("neel-R", 4)[0b1010] == amplitude(1.0));
  CHECK(make_initial_state("single-up@3", 4)[0b0100] == amplitude(1.0));
  CHECK(make_initial_state("double-up@2", 4)[0b0110] == amplitude(1.0));
  CHECK(make_initial_state("double-up@2,3", 4)[0b0110] == amplitude(1.0));
  CHECK(make_initial_state("bits:1001", 4)[0b1001] == amplitude(1.0));
  CHECK(make_initial_state("bell", 8) == bell_state(8));
  CHECK_THROWS_AS(make_initial_state("single-up@9", 8), Error);
  CHECK_THROWS_AS(make_initial_state("double-up@8", 8), Error);
  CHECK_THROWS_AS(make_initial_state("double-up@2,4", 8), Error);
  CHECK_THROWS_AS(make_initial_state("bits:101", 4), Error);
  CHECK_THROWS_AS(make_initial_state("warm", 4), Error);

  ExperimentConfig c;
  c.model = make_model(ModelKind::dfm, 8);
  c.observables = {"concurrence", "renyi2:odd", "fidelity:ghz"};
  const ObservableSet o = make_observables(c, bell_state(8));
  CHECK(*o.concurrence_pair == std::pair{4, 5});
  CHECK(*o.renyi_sites == odd_sites(8));
  CHECK(*o.fidelity_reference == ghz_state(8));
  CHECK(o.scalar_names() == std::vector<std::string>{"concurrence", "fidelity", "renyi2"});
  c.observables = {"entropy"};
  CHECK_THROWS_AS(make_observables(c, bell_state(8)), Error);
}

TEST_CASE("evolve output schemas") {
  const fs::path dir = scratch("schema");
  const ExperimentConfig c = small_noisy(dir);
  run_evolve(c);
  const auto z = lines(slurp(dir / "zmap.csv"));
  CHECK(z.front() == "t,site,z");
  CHECK(z.size() == 1 + 9 * 6);
  CHECK(z[1] == "0,1,0");
  const auto s = lines(slurp(dir / "scalars.csv"));
  CHECK(s.front() == "t,name,value,stderr");
  CHECK(s.size() == 1 + 9 * 3);
  CHECK(s[1].starts_with("0,concurrence,"));
  CHECK(s[2].starts_with("0,fidelity,1,0"));
  CHECK(slurp(dir / "scalars.csv").back() == '\n');
  const auto meta = nlohmann::json::parse(slurp(dir / "meta.json"));
  CHECK(config_from_json(meta["config"]) == c);
  CHECK(meta["trajectory_seeds"].size() == 5);
  CHECK(meta["seed_derivation"].get<std::string>().find("splitmix64") != std::string::npos);
  CHECK_FALSE(meta.contains("threads"));
  fs::remove_all(dir);
}

TEST_CASE("outputs are byte-identical across runs, thread counts and a re-run from meta.json") {
  const fs::path a = scratch("det_a"), b = scratch("det_b"), r = scratch("det_rerun");
  const int saved = kernels::num_threads();
  kernels::set_num_threads(1);
  run_evolve(small_noisy(a));
  kernels::set_num_threads(4);
  run_evolve(small_noisy(b));
  kernels::set_num_threads(saved);
  for (const char* f : {"zmap.csv", "scalars.csv"}) CHECK(slurp(a / f) == slurp(b / f));
  ExperimentConfig again = config_from_json(nlohmann::json::parse(slurp(a / "meta.json"))["config"]);
  again.output_dir = r;
  run_evolve(again);
  for (const char* f : {"zmap.csv", "scalars.csv"}) CHECK(slurp(a / f) == slurp(r / f));
  for (const auto& p : {a, b, r}) fs::remove_all(p);
}

TEST_CASE("sweeps") {
  const fs::path dir = scratch("sweep"), single = scratch("sweep_single");
  ExperimentConfig c = small_noisy(dir);
  c.sweep_periods = {0.5, kInfinitePeriod};
  c.observables = {"renyi2:even"};
  run_sweep(c);
  CHECK(fs::exists(dir / "TX_0.5" / "scalars.csv"));
  CHECK(fs::exists(dir / "TX_inf" / "scalars.csv"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  REQUIRE(manifest["points"].size() == 2);
  CHECK(manifest["points"][1]["period"] == "inf");
  CHECK(manifest["points"][0]["seeds"].size() == 5);
  const auto inf_lines = lines(slurp(dir / "TX_inf" / "scalars.csv"));
  for (std::size_t i = 1; i < inf_lines.size(); ++i) CHECK(inf_lines[i].ends_with(",0"));

  // one-point sweep with one sample equals a plain noisy run
  ExperimentConfig one = small_noisy(dir / "one");
  one.noise.num_samples = 1;
  one.sweep_periods = {0.5};
  run_sweep(one);
  ExperimentConfig plain = small_noisy(single);
  plain.noise.num_samples = 1;
  run_evolve(plain);
  CHECK(slurp(dir / "one" / "TX_0.5" / "scalars.csv") == slurp(single / "scalars.csv"));
  CHECK(slurp(dir / "one" / "TX_0.5" / "zmap.csv") == slurp(single / "zmap.csv"));

  // seeds never repeat across points
  const auto p0 = manifest["points"][0]["seeds"];
  ExperimentConfig both = small_noisy(dir / "both");
  both.sweep_periods = {0.5, 1.0};
  run_sweep(both);
  const auto m2 = nlohmann::json::parse(slurp(dir / "both" / "manifest.json"));
  std::set<std::uint64_t> seen;
  for (const auto& p : m2["points"])
    for (const auto& s : p["seeds"]) seen.insert(s.get<std::uint64_t>());
  CHECK(seen.size() == 10);
  fs::remove_all(dir);
  fs::remove_all(single);
}

TEST_CASE("fragment report") {
  const fs::path dir = scratch("fragment");
  ExperimentConfig c;
  c.model = make_model(ModelKind::dfm, 4);
  c.model.boundary = Boundary::open;
  c.output_dir = dir;
  c.size_range = std::pair{4, 7};
  const auto doc = run_fragment(c);
  CHECK(doc["frozen_count"] == 5);
  CHECK(doc["components"].size() == 3);
  CHECK(doc["components"][0]["label"] == "T");
  CHECK(doc["components"][0]["size"] == 5);
  CHECK(doc["scaling"].size() == 4);
  CHECK(doc["truncated_at"].is_null());
  CHECK(nlohmann::json::parse(slurp(dir / "fragment.json")) == doc);
  fs::remove_all(dir);
}
