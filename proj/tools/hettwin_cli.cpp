#include "hettwin/experiment.hpp"
#include "hettwin/hetnet/trace.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

int log_level() {
  const char* env = std::getenv("HETTWIN_LOG");
  if (!env) return 0;
  const std::string v(env);
  if (v == "debug" || v == "2") return 2;
  if (v == "info" || v == "1") return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HetNet hierarchical digital-twin experiment runner"};

  std::string scenario_path;
  std::vector<std::string> variant_names;
  std::string seed_spec = "1";
  std::string sweep_spec;
  std::string out_dir = "out";
  int workers = 1;
  bool validate_only = false;
  bool list_attributes = false;

  app.add_option("--scenario", scenario_path, "Scenario config file");
  app.add_option("--variant", variant_names,
                 "Pipeline variant: hierarchical, hierarchical_nosync, all_inclusive "
                 "(repeatable)");
  app.add_option("--seeds", seed_spec, "Seed list: 1..5 or 1,2,3");
  app.add_option("--sweep", sweep_spec, "Sweep axis, e.g. users=25,50,100");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--workers", workers, "Worker pool size for sweep points");
  app.add_flag("--validate", validate_only, "Validate the scenario config and exit");
  app.add_flag("--list-attributes", list_attributes,
               "Print the attribute names with their default levels");

  CLI11_PARSE(app, argc, argv);

  if (list_attributes) {
    for (const auto& [name, level] : hettwin::default_attribute_levels())
      std::cout << name << " " << level << "\n";
    return 0;
  }

  if (scenario_path.empty()) {
    std::cerr << "error: --scenario is required\n";
    return 2;
  }

  hettwin::Config cfg;
  try {
    cfg = hettwin::Config::parse_file(scenario_path);
  } catch (const hettwin::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  const auto issues = hettwin::validate_scenario_config(cfg);
  if (!issues.empty()) {
    for (const auto& msg : issues) std::cerr << scenario_path << ": " << msg << "\n";
    return 2;
  }
  if (validate_only) {
    std::cout << scenario_path << ": OK\n";
    return 0;
  }

  hettwin::ExperimentPlan plan;
  plan.scenario_path = scenario_path;
  plan.out_dir = out_dir;
  plan.workers = workers;
  try {
    plan.seeds = hettwin::parse_seed_spec(seed_spec);
    if (plan.seeds.empty()) throw std::invalid_argument("no seeds given");
    plan.variants.clear();
    if (variant_names.empty()) variant_names.push_back("hierarchical");
    for (const auto& name : variant_names)
      plan.variants.push_back(hettwin::variant_from_name(name));
    if (!sweep_spec.empty()) {
      const auto eq = sweep_spec.find('=');
      if (eq == std::string::npos || sweep_spec.substr(0, eq) != "users")
        throw std::invalid_argument("unsupported sweep axis: " + sweep_spec);
      for (std::uint64_t v : hettwin::parse_seed_spec(sweep_spec.substr(eq + 1)))
        plan.user_sweep.push_back(static_cast<int>(v));
      for (int v : plan.user_sweep)
        if (v <= 0) throw std::invalid_argument("sweep values must be positive");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (log_level() >= 1)
      std::cerr << "running " << plan.variants.size() << " variant(s) x "
                << plan.seeds.size() << " seed(s)\n";
    const hettwin::ResultTable table = hettwin::run_experiment(plan, cfg);
    std::cout << "wrote " << table.rows.size() << " rows to " << out_dir
              << "/results.csv\n";
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
