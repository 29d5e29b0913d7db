#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ifsim/config.hpp"
#include "ifsim/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path, std::uint64_t seed, bool seed_set,
            const std::string& crash_path, const std::string& out_dir) {
  ifsim::SimConfig cfg = ifsim::load_experiment_config(config_path);
  if (seed_set) cfg.seed = seed;
  if (!crash_path.empty()) cfg.crash_plan = ifsim::load_crash_schedule(crash_path);
  ifsim::RunResult r = ifsim::run_experiment(cfg);
  ifsim::print_summary(std::cout, r);
  if (!out_dir.empty()) {
    ifsim::write_artifacts(out_dir, r);
    std::cout << "artifacts written to " << out_dir << "/\n";
  }
  return 0;
}

int cmd_compare(const std::string& config_path, const std::string& schemes_csv) {
  ifsim::SimConfig cfg = ifsim::load_experiment_config(config_path);
  std::vector<ifsim::Scheme> schemes;
  std::stringstream ss(schemes_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) schemes.push_back(ifsim::parse_scheme(item));
  }
  if (schemes.empty()) throw ifsim::ConfigError("no schemes given");
  ifsim::compare_schemes(std::cout, cfg, schemes);
  return 0;
}

int cmd_traces() {
  for (const auto& tr : {ifsim::builtin_trace_strong(), ifsim::builtin_trace_weak()}) {
    ifsim::Micros total = 0;
    double avg = 0;
    for (const auto& s : tr.segments) {
      total += s.duration_us;
      avg += s.harvest_w * static_cast<double>(s.duration_us);
    }
    avg /= static_cast<double>(total);
    std::cout << tr.name << ": " << tr.segments.size() << " segment(s), "
              << total / 1000 << " ms, mean harvest " << avg * 1e3 << " mW (repeats)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"intermittent-power runtime simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string crash_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "run one experiment");
  run->add_option("--config", config_path, "experiment config file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
  run->add_option("--crash-schedule", crash_path, "crash schedule file");
  run->add_option("--out", out_dir, "directory for report.json / events.ndjson / progress.csv");

  std::string cmp_config;
  std::string schemes = "ours,sys,log";
  auto* cmp = app.add_subcommand("compare", "run several schemes on one config");
  cmp->add_option("--config", cmp_config, "experiment config file")->required();
  cmp->add_option("--schemes", schemes, "comma-separated scheme list");

  auto* traces = app.add_subcommand("traces", "trace utilities");
  traces->add_subcommand("list", "list builtin power traces");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, seed_opt->count() > 0, crash_path, out_dir);
    if (cmp->parsed()) return cmd_compare(cmp_config, schemes);
    if (traces->parsed()) return cmd_traces();
  } catch (const ifsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
