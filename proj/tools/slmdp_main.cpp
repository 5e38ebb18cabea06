#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slmdp/harness.hpp"

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

void print_run_summary(const slmdp::RunResult& result) {
  for (const slmdp::SeedResult& seed : result.seeds) {
    std::cout << "seed " << seed.seed << ": episodes=" << seed.episodes.size()
              << " violations=" << seed.violations_total;
    if (!seed.cum_regret.empty()) std::cout << " regret=" << seed.cum_regret.back();
    if (seed.e1_checked) std::cout << (seed.e1_all ? " e1=held" : " e1=failed");
    std::cout << '\n';
  }
  if (result.spec.kind == slmdp::SpecKind::gridworld) {
    const slmdp::FrozenLakeReport report = slmdp::frozen_lake_report(result.seeds);
    std::cout << "success rate per unit:";
    for (double s : report.success_rate) std::cout << ' ' << s;
    std::cout << "\naverage return per unit:";
    for (double r : report.avg_return) std::cout << ' ' << r;
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe exploration simulator for finite-horizon linear MDPs"};
  app.require_subcommand(1);

  std::string config_path, agent_override, seeds_override, out_override;
  CLI::App* run = app.add_subcommand("run", "Run one experiment configuration");
  run->add_option("--config", config_path, "JSON run configuration")->required();
  run->add_option("--agent", agent_override, "Override the configured agent");
  run->add_option("--seeds", seeds_override, "Override seeds (comma separated)");
  run->add_option("--out", out_override, "Override the output directory");

  std::string configs_csv, compare_out = "compare_out";
  CLI::App* cmp = app.add_subcommand("compare", "Run configs against a shared environment");
  cmp->add_option("--configs", configs_csv, "Comma-separated config paths")->required();
  cmp->add_option("--out", compare_out, "Output directory");

  std::string spec_path;
  CLI::App* val = app.add_subcommand("validate", "Run the model invariant suite on a spec file");
  val->add_option("--spec", spec_path, "Serialized model JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      slmdp::RunConfig cfg = slmdp::load_run_config(config_path);
      if (!agent_override.empty()) cfg.agent = agent_override;
      if (!out_override.empty()) cfg.output_dir = out_override;
      if (!seeds_override.empty()) {
        cfg.seeds.clear();
        for (const std::string& s : split(seeds_override, ',')) cfg.seeds.push_back(std::stoull(s));
      }
      const slmdp::RunResult result = slmdp::run_experiment(cfg);
      if (!cfg.output_dir.empty()) {
        slmdp::write_outputs(result, cfg.output_dir);
        std::cout << "outputs written to " << cfg.output_dir << '\n';
      }
      print_run_summary(result);
      return 0;
    }
    if (cmp->parsed()) {
      std::vector<slmdp::RunConfig> configs;
      for (const std::string& path : split(configs_csv, ',')) {
        configs.push_back(slmdp::load_run_config(path));
      }
      std::vector<slmdp::RunResult> results;
      const auto rows = slmdp::compare_experiments(configs, &results);
      std::filesystem::create_directories(compare_out);
      const std::string csv = (std::filesystem::path(compare_out) / "compare.csv").string();
      slmdp::write_compare_csv(rows, csv);
      for (const slmdp::RunResult& result : results) {
        if (!result.config.output_dir.empty()) slmdp::write_outputs(result, result.config.output_dir);
      }
      std::cout << "comparison written to " << csv << '\n';
      return 0;
    }
    const slmdp::LinearMdpSpec spec = slmdp::load_spec(spec_path);
    const slmdp::ValidationReport report = slmdp::validate_spec(spec);
    for (const std::string& note : report.notes) std::cout << "note: " << note << '\n';
    for (const std::string& failure : report.failures) std::cout << "FAIL: " << failure << '\n';
    if (!report.ok()) {
      std::cout << report.failures.size() << " invariant failure(s)\n";
      return 3;
    }
    std::cout << "all invariants hold\n";
    return 0;
  } catch (const slmdp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
