#include "slowfast/builtins.hpp"
#include "slowfast/measures.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

int list_builtins(bool as_json) {
  if (as_json) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& b : slowfast::builtin_catalog())
      out.push_back({{"name", b.name},
                     {"kind", slowfast::to_string(b.kind)},
                     {"description", b.description},
                     {"defaults", b.defaults},
                     {"needs_profile", b.needs_profile}});
    std::cout << out.dump(2) << "\n";
    return slowfast::kExitOk;
  }
  for (const auto& b : slowfast::builtin_catalog()) {
    std::cout << b.name << " (" << slowfast::to_string(b.kind) << ")\n  " << b.description << "\n  defaults: "
              << b.defaults.dump() << "\n";
    if (b.needs_profile) std::cout << "  requires params.profile: path to a profile.json from normal-form-build\n";
  }
  std::cout << "\nexperiments:";
  for (const auto& e : slowfast::experiment_kinds()) std::cout << " " << e;
  std::cout << "\n";
  return slowfast::kExitOk;
}

int distance(const std::string& a, const std::string& b, bool weights, std::size_t slices, const std::string& reduction,
             std::size_t bootstrap, std::uint64_t seed) {
  try {
    std::ifstream fa(a), fb(b);
    if (!fa) throw slowfast::PreconditionError("cannot open '" + a + "'");
    if (!fb) throw slowfast::PreconditionError("cannot open '" + b + "'");
    const auto mu = slowfast::read_measure_csv(fa, weights);
    const auto nu = slowfast::read_measure_csv(fb, weights);
    slowfast::DistanceOptions opt;
    opt.n_slices = slices;
    opt.bootstrap = bootstrap;
    opt.seed = seed;
    opt.reduction = slowfast::parse_slice_reduction(reduction);
    opt.parallelism = slowfast::default_parallelism();
    const auto r = slowfast::convergence_curve({{0.0, mu}}, nu, opt).front().report;
    std::printf("distance %.17g\nci_half_width %.17g\nmethod %s\nbound_kind %s\n", r.value, r.ci_half_width,
                slowfast::to_string(r.method).c_str(), slowfast::to_string(r.bound_kind).c_str());
    return slowfast::kExitOk;
  } catch (const slowfast::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return slowfast::kExitValidation;
  } catch (const slowfast::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return slowfast::kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Averaging experiments for perturbed integrable stochastic systems"};
  app.set_version_flag("--version", std::string("slowfast ") + slowfast::kVersion);
  app.require_subcommand(1);

  std::string config, out_dir;
  std::size_t threads = 0;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a scenario config");
  run->add_option("config", config, "TOML scenario file")->required();
  run->add_option("-o,--output", out_dir, "Output directory (overrides the config)");
  run->add_option("-t,--threads", threads, "Worker threads (overrides the config and SLOWFAST_THREADS)")
      ->check(CLI::PositiveNumber);
  run->add_flag("-q,--quiet", quiet, "No progress lines");

  bool as_json = false;
  auto* list = app.add_subcommand("list", "List builtin systems and experiment kinds");
  list->add_flag("--json", as_json, "Machine-readable catalog");

  auto* validate = app.add_subcommand("validate", "Check a scenario config without running it");
  validate->add_option("config", config, "TOML scenario file")->required();

  std::string file_a, file_b, reduction = "mean";
  bool weights = false;
  std::size_t slices = slowfast::kDefaultSlices, bootstrap = 20;
  std::uint64_t seed = 0;
  auto* dist = app.add_subcommand("distance", "Bounded-Lipschitz distance between two sample CSV files");
  dist->add_option("a", file_a, "Samples, one per row")->required();
  dist->add_option("b", file_b, "Samples, one per row")->required();
  dist->add_flag("--weights", weights, "Last column holds sample weights");
  dist->add_option("--slices", slices, "Directions of the sliced estimator")->check(CLI::PositiveNumber);
  dist->add_option("--reduction", reduction, "Sliced reduction")->check(CLI::IsMember({"mean", "max"}));
  dist->add_option("--bootstrap", bootstrap, "Bootstrap replicates for the CI");
  dist->add_option("--seed", seed, "Seed for directions and resampling");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : slowfast::kExitValidation;
  }

  if (*list) return list_builtins(as_json);
  if (*validate) return slowfast::validate_config_file(config, std::cout, std::cerr);
  if (*dist) return distance(file_a, file_b, weights, slices, reduction, bootstrap, seed);

  slowfast::RunOptions options;
  if (!out_dir.empty()) options.output_dir = out_dir;
  if (threads > 0) options.threads = threads;
  if (!quiet) options.log = &std::cerr;
  return slowfast::run_config_file(config, options, std::cerr);
}
