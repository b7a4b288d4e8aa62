#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "phasedoa/config.hpp"
#include "phasedoa/data_io.hpp"
#include "phasedoa/estimators.hpp"
#include "phasedoa/experiment.hpp"

namespace phasedoa::cli {
namespace {

double degrees(double radians) { return radians * 180.0 / std::numbers::pi; }

// Everything that feeds the key/value config. Typed flags are kept as text and
// routed through resolve_config so bad values are reported against their key.
struct ConfigSources {
  std::string config_path;
  std::vector<std::string> overrides;
  std::vector<std::pair<std::string, std::optional<std::string>>> flags{
      {"seed", {}},    {"variant", {}}, {"k", {}},          {"noise_var", {}},
      {"n_trials", {}}, {"workers", {}}, {"output_dir", {}}, {"order", {}},
  };

  std::optional<std::string>& flag(std::string_view key) {
    for (auto& [name, value] : flags) {
      if (name == key) return value;
    }
    throw std::logic_error("no flag for key " + std::string(key));
  }
};

void add_config_options(CLI::App* app, ConfigSources& src) {
  app->add_option("-c,--config", src.config_path, "key = value config file");
  app->add_option("--set", src.overrides, "override any config key (key=value), repeatable");
  app->add_option("--seed", src.flag("seed"), "base random seed");
  app->add_option("--variant", src.flag("variant"),
                  "beamforming | prvbem | pavbem_relaxed | pavbem");
  app->add_option("--k", src.flag("k"), "number of sources");
  app->add_option("--noise-var", src.flag("noise_var"), "additive noise variance");
  app->add_option("--trials", src.flag("n_trials"), "trials per sweep cell");
  app->add_option("--workers", src.flag("workers"), "sweep worker threads (0 = all cores)");
  app->add_option("--output-dir", src.flag("output_dir"), "sweep output directory");
  app->add_option("--order", src.flag("order"), "atom update order: energy | index");
}

// Precedence, lowest first: built-in defaults, environment, config file,
// --set, dedicated flags.
KeyValueConfig collect(const ConfigSources& src) {
  KeyValueConfig kv;
  if (const char* w = std::getenv(kWorkersEnv); w != nullptr && *w != '\0') {
    kv.set("workers", w);
  }
  if (!src.config_path.empty()) {
    const KeyValueConfig file = KeyValueConfig::load(src.config_path);
    for (const auto& [key, value] : file.entries()) {
      kv.set(key, value);
    }
  }
  for (const auto& item : src.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("", "--set expects key=value, got '" + item + "'");
    }
    kv.set(item.substr(0, eq), item.substr(eq + 1));
  }
  for (const auto& [key, value] : src.flags) {
    if (value) kv.set(key, *value);
  }
  return kv;
}

std::string keys_footer() {
  std::ostringstream text;
  text << "Config keys (file, --set key=value, or the flags above):\n";
  for (const ConfigKey& key : config_keys()) {
    std::string def = key.default_value.empty() ? "\"\"" : std::string(key.default_value);
    text << "  " << std::left << std::setw(22) << key.name << std::setw(42) << def << key.help
         << '\n';
  }
  text << "Environment:\n  " << kWorkersEnv << "  default for 'workers'\n";
  return text.str();
}

std::map<std::string, std::string> model_metadata(const SweepConfig& cfg) {
  const ModelConfig& m = cfg.model;
  return {
      {"n_sensors", std::to_string(m.n_sensors)},
      {"grid_size", std::to_string(m.grid_size)},
      {"spacing_ratio", format_double(m.spacing_ratio)},
      {"k", std::to_string(m.k)},
      {"noise_var", format_double(m.noise_var)},
      {"phase_noise", m.phase_noise ? "true" : "false"},
      {"seed", std::to_string(m.seed)},
  };
}

struct SimulateArgs {
  std::string observation = "observation.txt";
  std::string truth = "truth.txt";
};

int simulate(const SweepConfig& cfg, const SimulateArgs& args, std::ostream& out) {
  const ModelConfig& m = cfg.model;
  const std::uint64_t child = derive_seed(m.seed, 0, 0, 0);
  Rng rng(child);
  const SteeringDictionary dict = m.dictionary();
  GroundTruth truth = sample_ground_truth(m.prior_for(m.k), m.k, rng);
  if (m.phase_noise) truth.theta = sample_phase_trajectory(m.phase, dict.n_sensors(), rng);
  const Observation obs = synthesize_observation(dict, truth, m.noise_var, rng);

  auto meta = model_metadata(cfg);
  meta["child_seed"] = std::to_string(child);
  write_observation(args.observation, obs.y, truth.theta, meta);
  write_truth(args.truth, truth.z, dict.angles(), meta);

  out << "child_seed " << child << '\n';
  out << "observation " << args.observation << " (" << dict.n_sensors() << " sensors)\n";
  out << "truth " << args.truth << '\n';
  out << "support (deg):";
  for (int i : truth.support) out << ' ' << degrees(dict.angles()[i]);
  out << '\n';
  return kExitOk;
}

struct EstimateArgs {
  std::string input;
  std::string diagnostics;
  std::string phase_dump;
  int top = 0;
};

int estimate_cmd(const SweepConfig& cfg, const EstimateArgs& args, std::ostream& out) {
  const ObservationFile file = read_observation(args.input);
  const ModelConfig& m = cfg.model;
  if (file.y.size() != m.n_sensors) {
    throw std::runtime_error("dimension mismatch: " + args.input + " has " +
                             std::to_string(file.y.size()) + " sensor rows but n_sensors = " +
                             std::to_string(m.n_sensors));
  }
  if (auto it = file.metadata.find("grid_size");
      it != file.metadata.end() && it->second != std::to_string(m.grid_size)) {
    throw std::runtime_error("dimension mismatch: " + args.input + " was simulated with grid_size " +
                             it->second + " but grid_size = " + std::to_string(m.grid_size));
  }

  const SteeringDictionary dict = m.dictionary();
  const BernoulliGaussianPrior prior = m.prior_for(m.k);

  std::ofstream diag;
  if (!args.diagnostics.empty()) {
    diag.open(args.diagnostics, std::ios::app);
    if (!diag) throw std::runtime_error("cannot open diagnostics file " + args.diagnostics);
    diag << "# iteration noise_var sum_spike_prob max_change\n";
  }
  std::ofstream phase_dump;
  if (!args.phase_dump.empty()) {
    phase_dump.open(args.phase_dump);
    if (!phase_dump) throw std::runtime_error("cannot open phase dump file " + args.phase_dump);
    phase_dump << "# iteration sensor theta_mean theta_var\n";
  }
  IterationObserver observer;
  if (diag.is_open() || phase_dump.is_open()) {
    observer = [&](const IterationReport& r) {
      if (diag.is_open()) {
        diag << r.iteration << ' ' << format_double(r.noise_var) << ' '
             << format_double(r.coefficients.spike_prob.sum()) << ' '
             << format_double(r.max_change) << '\n';
      }
      if (phase_dump.is_open()) {
        for (int n = 0; n < r.phase.size(); ++n) {
          phase_dump << r.iteration << ' ' << n + 1 << ' ' << format_double(r.phase.means[n])
                     << ' ' << format_double(r.phase.variances[n]) << '\n';
        }
      }
    };
  }

  const Variant variant = cfg.estimator.variant;
  const DoaEstimate est = estimate(variant, file.y, dict, m.phase, prior, cfg.estimator, observer);

  const int top = args.top > 0 ? std::min(args.top, dict.size()) : std::max(1, m.k);
  const SupportEstimate support = extract_support(est, dict, top);

  out << "variant " << to_string(variant) << '\n';
  if (variant != Variant::beamforming) {
    out << "iterations " << est.iterations_used << (est.converged ? " (converged)" : " (max reached)");
    if (est.warm_start_iterations > 0) out << " after " << est.warm_start_iterations << " warm-start";
    out << '\n';
    out << "noise_var " << format_double(est.final_noise_var) << '\n';
  }
  out << "top-" << top << " angles (deg):";
  for (double a : support.angles) out << ' ' << degrees(a);
  out << "\n# index angle_deg abs_z spike_prob\n";
  for (int i = 0; i < dict.size(); ++i) {
    out << i << ' ' << degrees(dict.angles()[i]) << ' ' << std::abs(est.z_hat[i]) << ' '
        << est.spike_probs[i] << '\n';
  }

  if (diag.is_open() && !diag) throw std::runtime_error("write to " + args.diagnostics + " failed");
  if (phase_dump.is_open() && !phase_dump) {
    throw std::runtime_error("write to " + args.phase_dump + " failed");
  }
  return kExitOk;
}

int sweep(const SweepConfig& cfg, bool quiet, std::ostream& out) {
  CellProgress progress;
  if (!quiet) {
    progress = [&](int k, double noise_var, const std::vector<double>& means,
                   const std::vector<int>& failed) {
      out << "k=" << k << " sigma2=" << noise_var;
      for (std::size_t a = 0; a < means.size(); ++a) {
        out << "  " << to_string(cfg.algorithms[a]) << '=' << std::setprecision(4) << means[a];
        if (failed[a] > 0) out << " (" << failed[a] << " failed)";
      }
      out << std::setprecision(6) << std::endl;
    };
  }
  const SweepResult result = run_sweep(cfg, progress, true);

  for (const SweepTable& table : result.tables) {
    const auto path = cfg.output_dir / dat_filename(cfg, table.k);
    write_dat(table, path);
    out << "\nK=" << table.k << "  -> " << path.string() << '\n';
    out << std::left << std::setw(12) << "sigma2";
    for (Variant v : table.algorithms) out << std::setw(16) << to_string(v);
    out << '\n';
    for (std::size_t r = 0; r < table.noise_grid.size(); ++r) {
      out << std::setw(12) << std::setprecision(4) << table.noise_grid[r];
      for (std::size_t a = 0; a < table.algorithms.size(); ++a) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(4) << table.mean_correlation[r][a];
        if (table.failed[r][a] > 0) cell << " (" << table.failed[r][a] << "f)";
        out << std::setw(16) << cell.str();
      }
      out << '\n';
    }
  }
  out << std::right << std::setprecision(6);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Direction-of-arrival estimation under sensor phase noise"};
  app.name("phasedoa");
  app.require_subcommand(1);
  app.footer(keys_footer());

  ConfigSources src;
  bool quiet = false;

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "draw one (z, theta, y) and write it to files");
  add_config_options(sim, src);
  sim->add_option("--observation", sim_args.observation, "observation file to write");
  sim->add_option("--truth", sim_args.truth, "ground-truth file to write");

  EstimateArgs est_args;
  CLI::App* est = app.add_subcommand("estimate", "run one estimator on an observation file");
  add_config_options(est, src);
  est->add_option("-i,--input", est_args.input, "observation file")->required();
  est->add_option("--diagnostics", est_args.diagnostics,
                  "append per-iteration noise_var and sum of spike probabilities here");
  est->add_option("--phase-dump", est_args.phase_dump,
                  "write the phase posterior (mean, variance per sensor) of every iteration here");
  est->add_option("--top", est_args.top, "number of angles to report (default k)");

  CLI::App* swp = app.add_subcommand("sweep", "Monte Carlo sweep over k_values x noise_grid");
  add_config_options(swp, src);
  swp->add_flag("-q,--quiet", quiet, "no per-cell progress");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  SweepConfig cfg;
  try {
    cfg = resolve_config(collect(src));
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }

  try {
    if (sim->parsed()) return simulate(cfg, sim_args, out);
    if (est->parsed()) return estimate_cmd(cfg, est_args, out);
    return sweep(cfg, quiet, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace phasedoa::cli
