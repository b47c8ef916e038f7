#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "widedoa/config.hpp"
#include "widedoa/errors.hpp"
#include "widedoa/evaluation.hpp"
#include "widedoa/resample.hpp"
#include "widedoa/wav_io.hpp"

namespace fs = std::filesystem;
using namespace widedoa;

namespace {

enum ExitCode { kOk = 0, kValidation = 2, kIo = 3, kNumerical = 4 };

struct Options {
  std::string config_path;
  std::string preset;
  std::string out_dir = "out";
  std::optional<long long> seed;
  std::optional<double> duration;
  std::vector<std::string> algos;
  std::string input;
  std::optional<int> sources;
  int verbose = 0;
};

RunConfig effective_config(const Options& o) {
  if (o.config_path.empty() && o.preset.empty()) {
    throw ValidationError("either --config or --preset is required");
  }
  RunConfig cfg;
  if (!o.preset.empty()) {
    cfg = preset_config(o.preset);
    if (!o.config_path.empty()) cfg = load_config(o.config_path, cfg);
  } else {
    cfg = load_config(o.config_path);
  }
  if (o.seed) {
    if (*o.seed < 0) throw ValidationError("--seed must be non-negative");
    cfg.scenario.rng_seed = static_cast<std::uint64_t>(*o.seed);
  }
  if (o.duration) cfg.scenario.duration = *o.duration;
  if (!o.algos.empty()) {
    cfg.experiment.algorithms.clear();
    for (const auto& a : o.algos) cfg.experiment.algorithms.push_back(parse_algorithm(a));
  }
  cfg.resolve();
  cfg.validate();
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(dir.string(), "cannot create output directory");
}

// Write to a sibling temp file, then rename over the target.
void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    body(out);
    out.flush();
    if (!out) throw IoError(path.string(), "write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError(path.string(), "cannot rename into place");
  }
  spdlog::info("wrote {}", path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_atomic(path, [&](std::ostream& out) { out << text; });
}

void echo_config(const fs::path& dir, const RunConfig& cfg) {
  write_text(dir / "effective_config.ini", to_config_text(cfg));
}

int cmd_simulate(const Options& o) {
  const RunConfig cfg = effective_config(o);
  const Scenario sc = synthesize_scenario(cfg.scenario);
  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  write_wav((dir / (cfg.scenario.name + ".wav")).string(), sc.signal.samples,
            sc.signal.sample_rate);
  spdlog::info("wrote {}", (dir / (cfg.scenario.name + ".wav")).string());
  write_atomic(dir / (cfg.scenario.name + "_timeline.csv"),
               [&](std::ostream& out) { write_timeline_csv(out, sc.truth); });
  echo_config(dir, cfg);
  return kOk;
}

int cmd_localize(const Options& o) {
  if (o.algos.size() > 1) throw ValidationError("localize takes a single --algo");
  const RunConfig cfg = effective_config(o);
  const Algorithm algo = o.algos.empty() ? Algorithm::kProposedMultiBatch
                                         : parse_algorithm(o.algos.front());
  const int q = o.sources ? *o.sources : static_cast<int>(cfg.scenario.sources.size());

  const WavData wav = read_wav(o.input);
  const int p = cfg.scenario.geometry.num_sensors;
  if (wav.num_channels() != p) {
    throw ValidationError(o.input + ": expected " + std::to_string(p) + " channels, found " +
                          std::to_string(wav.num_channels()));
  }
  MultichannelSignal signal{wav.samples, wav.sample_rate};
  const double rate = cfg.experiment.stft.sample_rate;
  if (wav.sample_rate != rate) {
    spdlog::info("resampling {} from {} Hz to {} Hz", o.input, wav.sample_rate, rate);
    std::vector<std::vector<double>> channels;
    for (int c = 0; c < p; ++c) {
      const RVector row = wav.samples.row(c).transpose();
      channels.push_back(resample({row.data(), static_cast<std::size_t>(row.size())},
                                  wav.sample_rate, rate));
    }
    signal.samples.resize(p, static_cast<Eigen::Index>(channels.front().size()));
    for (int c = 0; c < p; ++c) {
      for (std::size_t n = 0; n < channels[static_cast<std::size_t>(c)].size(); ++n) {
        signal.samples(c, static_cast<Eigen::Index>(n)) = channels[static_cast<std::size_t>(c)][n];
      }
    }
    signal.sample_rate = rate;
  }

  const auto blocks = localize_signal(signal, q, cfg.scenario.geometry, cfg.experiment, algo);
  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  write_atomic(dir / "doa_trace.csv",
               [&](std::ostream& out) { write_doa_trace_csv(out, blocks, q); });
  echo_config(dir, cfg);
  std::size_t flagged = 0;
  for (const auto& b : blocks) flagged += b.flagged ? 1 : 0;
  std::cout << algorithm_name(algo) << ": " << blocks.size() << " blocks, " << flagged
            << " flagged\n";
  return kOk;
}

int cmd_evaluate(const Options& o) {
  const RunConfig cfg = effective_config(o);
  const auto reports = run_experiment(cfg.scenario, cfg.experiment);
  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  write_atomic(dir / "blocks.csv", [&](std::ostream& out) { write_blocks_csv(out, reports); });
  write_atomic(dir / "trace.csv", [&](std::ostream& out) { write_trace_csv(out, reports); });
  write_atomic(dir / "summary.csv", [&](std::ostream& out) { write_summary_csv(out, reports); });
  echo_config(dir, cfg);
  std::cout << format_summary_table(reports);
  return kOk;
}

int cmd_compare(const Options& o) {
  const RunConfig cfg = effective_config(o);
  const auto reports = run_experiment(cfg.scenario, cfg.experiment);
  const auto table = compare_runtime(reports);
  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  write_atomic(dir / "runtime.csv", [&](std::ostream& out) { write_runtime_csv(out, table); });
  echo_config(dir, cfg);
  std::cout << format_runtime_table(table);
  return kOk;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("-c,--config", o.config_path, "INI configuration file");
  sub->add_option("-p,--preset", o.preset, "built-in scenario preset");
  sub->add_option("-o,--out", o.out_dir, "output directory")->capture_default_str();
  sub->add_option("--seed", o.seed, "override the scenario RNG seed");
  sub->add_option("--duration", o.duration, "override the scenario duration in seconds");
  sub->add_flag("-v,--verbose", o.verbose, "more logging (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("widedoa"));

  CLI::App app{"Wideband ESPRIT direction-of-arrival toolkit"};
  Options o;
  bool list_presets = false;
  app.add_flag("--list-presets", list_presets, "print the built-in presets and exit");

  auto* sim = app.add_subcommand("simulate", "synthesize a scenario to WAV plus timeline");
  auto* loc = app.add_subcommand("localize", "block-wise DOA trace of a WAV recording");
  auto* eval = app.add_subcommand("evaluate", "run the algorithms on a scenario and score them");
  auto* cmp = app.add_subcommand("compare", "runtime table of the algorithms on a scenario");
  for (auto* s : {sim, loc, eval, cmp}) add_common(s, o);
  loc->add_option("-i,--input", o.input, "multichannel WAV file")->required();
  loc->add_option("--algo", o.algos, "algorithm name");
  loc->add_option("--sources", o.sources, "number of sources (default: configured sources)");
  for (auto* s : {eval, cmp}) {
    s->add_option("--algo", o.algos, "algorithm names (repeatable, default all)")->delimiter(',');
  }
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }
  if (list_presets) {
    for (const auto& n : preset_names()) std::cout << n << '\n';
    return kOk;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kValidation;
  }

  spdlog::set_level(o.verbose > 0 ? spdlog::level::debug : spdlog::level::info);
  try {
    if (sim->parsed()) return cmd_simulate(o);
    if (loc->parsed()) return cmd_localize(o);
    if (eval->parsed()) return cmd_evaluate(o);
    return cmd_compare(o);
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return kValidation;
  } catch (const DomainError& e) {
    spdlog::error("{}", e.what());
    return kValidation;
  } catch (const NumericalError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kNumerical;
  }
}
