#include "widedoa/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "widedoa/errors.hpp"

namespace widedoa {
namespace {

struct NamedAlgorithm {
  Algorithm algo;
  std::string_view name;
};

constexpr NamedAlgorithm kAlgorithms[] = {
    {Algorithm::kProposedSingle, "proposed-single"},
    {Algorithm::kProposedMultiBatch, "proposed-multi-batch"},
    {Algorithm::kProposedMultiIterative, "proposed-multi-iterative"},
    {Algorithm::kHistEsprit, "hist-esprit"},
    {Algorithm::kCss, "css"},
};

std::string num(double x) { return fmt::format("{:.17g}", x); }

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += num(v[i]);
  }
  return s;
}

std::vector<double> split_numbers(const std::string& field) {
  std::vector<double> out;
  if (field.empty()) return out;
  std::stringstream ss(field);
  std::string item;
  while (std::getline(ss, item, ';')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("malformed number '" + item + "' in block report");
    }
  }
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Localization from_solution(const EspritSolution& sol) {
  return {sol.doas_deg, !sol.reliable()};
}

Localization from_peaks(const PeakEstimate& p) { return {p.doas_deg, p.insufficient_peaks}; }

int max_sources(std::span<const TruthSegment> truth) {
  std::size_t q = 0;
  for (const auto& seg : truth) q = std::max(q, seg.doas_deg.size());
  return static_cast<int>(q);
}

void fill_summary(RunReport& r) {
  const ErrorSummary s = summarize_errors(r.blocks);
  r.mae = s.mae;
  r.sde = s.sde;
  r.total_time = 0.0;
  for (const auto& b : r.blocks) r.total_time += b.wall_time;
}

}  // namespace

std::string_view algorithm_name(Algorithm algo) {
  for (const auto& a : kAlgorithms) {
    if (a.algo == algo) return a.name;
  }
  throw DomainError("unknown algorithm");
}

Algorithm parse_algorithm(std::string_view name) {
  for (const auto& a : kAlgorithms) {
    if (a.name == name) return a.algo;
  }
  std::string valid;
  for (const auto& a : kAlgorithms) {
    if (!valid.empty()) valid += ", ";
    valid += a.name;
  }
  throw ValidationError("unknown algorithm '" + std::string(name) + "'; valid names: " + valid);
}

std::vector<Algorithm> all_algorithms() {
  std::vector<Algorithm> out;
  for (const auto& a : kAlgorithms) out.push_back(a.algo);
  return out;
}

Localization localize_block(Algorithm algo, std::span<const BinCovariance> covs,
                            int num_sources, const ArrayGeometry& geom,
                            const LocalizerConfig& cfg) {
  switch (algo) {
    case Algorithm::kProposedSingle:
      if (num_sources != 1) throw DomainError("proposed-single handles exactly one source");
      return from_solution(wideband_esprit_single(covs, geom, 0.0, cfg.solver,
                                                  cfg.accumulation.rotation));
    case Algorithm::kProposedMultiBatch:
      return from_solution(wideband_esprit_multi(covs, num_sources, geom, AccumulationMode::kBatch,
                                                 cfg.solver, cfg.accumulation));
    case Algorithm::kProposedMultiIterative:
      return from_solution(wideband_esprit_multi(covs, num_sources, geom,
                                                 AccumulationMode::kIterative, cfg.solver,
                                                 cfg.accumulation));
    case Algorithm::kHistEsprit:
      return from_peaks(hist_esprit(covs, num_sources, geom, cfg.histogram, cfg.solver));
    case Algorithm::kCss:
      return from_peaks(css_localize(covs, num_sources, geom, cfg.css));
  }
  throw DomainError("unknown algorithm");
}

void ExperimentConfig::validate() const {
  stft.validate();
  if (!(band_low >= 0.0) || !(band_high > band_low)) {
    throw ValidationError("analysis band must satisfy 0 <= low < high");
  }
  if (block_frames < 1) throw ValidationError("block length must be at least one frame");
  if (block_hop < 1) throw ValidationError("block hop must be at least one frame");
  if (algorithms.empty()) throw ValidationError("no algorithm selected");
  localizer.histogram.validate();
  localizer.css.validate();
}

BlockScore score_block(std::span<const double> estimates, std::span<const double> truth) {
  if (estimates.size() != truth.size()) {
    throw DomainError("estimate and truth counts differ (" + std::to_string(estimates.size()) +
                      " vs " + std::to_string(truth.size()) + ")");
  }
  const std::size_t q = truth.size();
  std::vector<std::size_t> perm(q);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < q; ++i) cost += std::abs(estimates[perm[i]] - truth[i]);
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  BlockScore s;
  for (std::size_t i = 0; i < q; ++i) {
    const double e = estimates[best[i]];
    s.matched_estimates.push_back(e);
    s.signed_errors.push_back(e - truth[i]);
    s.abs_errors.push_back(std::abs(e - truth[i]));
  }
  return s;
}

ErrorSummary summarize_errors(std::span<const BlockResult> blocks) {
  ErrorSummary s;
  double abs_sum = 0.0;
  double signed_sum = 0.0;
  for (const auto& b : blocks) {
    for (double e : b.per_source_error) abs_sum += e;
    for (double e : b.signed_error) signed_sum += e;
    s.count += static_cast<int>(b.per_source_error.size());
  }
  if (s.count == 0) {
    s.mae = s.sde = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mae = abs_sum / s.count;
  const double mean = signed_sum / s.count;
  double var = 0.0;
  for (const auto& b : blocks) {
    for (double e : b.signed_error) var += (e - mean) * (e - mean);
  }
  s.sde = std::sqrt(var / s.count);
  return s;
}

std::vector<BlockSpan> plan_blocks(const MultichannelSpectrum& spec, int block_frames,
                                   int block_hop) {
  if (block_frames < 1 || block_hop < 1) throw DomainError("block length and hop must be positive");
  std::vector<BlockSpan> out;
  for (int first = 0; first + block_frames <= spec.num_frames(); first += block_hop) {
    const int last = first + block_frames;
    out.push_back({static_cast<int>(out.size()), first, last, spec.frame_start_time(first),
                   spec.frame_end_time(last - 1)});
  }
  return out;
}

std::optional<std::vector<double>> truth_for_span(std::span<const TruthSegment> truth,
                                                  double t_start, double t_end) {
  std::optional<std::vector<double>> doas;
  for (const auto& seg : truth) {
    if (!seg.interval.overlaps(t_start, t_end)) continue;
    if (!doas) {
      doas = seg.doas_deg;
    } else if (*doas != seg.doas_deg) {
      return std::nullopt;
    }
  }
  if (!doas || doas->empty()) return std::nullopt;
  return doas;
}

std::vector<BinCovariance> block_covariances(const MultichannelSpectrum& spec,
                                             const BlockSpan& block, const ArrayGeometry& geom,
                                             double band_low, double band_high) {
  const double high = std::min(band_high, lowest_aliasing_frequency(geom));
  return estimate_bin_covariances_in_band(spec, block.first_frame, block.last_frame, band_low,
                                          high);
}

std::vector<RunReport> run_experiment(const Scenario& scenario, const std::string& name,
                                      const ArrayGeometry& geom, const ExperimentConfig& cfg) {
  cfg.validate();
  geom.validate();
  if (scenario.signal.num_channels() != geom.num_sensors) {
    throw ValidationError("signal has " + std::to_string(scenario.signal.num_channels()) +
                          " channels, array has " + std::to_string(geom.num_sensors));
  }

  std::vector<Algorithm> algos = cfg.algorithms;
  if (max_sources(scenario.truth) > 1) {
    const auto it = std::find(algos.begin(), algos.end(), Algorithm::kProposedSingle);
    if (it != algos.end()) {
      spdlog::info("scenario '{}' has several sources; proposed-single not run", name);
      algos.erase(it);
    }
    if (algos.empty()) throw ValidationError("proposed-single handles exactly one source");
  }

  const MultichannelSpectrum spec = stft(scenario.signal, cfg.stft);
  const BandLimit band = limit_band_to_aliasing(geom, cfg.band_low, cfg.band_high);
  const std::vector<BlockSpan> blocks = plan_blocks(spec, cfg.block_frames, cfg.block_hop);

  std::vector<RunReport> reports;
  for (Algorithm a : algos) {
    RunReport r;
    r.algorithm = std::string(algorithm_name(a));
    r.scenario = name;
    reports.push_back(std::move(r));
  }

  for (const auto& block : blocks) {
    const auto truth = truth_for_span(scenario.truth, block.t_start, block.t_end);
    if (!truth) {
      for (auto& r : reports) ++r.blocks_excluded;
      continue;
    }
    const auto covs = estimate_bin_covariances_in_band(spec, block.first_frame, block.last_frame,
                                                       band.f_low, band.f_high);
    const int q = static_cast<int>(truth->size());
    for (std::size_t k = 0; k < algos.size(); ++k) {
      Localization loc;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        loc = localize_block(algos[k], covs, q, geom, cfg.localizer);
      } catch (const NumericalError& e) {
        spdlog::warn("{}: block {} failed: {}", algorithm_name(algos[k]), block.block_index,
                     e.what());
        loc = {{}, true};
      }
      const auto t1 = std::chrono::steady_clock::now();

      BlockResult res;
      res.block_index = block.block_index;
      res.t_start = block.t_start;
      res.t_end = block.t_end;
      res.estimates = loc.doas_deg;
      res.truth = *truth;
      res.flagged = loc.flagged;
      res.wall_time = std::chrono::duration<double>(t1 - t0).count();
      std::vector<double> padded = loc.doas_deg;
      if (static_cast<int>(padded.size()) < q) {
        padded.resize(static_cast<std::size_t>(q), 0.0);
        res.flagged = true;
      }
      const BlockScore score = score_block(padded, *truth);
      res.per_source_error = score.abs_errors;
      res.signed_error = score.signed_errors;
      reports[k].blocks.push_back(std::move(res));
    }
  }
  for (auto& r : reports) fill_summary(r);
  return reports;
}

std::vector<RunReport> run_experiment(const ScenarioConfig& scenario,
                                      const ExperimentConfig& cfg) {
  scenario.validate();
  if (scenario.sample_rate != cfg.stft.sample_rate) {
    throw ValidationError("scenario and STFT sample rates differ");
  }
  return run_experiment(synthesize_scenario(scenario), scenario.name, scenario.geometry, cfg);
}

std::vector<BlockLocalization> localize_signal(const MultichannelSignal& signal, int num_sources,
                                               const ArrayGeometry& geom,
                                               const ExperimentConfig& cfg, Algorithm algo) {
  cfg.validate();
  geom.validate();
  if (num_sources < 1 || num_sources >= geom.num_sensors) {
    throw ValidationError("number of sources must be between 1 and " +
                          std::to_string(geom.num_sensors - 1));
  }
  if (signal.num_channels() != geom.num_sensors) {
    throw ValidationError("expected " + std::to_string(geom.num_sensors) + " channels, found " +
                          std::to_string(signal.num_channels()));
  }
  if (signal.sample_rate != cfg.stft.sample_rate) {
    throw ValidationError("signal and STFT sample rates differ");
  }
  const MultichannelSpectrum spec = stft(signal, cfg.stft);
  const BandLimit band = limit_band_to_aliasing(geom, cfg.band_low, cfg.band_high);
  std::vector<BlockLocalization> out;
  for (const auto& block : plan_blocks(spec, cfg.block_frames, cfg.block_hop)) {
    const auto covs = estimate_bin_covariances_in_band(spec, block.first_frame, block.last_frame,
                                                       band.f_low, band.f_high);
    Localization loc;
    try {
      loc = localize_block(algo, covs, num_sources, geom, cfg.localizer);
    } catch (const NumericalError& e) {
      spdlog::warn("block {} failed: {}", block.block_index, e.what());
      loc = {{}, true};
    }
    if (static_cast<int>(loc.doas_deg.size()) < num_sources) loc.flagged = true;
    out.push_back({block.block_index, block.t_start, block.t_end, loc.doas_deg, loc.flagged});
  }
  return out;
}

RuntimeTable compare_runtime(std::span<const RunReport> reports) {
  if (reports.empty()) throw DomainError("no reports to compare");
  for (const auto& r : reports) {
    if (r.blocks.size() != reports.front().blocks.size()) {
      throw DomainError("reports cover different numbers of blocks");
    }
    for (std::size_t i = 0; i < r.blocks.size(); ++i) {
      if (r.blocks[i].block_index != reports.front().blocks[i].block_index) {
        throw DomainError("reports cover different block sets");
      }
    }
  }
  const auto base = std::find_if(reports.begin(), reports.end(),
                                 [](const RunReport& r) { return r.algorithm == "hist-esprit"; });
  const RunReport& baseline = base != reports.end() ? *base : reports.front();
  RuntimeTable table;
  table.baseline = baseline.algorithm;
  for (const auto& r : reports) {
    const double pct = baseline.total_time > 0.0
                           ? 100.0 * (baseline.total_time - r.total_time) / baseline.total_time
                           : 0.0;
    table.rows.push_back({r.algorithm, r.total_time, pct});
  }
  return table;
}

void write_blocks_csv(std::ostream& out, std::span<const RunReport> reports) {
  out << "algorithm,scenario,block,t_start,t_end,num_sources,flagged,estimates_deg,truth_deg,"
         "abs_error_deg,signed_error_deg\n";
  for (const auto& r : reports) {
    for (const auto& b : r.blocks) {
      out << r.algorithm << ',' << r.scenario << ',' << b.block_index << ',' << num(b.t_start)
          << ',' << num(b.t_end) << ',' << b.truth.size() << ',' << (b.flagged ? 1 : 0) << ','
          << join(b.estimates) << ',' << join(b.truth) << ',' << join(b.per_source_error) << ','
          << join(b.signed_error) << '\n';
    }
  }
}

void write_trace_csv(std::ostream& out, std::span<const RunReport> reports) {
  out << "algorithm,block,t_mid,source,truth_deg,estimate_deg,abs_error_deg\n";
  for (const auto& r : reports) {
    for (const auto& b : r.blocks) {
      const double t_mid = 0.5 * (b.t_start + b.t_end);
      for (std::size_t i = 0; i < b.truth.size(); ++i) {
        out << r.algorithm << ',' << b.block_index << ',' << num(t_mid) << ',' << i << ','
            << num(b.truth[i]) << ',' << num(b.truth[i] + b.signed_error[i]) << ','
            << num(b.per_source_error[i]) << '\n';
      }
    }
  }
}

void write_summary_csv(std::ostream& out, std::span<const RunReport> reports) {
  out << "scenario,algorithm,mae_deg,sde_deg,errors,blocks_scored,blocks_excluded,"
         "blocks_flagged\n";
  for (const auto& r : reports) {
    const ErrorSummary s = summarize_errors(r.blocks);
    const auto flagged =
        std::count_if(r.blocks.begin(), r.blocks.end(), [](const BlockResult& b) { return b.flagged; });
    out << r.scenario << ',' << r.algorithm << ',' << num(r.mae) << ',' << num(r.sde) << ','
        << s.count << ',' << r.blocks.size() << ',' << r.blocks_excluded << ',' << flagged
        << '\n';
  }
}

void write_runtime_csv(std::ostream& out, const RuntimeTable& table) {
  out << "algorithm,total_time_s,faster_than_" << table.baseline << "_percent\n";
  for (const auto& row : table.rows) {
    out << row.algorithm << ',' << num(row.total_time) << ',' << num(row.faster_percent) << '\n';
  }
}

void write_doa_trace_csv(std::ostream& out, std::span<const BlockLocalization> blocks,
                         int num_sources) {
  out << "block,t_start,t_end,flagged";
  for (int q = 1; q <= num_sources; ++q) out << ",doa_" << q;
  out << '\n';
  for (const auto& b : blocks) {
    out << b.block_index << ',' << num(b.t_start) << ',' << num(b.t_end) << ','
        << (b.flagged ? 1 : 0);
    for (int q = 0; q < num_sources; ++q) {
      out << ',';
      if (q < static_cast<int>(b.doas_deg.size())) out << num(b.doas_deg[static_cast<std::size_t>(q)]);
    }
    out << '\n';
  }
}

void write_timeline_csv(std::ostream& out, std::span<const TruthSegment> truth) {
  out << "t_start,t_end,doa_deg\n";
  for (const auto& seg : truth) {
    for (double d : seg.doas_deg) {
      out << num(seg.interval.start) << ',' << num(seg.interval.end) << ',' << num(d) << '\n';
    }
  }
}

std::string format_summary_table(std::span<const RunReport> reports) {
  std::string s;
  if (!reports.empty()) s += fmt::format("scenario: {}\n", reports.front().scenario);
  s += fmt::format("{:<26}{:>11}{:>11}{:>9}{:>9}\n", "algorithm", "MAE [deg]", "SDE [deg]",
                   "blocks", "flagged");
  for (const auto& r : reports) {
    const auto flagged =
        std::count_if(r.blocks.begin(), r.blocks.end(), [](const BlockResult& b) { return b.flagged; });
    s += fmt::format("{:<26}{:>11.2f}{:>11.2f}{:>9}{:>9}\n", r.algorithm, r.mae, r.sde,
                     r.blocks.size(), flagged);
  }
  return s;
}

std::string format_runtime_table(const RuntimeTable& table) {
  std::string s = fmt::format("{:<26}{:>12}  {}\n", "algorithm", "time [s]",
                              "faster than " + table.baseline);
  for (const auto& row : table.rows) {
    s += fmt::format("{:<26}{:>12.3f}  {:>.1f}%\n", row.algorithm, row.total_time,
                     row.faster_percent);
  }
  return s;
}

std::vector<RunReport> read_blocks_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("algorithm,scenario,block,", 0) != 0) {
    throw ValidationError("not a block report: missing header");
  }
  std::vector<RunReport> reports;
  std::map<std::string, std::size_t> index;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 11) {
      throw ValidationError("block report row " + std::to_string(row) + " has " +
                            std::to_string(f.size()) + " fields, expected 11");
    }
    auto [it, fresh] = index.try_emplace(f[0], reports.size());
    if (fresh) {
      RunReport r;
      r.algorithm = f[0];
      r.scenario = f[1];
      reports.push_back(std::move(r));
    }
    BlockResult b;
    try {
      b.block_index = std::stoi(f[2]);
      b.t_start = std::stod(f[3]);
      b.t_end = std::stod(f[4]);
      b.flagged = std::stoi(f[6]) != 0;
    } catch (const std::exception&) {
      throw ValidationError("malformed block report row " + std::to_string(row));
    }
    b.estimates = split_numbers(f[7]);
    b.truth = split_numbers(f[8]);
    b.per_source_error = split_numbers(f[9]);
    b.signed_error = split_numbers(f[10]);
    if (b.per_source_error.size() != b.truth.size() || b.signed_error.size() != b.truth.size()) {
      throw ValidationError("block report row " + std::to_string(row) +
                            " has mismatched error columns");
    }
    reports[it->second].blocks.push_back(std::move(b));
  }
  for (auto& r : reports) fill_summary(r);
  return reports;
}

}  // namespace widedoa
