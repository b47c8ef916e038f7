#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "widedoa/baselines.hpp"
#include "widedoa/synthesis.hpp"

namespace widedoa {

enum class Algorithm {
  kProposedSingle,
  kProposedMultiBatch,
  kProposedMultiIterative,
  kHistEsprit,
  kCss,
};

std::string_view algorithm_name(Algorithm algo);
// Throws ValidationError listing the valid names.
Algorithm parse_algorithm(std::string_view name);
std::vector<Algorithm> all_algorithms();

struct LocalizerConfig {
  LsSolver solver = LsSolver::kTotalLeastSquares;
  AccumulationOptions accumulation;
  HistogramConfig histogram;
  CssConfig css;
};

struct Localization {
  std::vector<double> doas_deg;  // ascending; may hold fewer than Q entries
  bool flagged = false;          // clamped sine, weak gap or missing peaks
};

Localization localize_block(Algorithm algo, std::span<const BinCovariance> covs,
                            int num_sources, const ArrayGeometry& geom,
                            const LocalizerConfig& cfg);

struct ExperimentConfig {
  StftConfig stft;
  double band_low = 100.0;
  double band_high = 3800.0;
  int block_frames = 16;
  int block_hop = 8;
  std::vector<Algorithm> algorithms = all_algorithms();
  LocalizerConfig localizer;

  void validate() const;
};

struct BlockScore {
  std::vector<double> matched_estimates;  // estimate assigned to each truth
  std::vector<double> abs_errors;         // truth order
  std::vector<double> signed_errors;      // estimate - truth
};

// Minimum total absolute error one-to-one assignment (exhaustive).
BlockScore score_block(std::span<const double> estimates, std::span<const double> truth);

struct BlockResult {
  int block_index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<double> estimates;  // as returned, ascending
  std::vector<double> truth;
  std::vector<double> per_source_error;  // truth order
  std::vector<double> signed_error;      // truth order
  bool flagged = false;
  double wall_time = 0.0;
};

struct RunReport {
  std::string algorithm;
  std::string scenario;
  double mae = 0.0;
  double sde = 0.0;
  std::vector<BlockResult> blocks;
  double total_time = 0.0;
  int blocks_excluded = 0;
};

struct ErrorSummary {
  double mae = 0.0;
  double sde = 0.0;
  int count = 0;
};

// MAE over absolute errors, population SD over signed errors.
ErrorSummary summarize_errors(std::span<const BlockResult> blocks);

struct BlockSpan {
  int block_index = 0;
  int first_frame = 0;
  int last_frame = 0;  // exclusive
  double t_start = 0.0;
  double t_end = 0.0;
};

std::vector<BlockSpan> plan_blocks(const MultichannelSpectrum& spec, int block_frames,
                                   int block_hop);

// Truth DOAs for a time span, or nothing when the set of active sources is
// empty or changes inside the span.
std::optional<std::vector<double>> truth_for_span(std::span<const TruthSegment> truth,
                                                  double t_start, double t_end);

// Per-block covariances restricted to the analysis band (upper edge clamped to
// the aliasing limit).
std::vector<BinCovariance> block_covariances(const MultichannelSpectrum& spec,
                                             const BlockSpan& block, const ArrayGeometry& geom,
                                             double band_low, double band_high);

std::vector<RunReport> run_experiment(const Scenario& scenario, const std::string& name,
                                      const ArrayGeometry& geom, const ExperimentConfig& cfg);
std::vector<RunReport> run_experiment(const ScenarioConfig& scenario, const ExperimentConfig& cfg);

// Block-wise localization of a recorded signal, without ground truth.
struct BlockLocalization {
  int block_index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<double> doas_deg;
  bool flagged = false;
};

// Signal rate must match cfg.stft.sample_rate. Blocks whose localization
// breaks down numerically come back empty and flagged.
std::vector<BlockLocalization> localize_signal(const MultichannelSignal& signal, int num_sources,
                                               const ArrayGeometry& geom,
                                               const ExperimentConfig& cfg, Algorithm algo);

struct RuntimeRow {
  std::string algorithm;
  double total_time = 0.0;
  // Positive when faster than the baseline: 100 * (t_base - t) / t_base.
  double faster_percent = 0.0;
};

struct RuntimeTable {
  std::string baseline;
  std::vector<RuntimeRow> rows;
};

// Baseline is hist-ESPRIT when present, otherwise the first report. Throws
// DomainError when reports cover different block sets.
RuntimeTable compare_runtime(std::span<const RunReport> reports);

// One row per (algorithm, block): deterministic, no timing columns.
void write_blocks_csv(std::ostream& out, std::span<const RunReport> reports);
// Long format error-vs-time trace: one row per (algorithm, block, source).
void write_trace_csv(std::ostream& out, std::span<const RunReport> reports);
void write_summary_csv(std::ostream& out, std::span<const RunReport> reports);
void write_runtime_csv(std::ostream& out, const RuntimeTable& table);
// block,t_start,t_end,flagged,doa_1..doa_Q; missing estimates left empty.
void write_doa_trace_csv(std::ostream& out, std::span<const BlockLocalization> blocks,
                         int num_sources);
// t_start,t_end,doa_deg; one row per active source per segment.
void write_timeline_csv(std::ostream& out, std::span<const TruthSegment> truth);
std::string format_summary_table(std::span<const RunReport> reports);
std::string format_runtime_table(const RuntimeTable& table);

// Parses write_blocks_csv output back into reports (errors and estimates
// only; MAE/SDE recomputed from the rows).
std::vector<RunReport> read_blocks_csv(std::istream& in);

}  // namespace widedoa
