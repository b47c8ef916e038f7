#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "widedoa/errors.hpp"
#include "widedoa/evaluation.hpp"

using namespace widedoa;

namespace {

ScenarioConfig quiet_scenario(std::vector<double> doas, double duration = 4.0) {
  ScenarioConfig s;
  s.name = "quiet";
  s.snr_db = 60.0;
  s.duration = duration;
  s.rng_seed = 7;
  for (double d : doas) {
    SourceSpec src;
    src.doa_deg = d;
    s.sources.push_back(src);
  }
  return s;
}

BlockResult block_with_errors(std::vector<double> signed_err) {
  BlockResult b;
  for (double e : signed_err) {
    b.signed_error.push_back(e);
    b.per_source_error.push_back(std::abs(e));
  }
  return b;
}

}  // namespace

TEST(Score, NearestAssignment) {
  const std::vector<double> est{44.0, -46.0};
  const std::vector<double> truth{45.0, -45.0};
  const auto s = score_block(est, truth);
  EXPECT_EQ(s.abs_errors, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(s.matched_estimates, (std::vector<double>{44.0, -46.0}));
  EXPECT_EQ(s.signed_errors, (std::vector<double>{-1.0, -1.0}));
}

TEST(Score, PermutationGivesZero) {
  const std::vector<double> est{-45.0, 45.0};
  const std::vector<double> truth{45.0, -45.0};
  EXPECT_EQ(score_block(est, truth).abs_errors, (std::vector<double>{0.0, 0.0}));
}

TEST(Score, DuplicateEstimates) {
  const std::vector<double> est{0.0, 0.0};
  const std::vector<double> truth{-45.0, 45.0};
  EXPECT_EQ(score_block(est, truth).abs_errors, (std::vector<double>{45.0, 45.0}));
}

TEST(Score, MatchesBruteForceOracle) {
  const std::vector<std::vector<double>> cases{
      {10.0, -3.0, 60.0}, {-80.0, 0.5, 1.0}, {33.0, 34.0, 35.0}};
  const std::vector<double> truth{0.0, 30.0, -70.0};
  for (const auto& est : cases) {
    const auto s = score_block(est, truth);
    double total = 0.0;
    for (double e : s.abs_errors) total += e;
    EXPECT_NEAR(total, oracle::best_assignment_cost(est, truth), 1e-12);
    // Swapping roles leaves the optimum unchanged.
    const auto back = score_block(truth, est);
    double total_back = 0.0;
    for (double e : back.abs_errors) total_back += e;
    EXPECT_NEAR(total, total_back, 1e-12);
  }
}

TEST(Score, LengthMismatchThrows) {
  const std::vector<double> est{1.0};
  const std::vector<double> truth{1.0, 2.0};
  EXPECT_THROW(score_block(est, truth), DomainError);
}

TEST(Summary, PopulationStatistics) {
  const std::vector<BlockResult> blocks{block_with_errors({1.0, -1.0}),
                                        block_with_errors({3.0})};
  const auto s = summarize_errors(blocks);
  EXPECT_EQ(s.count, 3);
  EXPECT_NEAR(s.mae, 5.0 / 3.0, 1e-12);
  // Signed errors 1, -1, 3 around their mean 1.
  EXPECT_NEAR(s.sde, std::sqrt(8.0 / 3.0), 1e-12);
}

TEST(Summary, EmptyIsNan) {
  const auto s = summarize_errors({});
  EXPECT_EQ(s.count, 0);
  EXPECT_TRUE(std::isnan(s.mae));
  EXPECT_TRUE(std::isnan(s.sde));
}

TEST(Blocks, PlanCoversFramesWithHop) {
  MultichannelSpectrum spec;
  spec.frames.resize(40);
  spec.hop = 512;
  spec.frame_length = 1024;
  spec.sample_rate = 16000.0;
  const auto blocks = plan_blocks(spec, 16, 8);
  ASSERT_EQ(blocks.size(), 4u);
  EXPECT_EQ(blocks[3].first_frame, 24);
  EXPECT_EQ(blocks[3].last_frame, 40);
  EXPECT_DOUBLE_EQ(blocks[1].t_start, 8 * 512 / 16000.0);
  EXPECT_DOUBLE_EQ(blocks[1].t_end, (23 * 512 + 1024) / 16000.0);
  EXPECT_THROW(plan_blocks(spec, 0, 8), DomainError);
}

TEST(Blocks, TruthForSpan) {
  const std::vector<TruthSegment> truth{
      {{0.0, 2.0}, {45.0}}, {{2.0, 3.0}, {}}, {{3.0, 6.0}, {-45.0, 45.0}}};
  EXPECT_EQ(*truth_for_span(truth, 0.5, 1.5), std::vector<double>{45.0});
  EXPECT_FALSE(truth_for_span(truth, 1.5, 2.5).has_value());
  EXPECT_FALSE(truth_for_span(truth, 2.1, 2.9).has_value());
  EXPECT_EQ(truth_for_span(truth, 3.0, 6.0)->size(), 2u);
}

TEST(Algorithms, NamesRoundTrip) {
  for (Algorithm a : all_algorithms()) EXPECT_EQ(parse_algorithm(algorithm_name(a)), a);
  try {
    parse_algorithm("css2");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("hist-esprit"), std::string::npos);
  }
}

TEST(Algorithms, SingleRejectsTwoSources) {
  EXPECT_THROW(localize_block(Algorithm::kProposedSingle, {}, 2, ArrayGeometry{}, {}),
               DomainError);
}

TEST(Runtime, SelfComparisonIsZero) {
  RunReport a;
  a.algorithm = "hist-esprit";
  a.total_time = 2.0;
  a.blocks.resize(3);
  RunReport b = a;
  b.algorithm = "css";
  b.total_time = 1.0;
  const std::vector<RunReport> reports{a, b};
  const auto table = compare_runtime(reports);
  EXPECT_EQ(table.baseline, "hist-esprit");
  EXPECT_DOUBLE_EQ(table.rows[0].faster_percent, 0.0);
  EXPECT_DOUBLE_EQ(table.rows[1].faster_percent, 50.0);
  b.blocks.pop_back();
  const std::vector<RunReport> bad{a, b};
  EXPECT_THROW(compare_runtime(bad), DomainError);
}

TEST(Experiment, ConfigValidation) {
  ExperimentConfig c;
  c.band_low = 4000.0;
  c.band_high = 3000.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.algorithms.clear();
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Experiment, QuietSingleSourceIsAccurate) {
  ExperimentConfig cfg;
  cfg.algorithms = {Algorithm::kProposedSingle, Algorithm::kHistEsprit, Algorithm::kCss};
  const auto reports = run_experiment(quiet_scenario({30.0}), cfg);
  ASSERT_EQ(reports.size(), 3u);
  for (const auto& r : reports) {
    EXPECT_FALSE(r.blocks.empty());
    EXPECT_LT(r.mae, 0.1) << r.algorithm;
  }
}

TEST(Experiment, SingleDroppedForTwoSources) {
  ExperimentConfig cfg;
  cfg.algorithms = {Algorithm::kProposedSingle, Algorithm::kProposedMultiBatch};
  const auto reports = run_experiment(quiet_scenario({-40.0, 20.0}, 2.0), cfg);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].algorithm, "proposed-multi-batch");
  EXPECT_LT(reports[0].mae, 0.5);
}

TEST(Experiment, SameSeedSameCsv) {
  ExperimentConfig cfg;
  auto csv = [&] {
    const auto reports = run_experiment(quiet_scenario({-40.0, 20.0}, 2.0), cfg);
    std::ostringstream out;
    write_blocks_csv(out, reports);
    write_summary_csv(out, reports);
    write_trace_csv(out, reports);
    return out.str();
  };
  EXPECT_EQ(csv(), csv());
}

TEST(Experiment, BlocksCsvRoundTrip) {
  ExperimentConfig cfg;
  cfg.algorithms = {Algorithm::kProposedMultiIterative, Algorithm::kHistEsprit};
  auto sc = quiet_scenario({-40.0, 20.0}, 2.0);
  sc.snr_db = 0.0;
  const auto reports = run_experiment(sc, cfg);
  std::ostringstream out;
  write_blocks_csv(out, reports);
  std::istringstream in(out.str());
  const auto back = read_blocks_csv(in);
  ASSERT_EQ(back.size(), reports.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    EXPECT_EQ(back[k].algorithm, reports[k].algorithm);
    ASSERT_EQ(back[k].blocks.size(), reports[k].blocks.size());
    EXPECT_NEAR(back[k].mae, reports[k].mae, 1e-12);
    EXPECT_NEAR(back[k].sde, reports[k].sde, 1e-12);
    for (std::size_t b = 0; b < back[k].blocks.size(); ++b) {
      EXPECT_EQ(back[k].blocks[b].estimates, reports[k].blocks[b].estimates);
      EXPECT_EQ(back[k].blocks[b].flagged, reports[k].blocks[b].flagged);
    }
  }
}

TEST(Experiment, SampleRateMismatch) {
  ExperimentConfig cfg;
  cfg.stft.sample_rate = 8000.0;
  EXPECT_THROW(run_experiment(quiet_scenario({0.0}, 1.0), cfg), ValidationError);
}
