#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "widedoa/config.hpp"
#include "widedoa/errors.hpp"

using namespace widedoa;

TEST(Presets, AllValidate) {
  for (const auto& name : preset_names()) {
    const auto cfg = preset_config(name);
    EXPECT_NO_THROW(cfg.validate()) << name;
    EXPECT_EQ(cfg.scenario.duration, 60.0);
    EXPECT_EQ(cfg.scenario.sources.size(), 2u);
  }
}

TEST(Presets, SingleSourceAlternates) {
  const auto cfg = preset_config("exp1-single-white-10db");
  const auto& a = cfg.scenario.sources[0].activity;
  const auto& b = cfg.scenario.sources[1].activity;
  ASSERT_EQ(a.size(), 15u);
  ASSERT_EQ(b.size(), 15u);
  EXPECT_EQ(a[0].start, 0.0);
  EXPECT_EQ(a[0].end, 2.0);
  EXPECT_EQ(b[0].start, 2.0);
  EXPECT_EQ(b.back().end, 60.0);
}

TEST(Presets, UnknownNameListsChoices) {
  try {
    preset_config("exp9");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("exp2-two-white-10db"), std::string::npos);
  }
}

TEST(Activity, Grammar) {
  EXPECT_EQ(ActivityRule::parse("always").kind, ActivityRule::Kind::kAlways);
  const auto alt = ActivityRule::parse("alternate 1.5 0.5");
  EXPECT_EQ(alt.kind, ActivityRule::Kind::kAlternate);
  const auto iv = alt.expand(4.0);
  ASSERT_EQ(iv.size(), 2u);
  EXPECT_DOUBLE_EQ(iv[1].start, 3.5);
  EXPECT_DOUBLE_EQ(iv[1].end, 4.0);

  const auto ex = ActivityRule::parse("0:1.25 3:10");
  const auto e = ex.expand(5.0);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_DOUBLE_EQ(e[1].end, 5.0);
  EXPECT_EQ(ActivityRule::parse(ex.to_string()).intervals.size(), 2u);

  // Starts after the end of the run: never active.
  const auto late = ActivityRule::parse("7:9").expand(5.0);
  ASSERT_EQ(late.size(), 1u);
  EXPECT_EQ(late[0].start, late[0].end);

  EXPECT_THROW(ActivityRule::parse("alternate 2"), ValidationError);
  EXPECT_THROW(ActivityRule::parse("alternate 0 1"), ValidationError);
  EXPECT_THROW(ActivityRule::parse("3:1"), ValidationError);
  EXPECT_THROW(ActivityRule::parse("sometimes"), ValidationError);
}

TEST(Parse, OverlaysBase) {
  const auto base = preset_config("exp2-two-white-10db");
  const auto cfg = parse_config("[scenario]\nsnr_db = -3\nduration = 5\n", base);
  EXPECT_EQ(cfg.scenario.snr_db, -3.0);
  EXPECT_EQ(cfg.scenario.duration, 5.0);
  EXPECT_EQ(cfg.scenario.sources.size(), 2u);
}

TEST(Parse, SourcesReplaceList) {
  const auto base = preset_config("exp2-two-white-10db");
  const auto cfg = parse_config(
      "[source.2]\nkind = harmonic\ndoa = 10\n[source.1]\ndoa = -20\nactivity = 0:1\n", base);
  ASSERT_EQ(cfg.scenario.sources.size(), 2u);
  EXPECT_EQ(cfg.scenario.sources[0].doa_deg, -20.0);
  EXPECT_EQ(cfg.scenario.sources[0].activity.size(), 1u);
  EXPECT_EQ(cfg.scenario.sources[1].kind, SourceKind::kHarmonic);
  EXPECT_TRUE(cfg.scenario.sources[1].activity.empty());
}

TEST(Parse, Localization) {
  const auto cfg = parse_config(
      "[localization]\nalgorithms = css, hist-esprit\nsolver = ls\ncss_init = -10, 10\n"
      "phase_branch = principal\n");
  EXPECT_EQ(cfg.experiment.algorithms,
            (std::vector<Algorithm>{Algorithm::kCss, Algorithm::kHistEsprit}));
  EXPECT_EQ(cfg.experiment.localizer.solver, LsSolver::kLeastSquares);
  EXPECT_EQ(cfg.experiment.localizer.css.initial_doas, (std::vector<double>{-10.0, 10.0}));
  EXPECT_EQ(cfg.experiment.localizer.accumulation.rotation.branch, PhaseBranch::kPrincipal);
}

TEST(Parse, RejectsUnknownAndMalformed) {
  EXPECT_THROW(parse_config("[array]\nsensor = 5\n"), ValidationError);
  EXPECT_THROW(parse_config("[arrays]\nsensors = 5\n"), ValidationError);
  EXPECT_THROW(parse_config("[array]\nspacing = wide\n"), ValidationError);
  EXPECT_THROW(parse_config("[stft]\nwindow = kaiser\n"), ValidationError);
  EXPECT_THROW(parse_config("[localization]\nalgorithms = music\n"), ValidationError);
  EXPECT_THROW(parse_config("[source.x]\ndoa = 1\n"), ValidationError);
  EXPECT_THROW(parse_config("[scenario\n"), ValidationError);
}

TEST(Parse, ValidationCatchesBadValues) {
  EXPECT_THROW(parse_config("[scenario]\nduration = 0\n").validate(), ValidationError);
  EXPECT_THROW(parse_config("[array]\nsensors = 1\n").validate(), ValidationError);
  EXPECT_THROW(parse_config("[source.1]\ndoa = 95\n").validate(), ValidationError);
}

TEST(Parse, TextRoundTrip) {
  auto cfg = preset_config("exp1-single-white-0db");
  cfg = parse_config("[localization]\ncss_init = -40, 40\nband_high = 3500.5\n", cfg);
  const std::string text = to_config_text(cfg);
  const auto back = parse_config(text);
  EXPECT_EQ(to_config_text(back), text);
  EXPECT_EQ(back.scenario.sources[1].activity.size(), cfg.scenario.sources[1].activity.size());
  EXPECT_EQ(back.experiment.band_high, 3500.5);
}

TEST(Parse, ShortRunLeavesLateSourceSilent) {
  auto cfg = parse_config("[scenario]\nduration = 2\n", preset_config("exp1-single-white-10db"));
  ASSERT_NO_THROW(cfg.validate());
  const auto truth = truth_timeline(cfg.scenario.sources, cfg.scenario.duration);
  ASSERT_EQ(truth.size(), 1u);
  EXPECT_EQ(truth[0].doas_deg, std::vector<double>{-45.0});
}
