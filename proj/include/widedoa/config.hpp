#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "widedoa/evaluation.hpp"

namespace widedoa {

// Source activity schedule as written in a config file. Expanded into
// intervals once the scenario duration is known.
struct ActivityRule {
  enum class Kind { kAlways, kAlternate, kExplicit };
  Kind kind = Kind::kAlways;
  double period = 0.0;  // kAlternate: on for `period`, off for `period`
  double phase = 0.0;   // kAlternate: start of the first on-interval
  std::vector<TimeInterval> intervals;  // kExplicit

  // "always" | "alternate <period> <phase>" | "<start>:<end> ..."
  static ActivityRule parse(std::string_view text);
  std::string to_string() const;
  std::vector<TimeInterval> expand(double duration) const;
};

struct RunConfig {
  ScenarioConfig scenario;
  std::vector<ActivityRule> activity;  // one per scenario source
  ExperimentConfig experiment;

  // Expands activity rules into the sources and ties the STFT rate to the
  // scenario rate. Call after any edit of durations or sources.
  void resolve();
  void validate() const;
};

std::vector<std::string> preset_names();
// Throws ValidationError listing the available presets.
RunConfig preset_config(std::string_view name);

// Applies an INI document on top of `base`. Sections: [array], [scenario],
// [source.N], [stft], [localization]. Any [source.N] section replaces the
// whole source list. Unknown sections or keys are rejected.
RunConfig parse_config(const std::string& text, const RunConfig& base = {});
// File wrapper; a [scenario] key `preset` selects the base before overlaying.
RunConfig load_config(const std::string& path);
RunConfig load_config(const std::string& path, const RunConfig& base);

// Effective configuration in the same INI grammar; parse_config of the result
// reproduces the config.
std::string to_config_text(const RunConfig& cfg);

}  // namespace widedoa
