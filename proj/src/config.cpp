#include "widedoa/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <spdlog/fmt/fmt.h>

#include "widedoa/errors.hpp"

namespace widedoa {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> tokens(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep || (sep == ' ' && c == '\t')) {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ValidationError(key + ": expected a number, got '" + v + "'");
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ValidationError(key + ": expected an integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ValidationError(key + ": expected true or false, got '" + v + "'");
}

template <typename E>
E to_enum(const std::string& key, const std::string& v,
          std::initializer_list<std::pair<std::string_view, E>> table) {
  std::string names;
  for (const auto& [n, e] : table) {
    if (n == v) return e;
    names += names.empty() ? "" : ", ";
    names += n;
  }
  throw ValidationError(key + ": unknown value '" + v + "'; expected one of " + names);
}

template <typename E>
std::string_view enum_name(E e, std::initializer_list<std::pair<std::string_view, E>> table) {
  for (const auto& [n, x] : table) {
    if (x == e) return n;
  }
  return "?";
}

const std::initializer_list<std::pair<std::string_view, SourceKind>> kKinds = {
    {"white", SourceKind::kWhiteNoise}, {"wav", SourceKind::kWavFile},
    {"harmonic", SourceKind::kHarmonic}};
const std::initializer_list<std::pair<std::string_view, WindowKind>> kWindows = {
    {"hann", WindowKind::kHann}, {"rectangular", WindowKind::kRectangular}};
const std::initializer_list<std::pair<std::string_view, LsSolver>> kSolvers = {
    {"tls", LsSolver::kTotalLeastSquares}, {"ls", LsSolver::kLeastSquares}};
const std::initializer_list<std::pair<std::string_view, RotationBasis>> kBases = {
    {"invariance", RotationBasis::kInvariance}, {"eigenvector", RotationBasis::kEigenvector}};
const std::initializer_list<std::pair<std::string_view, PhaseBranch>> kBranches = {
    {"unwrapped", PhaseBranch::kSensorUnwrapped}, {"principal", PhaseBranch::kPrincipal}};
const std::initializer_list<std::pair<std::string_view, Reconstruction>> kReconstructions = {
    {"signal", Reconstruction::kSignalSubspace}, {"full-rank", Reconstruction::kFullRank}};

std::string num(double x) { return fmt::format("{:.17g}", x); }

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ", ") + num(x);
  return s;
}

// Visits each key of a section, rejecting the ones not handled.
template <typename F>
void for_keys(const pt::ptree& section, const std::string& name, F&& handle) {
  for (const auto& [key, node] : section) {
    const std::string value = trim(node.data());
    const std::string full = name + "." + key;
    if (!handle(key, full, value)) throw ValidationError("unknown key '" + full + "'");
  }
}

void apply_array(const pt::ptree& s, RunConfig& cfg) {
  auto& g = cfg.scenario.geometry;
  for_keys(s, "array", [&](const std::string& k, const std::string& full, const std::string& v) {
    if (k == "sensors") g.num_sensors = static_cast<int>(to_int(full, v));
    else if (k == "spacing") g.spacing = to_double(full, v);
    else if (k == "sound_speed") g.sound_speed = to_double(full, v);
    else return false;
    return true;
  });
}

void apply_scenario(const pt::ptree& s, RunConfig& cfg) {
  auto& sc = cfg.scenario;
  for_keys(s, "scenario", [&](const std::string& k, const std::string& full, const std::string& v) {
    if (k == "name") sc.name = v;
    else if (k == "preset") {}  // consumed by load_config
    else if (k == "snr_db") sc.snr_db = to_double(full, v);
    else if (k == "duration") sc.duration = to_double(full, v);
    else if (k == "sample_rate") sc.sample_rate = to_double(full, v);
    else if (k == "seed") {
      const long long seed = to_int(full, v);
      if (seed < 0) throw ValidationError(full + ": must be non-negative");
      sc.rng_seed = static_cast<std::uint64_t>(seed);
    }
    else if (k == "diffuse_directions") sc.diffuse_directions = static_cast<int>(to_int(full, v));
    else if (k == "sensor_noise") sc.sensor_noise = to_bool(full, v);
    else if (k == "sensor_noise_db") sc.sensor_noise_db = to_double(full, v);
    else return false;
    return true;
  });
}

void apply_source(const pt::ptree& s, const std::string& name, SourceSpec& src,
                  ActivityRule& rule) {
  for_keys(s, name, [&](const std::string& k, const std::string& full, const std::string& v) {
    if (k == "kind") src.kind = to_enum(full, v, kKinds);
    else if (k == "path") src.wav_path = v;
    else if (k == "doa") src.doa_deg = to_double(full, v);
    else if (k == "gain") src.gain = to_double(full, v);
    else if (k == "activity") {
      try {
        rule = ActivityRule::parse(v);
      } catch (const ValidationError& e) {
        throw ValidationError(full + ": " + e.what());
      }
    }
    else return false;
    return true;
  });
}

void apply_stft(const pt::ptree& s, RunConfig& cfg) {
  auto& st = cfg.experiment.stft;
  for_keys(s, "stft", [&](const std::string& k, const std::string& full, const std::string& v) {
    if (k == "frame_length") st.frame_length = static_cast<int>(to_int(full, v));
    else if (k == "hop") st.hop = static_cast<int>(to_int(full, v));
    else if (k == "window") st.window = to_enum(full, v, kWindows);
    else return false;
    return true;
  });
}

void apply_localization(const pt::ptree& s, RunConfig& cfg) {
  auto& ex = cfg.experiment;
  auto& lc = ex.localizer;
  for_keys(s, "localization", [&](const std::string& k, const std::string& full,
                                  const std::string& v) {
    if (k == "band_low") ex.band_low = to_double(full, v);
    else if (k == "band_high") ex.band_high = to_double(full, v);
    else if (k == "block_frames") ex.block_frames = static_cast<int>(to_int(full, v));
    else if (k == "block_hop") ex.block_hop = static_cast<int>(to_int(full, v));
    else if (k == "algorithms") {
      ex.algorithms.clear();
      for (const auto& n : tokens(v, ',')) ex.algorithms.push_back(parse_algorithm(n));
    }
    else if (k == "solver") lc.solver = to_enum(full, v, kSolvers);
    else if (k == "rotation_basis") lc.accumulation.rotation.basis = to_enum(full, v, kBases);
    else if (k == "phase_branch") lc.accumulation.rotation.branch = to_enum(full, v, kBranches);
    else if (k == "reconstruction") lc.accumulation.reconstruction = to_enum(full, v, kReconstructions);
    else if (k == "hist_bin_width") lc.histogram.bin_width = to_double(full, v);
    else if (k == "hist_min_separation") lc.histogram.min_peak_separation = to_double(full, v);
    else if (k == "css_grid") lc.css.grid_resolution = to_double(full, v);
    else if (k == "css_reference") lc.css.reference_frequency = to_double(full, v);
    else if (k == "css_init") {
      lc.css.initial_doas.clear();
      if (v != "auto") {
        for (const auto& t : tokens(v, ',')) lc.css.initial_doas.push_back(to_double(full, t));
      }
    }
    else if (k == "css_init_bin_width") lc.css.init_bin_width = to_double(full, v);
    else if (k == "css_init_stride") lc.css.init_bin_stride = static_cast<int>(to_int(full, v));
    else return false;
    return true;
  });
}

SourceSpec white(double doa) {
  SourceSpec s;
  s.kind = SourceKind::kWhiteNoise;
  s.doa_deg = doa;
  return s;
}

RunConfig make_preset(std::string name, double snr, SourceKind kind, bool alternating) {
  RunConfig cfg;
  cfg.scenario.name = std::move(name);
  cfg.scenario.snr_db = snr;
  cfg.scenario.duration = 60.0;
  for (double doa : {-45.0, 45.0}) {
    SourceSpec s = white(doa);
    s.kind = kind;
    cfg.scenario.sources.push_back(s);
  }
  if (alternating) {
    cfg.activity.push_back({ActivityRule::Kind::kAlternate, 2.0, 0.0, {}});
    cfg.activity.push_back({ActivityRule::Kind::kAlternate, 2.0, 2.0, {}});
  } else {
    cfg.activity.assign(2, ActivityRule{});
  }
  cfg.resolve();
  return cfg;
}

}  // namespace

ActivityRule ActivityRule::parse(std::string_view text) {
  const auto words = tokens(text, ' ');
  ActivityRule r;
  if (words.empty() || (words.size() == 1 && words[0] == "always")) return r;
  if (words[0] == "alternate") {
    if (words.size() != 3) throw ValidationError("expected 'alternate <period> <phase>'");
    r.kind = Kind::kAlternate;
    r.period = to_double("period", words[1]);
    r.phase = to_double("phase", words[2]);
    if (!(r.period > 0.0)) throw ValidationError("alternation period must be positive");
    if (!(r.phase >= 0.0)) throw ValidationError("alternation phase must be non-negative");
    return r;
  }
  r.kind = Kind::kExplicit;
  for (const auto& w : words) {
    const auto colon = w.find(':');
    if (colon == std::string::npos) throw ValidationError("expected <start>:<end>, got '" + w + "'");
    const double a = to_double("start", w.substr(0, colon));
    const double b = to_double("end", w.substr(colon + 1));
    if (!(a >= 0.0 && b > a)) throw ValidationError("interval '" + w + "' is empty or negative");
    r.intervals.push_back({a, b});
  }
  return r;
}

std::string ActivityRule::to_string() const {
  switch (kind) {
    case Kind::kAlways:
      return "always";
    case Kind::kAlternate:
      return "alternate " + num(period) + " " + num(phase);
    case Kind::kExplicit: {
      std::string s;
      for (const auto& iv : intervals) s += (s.empty() ? "" : " ") + num(iv.start) + ":" + num(iv.end);
      return s;
    }
  }
  return "always";
}

std::vector<TimeInterval> ActivityRule::expand(double duration) const {
  std::vector<TimeInterval> out;
  if (kind == Kind::kAlways) return out;
  if (kind == Kind::kExplicit) {
    for (const auto& iv : intervals) {
      if (iv.start < duration) out.push_back({iv.start, std::min(iv.end, duration)});
    }
  } else {
    for (double t = phase; t < duration; t += 2.0 * period) {
      out.push_back({t, std::min(t + period, duration)});
    }
  }
  // An empty list means "always", so an inactive source gets a null interval.
  if (out.empty()) out.push_back({duration, duration});
  return out;
}

void RunConfig::resolve() {
  activity.resize(scenario.sources.size());
  for (std::size_t i = 0; i < scenario.sources.size(); ++i) {
    scenario.sources[i].activity = activity[i].expand(scenario.duration);
  }
  experiment.stft.sample_rate = scenario.sample_rate;
}

void RunConfig::validate() const {
  scenario.validate();
  experiment.validate();
  if (activity.size() != scenario.sources.size()) {
    throw ValidationError("activity rules do not match the source list");
  }
}

std::vector<std::string> preset_names() {
  return {"exp1-single-white-10db", "exp1-single-white-0db", "exp2-two-white-10db",
          "exp2-two-white-0db", "exp3-two-speech"};
}

RunConfig preset_config(std::string_view name) {
  if (name == "exp1-single-white-10db") return make_preset(std::string(name), 10.0, SourceKind::kWhiteNoise, true);
  if (name == "exp1-single-white-0db") return make_preset(std::string(name), 0.0, SourceKind::kWhiteNoise, true);
  if (name == "exp2-two-white-10db") return make_preset(std::string(name), 10.0, SourceKind::kWhiteNoise, false);
  if (name == "exp2-two-white-0db") return make_preset(std::string(name), 0.0, SourceKind::kWhiteNoise, false);
  if (name == "exp3-two-speech") return make_preset(std::string(name), 5.0, SourceKind::kHarmonic, false);
  std::string names;
  for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
  throw ValidationError("unknown preset '" + std::string(name) + "'; available: " + names);
}

RunConfig parse_config(const std::string& text, const RunConfig& base) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  RunConfig cfg = base;
  // Source sections by index, in numeric order.
  std::map<long long, const pt::ptree*> sources;
  for (const auto& [name, section] : tree) {
    if (!section.data().empty()) throw ValidationError("key '" + name + "' outside any section");
    if (name == "array") apply_array(section, cfg);
    else if (name == "scenario") apply_scenario(section, cfg);
    else if (name == "stft") apply_stft(section, cfg);
    else if (name == "localization") apply_localization(section, cfg);
    else if (name.rfind("source.", 0) == 0) {
      const long long idx = to_int("section [" + name + "]", name.substr(7));
      sources[idx] = &section;
    } else {
      throw ValidationError("unknown section [" + name + "]");
    }
  }
  if (!sources.empty()) {
    cfg.scenario.sources.clear();
    cfg.activity.clear();
    for (const auto& [idx, section] : sources) {
      SourceSpec s;
      ActivityRule rule;
      apply_source(*section, "source." + std::to_string(idx), s, rule);
      cfg.scenario.sources.push_back(s);
      cfg.activity.push_back(rule);
    }
  }
  cfg.resolve();
  return cfg;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), base);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open config file");
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(path + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  const auto preset = tree.get_optional<std::string>("scenario.preset");
  return load_config(path, preset ? preset_config(trim(*preset)) : RunConfig{});
}

std::string to_config_text(const RunConfig& cfg) {
  const auto& g = cfg.scenario.geometry;
  const auto& sc = cfg.scenario;
  const auto& ex = cfg.experiment;
  const auto& lc = ex.localizer;
  std::string s;
  s += fmt::format("[array]\nsensors = {}\nspacing = {}\nsound_speed = {}\n\n", g.num_sensors,
                   num(g.spacing), num(g.sound_speed));
  s += fmt::format(
      "[scenario]\nname = {}\nsnr_db = {}\nduration = {}\nsample_rate = {}\nseed = {}\n"
      "diffuse_directions = {}\nsensor_noise = {}\nsensor_noise_db = {}\n\n",
      sc.name, num(sc.snr_db), num(sc.duration), num(sc.sample_rate), sc.rng_seed,
      sc.diffuse_directions, sc.sensor_noise ? "true" : "false", num(sc.sensor_noise_db));
  for (std::size_t i = 0; i < sc.sources.size(); ++i) {
    const auto& src = sc.sources[i];
    s += fmt::format("[source.{}]\nkind = {}\n", i + 1, enum_name(src.kind, kKinds));
    if (src.kind == SourceKind::kWavFile) s += fmt::format("path = {}\n", src.wav_path);
    s += fmt::format("doa = {}\ngain = {}\nactivity = {}\n\n", num(src.doa_deg), num(src.gain),
                     i < cfg.activity.size() ? cfg.activity[i].to_string() : "always");
  }
  s += fmt::format("[stft]\nframe_length = {}\nhop = {}\nwindow = {}\n\n", ex.stft.frame_length,
                   ex.stft.hop, enum_name(ex.stft.window, kWindows));
  std::string algos;
  for (Algorithm a : ex.algorithms) algos += (algos.empty() ? "" : ", ") + std::string(algorithm_name(a));
  s += fmt::format(
      "[localization]\nband_low = {}\nband_high = {}\nblock_frames = {}\nblock_hop = {}\n"
      "algorithms = {}\nsolver = {}\nrotation_basis = {}\nphase_branch = {}\n"
      "reconstruction = {}\nhist_bin_width = {}\nhist_min_separation = {}\ncss_grid = {}\n"
      "css_reference = {}\ncss_init = {}\ncss_init_bin_width = {}\ncss_init_stride = {}\n",
      num(ex.band_low), num(ex.band_high), ex.block_frames, ex.block_hop, algos,
      enum_name(lc.solver, kSolvers), enum_name(lc.accumulation.rotation.basis, kBases),
      enum_name(lc.accumulation.rotation.branch, kBranches),
      enum_name(lc.accumulation.reconstruction, kReconstructions), num(lc.histogram.bin_width),
      num(lc.histogram.min_peak_separation), num(lc.css.grid_resolution),
      num(lc.css.reference_frequency),
      lc.css.initial_doas.empty() ? std::string("auto") : join_doubles(lc.css.initial_doas),
      num(lc.css.init_bin_width), lc.css.init_bin_stride);
  return s;
}

}  // namespace widedoa
