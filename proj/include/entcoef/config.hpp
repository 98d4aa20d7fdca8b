#pragma once

// Pipeline settings. A run is configured by an INI-style file, "key = value"
// lines grouped under "[section]" headers, with command line flags taking
// precedence over file values. The effective settings are serialized into a
// canonical text form and fingerprinted with FNV-1a; every report records
// that hash so rows from different configurations cannot be mixed silently.
//
// The fingerprint covers the settings that influence report contents. The
// output directory, thread count, and display units change where results go
// or how they are shown, never what they are, so they stay out of the hash.

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "entcoef/errors.hpp"
#include "entcoef/rho.hpp"
#include "entcoef/rng.hpp"
#include "entcoef/sgns.hpp"

namespace entcoef {

inline constexpr const char* kToolVersion = "0.1.0";

struct PipelineConfig {
  std::string corpus_path;      // raw token stream the embeddings train on
  std::string annotation_path;  // tagged corpus, tsv or conllu
  std::string format = "tsv";
  std::string tag_column = "upos";
  RhoOptions rho;
  SgnsConfig sgns;
  double inlp_epsilon = 0.01;
  int inlp_max_iters = -1;              // -1 lets the dimension bound it
  std::size_t ladder_select_every = 0;  // 0 picks ceil(m / 8)
  std::string output_dir = ".";
  std::uint64_t seed = 42;
};

// Flat view of a settings source: "section.key" -> raw value. Later sources
// (flags) overwrite earlier ones (the file) key by key.
using SettingsMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline long long parse_int_setting(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(value, &used);
  } catch (const std::exception&) {
    fail_config("config value for " + key + " is not an integer: " + value);
  }
  if (used != value.size()) {
    fail_config("config value for " + key + " is not an integer: " + value);
  }
  return out;
}

inline double parse_double_setting(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    fail_config("config value for " + key + " is not a number: " + value);
  }
  if (used != value.size()) {
    fail_config("config value for " + key + " is not a number: " + value);
  }
  return out;
}

inline std::uint64_t parse_u64_setting(const std::string& key, const std::string& value) {
  long long v = parse_int_setting(key, value);
  if (v < 0) fail_config("config value for " + key + " must be non-negative: " + value);
  return static_cast<std::uint64_t>(v);
}

inline bool parse_bool_setting(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  fail_config("config value for " + key + " is not a boolean: " + value);
}

inline std::string format_double_setting(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace detail

inline SettingsMap parse_settings(std::istream& in) {
  SettingsMap settings;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string body = detail::trim(line);
    if (body.empty() || body[0] == '#' || body[0] == ';') continue;
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) {
        fail_config("config line " + std::to_string(lineno) + ": malformed section header");
      }
      section = detail::trim(body.substr(1, body.size() - 2));
      if (section.empty()) {
        fail_config("config line " + std::to_string(lineno) + ": empty section name");
      }
      continue;
    }
    std::size_t eq = body.find('=');
    if (eq == std::string::npos) {
      fail_config("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = detail::trim(body.substr(0, eq));
    std::string value = detail::trim(body.substr(eq + 1));
    if (key.empty()) {
      fail_config("config line " + std::to_string(lineno) + ": empty key");
    }
    if (!section.empty()) key = section + "." + key;
    settings[key] = value;
  }
  return settings;
}

inline SettingsMap parse_settings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_config("cannot open config file: " + path);
  return parse_settings(in);
}

// Applies a flat settings map onto the defaults. Unknown keys are config
// errors; a typo silently ignored would change results without a trace.
inline void apply_settings(PipelineConfig& cfg, const SettingsMap& settings) {
  using detail::parse_bool_setting;
  using detail::parse_double_setting;
  using detail::parse_int_setting;
  using detail::parse_u64_setting;
  for (const auto& [key, value] : settings) {
    if (key == "corpus.path") {
      cfg.corpus_path = value;
    } else if (key == "corpus.annotations") {
      cfg.annotation_path = value;
    } else if (key == "corpus.format") {
      corpus_format_from_name(value);  // reject unknown names early
      cfg.format = value;
    } else if (key == "corpus.tag_column") {
      if (value != "upos" && value != "xpos") {
        fail_config("config value for corpus.tag_column must be upos or xpos: " + value);
      }
      cfg.tag_column = value;
    } else if (key == "rho.order") {
      cfg.rho.order = static_cast<int>(parse_int_setting(key, value));
    } else if (key == "rho.train_fraction") {
      cfg.rho.train_fraction = parse_double_setting(key, value);
    } else if (key == "rho.heldout_fraction") {
      cfg.rho.heldout_fraction = parse_double_setting(key, value);
    } else if (key == "rho.token_min_count") {
      cfg.rho.token_min_count = parse_u64_setting(key, value);
    } else if (key == "rho.tag_min_count") {
      cfg.rho.tag_min_count = parse_u64_setting(key, value);
    } else if (key == "sgns.dim") {
      cfg.sgns.dim = static_cast<int>(parse_int_setting(key, value));
    } else if (key == "sgns.epochs") {
      cfg.sgns.epochs = static_cast<int>(parse_int_setting(key, value));
    } else if (key == "sgns.negatives") {
      cfg.sgns.negatives = static_cast<int>(parse_int_setting(key, value));
    } else if (key == "sgns.window") {
      cfg.sgns.window = static_cast<int>(parse_int_setting(key, value));
    } else if (key == "sgns.min_count") {
      cfg.sgns.min_count = static_cast<int>(parse_int_setting(key, value));
    } else if (key == "sgns.subsample_t") {
      cfg.sgns.subsample_t = parse_double_setting(key, value);
    } else if (key == "sgns.batch") {
      cfg.sgns.batch = static_cast<int>(parse_int_setting(key, value));
    } else if (key == "sgns.flip_subsample") {
      cfg.sgns.flip_subsample = parse_bool_setting(key, value);
    } else if (key == "sgns.optimizer") {
      if (value == "sgd") {
        cfg.sgns.optimizer = SgnsOptimizer::sgd;
      } else if (value == "adam") {
        cfg.sgns.optimizer = SgnsOptimizer::adam;
      } else {
        fail_config("config value for sgns.optimizer must be sgd or adam: " + value);
      }
    } else if (key == "sgns.lr") {
      cfg.sgns.initial_lr = parse_double_setting(key, value);
    } else if (key == "inlp.epsilon") {
      cfg.inlp_epsilon = parse_double_setting(key, value);
    } else if (key == "inlp.max_iters") {
      cfg.inlp_max_iters = static_cast<int>(parse_int_setting(key, value));
    } else if (key == "ladder.select_every") {
      cfg.ladder_select_every = static_cast<std::size_t>(parse_u64_setting(key, value));
    } else if (key == "output.dir") {
      cfg.output_dir = value;
    } else if (key == "seed") {
      cfg.seed = parse_u64_setting(key, value);
    } else {
      fail_config("unknown config key: " + key);
    }
  }
  // One seed drives the whole pipeline; the embedding trainer consumes it
  // directly rather than keeping a second knob.
  cfg.sgns.seed = cfg.seed;
}

inline PipelineConfig load_pipeline_config(const std::string& config_path,
                                           const SettingsMap& flag_overrides) {
  SettingsMap settings;
  if (!config_path.empty()) settings = parse_settings_file(config_path);
  for (const auto& [key, value] : flag_overrides) settings[key] = value;
  PipelineConfig cfg;
  apply_settings(cfg, settings);
  return cfg;
}

// Canonical "key = value" rendering of the effective settings, one line per
// key in sorted order. Two runs agree on this string exactly when they agree
// on every result-bearing setting.
inline std::string canonical_settings(const PipelineConfig& cfg) {
  using detail::format_double_setting;
  std::ostringstream out;
  out << "corpus.annotations = " << cfg.annotation_path << '\n'
      << "corpus.format = " << cfg.format << '\n'
      << "corpus.path = " << cfg.corpus_path << '\n'
      << "corpus.tag_column = " << cfg.tag_column << '\n'
      << "inlp.epsilon = " << format_double_setting(cfg.inlp_epsilon) << '\n'
      << "inlp.max_iters = " << cfg.inlp_max_iters << '\n'
      << "ladder.select_every = " << cfg.ladder_select_every << '\n'
      << "rho.heldout_fraction = " << format_double_setting(cfg.rho.heldout_fraction) << '\n'
      << "rho.order = " << cfg.rho.order << '\n'
      << "rho.tag_min_count = " << cfg.rho.tag_min_count << '\n'
      << "rho.token_min_count = " << cfg.rho.token_min_count << '\n'
      << "rho.train_fraction = " << format_double_setting(cfg.rho.train_fraction) << '\n'
      << "seed = " << cfg.seed << '\n'
      << "sgns.batch = " << cfg.sgns.batch << '\n'
      << "sgns.dim = " << cfg.sgns.dim << '\n'
      << "sgns.epochs = " << cfg.sgns.epochs << '\n'
      << "sgns.flip_subsample = " << (cfg.sgns.flip_subsample ? "true" : "false") << '\n'
      << "sgns.lr = " << format_double_setting(cfg.sgns.initial_lr) << '\n'
      << "sgns.min_count = " << cfg.sgns.min_count << '\n'
      << "sgns.negatives = " << cfg.sgns.negatives << '\n'
      << "sgns.optimizer = " << (cfg.sgns.optimizer == SgnsOptimizer::adam ? "adam" : "sgd")
      << '\n'
      << "sgns.subsample_t = " << format_double_setting(cfg.sgns.subsample_t) << '\n'
      << "sgns.window = " << cfg.sgns.window << '\n';
  return out.str();
}

inline std::string settings_hash(const std::string& canonical) {
  std::uint64_t h = fnv1a64(canonical.data(), canonical.size());
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

inline std::string config_hash(const PipelineConfig& cfg) {
  return settings_hash(canonical_settings(cfg));
}

}  // namespace entcoef
