#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "madv/cli.hpp"
#include "madv/io.hpp"

namespace madv::cli {

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys = {
      {"run_name", "default", "run directory name under the run root"},
      {"run_dir", "", "explicit run directory; overrides run_name and MADV_RUN_ROOT"},
      {"seed", "0", "seed for the attack and evaluation steps"},
      {"data_seed", "1", "seed for synthetic data generation"},
      {"domain", "image", "image | audio"},

      {"glyphs_per_class", "100", "glyph samples per class (80/20 train/test split)"},
      {"bug_count", "500", "procedural reference patches"},
      {"reference_dir", "", "directory of P6 images used instead of the procedural bugs"},
      {"audio_per_class", "60", "command clips per class"},
      {"chirp_count", "300", "chirp reference snippets"},

      {"classifier_seed", "7", "classifier initialisation and shuffling seed"},
      {"classifier_epochs", "10", "training epochs"},
      {"classifier_lr", "0.001", "Adam learning rate"},
      {"classifier_batch", "16", "minibatch size"},

      {"patch_size", "16", "patch side s (multiple of 4), or snippet length for audio"},
      {"gan_seed", "5", "GAN initialisation and pretraining seed"},
      {"gan_iterations", "300", "pretraining iterations"},
      {"gan_batch", "16", "pretraining batch size"},
      {"gan_lr", "0.0002", "Adam learning rate for G and D"},
      {"gan_beta1", "0.5", "Adam beta1 for G and D"},
      {"generator_loss", "minimax", "minimax | non_saturating"},
      {"cold_start", "false", "attack with freshly initialised G and D instead of the pretrained pair"},

      {"method", "pepg", "pepg | patch"},
      {"source_class", "4", "true class of the attacked input"},
      {"image_index", "0", "index of the attacked input among test samples of source_class"},
      {"target", "0", "target label t"},
      {"batch", "16", "batch size m"},
      {"alpha", "10", "weight of the classifier loss"},
      {"max_iterations", "5000", "iteration budget"},
      {"quota", "20", "adversarial examples to collect"},
      {"beta_mu_scale", "0.05", "beta_mu = beta_mu_scale * sigma_init"},
      {"beta_sigma_ratio", "0.5", "beta_sigma = beta_sigma_ratio * beta_mu"},
      {"sigma_min", "0.05", "floor on PEPG sigma"},
      {"audio_level", "0.5", "fixed snippet-to-host RMS level of the random-placement audio attack"},
      {"audio_level_max", "0.9", "upper bound of the PEPG snippet-to-host RMS level"},

      {"relocations", "10", "relocation trials per record"},
      {"heatmap_stride", "1", "heatmap centre stride in pixels"},
      {"heatmap_sweep", "false", "max over four right-angle rotations instead of the PEPG angle"},
      {"cam_trials", "20", "random placements compared against the PEPG placements"},
  };
  return keys;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool known(const std::string& key) {
  const auto& keys = config_keys();
  return std::any_of(keys.begin(), keys.end(), [&](const KeyInfo& k) { return k.key == key; });
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_[k.key] = k.default_value;
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.find('=') == std::string::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    }
    try {
      cfg.set_assignment(t);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.what());
  }
  return parse(text);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!known(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::int64_t RunConfig::integer(const std::string& key) const {
  const std::string& v = get(key);
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

std::size_t RunConfig::count(const std::string& key) const {
  const auto v = integer(key);
  if (v < 0) throw ConfigError(key + ": expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

std::uint64_t RunConfig::seed(const std::string& key) const {
  const std::string& v = get(key);
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || v[0] == '-' || used != v.size()) throw ConfigError(key + ": expected an unsigned seed, got '" + v + "'");
  return out;
}

double RunConfig::real(const std::string& key) const {
  const std::string& v = get(key);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

bool RunConfig::flag(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& k : config_keys()) out += k.key + " = " + values_.at(k.key) + "\n";
  return out;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path run_directory(const RunConfig& config) {
  if (!config.get("run_dir").empty()) return config.get("run_dir");
  const std::string name = config.get("run_name");
  if (name.empty() || name.find('/') != std::string::npos) throw ConfigError("run_name must be a plain name");
  if (const char* root = std::getenv("MADV_RUN_ROOT"); root && *root) return std::filesystem::path(root) / name;
  return std::filesystem::path("runs") / name;
}

}  // namespace madv::cli
