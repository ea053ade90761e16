#include "cet/harness/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cet/errors.hpp"

namespace cet::harness {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(value);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const double x = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ConfigError("config: key '" + key + "' wants a number, got '" +
                      value + "'");
  return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const unsigned long long x = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0' || value.front() == '-')
    throw ConfigError("config: key '" + key +
                      "' wants a non-negative integer, got '" + value + "'");
  return static_cast<std::uint64_t>(x);
}

}  // namespace

ConfigMap ConfigMap::parse_text(const std::string& text) {
  ConfigMap cfg;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key");
    for (const auto& [k, v] : cfg.entries_)
      if (k == key)
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": duplicate key '" + key + "'");
    cfg.entries_.emplace_back(key, value);
    cfg.used_.push_back(false);
  }
  return cfg;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

const std::string* ConfigMap::find(const std::string& key) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first == key) {
      used_[i] = true;
      return &entries_[i].second;
    }
  }
  return nullptr;
}

bool ConfigMap::has(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return true;
  return false;
}

std::string ConfigMap::get_string(const std::string& key,
                                  std::string fallback) {
  const std::string* v = find(key);
  return v ? *v : fallback;
}

double ConfigMap::get_double(const std::string& key, double fallback) {
  const std::string* v = find(key);
  return v ? parse_double(key, *v) : fallback;
}

std::size_t ConfigMap::get_size(const std::string& key, std::size_t fallback) {
  const std::string* v = find(key);
  return v ? static_cast<std::size_t>(parse_u64(key, *v)) : fallback;
}

std::uint64_t ConfigMap::get_u64(const std::string& key,
                                 std::uint64_t fallback) {
  const std::string* v = find(key);
  return v ? parse_u64(key, *v) : fallback;
}

std::vector<double> ConfigMap::get_doubles(const std::string& key,
                                           std::vector<double> fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const std::string& item : split_list(*v))
    out.push_back(parse_double(key, item));
  return out;
}

std::vector<std::uint64_t> ConfigMap::get_u64s(
    const std::string& key, std::vector<std::uint64_t> fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  std::vector<std::uint64_t> out;
  for (const std::string& item : split_list(*v))
    out.push_back(parse_u64(key, item));
  return out;
}

std::vector<std::string> ConfigMap::get_strings(
    const std::string& key, std::vector<std::string> fallback) {
  const std::string* v = find(key);
  return v ? split_list(*v) : fallback;
}

void ConfigMap::check_consumed() const {
  std::string unknown;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (used_[i]) continue;
    if (!unknown.empty()) unknown += ", ";
    unknown += entries_[i].first;
  }
  if (!unknown.empty()) throw ConfigError("config: unknown keys: " + unknown);
}

data::SyntheticConfig synthetic_from(ConfigMap& cfg) {
  data::SyntheticConfig s;
  s.n_companies = static_cast<int>(cfg.get_size("companies",
                                                static_cast<std::size_t>(s.n_companies)));
  s.n_quarters = static_cast<int>(cfg.get_size("quarters",
                                               static_cast<std::size_t>(s.n_quarters)));
  s.sectors = cfg.get_strings("sectors", s.sectors);
  s.base_vol = cfg.get_double("base_vol", s.base_vol);
  s.drift_strength = cfg.get_double("drift_strength", s.drift_strength);
  s.drift_decay = cfg.get_double("drift_decay", s.drift_decay);
  s.signal_map_seed = cfg.get_u64("signal_map_seed", s.signal_map_seed);
  s.seed = cfg.get_u64("seed", s.seed);
  s.rho_min = cfg.get_double("rho_min", s.rho_min);
  s.rho_max = cfg.get_double("rho_max", s.rho_max);
  s.level_sigma = cfg.get_double("level_sigma", s.level_sigma);
  s.open_jitter = cfg.get_double("open_jitter", s.open_jitter);
  s.volume_u = cfg.get_double("volume_u", s.volume_u);
  s.volume_noise = cfg.get_double("volume_noise", s.volume_noise);
  s.volume_base_sigma = cfg.get_double("volume_base_sigma", s.volume_base_sigma);
  s.earnings_noise = cfg.get_double("earnings_noise", s.earnings_noise);
  s.factor_dim = static_cast<int>(cfg.get_size("factor_dim",
                                               static_cast<std::size_t>(s.factor_dim)));
  s.signal_gain = cfg.get_double("signal_gain", s.signal_gain);
  s.first_announce_day = static_cast<int>(cfg.get_size(
      "first_announce_day", static_cast<std::size_t>(s.first_announce_day)));
  s.quarter_spacing = static_cast<int>(cfg.get_size(
      "quarter_spacing", static_cast<std::size_t>(s.quarter_spacing)));
  s.pre_days = static_cast<int>(cfg.get_size("pre_days",
                                             static_cast<std::size_t>(s.pre_days)));
  s.post_days = static_cast<int>(cfg.get_size("post_days",
                                              static_cast<std::size_t>(s.post_days)));
  return s;
}

void ExperimentConfig::validate() const {
  if (models.empty()) throw ConfigError("experiment: empty model list");
  if (seeds.empty()) throw ConfigError("experiment: empty seed list");
  model.validate();
  if (bars_csv.empty() != earnings_csv.empty())
    throw ConfigError("experiment: bars_csv and earnings_csv go together");
  if (bars_csv.empty()) synth.validate();
  if (batch_size == 0) throw ConfigError("experiment: batch_size must be > 0");
  if (pretrain_epochs == 0 || finetune_epochs == 0)
    throw ConfigError("experiment: epoch counts must be > 0");
  if (pretrain_lr <= 0.0 || finetune_lr <= 0.0)
    throw ConfigError("experiment: learning rates must be > 0");
  if (n_negatives == 0) throw ConfigError("experiment: n_negatives must be > 0");
  if (eps_hold <= 0.0) throw ConfigError("experiment: eps_hold must be > 0");
  if (fractions.empty()) throw ConfigError("experiment: empty fraction list");
  for (double f : fractions)
    if (f <= 0.0 || f + test_fraction > 1.0)
      throw ConfigError("experiment: fraction + test_fraction must stay in (0, 1]");
  if (test_fraction <= 0.0 || test_fraction >= 1.0)
    throw ConfigError("experiment: test_fraction must be in (0, 1)");
  if (k_max == 0) throw ConfigError("experiment: k_max must be > 0");
  if (k_max + model.omega > model.max_seq)
    throw ConfigError("experiment: k_max + omega exceeds the trading day");
}

ExperimentConfig experiment_from(ConfigMap& cfg) {
  ExperimentConfig e;
  e.synth = synthetic_from(cfg);

  const std::vector<std::string> default_models = {
      "cet", "ae", "mlm", "simclr", "suprep", "supraw", "supraw2"};
  for (const std::string& name : cfg.get_strings("models", default_models))
    e.models.push_back(model::kind_from_name(name));
  e.seeds = cfg.get_u64s("seeds", {1, 2, 3, 4, 5});
  e.master_seed = cfg.get_u64("master_seed", e.master_seed);

  e.bars_csv = cfg.get_string("bars_csv", "");
  e.earnings_csv = cfg.get_string("earnings_csv", "");

  e.model.d = cfg.get_size("d", e.model.d);
  e.model.omega = cfg.get_size("omega", e.model.omega);
  e.model.k_steps = cfg.get_size("k_steps", e.model.k_steps);
  e.model.layers = cfg.get_size("layers", e.model.layers);
  e.model.heads = cfg.get_size("heads", e.model.heads);
  e.model.ff_dim = cfg.get_size("ff_dim", e.model.ff_dim);
  e.model.enc_hidden = cfg.get_size("enc_hidden", e.model.enc_hidden);
  e.eps_hold = cfg.get_double("eps_hold", e.eps_hold);

  e.batch_size = cfg.get_size("batch_size", e.batch_size);
  e.pretrain_epochs = cfg.get_size("pretrain_epochs", e.pretrain_epochs);
  e.pretrain_steps = cfg.get_size("pretrain_steps", e.pretrain_steps);
  e.pretrain_val_batches =
      cfg.get_size("pretrain_val_batches", e.pretrain_val_batches);
  e.n_negatives = cfg.get_size("n_negatives", e.n_negatives);
  e.pretrain_lr = cfg.get_double("pretrain_lr", e.pretrain_lr);
  e.ae_weight_decay = cfg.get_double("ae_weight_decay", e.ae_weight_decay);

  e.finetune_epochs = cfg.get_size("finetune_epochs", e.finetune_epochs);
  e.finetune_steps = cfg.get_size("finetune_steps", e.finetune_steps);
  e.finetune_lr = cfg.get_double("finetune_lr", e.finetune_lr);

  const std::string mode = cfg.get_string("finetune_mode", "unfrozen");
  if (mode == "frozen")
    e.finetune_mode = pretrain::FinetuneMode::frozen;
  else if (mode == "unfrozen")
    e.finetune_mode = pretrain::FinetuneMode::unfrozen;
  else
    throw ConfigError("experiment: finetune_mode must be frozen or unfrozen");

  const std::string day_mode = cfg.get_string("day_mode", "unfrozen");
  if (day_mode == "frozen")
    e.day_mode = pretrain::FinetuneMode::frozen;
  else if (day_mode == "unfrozen")
    e.day_mode = pretrain::FinetuneMode::unfrozen;
  else
    throw ConfigError("experiment: day_mode must be frozen or unfrozen");

  e.eval_cap = cfg.get_size("eval_cap", e.eval_cap);
  e.fractions = cfg.get_doubles("fractions", e.fractions);
  e.test_fraction = cfg.get_double("test_fraction", e.test_fraction);
  e.k_max = cfg.get_size("k_max", e.k_max);

  e.mask_fraction = cfg.get_double("mask_fraction", e.mask_fraction);
  e.mask_span = cfg.get_size("mask_span", e.mask_span);
  e.noise_std = cfg.get_double("noise_std", e.noise_std);
  e.temperature = cfg.get_double("temperature", e.temperature);
  e.proj_dim = cfg.get_size("proj_dim", e.proj_dim);

  e.validate();
  return e;
}

pretrain::PretrainConfig make_pretrain_config(const ExperimentConfig& cfg) {
  pretrain::PretrainConfig pc;
  pc.model = cfg.model;
  pc.epochs = cfg.pretrain_epochs;
  pc.batch_size = cfg.batch_size;
  pc.n_negatives = cfg.n_negatives;
  pc.steps_per_epoch = cfg.pretrain_steps;
  pc.max_val_batches = cfg.pretrain_val_batches;
  pc.lr = cfg.pretrain_lr;
  pc.ae_weight_decay = cfg.ae_weight_decay;
  pc.seed = cfg.master_seed;
  return pc;
}

baselines::BaselineSpec make_baseline_spec(const ExperimentConfig& cfg,
                                           model::ModelKind kind) {
  baselines::BaselineSpec spec;
  spec.kind = kind;
  spec.model = cfg.model;
  spec.epochs = cfg.pretrain_epochs;
  spec.batch_size = cfg.batch_size;
  spec.steps_per_epoch = cfg.pretrain_steps;
  spec.max_val_batches = cfg.pretrain_val_batches;
  spec.lr = cfg.pretrain_lr;
  spec.ae_weight_decay = cfg.ae_weight_decay;
  spec.seed = cfg.master_seed;
  spec.mask_fraction = cfg.mask_fraction;
  spec.mask_span = cfg.mask_span;
  spec.noise_std = cfg.noise_std;
  spec.temperature = cfg.temperature;
  spec.proj_dim = cfg.proj_dim;
  return spec;
}

pretrain::SupervisedConfig make_supervised_config(const ExperimentConfig& cfg,
                                                  std::uint64_t seed) {
  pretrain::SupervisedConfig sup;
  sup.model = cfg.model;
  sup.epochs = cfg.finetune_epochs;
  sup.batch_size = cfg.batch_size;
  sup.steps_per_epoch = cfg.finetune_steps;
  sup.lr = cfg.finetune_lr;
  sup.eps_hold = cfg.eps_hold;
  sup.seed = seed;
  return sup;
}

}  // namespace cet::harness
