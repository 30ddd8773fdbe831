#include "csfiqa/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "csfiqa/errors.hpp"

namespace csfiqa {

ModelConfig ModelConfig::reference_default() {
  ModelConfig c;
  c.img_size_small = 384;
  c.img_size_large = 224;
  c.patch_small = 12;
  c.patch_large = 16;
  c.dim_small = 192;
  c.dim_large = 384;
  c.depth_small = 1;
  c.depth_large = 4;
  c.heads = 6;
  c.decoder_depth = 1;
  c.channels = 3;
  return c;
}

ModelConfig ModelConfig::toy_default() { return ModelConfig{}; }

std::size_t ModelConfig::patches_small() const {
  return patch_grid_small() * patch_grid_small();
}

std::size_t ModelConfig::patches_large() const {
  return patch_grid_large() * patch_grid_large();
}

void ModelConfig::validate() const {
  if (img_size_small == 0 || img_size_large == 0 || patch_small == 0 || patch_large == 0)
    throw ConfigError("model: sizes must be positive");
  if (img_size_small % patch_small != 0)
    throw ConfigError("model: img_size_small not divisible by patch_small");
  if (img_size_large % patch_large != 0)
    throw ConfigError("model: img_size_large not divisible by patch_large");
  if (heads == 0 || dim_small % heads != 0 || dim_large % heads != 0)
    throw ConfigError("model: dims must be divisible by heads");
  if (depth_small == 0 || depth_large == 0 || decoder_depth == 0)
    throw ConfigError("model: depths must be >= 1");
  if (depth_small > depth_large)
    throw ConfigError("model: depth_small must not exceed depth_large");
  if (channels != 1 && channels != 3) throw ConfigError("model: channels must be 1 or 3");
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train: epochs must be >= 1");
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw ConfigError("train: split_fraction must be in (0,1)");
  if (lambda < 0.0) throw ConfigError("train: lambda must be >= 0");
  if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
  if (repeats == 0) throw ConfigError("train: repeats must be >= 1");
  if (lr <= 0.0 || lr_decay_factor <= 0.0 || lr_decay_every == 0)
    throw ConfigError("train: bad learning-rate schedule");
}

double TrainConfig::lr_at_epoch(std::size_t epoch) const {
  const std::size_t steps = epoch / lr_decay_every;
  return lr / std::pow(lr_decay_factor, static_cast<double>(steps));
}

void SclConfig::validate() const {
  if (tau <= 0.0) throw ConfigError("scl: tau must be > 0");
  if (nsm_regions == 0) throw ConfigError("scl: nsm_regions must be >= 1");
}

double SclConfig::resolve_beta_pair(double label_range) const {
  return beta_pair >= 0.0 ? beta_pair : 0.2 * label_range;
}

void SfaConfig::validate() const {
  if (!(alpha_k > 0.0 && alpha_k <= beta_k && beta_k <= 1.0))
    throw ConfigError("sfa: need 0 < alpha_k <= beta_k <= 1");
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  scl.validate();
  sfa.validate();
}

namespace {

std::string noise_mode_str(NoiseMode m) {
  return m == NoiseMode::kAllPairs ? "all_pairs" : "least_similar";
}
std::string noise_form_str(NoiseForm f) {
  return f == NoiseForm::kExpInverse ? "exp_inverse" : "reciprocal";
}
std::string sfa_mode_str(SfaMode m) {
  return m == SfaMode::kSelectAtt ? "select_att" : "cross_att";
}

std::size_t to_size(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long n = std::stoll(v, &pos);
    if (pos != v.size() || n < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "img_size_small") cfg.model.img_size_small = to_size(key, val);
    else if (key == "img_size_large") cfg.model.img_size_large = to_size(key, val);
    else if (key == "patch_small") cfg.model.patch_small = to_size(key, val);
    else if (key == "patch_large") cfg.model.patch_large = to_size(key, val);
    else if (key == "dim_small") cfg.model.dim_small = to_size(key, val);
    else if (key == "dim_large") cfg.model.dim_large = to_size(key, val);
    else if (key == "depth_small") cfg.model.depth_small = to_size(key, val);
    else if (key == "depth_large") cfg.model.depth_large = to_size(key, val);
    else if (key == "heads") cfg.model.heads = to_size(key, val);
    else if (key == "decoder_depth") cfg.model.decoder_depth = to_size(key, val);
    else if (key == "channels") cfg.model.channels = to_size(key, val);
    else if (key == "epochs") cfg.train.epochs = to_size(key, val);
    else if (key == "lr") cfg.train.lr = to_double(key, val);
    else if (key == "lr_decay_factor") cfg.train.lr_decay_factor = to_double(key, val);
    else if (key == "lr_decay_every") cfg.train.lr_decay_every = to_size(key, val);
    else if (key == "batch_size") cfg.train.batch_size = to_size(key, val);
    else if (key == "lambda") cfg.train.lambda = to_double(key, val);
    else if (key == "repeats") cfg.train.repeats = to_size(key, val);
    else if (key == "split_fraction") cfg.train.split_fraction = to_double(key, val);
    else if (key == "seed") cfg.train.seed = to_size(key, val);
    else if (key == "tau") cfg.scl.tau = to_double(key, val);
    else if (key == "beta_pair") cfg.scl.beta_pair = to_double(key, val);
    else if (key == "nsm_regions") cfg.scl.nsm_regions = to_size(key, val);
    else if (key == "noise_mode") {
      if (val == "all_pairs") cfg.scl.noise_mode = NoiseMode::kAllPairs;
      else if (val == "least_similar") cfg.scl.noise_mode = NoiseMode::kLeastSimilar;
      else throw ConfigError("config: bad noise_mode '" + val + "'");
    } else if (key == "noise_form") {
      if (val == "exp_inverse") cfg.scl.noise_form = NoiseForm::kExpInverse;
      else if (val == "reciprocal") cfg.scl.noise_form = NoiseForm::kReciprocal;
      else throw ConfigError("config: bad noise_form '" + val + "'");
    } else if (key == "alpha_k") cfg.sfa.alpha_k = to_double(key, val);
    else if (key == "beta_k") cfg.sfa.beta_k = to_double(key, val);
    else if (key == "icm_frozen_seed") cfg.sfa.icm_frozen_seed = to_size(key, val);
    else if (key == "sfa_mode") {
      if (val == "select_att") cfg.sfa.mode = SfaMode::kSelectAtt;
      else if (val == "cross_att") cfg.sfa.mode = SfaMode::kCrossAtt;
      else throw ConfigError("config: bad sfa_mode '" + val + "'");
    } else {
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" +
                        key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "img_size_small=" << cfg.model.img_size_small << "\n"
     << "img_size_large=" << cfg.model.img_size_large << "\n"
     << "patch_small=" << cfg.model.patch_small << "\n"
     << "patch_large=" << cfg.model.patch_large << "\n"
     << "dim_small=" << cfg.model.dim_small << "\n"
     << "dim_large=" << cfg.model.dim_large << "\n"
     << "depth_small=" << cfg.model.depth_small << "\n"
     << "depth_large=" << cfg.model.depth_large << "\n"
     << "heads=" << cfg.model.heads << "\n"
     << "decoder_depth=" << cfg.model.decoder_depth << "\n"
     << "channels=" << cfg.model.channels << "\n"
     << "epochs=" << cfg.train.epochs << "\n"
     << "lr=" << cfg.train.lr << "\n"
     << "lr_decay_factor=" << cfg.train.lr_decay_factor << "\n"
     << "lr_decay_every=" << cfg.train.lr_decay_every << "\n"
     << "batch_size=" << cfg.train.batch_size << "\n"
     << "lambda=" << cfg.train.lambda << "\n"
     << "repeats=" << cfg.train.repeats << "\n"
     << "split_fraction=" << cfg.train.split_fraction << "\n"
     << "seed=" << cfg.train.seed << "\n"
     << "tau=" << cfg.scl.tau << "\n"
     << "beta_pair=" << cfg.scl.beta_pair << "\n"
     << "nsm_regions=" << cfg.scl.nsm_regions << "\n"
     << "noise_mode=" << noise_mode_str(cfg.scl.noise_mode) << "\n"
     << "noise_form=" << noise_form_str(cfg.scl.noise_form) << "\n"
     << "alpha_k=" << cfg.sfa.alpha_k << "\n"
     << "beta_k=" << cfg.sfa.beta_k << "\n"
     << "icm_frozen_seed=" << cfg.sfa.icm_frozen_seed << "\n"
     << "sfa_mode=" << sfa_mode_str(cfg.sfa.mode) << "\n";
  return os.str();
}

}  // namespace csfiqa
