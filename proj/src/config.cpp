#include "kinterp/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace kinterp {
namespace {

void flatten(const json& j, const std::string& prefix,
             std::map<std::string, json>& out) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items())
      flatten(value, prefix.empty() ? key : prefix + "." + key, out);
  } else {
    out[prefix] = j;
  }
}

template <typename T>
T as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': invalid value " + v.dump());
  }
}

bool parse_on_off(const json& v, const std::string& key) {
  std::string s = as<std::string>(v, key);
  if (s == "on") return true;
  if (s == "off") return false;
  throw std::invalid_argument("config key '" + key + "': expected \"on\" or \"off\", got " +
                              v.dump());
}

void apply_key(RunConfig& cfg, const std::string& key, const json& v) {
  auto reject = [&]() -> void {
    throw std::invalid_argument("unknown config key '" + key + "'");
  };
  try {
    if (key == "seed") cfg.seed = as<uint64_t>(v, key);
    else if (key == "model.kernel_size") cfg.model.kernel_size = as<int>(v, key);
    else if (key == "model.dilation") cfg.model.dilation = as<int>(v, key);
    else if (key == "model.base_channels") cfg.model.features.base_channels = as<int>(v, key);
    else if (key == "model.hierarchies") cfg.model.features.hierarchies = as<int>(v, key);
    else if (key == "model.compensation") cfg.model.features.compensation = as<bool>(v, key);
    else if (key == "model.reference_scale")
      cfg.model.synthesis.reference_scale = as<float>(v, key);
    else if (key == "regression.mode")
      cfg.model.regression.mode = parse_regression_mode(as<std::string>(v, key));
    else if (key == "regression.shared_branches")
      cfg.model.regression.shared_branches = as<bool>(v, key);
    else if (key == "regression.hidden_channels")
      cfg.model.regression.hidden_channels = as<int>(v, key);
    else if (key == "cfse.enabled") cfg.model.cfse.enabled = as<bool>(v, key);
    else if (key == "cfse.source_features")
      cfg.model.cfse.sources = parse_cfse_sources(as<std::string>(v, key));
    else if (key == "cfse.gridnet") cfg.model.cfse.gridnet = parse_on_off(v, key);
    else if (key == "cfse.grid_channels") {
      auto ch = as<std::vector<int>>(v, key);
      if (ch.size() != 3)
        throw std::invalid_argument("config key 'cfse.grid_channels': expected 3 entries");
      std::copy(ch.begin(), ch.end(), cfg.model.cfse.grid_channels.begin());
    } else if (key == "cfse.grid_columns") cfg.model.cfse.grid_columns = as<int>(v, key);
    else if (key == "loss.lambda_vgg") cfg.loss.lambda_vgg = as<float>(v, key);
    else if (key == "loss.lambda_d") cfg.loss.lambda_d = as<float>(v, key);
    else if (key == "loss.epsilon") cfg.loss.epsilon = as<float>(v, key);
    else if (key == "loss.deformation_coarse") cfg.loss.deformation_coarse = as<bool>(v, key);
    else if (key == "perceptual.mode")
      cfg.perceptual.mode = parse_perceptual_mode(as<std::string>(v, key));
    else if (key == "perceptual.path") cfg.perceptual.plugin_path = as<std::string>(v, key);
    else if (key == "perceptual.seed") cfg.perceptual.seed = as<uint64_t>(v, key);
    else if (key == "train.lr_start") cfg.train.lr_start = as<float>(v, key);
    else if (key == "train.lr_decay") cfg.train.lr_decay = as<float>(v, key);
    else if (key == "train.lr_decay_every") cfg.train.lr_decay_every = as<int>(v, key);
    else if (key == "train.lr_floor") cfg.train.lr_floor = as<float>(v, key);
    else if (key == "train.beta1") cfg.train.beta1 = as<float>(v, key);
    else if (key == "train.beta2") cfg.train.beta2 = as<float>(v, key);
    else if (key == "train.batch_size") cfg.train.batch_size = as<int>(v, key);
    else if (key == "train.max_epochs") cfg.train.max_epochs = as<int>(v, key);
    else if (key == "train.grad_clip") cfg.train.grad_clip = as<bool>(v, key);
    else if (key == "train.grad_clip_norm") cfg.train.grad_clip_norm = as<float>(v, key);
    else if (key == "train.augment.horizontal_flip")
      cfg.train.augment.horizontal_flip = as<bool>(v, key);
    else if (key == "train.augment.vertical_flip")
      cfg.train.augment.vertical_flip = as<bool>(v, key);
    else if (key == "train.augment.temporal_reversal")
      cfg.train.augment.temporal_reversal = as<bool>(v, key);
    else if (key == "data.root") cfg.data.root = as<std::string>(v, key);
    else if (key == "data.train_split") cfg.data.train_split = as<std::string>(v, key);
    else if (key == "data.test_split") cfg.data.test_split = as<std::string>(v, key);
    else if (key == "data.train_count") cfg.data.train_count = as<int>(v, key);
    else if (key == "data.test_count") cfg.data.test_count = as<int>(v, key);
    else if (key == "data.height") cfg.data.height = as<int>(v, key);
    else if (key == "data.width") cfg.data.width = as<int>(v, key);
    else reject();
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    throw std::invalid_argument("config key '" + key + "': " + e.what());
  }
}

void validate(const RunConfig& cfg) {
  auto bad = [](const std::string& what) -> void {
    throw std::invalid_argument("config: " + what);
  };
  if (cfg.train.batch_size < 1) bad("train.batch_size must be positive");
  if (cfg.train.max_epochs < 1) bad("train.max_epochs must be positive");
  if (cfg.train.lr_start <= 0 || cfg.train.lr_floor <= 0) bad("learning rates must be positive");
  if (cfg.train.lr_decay <= 0 || cfg.train.lr_decay > 1)
    bad("train.lr_decay must lie in (0,1]");
  if (cfg.train.lr_decay_every < 1) bad("train.lr_decay_every must be positive");
  if (cfg.data.height < 16 || cfg.data.width < 16) bad("data.height/width must be >= 16");
  if (cfg.data.train_count < 0 || cfg.data.test_count < 0) bad("scene counts must be >= 0");
}

}  // namespace

float learning_rate_at(const TrainSettings& t, int epoch) {
  if (epoch < 0) throw std::invalid_argument("learning_rate_at: negative epoch");
  double lr = static_cast<double>(t.lr_start) *
              std::pow(static_cast<double>(t.lr_decay), epoch / t.lr_decay_every);
  return static_cast<float>(std::max(lr, static_cast<double>(t.lr_floor)));
}

PerceptualExtractor make_perceptual(const PerceptualSettings& s) {
  switch (s.mode) {
    case PerceptualMode::fixed_random: return PerceptualExtractor::fixed_random(s.seed);
    case PerceptualMode::external_plugin: return PerceptualExtractor::from_file(s.plugin_path);
    case PerceptualMode::disabled: return PerceptualExtractor::make_disabled();
  }
  throw std::logic_error("make_perceptual: unreachable");
}

std::string DataSettings::train_split_path() const {
  std::filesystem::path p(train_split);
  return p.is_absolute() ? p.string() : (std::filesystem::path(root) / p).string();
}

std::string DataSettings::test_split_path() const {
  std::filesystem::path p(test_split);
  return p.is_absolute() ? p.string() : (std::filesystem::path(root) / p).string();
}

GenerateOptions DataSettings::generate_options(uint64_t seed) const {
  GenerateOptions g;
  g.train_count = train_count;
  g.test_count = test_count;
  g.height = height;
  g.width = width;
  g.seed = seed;
  return g;
}

RunConfig default_run_config(const std::string& preset) {
  RunConfig cfg;
  cfg.preset = preset;
  if (preset == "full") {
    cfg.model = full_model_preset();
  } else if (preset == "desk") {
    cfg.model = desk_model_preset();
    cfg.train.batch_size = 4;
    cfg.train.max_epochs = 5;
  } else {
    throw std::invalid_argument("unknown preset '" + preset + "' (expected desk or full)");
  }
  return cfg;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config root must be a JSON object");

  std::map<std::string, json> flat;
  flatten(j, "", flat);

  std::string preset = "desk";
  if (auto it = flat.find("preset"); it != flat.end()) {
    preset = as<std::string>(it->second, "preset");
    flat.erase(it);
  }
  RunConfig cfg = default_run_config(preset);
  for (const auto& [key, value] : flat) apply_key(cfg, key, value);
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg, bool pretty) {
  json j;
  j["preset"] = cfg.preset;
  j["seed"] = cfg.seed;
  j["model"]["kernel_size"] = cfg.model.kernel_size;
  j["model"]["dilation"] = cfg.model.dilation;
  j["model"]["base_channels"] = cfg.model.features.base_channels;
  j["model"]["hierarchies"] = cfg.model.features.hierarchies;
  j["model"]["compensation"] = cfg.model.features.compensation;
  j["model"]["reference_scale"] = cfg.model.synthesis.reference_scale;
  j["regression"]["mode"] = to_string(cfg.model.regression.mode);
  j["regression"]["shared_branches"] = cfg.model.regression.shared_branches;
  j["regression"]["hidden_channels"] = cfg.model.regression.hidden_channels;
  j["cfse"]["enabled"] = cfg.model.cfse.enabled;
  j["cfse"]["source_features"] = to_string(cfg.model.cfse.sources);
  j["cfse"]["gridnet"] = cfg.model.cfse.gridnet ? "on" : "off";
  j["cfse"]["grid_channels"] = cfg.model.cfse.grid_channels;
  j["cfse"]["grid_columns"] = cfg.model.cfse.grid_columns;
  j["loss"]["lambda_vgg"] = cfg.loss.lambda_vgg;
  j["loss"]["lambda_d"] = cfg.loss.lambda_d;
  j["loss"]["epsilon"] = cfg.loss.epsilon;
  j["loss"]["deformation_coarse"] = cfg.loss.deformation_coarse;
  j["perceptual"]["mode"] = to_string(cfg.perceptual.mode);
  j["perceptual"]["path"] = cfg.perceptual.plugin_path;
  j["perceptual"]["seed"] = cfg.perceptual.seed;
  j["train"]["lr_start"] = cfg.train.lr_start;
  j["train"]["lr_decay"] = cfg.train.lr_decay;
  j["train"]["lr_decay_every"] = cfg.train.lr_decay_every;
  j["train"]["lr_floor"] = cfg.train.lr_floor;
  j["train"]["beta1"] = cfg.train.beta1;
  j["train"]["beta2"] = cfg.train.beta2;
  j["train"]["batch_size"] = cfg.train.batch_size;
  j["train"]["max_epochs"] = cfg.train.max_epochs;
  j["train"]["grad_clip"] = cfg.train.grad_clip;
  j["train"]["grad_clip_norm"] = cfg.train.grad_clip_norm;
  j["train"]["augment"]["horizontal_flip"] = cfg.train.augment.horizontal_flip;
  j["train"]["augment"]["vertical_flip"] = cfg.train.augment.vertical_flip;
  j["train"]["augment"]["temporal_reversal"] = cfg.train.augment.temporal_reversal;
  j["data"]["root"] = cfg.data.root;
  j["data"]["train_split"] = cfg.data.train_split;
  j["data"]["test_split"] = cfg.data.test_split;
  j["data"]["train_count"] = cfg.data.train_count;
  j["data"]["test_count"] = cfg.data.test_count;
  j["data"]["height"] = cfg.data.height;
  j["data"]["width"] = cfg.data.width;
  return j.dump(pretty ? 2 : -1);
}

}  // namespace kinterp
