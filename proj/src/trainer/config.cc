#include <cmath>
#include <fstream>
#include <set>

#include "dsdst/error.h"
#include "dsdst/trainer.h"

namespace dsdst::trainer {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "learning_rate", "warmup_proportion", "batch_size",    "max_epochs",   "eval_every_iterations",
      "max_len",       "seed",              "margin",        "max_steps",    "adam_beta1",
      "adam_beta2",    "adam_epsilon",      "weight_decay",  "max_grad_norm", "vocab_size",
      "max_span_len",  "encoder",           "init_weights",  "init_weights_format",
      "value_pooling"};
  return keys;
}

const std::set<std::string>& known_encoder_keys() {
  static const std::set<std::string> keys = {"layers",  "hidden",     "heads",   "feedforward",
                                             "max_len", "vocab_size", "dropout", "init_std"};
  return keys;
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& message) {
    if (!ok) fail(ErrorKind::kConfig, message);
  };
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(warmup_proportion > 0.0 && warmup_proportion < 1.0, "warmup_proportion must lie in (0, 1)");
  require(batch_size > 0, "batch_size must be positive");
  require(max_epochs >= 0, "max_epochs must be non-negative");
  require(eval_every_iterations > 0, "eval_every_iterations must be positive");
  require(max_len >= 4, "max_len must be at least 4");
  require(margin > 0.0, "margin must be positive");
  require(max_steps >= 0, "max_steps must be non-negative");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1 must lie in [0, 1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2 must lie in [0, 1)");
  require(adam_epsilon > 0.0, "adam_epsilon must be positive");
  require(weight_decay >= 0.0, "weight_decay must be non-negative");
  require(max_grad_norm > 0.0, "max_grad_norm must be positive");
  require(vocab_size >= 4, "vocab_size must be at least 4");
  require(max_span_len > 0, "max_span_len must be positive");
  require(init_weights_format == "native" || init_weights_format == "bert",
          "init_weights_format must be 'native' or 'bert'");
  model_config(vocab_size);
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["learning_rate"] = learning_rate;
  j["warmup_proportion"] = warmup_proportion;
  j["batch_size"] = batch_size;
  j["max_epochs"] = max_epochs;
  j["eval_every_iterations"] = eval_every_iterations;
  j["max_len"] = max_len;
  j["seed"] = seed;
  j["margin"] = margin;
  j["value_pooling"] = value_pooling;
  j["max_steps"] = max_steps;
  j["adam_beta1"] = adam_beta1;
  j["adam_beta2"] = adam_beta2;
  j["adam_epsilon"] = adam_epsilon;
  j["weight_decay"] = weight_decay;
  j["max_grad_norm"] = max_grad_norm;
  j["vocab_size"] = vocab_size;
  j["max_span_len"] = max_span_len;
  j["encoder"] = encoder.to_json();
  j["init_weights"] = init_weights;
  j["init_weights_format"] = init_weights_format;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorKind::kConfig, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().count(key)) fail(ErrorKind::kConfig, "unknown config field '" + key + "'");
  }
  TrainConfig c;
  read(j, "learning_rate", c.learning_rate);
  read(j, "warmup_proportion", c.warmup_proportion);
  read(j, "batch_size", c.batch_size);
  read(j, "max_epochs", c.max_epochs);
  read(j, "eval_every_iterations", c.eval_every_iterations);
  read(j, "max_len", c.max_len);
  read(j, "seed", c.seed);
  read(j, "margin", c.margin);
  read(j, "value_pooling", c.value_pooling);
  read(j, "max_steps", c.max_steps);
  read(j, "adam_beta1", c.adam_beta1);
  read(j, "adam_beta2", c.adam_beta2);
  read(j, "adam_epsilon", c.adam_epsilon);
  read(j, "weight_decay", c.weight_decay);
  read(j, "max_grad_norm", c.max_grad_norm);
  read(j, "vocab_size", c.vocab_size);
  read(j, "max_span_len", c.max_span_len);
  read(j, "init_weights", c.init_weights);
  read(j, "init_weights_format", c.init_weights_format);
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    if (!e.is_object()) fail(ErrorKind::kConfig, "config field 'encoder' must be an object");
    for (const auto& [key, value] : e.items()) {
      if (!known_encoder_keys().count(key)) {
        fail(ErrorKind::kConfig, "unknown encoder config field '" + key + "'");
      }
    }
    try {
      c.encoder = model::EncoderConfig::from_json(e, c.encoder);
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorKind::kConfig, std::string("encoder config: ") + ex.what());
    }
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return from_json(j);
}

model::ModelConfig TrainConfig::model_config(std::size_t vocab_size_actual) const {
  model::ModelConfig m;
  m.encoder = encoder;
  m.encoder.max_len = max_len;
  m.encoder.vocab_size = static_cast<int>(vocab_size_actual);
  m.margin = margin;
  m.value_pooling = model::parse_value_pooling(value_pooling);
  m.encoder.validate();
  return m;
}

double lr_at(int step, int total_steps, const TrainConfig& config) {
  if (total_steps <= 0) fail(ErrorKind::kConfig, "learning-rate schedule needs total_steps > 0");
  if (step < 0 || step > total_steps) {
    fail(ErrorKind::kRange, "step " + std::to_string(step) + " outside [0, " +
                                std::to_string(total_steps) + "]");
  }
  const double warmup = config.warmup_proportion * total_steps;
  const double s = step;
  if (s < warmup) return config.learning_rate * s / warmup;
  return config.learning_rate * std::max(0.0, (total_steps - s) / (total_steps - warmup));
}

int planned_steps(std::size_t example_count, const TrainConfig& config) {
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t per_epoch = (example_count + batch - 1) / batch;
  std::size_t total = per_epoch * static_cast<std::size_t>(config.max_epochs);
  if (config.max_steps > 0) total = std::min(total, static_cast<std::size_t>(config.max_steps));
  return static_cast<int>(total);
}

}  // namespace dsdst::trainer
