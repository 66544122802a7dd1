#include <cmath>
#include <limits>

#include "dsdst/error.h"
#include "dsdst/model.h"

namespace dsdst::model {
namespace {

// d cos(r, y) / d r
Vector cosine_grad(const Vector& r, const Vector& y) {
  double nr = r.norm();
  double ny = y.norm();
  if (nr == 0.0 || ny == 0.0) return Vector::Zero(r.size());
  double c = r.dot(y) / (nr * ny);
  return y / (nr * ny) - c * r / (nr * nr);
}

}  // namespace

std::string to_string(ValuePooling pooling) { return pooling == ValuePooling::kCls ? "cls" : "mean"; }

ValuePooling parse_value_pooling(const std::string& text) {
  if (text == "mean") return ValuePooling::kMean;
  if (text == "cls") return ValuePooling::kCls;
  fail(ErrorKind::kConfig, "value_pooling must be 'mean' or 'cls', got '" + text + "'");
}

nlohmann::ordered_json ModelConfig::to_json() const {
  return {{"encoder", encoder.to_json()}, {"margin", margin}, {"value_pooling", to_string(value_pooling)}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j, ModelConfig c) {
  if (j.contains("encoder")) c.encoder = EncoderConfig::from_json(j.at("encoder"), c.encoder);
  c.margin = j.value("margin", c.margin);
  if (j.contains("value_pooling")) c.value_pooling = parse_value_pooling(j.at("value_pooling").get<std::string>());
  return c;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) { return from_json(j, ModelConfig{}); }

DualStrategyModel::DualStrategyModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config) {
  std::mt19937_64 rng(seed);
  Encoder::create(config.encoder, trainable_, kEncoderPrefix, rng);
  const int d = config.encoder.hidden;
  std::normal_distribution<double> normal(0.0, 1.0);
  auto init = [&](Matrix& m) {
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      double z;
      do {
        z = normal(rng);
      } while (std::abs(z) > 2.0);
      m.data()[k] = z * config.encoder.init_std;
    }
  };
  init(trainable_[trainable_.add("gate.weight", corpus::kGateClasses, d, true)]);
  trainable_.add("gate.bias", 1, corpus::kGateClasses, false);
  init(trainable_[trainable_.add("span.weight", 2, d, true)]);
  trainable_.add("span.bias", 1, 2, false);
  trainable_.round_to_float();

  for (const auto& name : encoder_parameter_names(config.encoder, kEncoderPrefix)) {
    std::size_t src = trainable_.index(name);
    std::string frozen_name = kValueEncoderPrefix + name.substr(kEncoderPrefix.size());
    std::size_t dst = frozen_.add(frozen_name, trainable_[src].rows(), trainable_[src].cols(),
                                  trainable_.decays(src));
    frozen_[dst] = trainable_[src];
  }
  bind();
}

DualStrategyModel::DualStrategyModel(const ModelConfig& config, ParameterSet trainable,
                                     ParameterSet frozen)
    : config_(config), trainable_(std::move(trainable)), frozen_(std::move(frozen)) {
  bind();
}

void DualStrategyModel::bind() {
  encoder_ = Encoder::attach(config_.encoder, trainable_, kEncoderPrefix);
  value_encoder_ = Encoder::attach(config_.encoder, frozen_, kValueEncoderPrefix);
  gate_w_ = trainable_.index("gate.weight");
  gate_b_ = trainable_.index("gate.bias");
  span_w_ = trainable_.index("span.weight");
  span_b_ = trainable_.index("span.bias");
  const Eigen::Index d = config_.encoder.hidden;
  if (trainable_[gate_w_].rows() != corpus::kGateClasses || trainable_[gate_w_].cols() != d ||
      trainable_[span_w_].rows() != 2 || trainable_[span_w_].cols() != d) {
    fail(ErrorKind::kShape, "head parameters do not match hidden size");
  }
}

int DualStrategyModel::import_weights(const std::map<std::string, Matrix>& tensors) {
  int count = 0;
  auto assign = [&](ParameterSet& set, const std::string& name, const Matrix& value) {
    auto i = set.find(name);
    if (!i) return false;
    if (set[*i].rows() != value.rows() || set[*i].cols() != value.cols()) {
      fail(ErrorKind::kShape, "imported tensor '" + name + "' has shape " +
                                  std::to_string(value.rows()) + "x" + std::to_string(value.cols()) +
                                  ", expected " + std::to_string(set[*i].rows()) + "x" +
                                  std::to_string(set[*i].cols()));
    }
    set[*i] = value;
    return true;
  };
  for (const auto& [name, value] : tensors) {
    bool used = false;
    if (name.starts_with(kValueEncoderPrefix)) {
      used = assign(frozen_, name, value);
    } else {
      used = assign(trainable_, name, value);
      if (name.starts_with(kEncoderPrefix)) {
        assign(frozen_, kValueEncoderPrefix + name.substr(kEncoderPrefix.size()), value);
      }
    }
    count += used ? 1 : 0;
  }
  trainable_.round_to_float();
  frozen_.round_to_float();
  value_cache_.clear();
  value_reps_.clear();
  return count;
}

Vector DualStrategyModel::encode_value(const std::string& value,
                                       const textenc::Vocabulary& vocab) const {
  if (auto it = value_cache_.find(value); it != value_cache_.end()) return it->second;
  textenc::EncodedExample input = textenc::build_value_input(value, vocab, config_.encoder.max_len);
  Matrix hidden = value_encoder_.forward(input.ids, input.segments, frozen_, nullptr, nullptr);
  const bool cls = config_.value_pooling == ValuePooling::kCls || hidden.rows() <= 2;
  const Vector rep = cls ? Vector(hidden.row(0).transpose())
                         : Vector(hidden.middleRows(1, hidden.rows() - 2).colwise().mean().transpose());
  value_cache_.emplace(value, rep);
  return rep;
}

void DualStrategyModel::prepare_picklists(const corpus::SlotSchema& schema,
                                          const textenc::Vocabulary& vocab) {
  value_reps_.clear();
  for (const auto& pair : schema.pairs()) {
    if (!pair.categorical()) continue;
    Matrix reps(static_cast<Eigen::Index>(pair.picklist.size()), config_.encoder.hidden);
    for (std::size_t l = 0; l < pair.picklist.size(); ++l) {
      reps.row(static_cast<Eigen::Index>(l)) = encode_value(pair.picklist[l], vocab).transpose();
    }
    value_reps_.emplace(pair.id, std::move(reps));
  }
}

const Matrix& DualStrategyModel::value_reps(int slot) const {
  auto it = value_reps_.find(slot);
  if (it == value_reps_.end()) {
    fail(ErrorKind::kSchema, "no picklist representations for slot " + std::to_string(slot));
  }
  return it->second;
}

bool DualStrategyModel::has_value_reps(int slot) const { return value_reps_.count(slot) > 0; }

SlotContextEncoding DualStrategyModel::encode_slot_context(
    const textenc::EncodedExample& example) const {
  SlotContextEncoding out;
  out.token_reps = encoder_.forward(example.ids, example.segments, trainable_, nullptr, nullptr);
  out.r_cls = out.token_reps.row(0).transpose();
  return out;
}

Vector DualStrategyModel::gate_probs(const Vector& r_cls) const {
  return model::gate_probs(r_cls, trainable_[gate_w_], trainable_[gate_b_]);
}

SpanLogits DualStrategyModel::span_logits(const Matrix& token_reps, int context_begin,
                                          int context_end) const {
  return model::span_logits(token_reps, trainable_[span_w_], trainable_[span_b_], context_begin,
                            context_end);
}

LossParts DualStrategyModel::example_loss(const textenc::EncodedExample& example,
                                          const Target& target, ParameterSet* grads,
                                          std::mt19937_64* dropout_rng) const {
  Encoder::Tape tape;
  Matrix hidden = encoder_.forward(example.ids, example.segments, trainable_,
                                   grads != nullptr ? &tape : nullptr, dropout_rng);
  const Vector r_cls = hidden.row(0).transpose();
  Matrix d_hidden;
  Vector d_r;
  if (grads != nullptr) {
    d_hidden = Matrix::Zero(hidden.rows(), hidden.cols());
    d_r = Vector::Zero(r_cls.size());
  }

  LossParts parts;
  const int gate_class = static_cast<int>(target.gate);
  Vector p_gate = gate_probs(r_cls);
  parts.gate = gate_loss(p_gate, gate_class);
  if (grads != nullptr && p_gate(gate_class) > kLogEpsilon) {
    Vector d_logits = p_gate;
    d_logits(gate_class) -= 1.0;
    (*grads)[gate_w_].noalias() += d_logits * r_cls.transpose();
    (*grads)[gate_b_].row(0) += d_logits.transpose();
    d_r.noalias() += trainable_[gate_w_].transpose() * d_logits;
  }

  if (target.gate == corpus::Gate::kPrediction) {
    if (target.kind == corpus::SlotKind::kNonCategorical) {
      if (example.gold_start && example.gold_end) {
        const int ys = *example.gold_start;
        const int ye = *example.gold_end;
        SpanLogits logits = span_logits(hidden, example.context_begin, example.context_end);
        Vector p_start = span_probs(logits.start);
        Vector p_end = span_probs(logits.end);
        parts.span = span_loss(p_start, p_end, ys, ye);
        if (grads != nullptr) {
          Vector d_start = p_start;
          Vector d_end = p_end;
          if (p_start(ys) > kLogEpsilon) d_start(ys) -= 1.0; else d_start.setZero();
          if (p_end(ye) > kLogEpsilon) d_end(ye) -= 1.0; else d_end.setZero();
          const Matrix& w = trainable_[span_w_];
          Matrix& gw = (*grads)[span_w_];
          Matrix& gb = (*grads)[span_b_];
          for (int i = example.context_begin; i < example.context_end; ++i) {
            gw.row(0) += d_start(i) * hidden.row(i);
            gw.row(1) += d_end(i) * hidden.row(i);
            d_hidden.row(i) += d_start(i) * w.row(0) + d_end(i) * w.row(1);
          }
          gb(0, 0) += d_start.sum();
          gb(0, 1) += d_end.sum();
        }
      } else {
        parts.skipped_spans = 1;
      }
    } else if (target.picklist_index) {
      const Matrix& reps = value_reps(target.slot);
      const int t = *target.picklist_index;
      if (t < 0 || t >= reps.rows()) fail(ErrorKind::kRange, "picklist target out of range");
      parts.picklist = picklist_loss(r_cls, reps, t, config_.margin);
      if (grads != nullptr && parts.picklist > 0.0) {
        Eigen::Index negative = -1;
        double best = -std::numeric_limits<double>::infinity();
        for (Eigen::Index l = 0; l < reps.rows(); ++l) {
          if (l == t) continue;
          double c = cosine(r_cls, reps.row(l).transpose());
          if (c > best) {
            best = c;
            negative = l;
          }
        }
        d_r -= cosine_grad(r_cls, reps.row(t).transpose());
        d_r += cosine_grad(r_cls, reps.row(negative).transpose());
      }
    }
  }

  if (grads != nullptr) {
    d_hidden.row(0) += d_r.transpose();
    encoder_.backward(tape, d_hidden, trainable_, *grads);
  }
  return parts;
}

}  // namespace dsdst::model
