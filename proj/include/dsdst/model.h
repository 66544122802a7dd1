#ifndef DSDST_MODEL_H_
#define DSDST_MODEL_H_

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dsdst/corpus.h"
#include "dsdst/encoder.h"
#include "dsdst/tensor.h"
#include "dsdst/textenc.h"

namespace dsdst::model {

inline constexpr double kLogEpsilon = 1e-12;

// ---------------------------------------------------------------------------
// Head primitives. Each is a pure function of its inputs so it can be checked
// against scalar recomputation.

// softmax(W r + b) over the three gate classes.
Vector gate_probs(const Vector& r_cls, const Matrix& weight, const Matrix& bias);

// -log(P[target]), with P[target] clamped below by kLogEpsilon.
double gate_loss(const Vector& probs, int target);

// Start and end logits for every position; positions outside
// [context_begin, context_end) are -infinity.
struct SpanLogits {
  Vector start;
  Vector end;
};
SpanLogits span_logits(const Matrix& token_reps, const Matrix& weight, const Matrix& bias,
                       int context_begin, int context_end);

// Softmax over the finite entries; masked entries get exactly 0. Throws
// kDecode when every entry is masked.
Vector span_probs(const Vector& logits);

// -log p_start[y_start] - log p_end[y_end].
double span_loss(const Vector& p_start, const Vector& p_end, int y_start, int y_end);

// Cosine similarity; 0 (with a warning) when either vector has zero norm.
double cosine(const Vector& a, const Vector& b);

// max(0, margin - cos(r, y_target) + max_{l != target} cos(r, y_l)); zero
// when the picklist has a single entry. `value_reps` holds one row per value.
double picklist_loss(const Vector& r_cls, const Matrix& value_reps, int target, double margin);

// ---------------------------------------------------------------------------

// How the value encoder pools its output into one vector: "mean" averages
// the value tokens, "cls" takes the [CLS] position.
enum class ValuePooling { kMean, kCls };

std::string to_string(ValuePooling pooling);
ValuePooling parse_value_pooling(const std::string& text);

struct ModelConfig {
  EncoderConfig encoder;
  double margin = 0.5;
  ValuePooling value_pooling = ValuePooling::kMean;

  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j, ModelConfig defaults);
  static ModelConfig from_json(const nlohmann::json& j);
};

// Training target for one (turn, slot) example.
struct Target {
  corpus::Gate gate = corpus::Gate::kNone;
  corpus::SlotKind kind = corpus::SlotKind::kCategorical;
  int slot = 0;
  std::optional<int> picklist_index;  // categorical, prediction, covered
};

struct LossParts {
  double gate = 0.0;
  double span = 0.0;
  double picklist = 0.0;
  int skipped_spans = 0;  // non-categorical predictions without a projectable gold span

  double total() const { return gate + span + picklist; }
  LossParts& operator+=(const LossParts& o) {
    gate += o.gate;
    span += o.span;
    picklist += o.picklist;
    skipped_spans += o.skipped_spans;
    return *this;
  }
};

// R = [r_cls, r_1 .. r_{K-1}] for one slot-context input.
struct SlotContextEncoding {
  Vector r_cls;
  Matrix token_reps;  // all K rows, row 0 included
};

// Slot-context encoder plus gate, span and picklist heads, with a frozen copy
// of the encoder that embeds picklist values.
class DualStrategyModel {
 public:
  DualStrategyModel() = default;
  // Fresh initialization from `seed`; the value encoder is a snapshot of the
  // slot-context encoder's initial weights.
  DualStrategyModel(const ModelConfig& config, std::uint64_t seed);
  // Rebinds to existing parameter sets (checkpoint load).
  DualStrategyModel(const ModelConfig& config, ParameterSet trainable, ParameterSet frozen);

  const ModelConfig& config() const { return config_; }
  ParameterSet& trainable() { return trainable_; }
  const ParameterSet& trainable() const { return trainable_; }
  const ParameterSet& frozen() const { return frozen_; }
  const Encoder& encoder() const { return encoder_; }
  const Encoder& value_encoder() const { return value_encoder_; }

  // Copies matching tensors from an external name -> tensor map (pretrained
  // weights). Names may use either encoder prefix; encoder tensors are also
  // copied into the frozen value encoder. Returns the number of tensors set.
  int import_weights(const std::map<std::string, Matrix>& tensors);

  // ----- value encoder / picklist state

  // Frozen-encoder output on [CLS] value [SEP], pooled per value_pooling; cached.
  // The cache makes this the one non-const-safe read: do not call it from
  // several threads at once.
  Vector encode_value(const std::string& value, const textenc::Vocabulary& vocab) const;
  // Builds the L x d value matrix of every categorical pair.
  void prepare_picklists(const corpus::SlotSchema& schema, const textenc::Vocabulary& vocab);
  const Matrix& value_reps(int slot) const;
  bool has_value_reps(int slot) const;

  // ----- forward

  SlotContextEncoding encode_slot_context(const textenc::EncodedExample& example) const;
  Vector gate_probs(const Vector& r_cls) const;
  SpanLogits span_logits(const Matrix& token_reps, int context_begin, int context_end) const;

  // Loss of one example under the gating rule; when `grads` is non-null the
  // gradient of that loss w.r.t. the trainable parameters is accumulated.
  // Dropout is active iff `dropout_rng` is non-null.
  LossParts example_loss(const textenc::EncodedExample& example, const Target& target,
                         ParameterSet* grads, std::mt19937_64* dropout_rng) const;

  // Gradient of the summed loss w.r.t. the frozen value encoder. Value
  // representations are constants of the objective, so this is all zeros;
  // exposed so callers can verify it.
  ParameterSet frozen_gradients() const { return frozen_.zeros_like(); }

  std::size_t gate_weight_index() const { return gate_w_; }
  std::size_t gate_bias_index() const { return gate_b_; }
  std::size_t span_weight_index() const { return span_w_; }
  std::size_t span_bias_index() const { return span_b_; }

 private:
  void bind();

  ModelConfig config_;
  ParameterSet trainable_;
  ParameterSet frozen_;
  Encoder encoder_;
  Encoder value_encoder_;
  std::size_t gate_w_ = 0, gate_b_ = 0, span_w_ = 0, span_b_ = 0;
  std::map<int, Matrix> value_reps_;
  mutable std::map<std::string, Vector> value_cache_;
};

inline const std::string kEncoderPrefix = "encoder.";
inline const std::string kValueEncoderPrefix = "value_encoder.";

}  // namespace dsdst::model

#endif  // DSDST_MODEL_H_
