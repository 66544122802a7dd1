#ifndef DSDST_TRACKER_H_
#define DSDST_TRACKER_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dsdst/corpus.h"
#include "dsdst/model.h"
#include "dsdst/textenc.h"

namespace dsdst::tracker {

inline constexpr int kDefaultMaxSpanLen = 10;
inline constexpr int kDumpSchemaVersion = 1;

struct SlotPrediction {
  int slot = 0;
  std::vector<double> gate_probs;  // none, dontcare, prediction
  corpus::Gate decoded_gate = corpus::Gate::kNone;
  std::string value = "none";
  std::optional<std::pair<int, int>> span;     // absolute positions, inclusive
  std::optional<std::vector<double>> picklist_scores;
};

// Cumulative state after turn `turn`: one (pair name, value) entry per
// schema pair, in schema order.
struct TrackedState {
  std::string dialogue_id;
  int turn = 0;
  std::vector<std::pair<std::string, std::string>> slots;

  bool operator==(const TrackedState&) const = default;
};

// argmax with ties going to the lower class index.
corpus::Gate argmax_gate(const std::vector<double>& probs);

struct SpanChoice {
  int start = 0;
  int end = 0;
  double score = 0.0;
};

// argmax of p_start[i] * p_end[k] over begin <= i <= k < end with
// k - i < max_span_len; ties go to the smallest i, then the smallest k.
SpanChoice decode_span(const model::Vector& p_start, const model::Vector& p_end, int begin,
                       int end, int max_span_len = kDefaultMaxSpanLen);

struct PicklistChoice {
  int index = 0;
  std::string value;
  std::vector<double> scores;
};

// argmax over cosine(r_cls, value_reps.row(l)); ties go to the lowest index.
PicklistChoice decode_picklist(const model::Vector& r_cls, const model::Matrix& value_reps,
                               const std::vector<std::string>& picklist);

// Turn-level predictor. `forced_gates`, when given, replaces the decoded gate
// of every pair (oracle-gate mode) while value decoding stays unchanged.
class TurnPredictor {
 public:
  virtual ~TurnPredictor() = default;
  virtual std::vector<SlotPrediction> predict_turn(
      const corpus::Dialogue& dialogue, int t,
      const std::vector<corpus::Gate>* forced_gates = nullptr) const = 0;
};

class ModelPredictor : public TurnPredictor {
 public:
  // `model` must have its picklists prepared for `schema`.
  ModelPredictor(const model::DualStrategyModel& model, const corpus::SlotSchema& schema,
                 const textenc::Vocabulary& vocab, int max_len,
                 int max_span_len = kDefaultMaxSpanLen,
                 const corpus::Normalizer& normalizer = corpus::default_normalizer());

  std::vector<SlotPrediction> predict_turn(
      const corpus::Dialogue& dialogue, int t,
      const std::vector<corpus::Gate>* forced_gates = nullptr) const override;

 private:
  const model::DualStrategyModel& model_;
  const corpus::SlotSchema& schema_;
  const textenc::Vocabulary& vocab_;
  int max_len_;
  int max_span_len_;
  const corpus::Normalizer& normalizer_;
};

// Predicts "none" for every pair.
class NullPredictor : public TurnPredictor {
 public:
  explicit NullPredictor(const corpus::SlotSchema& schema) : schema_(schema) {}
  std::vector<SlotPrediction> predict_turn(
      const corpus::Dialogue& dialogue, int t,
      const std::vector<corpus::Gate>* forced_gates = nullptr) const override;

 private:
  const corpus::SlotSchema& schema_;
};

// Reads gold labels back; with forced gates it emits the gold value when the
// forced gate is prediction.
class GoldPredictor : public TurnPredictor {
 public:
  explicit GoldPredictor(const corpus::SlotSchema& schema) : schema_(schema) {}
  std::vector<SlotPrediction> predict_turn(
      const corpus::Dialogue& dialogue, int t,
      const std::vector<corpus::Gate>* forced_gates = nullptr) const override;

 private:
  const corpus::SlotSchema& schema_;
};

// Gold gate of every pair at turn t.
std::vector<corpus::Gate> gold_gates(const corpus::Dialogue& dialogue, int t,
                                     const corpus::SlotSchema& schema);

TrackedState render_state(const corpus::Dialogue& dialogue, int t,
                          const std::vector<SlotPrediction>& predictions,
                          const corpus::SlotSchema& schema);

// predict_turn at every t = 1..T.
std::vector<TrackedState> track_dialogue(const TurnPredictor& predictor,
                                         const corpus::Dialogue& dialogue,
                                         const corpus::SlotSchema& schema,
                                         bool oracle_gates = false);
std::vector<TrackedState> track_all(const TurnPredictor& predictor,
                                    const std::vector<corpus::Dialogue>& dialogues,
                                    const corpus::SlotSchema& schema, bool oracle_gates = false);

std::vector<TrackedState> gold_states(const std::vector<corpus::Dialogue>& dialogues,
                                      const corpus::SlotSchema& schema);

// Prediction dump: one JSON object per line,
// {"schema_version":1,"dialogue_id":..,"turn":..,"state":{"domain-slot":value,..}}.
nlohmann::ordered_json state_to_json(const TrackedState& state);
TrackedState state_from_json(const nlohmann::ordered_json& j);
std::string states_to_jsonl(const std::vector<TrackedState>& states);
std::vector<TrackedState> parse_states_jsonl(std::string_view text);
std::vector<TrackedState> load_states(const std::filesystem::path& path);

// Human-readable rendering of one state: non-none triplets, one per line.
std::string pretty_state(const TrackedState& state);

}  // namespace dsdst::tracker

#endif  // DSDST_TRACKER_H_
