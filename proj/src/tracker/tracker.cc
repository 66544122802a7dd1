#include <fstream>
#include <sstream>

#include "dsdst/error.h"
#include "dsdst/tracker.h"

namespace dsdst::tracker {

using corpus::Gate;

corpus::Gate argmax_gate(const std::vector<double>& probs) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(probs.size()); ++c) {
    if (probs[static_cast<std::size_t>(c)] > probs[static_cast<std::size_t>(best)]) best = c;
  }
  return static_cast<Gate>(best);
}

SpanChoice decode_span(const model::Vector& p_start, const model::Vector& p_end, int begin,
                       int end, int max_span_len) {
  if (begin >= end) fail(ErrorKind::kDecode, "empty context block");
  if (max_span_len < 1) fail(ErrorKind::kConfig, "max_span_len must be positive");
  SpanChoice best{begin, begin, -1.0};
  for (int i = begin; i < end; ++i) {
    const int last = std::min(end, i + max_span_len);
    for (int k = i; k < last; ++k) {
      double score = p_start(i) * p_end(k);
      if (score > best.score) best = {i, k, score};
    }
  }
  return best;
}

PicklistChoice decode_picklist(const model::Vector& r_cls, const model::Matrix& value_reps,
                               const std::vector<std::string>& picklist) {
  if (picklist.empty() || static_cast<std::size_t>(value_reps.rows()) != picklist.size()) {
    fail(ErrorKind::kShape, "picklist and value representations disagree");
  }
  PicklistChoice out;
  out.scores.reserve(picklist.size());
  for (Eigen::Index l = 0; l < value_reps.rows(); ++l) {
    out.scores.push_back(model::cosine(r_cls, value_reps.row(l).transpose()));
    if (out.scores.back() > out.scores[static_cast<std::size_t>(out.index)]) {
      out.index = static_cast<int>(l);
    }
  }
  out.value = picklist[static_cast<std::size_t>(out.index)];
  return out;
}

namespace {

std::string gate_value(Gate gate) { return gate == Gate::kDontCare ? "dontcare" : "none"; }

}  // namespace

ModelPredictor::ModelPredictor(const model::DualStrategyModel& model,
                               const corpus::SlotSchema& schema, const textenc::Vocabulary& vocab,
                               int max_len, int max_span_len, const corpus::Normalizer& normalizer)
    : model_(model),
      schema_(schema),
      vocab_(vocab),
      max_len_(max_len),
      max_span_len_(max_span_len),
      normalizer_(normalizer) {}

std::vector<SlotPrediction> ModelPredictor::predict_turn(
    const corpus::Dialogue& dialogue, int t, const std::vector<Gate>* forced_gates) const {
  const corpus::FlatContext context = corpus::flatten_context(dialogue, t);
  const textenc::TokenSequence tokens = textenc::tokenize(context.text, vocab_);
  std::vector<SlotPrediction> out;
  out.reserve(schema_.size());
  for (const auto& pair : schema_.pairs()) {
    SlotPrediction pred;
    pred.slot = pair.id;
    try {
      textenc::EncodedExample input = textenc::build_input(pair, tokens, vocab_, max_len_);
      model::SlotContextEncoding enc = model_.encode_slot_context(input);
      model::Vector probs = model_.gate_probs(enc.r_cls);
      pred.gate_probs.assign(probs.data(), probs.data() + probs.size());
      pred.decoded_gate = forced_gates != nullptr
                              ? forced_gates->at(static_cast<std::size_t>(pair.id))
                              : argmax_gate(pred.gate_probs);
      if (pred.decoded_gate != Gate::kPrediction) {
        pred.value = gate_value(pred.decoded_gate);
      } else if (pair.categorical()) {
        PicklistChoice choice = decode_picklist(enc.r_cls, model_.value_reps(pair.id), pair.picklist);
        pred.value = choice.value;
        pred.picklist_scores = std::move(choice.scores);
      } else {
        model::SpanLogits logits =
            model_.span_logits(enc.token_reps, input.context_begin, input.context_end);
        SpanChoice choice = decode_span(model::span_probs(logits.start),
                                        model::span_probs(logits.end), input.context_begin,
                                        input.context_end, max_span_len_);
        pred.span = std::make_pair(choice.start, choice.end);
        pred.value = normalizer_.value(textenc::span_text(input, context.text, choice.start, choice.end));
      }
    } catch (const Error& e) {
      fail(e.kind(), "pair " + pair.name() + ": " + e.what());
    }
    out.push_back(std::move(pred));
  }
  return out;
}

std::vector<SlotPrediction> NullPredictor::predict_turn(const corpus::Dialogue&, int,
                                                        const std::vector<Gate>* forced_gates) const {
  std::vector<SlotPrediction> out(schema_.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j].slot = static_cast<int>(j);
    out[j].gate_probs = {1.0, 0.0, 0.0};
    if (forced_gates != nullptr && (*forced_gates)[j] == Gate::kDontCare) {
      out[j].decoded_gate = Gate::kDontCare;
      out[j].value = "dontcare";
    }
  }
  return out;
}

std::vector<SlotPrediction> GoldPredictor::predict_turn(const corpus::Dialogue& dialogue, int t,
                                                        const std::vector<Gate>* forced_gates) const {
  std::vector<SlotPrediction> out(schema_.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const corpus::Label& gold = dialogue.label(t, static_cast<int>(j));
    SlotPrediction& pred = out[j];
    pred.slot = static_cast<int>(j);
    pred.decoded_gate = forced_gates != nullptr ? (*forced_gates)[j] : gold.gate;
    pred.gate_probs.assign(corpus::kGateClasses, 0.0);
    pred.gate_probs[static_cast<std::size_t>(pred.decoded_gate)] = 1.0;
    if (pred.decoded_gate != Gate::kPrediction) {
      pred.value = gate_value(pred.decoded_gate);
    } else {
      pred.value = gold.gate == Gate::kPrediction ? gold.value : "none";
    }
  }
  return out;
}

std::vector<Gate> gold_gates(const corpus::Dialogue& dialogue, int t,
                             const corpus::SlotSchema& schema) {
  std::vector<Gate> out(schema.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = dialogue.label(t, static_cast<int>(j)).gate;
  return out;
}

TrackedState render_state(const corpus::Dialogue& dialogue, int t,
                          const std::vector<SlotPrediction>& predictions,
                          const corpus::SlotSchema& schema) {
  if (predictions.size() != schema.size()) {
    fail(ErrorKind::kShape, "expected " + std::to_string(schema.size()) + " slot predictions, got " +
                                std::to_string(predictions.size()));
  }
  TrackedState state{dialogue.id, t, {}};
  state.slots.reserve(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    state.slots.emplace_back(schema[j].name(), predictions[j].value);
  }
  return state;
}

std::vector<TrackedState> track_dialogue(const TurnPredictor& predictor,
                                         const corpus::Dialogue& dialogue,
                                         const corpus::SlotSchema& schema, bool oracle_gates) {
  std::vector<TrackedState> out;
  out.reserve(dialogue.turns.size());
  for (int t = 1; t <= dialogue.turn_count(); ++t) {
    std::vector<Gate> gates;
    if (oracle_gates) gates = gold_gates(dialogue, t, schema);
    out.push_back(render_state(
        dialogue, t, predictor.predict_turn(dialogue, t, oracle_gates ? &gates : nullptr), schema));
  }
  return out;
}

std::vector<TrackedState> track_all(const TurnPredictor& predictor,
                                    const std::vector<corpus::Dialogue>& dialogues,
                                    const corpus::SlotSchema& schema, bool oracle_gates) {
  std::vector<TrackedState> out;
  for (const auto& dialogue : dialogues) {
    auto states = track_dialogue(predictor, dialogue, schema, oracle_gates);
    out.insert(out.end(), std::make_move_iterator(states.begin()),
               std::make_move_iterator(states.end()));
  }
  return out;
}

std::vector<TrackedState> gold_states(const std::vector<corpus::Dialogue>& dialogues,
                                      const corpus::SlotSchema& schema) {
  return track_all(GoldPredictor(schema), dialogues, schema);
}

nlohmann::ordered_json state_to_json(const TrackedState& state) {
  nlohmann::ordered_json j;
  j["schema_version"] = kDumpSchemaVersion;
  j["dialogue_id"] = state.dialogue_id;
  j["turn"] = state.turn;
  auto& slots = j["state"] = nlohmann::ordered_json::object();
  for (const auto& [name, value] : state.slots) slots[name] = value;
  return j;
}

TrackedState state_from_json(const nlohmann::ordered_json& j) {
  TrackedState state;
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kDumpSchemaVersion) {
      fail(ErrorKind::kCompatibility, "unsupported dump schema_version " + std::to_string(version));
    }
    state.dialogue_id = j.at("dialogue_id").get<std::string>();
    state.turn = j.at("turn").get<int>();
    for (const auto& [name, value] : j.at("state").items()) {
      state.slots.emplace_back(name, value.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("prediction record: ") + e.what());
  }
  return state;
}

std::string states_to_jsonl(const std::vector<TrackedState>& states) {
  std::string out;
  for (const auto& state : states) {
    out += state_to_json(state).dump();
    out += '\n';
  }
  return out;
}

std::vector<TrackedState> parse_states_jsonl(std::string_view text) {
  std::vector<TrackedState> out;
  std::istringstream in{std::string(text)};
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(state_from_json(nlohmann::ordered_json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TrackedState> load_states(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_states_jsonl(buffer.str());
}

std::string pretty_state(const TrackedState& state) {
  std::ostringstream out;
  out << state.dialogue_id << " turn " << state.turn << '\n';
  int shown = 0;
  for (const auto& [name, value] : state.slots) {
    if (value == "none") continue;
    out << "  " << name << " = " << value << '\n';
    ++shown;
  }
  if (shown == 0) out << "  (empty)\n";
  return out.str();
}

}  // namespace dsdst::tracker
