#include <algorithm>
#include <cctype>
#include <fstream>

#include "dsdst/corpus.h"
#include "dsdst/error.h"

namespace dsdst::corpus {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

Normalizer::Normalizer() {
  for (const char* s : {"dontcare", "dont care", "don't care", "do n't care", "do not care",
                        "doesn't care", "does n't care"}) {
    dontcare_.insert(s);
  }
}

std::string Normalizer::text(std::string_view raw) const {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (c == '|') c = ' ';
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string Normalizer::value(std::string_view raw) const {
  std::string out = text(raw);
  std::size_t begin = 0;
  std::size_t end = out.size();
  while (begin < end && (is_punct(out[begin]) || is_space(out[begin]))) ++begin;
  while (end > begin && (is_punct(out[end - 1]) || is_space(out[end - 1]))) --end;
  out = out.substr(begin, end - begin);
  if (auto it = value_synonyms_.find(out); it != value_synonyms_.end()) return it->second;
  return out;
}

void Normalizer::add_value_synonym(std::string from, std::string to) {
  value_synonyms_[text(from)] = text(to);
}

void Normalizer::add_dontcare_synonym(std::string synonym) { dontcare_.insert(text(synonym)); }

bool Normalizer::is_dontcare(std::string_view normalized) const {
  return dontcare_.find(normalized) != dontcare_.end();
}

const Normalizer& default_normalizer() {
  static const Normalizer instance;
  return instance;
}

Gate derive_gate(std::string_view raw_value, const Normalizer& normalizer) {
  if (raw_value.empty() || raw_value == "none") return Gate::kNone;
  if (normalizer.is_dontcare(raw_value)) return Gate::kDontCare;
  return Gate::kPrediction;
}

const Label& Dialogue::label(int t, int j) const {
  if (t < 1 || t > turn_count()) {
    fail(ErrorKind::kRange, "dialogue " + id + ": turn " + std::to_string(t) + " out of range");
  }
  return labels[static_cast<std::size_t>(t - 1)].at(static_cast<std::size_t>(j));
}

std::vector<Dialogue> parse_dialogues(const nlohmann::json& root, const SlotSchema& schema,
                                      const Normalizer& normalizer) {
  if (!root.is_array()) fail(ErrorKind::kParse, "dialogue file: top level must be an array");
  std::vector<Dialogue> out;
  out.reserve(root.size());
  for (std::size_t n = 0; n < root.size(); ++n) {
    const auto& record = root[n];
    Dialogue dialogue;
    std::string field = "id";
    try {
      dialogue.id = record.at("id").get<std::string>();
      field = "turns";
      const auto& turns = record.at("turns");
      for (std::size_t i = 0; i < turns.size(); ++i) {
        field = "turns[" + std::to_string(i) + "]";
        Turn turn;
        turn.index = static_cast<int>(i) + 1;
        turn.system = normalizer.text(turns[i].value("system", std::string()));
        turn.user = normalizer.text(turns[i].at("user").get<std::string>());
        if (turn.user.empty()) fail(ErrorKind::kParse, "empty user utterance");
        if (turn.system.empty() && turn.index != 1) fail(ErrorKind::kParse, "empty system utterance");
        dialogue.turns.push_back(std::move(turn));
      }
      dialogue.labels.assign(dialogue.turns.size(), std::vector<Label>(schema.size()));
      field = "states";
      if (record.contains("states")) {
        for (const auto& state : record.at("states")) {
          field = "states.turn";
          int t = state.at("turn").get<int>();
          if (t < 1 || t > dialogue.turn_count()) {
            fail(ErrorKind::kParse, "state turn " + std::to_string(t) + " out of range");
          }
          field = "states[" + std::to_string(t) + "].slots";
          for (const auto& [name, raw] : state.at("slots").items()) {
            auto j = schema.find(name);
            if (!j) {
              fail(ErrorKind::kSchema,
                   "dialogue " + dialogue.id + ": unknown domain-slot '" + name + "'");
            }
            std::string value = normalizer.value(raw.get<std::string>());
            Gate gate = derive_gate(value, normalizer);
            Label& label = dialogue.labels[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(*j)];
            label.gate = gate;
            label.value = gate == Gate::kPrediction ? value : std::string(to_string(gate));
          }
        }
      }
    } catch (const nlohmann::json::exception& e) {
      std::string id = dialogue.id.empty() ? "#" + std::to_string(n) : dialogue.id;
      fail(ErrorKind::kParse, "dialogue " + id + ", field " + field + ": " + e.what());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kParse) throw;
      std::string id = dialogue.id.empty() ? "#" + std::to_string(n) : dialogue.id;
      fail(ErrorKind::kParse, "dialogue " + id + ", field " + field + ": " + e.what());
    }
    out.push_back(std::move(dialogue));
  }
  return out;
}

std::vector<Dialogue> load_dialogues(const std::filesystem::path& path, Split split,
                                     const SlotSchema& schema, const Normalizer& normalizer) {
  std::filesystem::path file = path;
  if (std::filesystem::is_directory(path)) file = path / (std::string(to_string(split)) + ".json");
  std::ifstream in(file);
  if (!in) fail(ErrorKind::kIo, "cannot open dialogue file " + file.string());
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, file.string() + ": " + e.what());
  }
  return parse_dialogues(root, schema, normalizer);
}

nlohmann::ordered_json dialogues_to_json(const std::vector<Dialogue>& dialogues,
                                         const SlotSchema& schema) {
  auto root = nlohmann::ordered_json::array();
  for (const auto& dialogue : dialogues) {
    auto turns = nlohmann::ordered_json::array();
    auto states = nlohmann::ordered_json::array();
    for (const auto& turn : dialogue.turns) {
      turns.push_back({{"system", turn.system}, {"user", turn.user}});
      nlohmann::ordered_json slots = nlohmann::ordered_json::object();
      for (const auto& pair : schema.pairs()) {
        const Label& label = dialogue.label(turn.index, pair.id);
        if (label.gate != Gate::kNone) slots[pair.name()] = label.value;
      }
      states.push_back({{"turn", turn.index}, {"slots", std::move(slots)}});
    }
    root.push_back({{"id", dialogue.id}, {"turns", std::move(turns)}, {"states", std::move(states)}});
  }
  return root;
}

std::map<std::string, int> domain_dialogue_counts(const std::vector<Dialogue>& dialogues,
                                                  const SlotSchema& schema) {
  std::map<std::string, int> counts;
  for (const auto& domain : schema.domains()) counts[domain] = 0;
  for (const auto& dialogue : dialogues) {
    std::set<std::string> present;
    for (const auto& row : dialogue.labels) {
      for (const auto& pair : schema.pairs()) {
        if (row[static_cast<std::size_t>(pair.id)].gate != Gate::kNone) present.insert(pair.domain);
      }
    }
    for (const auto& domain : present) ++counts[domain];
  }
  return counts;
}

FlatContext flatten_context(const Dialogue& dialogue, int t) {
  if (t < 1 || t > dialogue.turn_count()) {
    fail(ErrorKind::kRange, "dialogue " + dialogue.id + ": turn " + std::to_string(t) +
                                " outside [1, " + std::to_string(dialogue.turn_count()) + "]");
  }
  FlatContext context;
  auto append = [&](int turn, Side side, const std::string& text) {
    if (text.empty()) return;
    if (!context.text.empty()) context.text += kSideSeparator;
    TurnBoundary b{turn, side, context.text.size(), 0};
    context.text += text;
    b.end = context.text.size();
    context.boundaries.push_back(b);
  };
  for (int i = 1; i <= t; ++i) {
    const Turn& turn = dialogue.turns[static_cast<std::size_t>(i - 1)];
    append(i, Side::kSystem, turn.system);
    append(i, Side::kUser, turn.user);
  }
  return context;
}

std::optional<CharSpan> derive_span(const FlatContext& context, std::string_view value) {
  if (value.empty()) return std::nullopt;
  for (auto it = context.boundaries.rbegin(); it != context.boundaries.rend(); ++it) {
    std::string_view side(context.text.data() + it->start, it->end - it->start);
    for (std::size_t pos = side.find(value); pos != std::string_view::npos;
         pos = side.find(value, pos + 1)) {
      std::size_t end = pos + value.size();
      bool left_ok = pos == 0 || !is_word_char(side[pos - 1]);
      bool right_ok = end == side.size() || !is_word_char(side[end]);
      if (left_ok && right_ok) return CharSpan{it->start + pos, it->start + end};
    }
  }
  return std::nullopt;
}

}  // namespace dsdst::corpus
