#include <fstream>
#include <map>
#include <sstream>

#include "dsdst/error.h"
#include "dsdst/evalkit.h"

namespace dsdst::evalkit {
namespace {

using Key = std::pair<std::string, int>;

std::string key_name(const Key& key) { return key.first + "#" + std::to_string(key.second); }

// Gold states paired with their prediction, gold order. Throws kAlignment
// listing up to ten unmatched keys in either direction.
std::vector<std::pair<const TrackedState*, const TrackedState*>> align(
    const std::vector<TrackedState>& predictions, const std::vector<TrackedState>& golds) {
  std::map<Key, const TrackedState*> by_key;
  for (const auto& p : predictions) {
    if (!by_key.emplace(Key{p.dialogue_id, p.turn}, &p).second) {
      fail(ErrorKind::kAlignment, "duplicate prediction for " + key_name({p.dialogue_id, p.turn}));
    }
  }
  std::vector<std::pair<const TrackedState*, const TrackedState*>> out;
  std::vector<std::string> missing;
  std::map<Key, bool> seen;
  for (const auto& g : golds) {
    Key key{g.dialogue_id, g.turn};
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      missing.push_back("prediction missing " + key_name(key));
      continue;
    }
    seen[key] = true;
    out.emplace_back(it->second, &g);
  }
  for (const auto& [key, state] : by_key) {
    if (!seen.count(key)) missing.push_back("gold missing " + key_name(key));
  }
  if (!missing.empty()) {
    std::string message = std::to_string(missing.size()) + " unaligned turns:";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) {
      message += " " + missing[i] + ";";
    }
    fail(ErrorKind::kAlignment, message);
  }
  return out;
}

// Per gold slot: does the prediction agree? Throws kAlignment on slot-set
// differences.
std::vector<bool> slot_matches(const TrackedState& prediction, const TrackedState& gold) {
  if (prediction.slots.size() != gold.slots.size()) {
    fail(ErrorKind::kAlignment, key_name({gold.dialogue_id, gold.turn}) + ": prediction has " +
                                    std::to_string(prediction.slots.size()) + " slots, gold has " +
                                    std::to_string(gold.slots.size()));
  }
  std::map<std::string_view, std::string_view> predicted;
  for (const auto& [name, value] : prediction.slots) predicted.emplace(name, value);
  std::vector<bool> out;
  out.reserve(gold.slots.size());
  for (const auto& [name, value] : gold.slots) {
    auto it = predicted.find(name);
    if (it == predicted.end()) {
      fail(ErrorKind::kAlignment,
           key_name({gold.dialogue_id, gold.turn}) + ": prediction lacks slot " + name);
    }
    out.push_back(it->second == value);
  }
  return out;
}

}  // namespace

double joint_accuracy(const std::vector<TrackedState>& predictions,
                      const std::vector<TrackedState>& golds) {
  auto pairs = align(predictions, golds);
  if (pairs.empty()) return 0.0;
  int correct = 0;
  for (const auto& [p, g] : pairs) {
    auto matches = slot_matches(*p, *g);
    correct += std::all_of(matches.begin(), matches.end(), [](bool m) { return m; }) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

std::vector<std::pair<std::string, double>> per_slot_accuracy(
    const std::vector<TrackedState>& predictions, const std::vector<TrackedState>& golds) {
  auto pairs = align(predictions, golds);
  std::vector<std::pair<std::string, double>> out;
  if (pairs.empty()) return out;
  for (const auto& [name, value] : pairs.front().second->slots) out.emplace_back(name, 0.0);
  std::vector<int> correct(out.size(), 0);
  for (const auto& [p, g] : pairs) {
    for (std::size_t j = 0; j < g->slots.size(); ++j) {
      if (j >= out.size() || g->slots[j].first != out[j].first) {
        fail(ErrorKind::kAlignment, "gold states disagree on slot order at " +
                                        key_name({g->dialogue_id, g->turn}));
      }
    }
    auto matches = slot_matches(*p, *g);
    for (std::size_t j = 0; j < matches.size(); ++j) correct[j] += matches[j] ? 1 : 0;
  }
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j].second = static_cast<double>(correct[j]) / static_cast<double>(pairs.size());
  }
  return out;
}

std::vector<UnfoundCounts> unfound_stats(const std::vector<corpus::Dialogue>& dialogues,
                                         const corpus::SlotSchema& schema,
                                         const std::vector<TrackedState>* predictions) {
  std::map<Key, const TrackedState*> by_key;
  if (predictions != nullptr) {
    for (const auto& p : *predictions) by_key.emplace(Key{p.dialogue_id, p.turn}, &p);
  }
  std::vector<UnfoundCounts> out(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) out[j].slot = schema[j].name();
  for (const auto& dialogue : dialogues) {
    for (int t = 1; t <= dialogue.turn_count(); ++t) {
      std::optional<corpus::FlatContext> context;
      const TrackedState* predicted = nullptr;
      if (auto it = by_key.find({dialogue.id, t}); it != by_key.end()) predicted = it->second;
      for (std::size_t j = 0; j < schema.size(); ++j) {
        const corpus::Label& gold = dialogue.label(t, static_cast<int>(j));
        if (gold.gate != corpus::Gate::kPrediction) continue;
        ++out[j].relative_turns;
        if (!context) context = corpus::flatten_context(dialogue, t);
        if (corpus::derive_span(*context, gold.value)) continue;
        ++out[j].unfound;
        if (predicted == nullptr) continue;
        for (const auto& [name, value] : predicted->slots) {
          if (name == out[j].slot) {
            out[j].recovered += value == gold.value ? 1 : 0;
            break;
          }
        }
      }
    }
  }
  return out;
}

double oracle_gate_joint_accuracy(const std::vector<corpus::Dialogue>& dialogues,
                                  const tracker::TurnPredictor& predictor,
                                  const corpus::SlotSchema& schema) {
  return joint_accuracy(tracker::track_all(predictor, dialogues, schema, true),
                        tracker::gold_states(dialogues, schema));
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["split"] = split;
  j["joint_accuracy"] = joint_accuracy;
  j["turn_count"] = turn_count;
  j["convention"] = {
      {"none_values", "every pair is scored at every turn; a gold 'none' must be predicted as 'none'"},
      {"matching", "exact match on normalized value strings"},
      {"relative_turns", "turns whose cumulative gold state gives the pair a value"}};
  auto& slots = j["per_slot"] = nlohmann::ordered_json::object();
  for (const auto& [name, acc] : per_slot) slots[name] = acc;
  j["skipped_spans"] = skipped_spans;
  j["coverage_warnings"] = coverage_warnings;
  if (oracle_gate_joint_accuracy) j["oracle_gate_joint_accuracy"] = *oracle_gate_joint_accuracy;
  if (null_baseline_joint_accuracy) {
    j["null_baseline_joint_accuracy"] = *null_baseline_joint_accuracy;
  }
  if (!unfound.empty()) {
    auto& u = j["unfound"] = nlohmann::ordered_json::object();
    for (const auto& c : unfound) {
      u[c.slot] = {{"unfound", c.unfound},
                   {"relative_turns", c.relative_turns},
                   {"recovered", c.recovered}};
    }
  }
  return j;
}

std::string MetricsReport::per_slot_csv() const {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  std::map<std::string_view, const UnfoundCounts*> counts;
  for (const auto& c : unfound) counts.emplace(c.slot, &c);
  const bool with_unfound = !counts.empty();
  out << "slot,accuracy" << (with_unfound ? ",unfound,relative_turns,recovered" : "") << '\n';
  out << "joint," << joint_accuracy << (with_unfound ? ",,," : "") << '\n';
  for (const auto& [name, acc] : per_slot) {
    out << name << ',' << acc;
    if (with_unfound) {
      auto it = counts.find(name);
      if (it == counts.end()) {
        out << ",,,";
      } else {
        out << ',' << it->second->unfound << ',' << it->second->relative_turns << ','
            << it->second->recovered;
      }
    }
    out << '\n';
  }
  return out.str();
}

MetricsReport build_report(std::string split, const std::vector<TrackedState>& predictions,
                           const std::vector<TrackedState>& golds) {
  MetricsReport report;
  report.split = std::move(split);
  report.joint_accuracy = joint_accuracy(predictions, golds);
  report.per_slot = per_slot_accuracy(predictions, golds);
  report.turn_count = static_cast<int>(golds.size());
  return report;
}

std::string unfound_csv(const std::vector<UnfoundCounts>& stats) {
  std::ostringstream out;
  out << "slot,unfound,relative_turns,recovered\n";
  for (const auto& c : stats) {
    out << c.slot << ',' << c.unfound << ',' << c.relative_turns << ',' << c.recovered << '\n';
  }
  return out.str();
}

void write_report(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream json(path);
  if (!json) fail(ErrorKind::kIo, "cannot write " + path.string());
  json << report.to_json().dump(2) << '\n';
  std::filesystem::path csv_path = path;
  csv_path.replace_extension(".csv");
  std::ofstream csv(csv_path);
  if (!csv) fail(ErrorKind::kIo, "cannot write " + csv_path.string());
  csv << report.per_slot_csv();
}

}  // namespace dsdst::evalkit
