#include <algorithm>
#include <set>

#include "dsdst/corpus.h"
#include "dsdst/error.h"
#include "dsdst/log.h"

namespace dsdst::corpus {

SlotSchema build_picklists(const std::vector<Dialogue>& train_dialogues, const SlotSchema& schema) {
  std::vector<std::set<std::string>> observed(schema.size());
  for (const auto& dialogue : train_dialogues) {
    for (const auto& row : dialogue.labels) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j].gate == Gate::kPrediction) observed[j].insert(row[j].value);
      }
    }
  }
  std::vector<DomainSlotPair> pairs = schema.pairs();
  for (auto& pair : pairs) {
    if (!pair.categorical()) {
      pair.picklist.clear();
      continue;
    }
    const auto& values = observed[static_cast<std::size_t>(pair.id)];
    if (values.empty()) {
      fail(ErrorKind::kSchema,
           "categorical pair '" + pair.name() + "' has no observed values in training data");
    }
    pair.picklist.assign(values.begin(), values.end());
  }
  SlotSchema out(schema.variant(), std::move(pairs));
  out.validate(/*require_picklists=*/true);
  return out;
}

std::vector<Example> materialize_examples(const std::vector<Dialogue>& dialogues,
                                          const SlotSchema& schema, MaterializeStats* stats) {
  MaterializeStats local;
  std::vector<Example> out;
  for (const auto& dialogue : dialogues) {
    for (int t = 1; t <= dialogue.turn_count(); ++t) {
      auto context = std::make_shared<const FlatContext>(flatten_context(dialogue, t));
      for (const auto& pair : schema.pairs()) {
        const Label& label = dialogue.label(t, pair.id);
        Example ex;
        ex.dialogue_id = dialogue.id;
        ex.turn = t;
        ex.slot = pair.id;
        ex.annotation.gate = label.gate;
        ex.annotation.value = label.value;
        ex.context = context;
        if (label.gate == Gate::kPrediction) {
          if (pair.categorical()) {
            ex.annotation.picklist_index = pair.picklist_index(label.value);
            if (!ex.annotation.picklist_index) {
              ex.covered = false;
              ++local.coverage_warnings;
              logger()->warn("label coverage: {} turn {} {}='{}' not in picklist", dialogue.id, t,
                             pair.name(), label.value);
            }
          } else {
            ex.annotation.char_span = derive_span(*context, label.value);
            if (!ex.annotation.char_span) ++local.unmatched_spans;
          }
        }
        out.push_back(std::move(ex));
      }
    }
  }
  if (stats != nullptr) *stats = local;
  return out;
}

nlohmann::ordered_json example_to_json(const Example& example, const SlotSchema& schema) {
  nlohmann::ordered_json j;
  j["dialogue_id"] = example.dialogue_id;
  j["turn"] = example.turn;
  j["slot"] = schema[static_cast<std::size_t>(example.slot)].name();
  j["gate"] = std::string(to_string(example.annotation.gate));
  j["value"] = example.annotation.value;
  if (example.annotation.char_span) {
    j["char_span"] = {example.annotation.char_span->start, example.annotation.char_span->end};
  } else {
    j["char_span"] = nullptr;
  }
  if (example.annotation.picklist_index) {
    j["picklist_index"] = *example.annotation.picklist_index;
  } else {
    j["picklist_index"] = nullptr;
  }
  j["covered"] = example.covered;
  j["context"] = example.context ? example.context->text : std::string();
  return j;
}

std::string examples_to_jsonl(const std::vector<Example>& examples, const SlotSchema& schema) {
  std::string out;
  for (const auto& ex : examples) {
    out += example_to_json(ex, schema).dump();
    out += '\n';
  }
  return out;
}

}  // namespace dsdst::corpus
