#include "dsdst/error.h"
#include "dsdst/trainer.h"

namespace dsdst::trainer {

std::vector<std::string> vocabulary_texts(const std::vector<corpus::Dialogue>& dialogues,
                                          const corpus::SlotSchema& schema) {
  std::vector<std::string> texts;
  for (const auto& dialogue : dialogues) {
    for (const auto& turn : dialogue.turns) {
      if (!turn.system.empty()) texts.push_back(turn.system);
      texts.push_back(turn.user);
    }
  }
  for (const auto& pair : schema.pairs()) {
    texts.push_back(textenc::slot_surface(pair));
    texts.insert(texts.end(), pair.picklist.begin(), pair.picklist.end());
  }
  return texts;
}

std::vector<TrainingItem> encode_examples(const std::vector<corpus::Example>& examples,
                                          const corpus::SlotSchema& schema,
                                          const textenc::Vocabulary& vocab, int max_len,
                                          int* unprojectable) {
  std::vector<TrainingItem> out;
  out.reserve(examples.size());
  const corpus::FlatContext* cached_context = nullptr;
  textenc::TokenSequence tokens;
  int lost = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const corpus::Example& ex = examples[i];
    if (ex.context.get() != cached_context) {
      cached_context = ex.context.get();
      tokens = textenc::tokenize(cached_context->text, vocab);
    }
    const corpus::DomainSlotPair& pair = schema[static_cast<std::size_t>(ex.slot)];
    TrainingItem item;
    item.example = i;
    item.input = textenc::build_input(pair, tokens, vocab, max_len, ex.annotation.char_span);
    lost += item.input.unprojectable ? 1 : 0;
    item.target.gate = ex.annotation.gate;
    item.target.kind = pair.kind;
    item.target.slot = ex.slot;
    if (ex.covered) item.target.picklist_index = ex.annotation.picklist_index;
    out.push_back(std::move(item));
  }
  if (unprojectable != nullptr) *unprojectable = lost;
  return out;
}

}  // namespace dsdst::trainer
