#include <algorithm>

#include "dsdst/error.h"
#include "dsdst/textenc.h"

namespace dsdst::textenc {

std::string slot_surface(const corpus::DomainSlotPair& pair) {
  std::string out = pair.domain + " " + pair.slot;
  std::replace(out.begin(), out.end(), '-', ' ');
  return out;
}

EncodedExample build_input(const corpus::DomainSlotPair& pair, const TokenSequence& context,
                           const Vocabulary& vocab, int max_len,
                           std::optional<CharSpan> gold_span) {
  TokenSequence slot = tokenize(slot_surface(pair), vocab);
  const int prefix = static_cast<int>(slot.size()) + 2;
  if (max_len < prefix + 1) {
    fail(ErrorKind::kConfig, "max_len " + std::to_string(max_len) + " cannot hold slot '" +
                                 pair.name() + "' (" + std::to_string(slot.size()) + " tokens)");
  }
  const int total = static_cast<int>(context.size());
  const int keep = std::min(total, max_len - prefix);
  const int dropped = total - keep;

  EncodedExample ex;
  ex.ids.reserve(static_cast<std::size_t>(prefix + keep));
  ex.ids.push_back(vocab.cls_id());
  ex.ids.insert(ex.ids.end(), slot.ids.begin(), slot.ids.end());
  ex.ids.push_back(vocab.sep_id());
  ex.segments.assign(ex.ids.size(), 0);
  ex.context_begin = prefix;
  for (int i = dropped; i < total; ++i) {
    ex.ids.push_back(context.ids[static_cast<std::size_t>(i)]);
    ex.segments.push_back(1);
    ex.context_offsets.push_back(context.offsets[static_cast<std::size_t>(i)]);
  }
  ex.context_end = static_cast<int>(ex.ids.size());
  ex.dropped_context_tokens = dropped;

  if (gold_span) {
    auto [start, end] = project_span(*gold_span, context);
    if (start < dropped) {
      ex.unprojectable = true;
    } else {
      ex.gold_start = prefix + start - dropped;
      ex.gold_end = prefix + end - dropped;
    }
  }
  return ex;
}

EncodedExample build_input(const corpus::DomainSlotPair& pair, std::string_view context,
                           const Vocabulary& vocab, int max_len,
                           std::optional<CharSpan> gold_span) {
  return build_input(pair, tokenize(context, vocab), vocab, max_len, gold_span);
}

EncodedExample build_value_input(std::string_view value, const Vocabulary& vocab, int max_len) {
  TokenSequence tokens = tokenize(value, vocab);
  const int keep = std::min(static_cast<int>(tokens.size()), max_len - 2);
  if (keep < 0) fail(ErrorKind::kConfig, "max_len too small for a value input");
  EncodedExample ex;
  ex.ids.push_back(vocab.cls_id());
  ex.ids.insert(ex.ids.end(), tokens.ids.begin(), tokens.ids.begin() + keep);
  ex.ids.push_back(vocab.sep_id());
  ex.segments.assign(ex.ids.size(), 0);
  ex.context_begin = ex.context_end = static_cast<int>(ex.ids.size());
  return ex;
}

std::string span_text(const EncodedExample& example, std::string_view context_text, int start,
                      int end) {
  if (start < example.context_begin || end >= example.context_end || start > end) {
    fail(ErrorKind::kRange, "span positions outside the context block");
  }
  CharSpan first = example.context_offsets[static_cast<std::size_t>(start - example.context_begin)];
  CharSpan last = example.context_offsets[static_cast<std::size_t>(end - example.context_begin)];
  return std::string(context_text.substr(first.start, last.end - first.start));
}

}  // namespace dsdst::textenc
