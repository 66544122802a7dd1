#include <cctype>

#include "dsdst/error.h"
#include "dsdst/textenc.h"

namespace dsdst::textenc {
namespace {

constexpr std::size_t kMaxCharsPerWord = 100;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<CharSpan> pre_tokenize(std::string_view text) {
  std::vector<CharSpan> words;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
    } else if (is_punct(text[i])) {
      words.push_back({i, i + 1});
      ++i;
    } else {
      std::size_t start = i;
      while (i < text.size() && !is_space(text[i]) && !is_punct(text[i])) ++i;
      words.push_back({start, i});
    }
  }
  return words;
}

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenSequence out;
  auto push = [&](int id, std::string piece, CharSpan span) {
    out.ids.push_back(id);
    out.pieces.push_back(std::move(piece));
    out.offsets.push_back(span);
  };
  for (CharSpan word : pre_tokenize(text)) {
    std::string_view w = text.substr(word.start, word.end - word.start);
    if (w.size() > kMaxCharsPerWord) {
      push(vocab.unk_id(), std::string(Vocabulary::kUnk), word);
      continue;
    }
    std::size_t mark = out.size();
    std::size_t start = 0;
    bool bad = false;
    while (start < w.size()) {
      std::size_t end = w.size();
      std::optional<int> match;
      std::string piece;
      while (start < end) {
        piece = (start > 0 ? "##" : "") + std::string(w.substr(start, end - start));
        match = vocab.find(piece);
        if (match) break;
        --end;
      }
      if (!match) {
        bad = true;
        break;
      }
      push(*match, std::move(piece), {word.start + start, word.start + end});
      start = end;
    }
    if (bad) {
      out.ids.resize(mark);
      out.pieces.resize(mark);
      out.offsets.resize(mark);
      push(vocab.unk_id(), std::string(Vocabulary::kUnk), word);
    }
  }
  return out;
}

std::pair<int, int> project_span(CharSpan span, const TokenSequence& tokens) {
  if (span.end <= span.start) fail(ErrorKind::kProjection, "empty character span");
  auto covering = [&](std::size_t c) -> std::optional<int> {
    for (std::size_t i = 0; i < tokens.offsets.size(); ++i) {
      if (tokens.offsets[i].start <= c && c < tokens.offsets[i].end) return static_cast<int>(i);
    }
    return std::nullopt;
  };
  auto first = covering(span.start);
  auto last = covering(span.end - 1);
  if (!first || !last) {
    fail(ErrorKind::kProjection, "span [" + std::to_string(span.start) + ", " +
                                     std::to_string(span.end) + ") boundary lies in no piece");
  }
  return {*first, *last};
}

}  // namespace dsdst::textenc
