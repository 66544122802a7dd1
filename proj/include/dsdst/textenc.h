#ifndef DSDST_TEXTENC_H_
#define DSDST_TEXTENC_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dsdst/corpus.h"

namespace dsdst::textenc {

using corpus::CharSpan;

class Vocabulary {
 public:
  static constexpr std::string_view kPad = "[PAD]";
  static constexpr std::string_view kUnk = "[UNK]";
  static constexpr std::string_view kCls = "[CLS]";
  static constexpr std::string_view kSep = "[SEP]";

  Vocabulary() = default;
  // `tokens[i]` gets id i. All four special tokens must be present.
  explicit Vocabulary(std::vector<std::string> tokens);

  // Frequency vocabulary over pre-tokenized `texts`: specials, then every
  // observed character with its "##" continuation form, then whole words by
  // descending count (ties lexicographic) until `max_size` entries.
  static Vocabulary build(const std::vector<std::string>& texts, std::size_t max_size = 8000);

  // One token per line; line number is the id.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::optional<int> find(std::string_view token) const;
  int id(std::string_view token) const { return find(token).value_or(unk_id_); }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  int pad_id() const { return pad_id_; }
  int unk_id() const { return unk_id_; }
  int cls_id() const { return cls_id_; }
  int sep_id() const { return sep_id_; }

  std::uint64_t fingerprint() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int pad_id_ = 0;
  int unk_id_ = 1;
  int cls_id_ = 2;
  int sep_id_ = 3;
};

struct TokenSequence {
  std::vector<int> ids;
  std::vector<std::string> pieces;
  std::vector<CharSpan> offsets;  // into the tokenized text

  std::size_t size() const { return ids.size(); }
};

// Whitespace/punctuation pre-tokenization: words are maximal runs of
// non-space, non-punctuation characters; each punctuation character stands
// alone.
std::vector<CharSpan> pre_tokenize(std::string_view text);

// Greedy longest-match subword segmentation. A word that cannot be covered
// becomes a single UNK piece with whole-word offsets.
TokenSequence tokenize(std::string_view text, const Vocabulary& vocab);

// Inclusive token indices of the pieces overlapping the first and last
// character of `span`. Throws kProjection when either boundary character is
// covered by no piece.
std::pair<int, int> project_span(CharSpan span, const TokenSequence& tokens);

// Surface form of a pair for the encoder input: "hotel price range".
std::string slot_surface(const corpus::DomainSlotPair& pair);

struct EncodedExample {
  std::vector<int> ids;       // [CLS] slot [SEP] context
  std::vector<int> segments;  // 0 up to and including [SEP], 1 for context
  int context_begin = 0;      // first context position
  int context_end = 0;        // one past the last context position
  int dropped_context_tokens = 0;
  // Character offsets (into the flattened context) of each kept context piece,
  // indexed by position - context_begin.
  std::vector<CharSpan> context_offsets;
  std::optional<int> gold_start;  // absolute positions
  std::optional<int> gold_end;
  bool unprojectable = false;  // a gold span existed but was truncated away

  int length() const { return static_cast<int>(ids.size()); }
  int context_length() const { return context_end - context_begin; }
};

// Assembles [CLS] slot-tokens [SEP] context-tokens, dropping the oldest
// context tokens first when longer than `max_len`.
EncodedExample build_input(const corpus::DomainSlotPair& pair, const TokenSequence& context,
                           const Vocabulary& vocab, int max_len,
                           std::optional<CharSpan> gold_span = std::nullopt);
EncodedExample build_input(const corpus::DomainSlotPair& pair, std::string_view context,
                           const Vocabulary& vocab, int max_len,
                           std::optional<CharSpan> gold_span = std::nullopt);

// [CLS] value [SEP], the value-encoder input.
EncodedExample build_value_input(std::string_view value, const Vocabulary& vocab, int max_len);

// Substring of `context_text` covered by context positions [start, end].
std::string span_text(const EncodedExample& example, std::string_view context_text, int start,
                      int end);

}  // namespace dsdst::textenc

#endif  // DSDST_TEXTENC_H_
