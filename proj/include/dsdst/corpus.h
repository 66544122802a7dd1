#ifndef DSDST_CORPUS_H_
#define DSDST_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dsdst::corpus {

enum class SlotKind { kCategorical, kNonCategorical };
enum class Variant { kDsDst, kDsSpan, kDsPicklist };
enum class Split { kTrain, kValidation, kTest };

// Slot gate classes. The numeric value is the class index used by the model.
enum class Gate { kNone = 0, kDontCare = 1, kPrediction = 2 };
inline constexpr int kGateClasses = 3;

std::string_view to_string(SlotKind kind);
std::string_view to_string(Variant variant);
std::string_view to_string(Split split);
std::string_view to_string(Gate gate);
SlotKind parse_slot_kind(std::string_view text);
Variant parse_variant(std::string_view text);
Split parse_split(std::string_view text);
Gate parse_gate(std::string_view text);

// ---------------------------------------------------------------------------
// Normalization

// Lowercases, collapses whitespace and applies a value synonym map. The
// synonym map is identity by default; it is the hook for label fixes.
class Normalizer {
 public:
  Normalizer();

  // Lowercase + whitespace collapse + trim. The side separator character is
  // replaced by a space so it never occurs inside utterance text.
  std::string text(std::string_view raw) const;

  // text() followed by stripping surrounding punctuation and the synonym map.
  std::string value(std::string_view raw) const;

  void add_value_synonym(std::string from, std::string to);
  void add_dontcare_synonym(std::string synonym);
  bool is_dontcare(std::string_view normalized) const;

 private:
  std::map<std::string, std::string, std::less<>> value_synonyms_;
  std::set<std::string, std::less<>> dontcare_;
};

const Normalizer& default_normalizer();

// Maps a normalized raw label to a gate class: "" / "none" -> none,
// "dontcare" and its synonyms -> dontcare, anything else -> prediction.
Gate derive_gate(std::string_view raw_value,
                 const Normalizer& normalizer = default_normalizer());

// ---------------------------------------------------------------------------
// Schema

struct DomainSlotPair {
  int id = 0;  // 0-based position in the schema
  std::string domain;
  std::string slot;
  SlotKind kind = SlotKind::kCategorical;
  std::vector<std::string> picklist;  // sorted; empty for non-categorical

  // "domain-slot", the key used in dialogue files and reports.
  std::string name() const { return domain + "-" + slot; }
  bool categorical() const { return kind == SlotKind::kCategorical; }
  std::optional<int> picklist_index(std::string_view value) const;
};

class SlotSchema {
 public:
  SlotSchema() = default;
  SlotSchema(Variant variant, std::vector<DomainSlotPair> pairs);

  Variant variant() const { return variant_; }
  const std::vector<DomainSlotPair>& pairs() const { return pairs_; }
  std::vector<DomainSlotPair>& mutable_pairs() { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  const DomainSlotPair& operator[](std::size_t j) const { return pairs_.at(j); }

  std::optional<int> find(std::string_view name) const;
  std::size_t count(SlotKind kind) const;
  std::vector<std::string> domains() const;

  // Checks uniqueness, variant/kind agreement and, when requested, that every
  // categorical pair carries a non-empty picklist.
  void validate(bool require_picklists) const;

  // Stable 64-bit fingerprint of names, kinds and picklists.
  std::uint64_t fingerprint() const;

  nlohmann::ordered_json to_json() const;
  static SlotSchema from_json(const nlohmann::json& j);

 private:
  Variant variant_ = Variant::kDsDst;
  std::vector<DomainSlotPair> pairs_;
};

SlotSchema load_schema(const std::filesystem::path& path);
void save_schema(const SlotSchema& schema, const std::filesystem::path& path);

// Time- and number-valued slots ("leave at", "arrive by", "book time",
// "book people", "book stay") are extracted as spans under ds_dst.
bool is_time_or_number_slot(std::string_view slot);

// Reassigns kinds for a variant and clears picklists of non-categorical pairs.
SlotSchema apply_variant(const SlotSchema& base, Variant variant);

// The 30 domain-slot pairs of the five MultiWOZ domains, ds_dst partition,
// picklists empty until build_picklists runs.
SlotSchema multiwoz_schema();

// ---------------------------------------------------------------------------
// Dialogues

struct Turn {
  int index = 0;  // 1-based
  std::string system;
  std::string user;
};

struct Label {
  Gate gate = Gate::kNone;
  std::string value = "none";  // normalized; "none" / "dontcare" for gates
};

struct Dialogue {
  std::string id;
  std::vector<Turn> turns;
  // labels[t - 1][j]: gold label of pair j at turn t, dense (defaults to none).
  std::vector<std::vector<Label>> labels;

  int turn_count() const { return static_cast<int>(turns.size()); }
  const Label& label(int t, int j) const;
};

// Reads `<path>/<split>.json` when `path` is a directory, else `path` itself.
std::vector<Dialogue> load_dialogues(const std::filesystem::path& path, Split split,
                                     const SlotSchema& schema,
                                     const Normalizer& normalizer = default_normalizer());
std::vector<Dialogue> parse_dialogues(const nlohmann::json& root, const SlotSchema& schema,
                                      const Normalizer& normalizer = default_normalizer());
nlohmann::ordered_json dialogues_to_json(const std::vector<Dialogue>& dialogues,
                                         const SlotSchema& schema);

// Number of dialogues in which each domain carries at least one non-none label.
std::map<std::string, int> domain_dialogue_counts(const std::vector<Dialogue>& dialogues,
                                                  const SlotSchema& schema);

// ---------------------------------------------------------------------------
// Flattened context

enum class Side { kSystem, kUser };

struct TurnBoundary {
  int turn = 0;
  Side side = Side::kUser;
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
};

struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  bool operator==(const CharSpan&) const = default;
};

struct FlatContext {
  std::string text;
  std::vector<TurnBoundary> boundaries;  // chronological, most recent last
};

// Placed between consecutive non-empty utterances.
inline constexpr std::string_view kSideSeparator = " | ";

FlatContext flatten_context(const Dialogue& dialogue, int t);

// Character span of `value` in the most recent side containing a
// word-aligned occurrence (user before system within a turn, first
// occurrence within a side); absent when the value occurs nowhere.
std::optional<CharSpan> derive_span(const FlatContext& context, std::string_view value);

// ---------------------------------------------------------------------------
// Picklists and examples

// Fills each categorical pair's picklist with the sorted, deduplicated set of
// prediction-gated training values. Throws kSchema for an empty picklist.
SlotSchema build_picklists(const std::vector<Dialogue>& train_dialogues, const SlotSchema& schema);

struct TurnAnnotation {
  Gate gate = Gate::kNone;
  std::string value = "none";
  std::optional<CharSpan> char_span;    // non-categorical, prediction, matchable
  std::optional<int> picklist_index;    // categorical, prediction, covered (0-based)
};

struct Example {
  std::string dialogue_id;
  int turn = 0;
  int slot = 0;
  TurnAnnotation annotation;
  // False for categorical predictions whose value is missing from the picklist;
  // such examples are trained on the gate only.
  bool covered = true;
  std::shared_ptr<const FlatContext> context;
};

struct MaterializeStats {
  int coverage_warnings = 0;
  int unmatched_spans = 0;
};

std::vector<Example> materialize_examples(const std::vector<Dialogue>& dialogues,
                                          const SlotSchema& schema,
                                          MaterializeStats* stats = nullptr);

nlohmann::ordered_json example_to_json(const Example& example, const SlotSchema& schema);
std::string examples_to_jsonl(const std::vector<Example>& examples, const SlotSchema& schema);

}  // namespace dsdst::corpus

#endif  // DSDST_CORPUS_H_
