#include <doctest.h>

#include <cctype>
#include <random>

#include "dsdst/corpus.h"
#include "dsdst/error.h"
#include "dsdst/synthetic.h"
#include "world.h"

using namespace dsdst;
using namespace dsdst::corpus;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kUsage;
}

SlotSchema small_schema() {
  std::vector<DomainSlotPair> pairs(3);
  pairs[0].domain = "hotel";
  pairs[0].slot = "price range";
  pairs[1].domain = "hotel";
  pairs[1].slot = "book stay";
  pairs[2].domain = "taxi";
  pairs[2].slot = "destination";
  return apply_variant(SlotSchema(Variant::kDsDst, pairs), Variant::kDsDst);
}

Dialogue make_dialogue(std::vector<std::pair<std::string, std::string>> sides) {
  Dialogue d;
  d.id = "D";
  int index = 1;
  for (auto& [system, user] : sides) d.turns.push_back({index++, system, user});
  return d;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Scans every side from the newest turn backwards, user first, and every
// start offset left to right.
std::optional<CharSpan> span_oracle(const Dialogue& d, int t, const std::string& value) {
  std::string flat;
  struct Side {
    int turn;
    bool user;
    std::size_t start;
    std::string text;
  };
  std::vector<Side> sides;
  for (int i = 1; i <= t; ++i) {
    for (bool user : {false, true}) {
      const std::string& text = user ? d.turns[i - 1].user : d.turns[i - 1].system;
      if (text.empty()) continue;
      if (!flat.empty()) flat += " | ";
      sides.push_back({i, user, flat.size(), text});
      flat += text;
    }
  }
  for (int i = t; i >= 1; --i) {
    for (bool user : {true, false}) {
      for (const Side& s : sides) {
        if (s.turn != i || s.user != user) continue;
        for (std::size_t p = 0; p + value.size() <= s.text.size(); ++p) {
          if (s.text.compare(p, value.size(), value) != 0) continue;
          const std::size_t e = p + value.size();
          if (p > 0 && word_char(s.text[p - 1])) continue;
          if (e < s.text.size() && word_char(s.text[e])) continue;
          return CharSpan{s.start + p, s.start + e};
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("derive_gate") {
  CHECK(derive_gate("none") == Gate::kNone);
  CHECK(derive_gate("") == Gate::kNone);
  CHECK(derive_gate("dontcare") == Gate::kDontCare);
  CHECK(derive_gate("dont care") == Gate::kDontCare);
  CHECK(derive_gate("cheap") == Gate::kPrediction);
}

TEST_CASE("normalizer") {
  const Normalizer& n = default_normalizer();
  CHECK(n.text("  I Need   a HOTEL ") == "i need a hotel");
  CHECK(n.text("a | b") == "a b");
  CHECK(n.value(" Cheap. ") == "cheap");
  Normalizer custom;
  custom.add_value_synonym("centre", "center");
  CHECK(custom.value("Centre") == "center");
}

TEST_CASE("load_dialogues") {
  const SlotSchema schema = small_schema();
  testing::TempDir dir("corpus");
  testing::write_file(dir.path() / "train.json", "[]");
  CHECK(load_dialogues(dir.path(), Split::kTrain, schema).empty());

  auto two = nlohmann::json::parse(R"([{"id": "X1", "turns": [
      {"system": "", "user": "I want a CHEAP hotel"},
      {"system": "how long ?", "user": "for 3 nights"}],
    "states": [{"turn": 1, "slots": {"hotel-price range": "cheap"}},
               {"turn": 2, "slots": {"hotel-price range": "cheap", "hotel-book stay": "3"}}]}])");
  auto dialogues = parse_dialogues(two, schema);
  REQUIRE(dialogues.size() == 1);
  const Dialogue& d = dialogues.front();
  CHECK(d.turn_count() == 2);
  CHECK(d.labels.size() == 2);
  for (const auto& row : d.labels) CHECK(row.size() == schema.size());
  CHECK(d.turns[0].user == "i want a cheap hotel");
  CHECK(d.label(2, 1).gate == Gate::kPrediction);
  CHECK(d.label(2, 1).value == "3");
  CHECK(d.label(1, 1).gate == Gate::kNone);
  CHECK(d.label(1, 2).value == "none");

  auto unknown = two;
  unknown[0]["states"][0]["slots"]["spa-color"] = "red";
  CHECK(kind_of([&] { parse_dialogues(unknown, schema); }) == ErrorKind::kSchema);

  auto malformed = two;
  malformed[0]["turns"][0].erase("user");
  try {
    parse_dialogues(malformed, schema);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kParse);
    CHECK(std::string(e.what()).find("X1") != std::string::npos);
  }

  testing::write_file(dir.path() / "test.json", "{not json");
  CHECK(kind_of([&] { load_dialogues(dir.path(), Split::kTest, schema); }) == ErrorKind::kParse);
}

TEST_CASE("flatten_context") {
  Dialogue one = make_dialogue({{"", "i need a taxi"}});
  FlatContext c = flatten_context(one, 1);
  CHECK(c.text == "i need a taxi");
  REQUIRE(c.boundaries.size() == 1);
  CHECK(c.boundaries[0].side == Side::kUser);

  Dialogue two = make_dialogue({{"hi", "book a hotel"}, {"which area?", "the north"}});
  c = flatten_context(two, 2);
  CHECK(c.text == "hi | book a hotel | which area? | the north");
  REQUIRE(c.boundaries.size() == 4);
  const Side order[] = {Side::kSystem, Side::kUser, Side::kSystem, Side::kUser};
  const int turns[] = {1, 1, 2, 2};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(c.boundaries[i].side == order[i]);
    CHECK(c.boundaries[i].turn == turns[i]);
    if (i > 0) CHECK(c.boundaries[i].start == c.boundaries[i - 1].end + kSideSeparator.size());
  }
  CHECK(c.boundaries.back().end == c.text.size());

  Dialogue three = make_dialogue({{"", "a"}, {"b", "c"}, {"d", "e"}});
  CHECK(flatten_context(three, 1).text == "a");
  CHECK(kind_of([&] { flatten_context(three, 4); }) == ErrorKind::kRange);
  CHECK(kind_of([&] { flatten_context(three, 0); }) == ErrorKind::kRange);
}

TEST_CASE("derive_span examples") {
  Dialogue d = make_dialogue({{"", "i need a hotel"}, {"how long ?", "i need it for 3 nights"}});
  FlatContext c = flatten_context(d, 2);
  auto span = derive_span(c, "3");
  REQUIRE(span);
  CHECK(c.text.substr(span->start, span->end - span->start) == "3");
  CHECK(span->start >= c.boundaries.back().start);

  Dialogue wifi = make_dialogue({{"", "it should have free wifi"}});
  CHECK_FALSE(derive_span(flatten_context(wifi, 1), "yes"));

  c = flatten_context(d, 2);
  span = derive_span(c, "i need it for 3 nights");
  REQUIRE(span);
  CHECK(span->start == c.boundaries.back().start);
  CHECK(span->end == c.boundaries.back().end);

  // Word alignment: "3" inside "13" is not a match.
  Dialogue digits = make_dialogue({{"", "room 13 please"}});
  CHECK_FALSE(derive_span(flatten_context(digits, 1), "3"));

  // User side wins within a turn; newer turn wins overall.
  Dialogue sides = make_dialogue({{"", "north"}, {"north or south ?", "north"}});
  c = flatten_context(sides, 2);
  span = derive_span(c, "north");
  REQUIRE(span);
  CHECK(span->start == c.boundaries[2].start);
}

TEST_CASE("derive_span matches a brute-force oracle") {
  const std::vector<std::string> words = {"a", "ab", "north", "3", "13", "8", ":", "15", "the", "cheap"};
  std::mt19937_64 rng(17);
  auto sentence = [&](int max_words, bool allow_empty) {
    const int n = static_cast<int>(rng() % static_cast<std::uint64_t>(max_words + 1));
    std::string s;
    for (int i = 0; i < n; ++i) {
      if (!s.empty()) s += ' ';
      s += words[rng() % words.size()];
    }
    if (s.empty() && !allow_empty) s = words[rng() % words.size()];
    return s;
  };
  int found = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int turns = 1 + static_cast<int>(rng() % 4);
    std::vector<std::pair<std::string, std::string>> sides;
    for (int i = 0; i < turns; ++i) sides.push_back({i == 0 ? "" : sentence(5, false), sentence(5, false)});
    Dialogue d = make_dialogue(sides);
    const int t = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(turns));
    const std::string value = sentence(2, false);
    const FlatContext c = flatten_context(d, t);
    const auto got = derive_span(c, value);
    const auto want = span_oracle(d, t, value);
    REQUIRE(got.has_value() == want.has_value());
    if (!got) continue;
    ++found;
    CHECK(*got == *want);
    // Soundness.
    CHECK(c.text.substr(got->start, got->end - got->start) == value);
    // Recency: no later side contains an aligned occurrence.
    for (const auto& b : c.boundaries) {
      if (b.start <= got->start && got->end <= b.end) {
        for (const auto& later : c.boundaries) {
          if (later.turn <= b.turn) continue;
          FlatContext only{c.text, {later}};
          CHECK_FALSE(derive_span(only, value));
        }
      }
    }
  }
  CHECK(found > 500);
}

TEST_CASE("build_picklists") {
  const SlotSchema schema = small_schema();
  std::vector<Dialogue> dialogues;
  for (const char* v : {"b", "a", "a", "c"}) {
    Dialogue d = make_dialogue({{"", "x"}});
    d.id = v;
    d.labels.assign(1, std::vector<Label>(schema.size()));
    d.labels[0][0] = {Gate::kPrediction, v};
    d.labels[0][2] = {Gate::kDontCare, "dontcare"};
    dialogues.push_back(d);
  }
  dialogues.back().labels[0][2] = {Gate::kPrediction, "museum"};
  SlotSchema built = build_picklists(dialogues, schema);
  CHECK(built[0].picklist == std::vector<std::string>{"a", "b", "c"});
  CHECK(built[1].picklist.empty());
  CHECK(built[2].picklist == std::vector<std::string>{"museum"});
  CHECK(built[0].picklist_index("c") == 2);
  CHECK_FALSE(built[0].picklist_index("d"));

  dialogues.back().labels[0][2] = {Gate::kDontCare, "dontcare"};
  try {
    build_picklists(dialogues, schema);
    FAIL("expected a schema error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSchema);
    CHECK(std::string(e.what()).find("taxi-destination") != std::string::npos);
  }
}

TEST_CASE("materialize_examples") {
  SlotSchema schema = multiwoz_schema();
  for (auto& pair : schema.mutable_pairs()) {
    if (pair.categorical()) pair.picklist = {"cheap"};
  }
  Dialogue d = make_dialogue({{"", "a cheap hotel for 3 nights"}, {"ok", "thanks"}});
  d.labels.assign(2, std::vector<Label>(schema.size()));
  const int price = *schema.find("hotel-price range");
  const int stay = *schema.find("hotel-book stay");
  const int area = *schema.find("hotel-area");
  for (int t = 0; t < 2; ++t) {
    d.labels[t][price] = {Gate::kPrediction, "cheap"};
    d.labels[t][stay] = {Gate::kPrediction, "3"};
    d.labels[t][area] = {Gate::kPrediction, "north"};
  }
  d.labels[1][stay] = {Gate::kPrediction, "4"};
  MaterializeStats stats;
  auto examples = materialize_examples({d}, schema, &stats);
  CHECK(examples.size() == 60);
  CHECK(stats.coverage_warnings == 2);
  CHECK(stats.unmatched_spans == 1);
  int spans = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& ex = examples[i];
    CHECK(ex.turn == static_cast<int>(i / schema.size()) + 1);
    CHECK(ex.slot == static_cast<int>(i % schema.size()));
    if (ex.annotation.gate != Gate::kPrediction) {
      CHECK_FALSE(ex.annotation.char_span);
      CHECK_FALSE(ex.annotation.picklist_index);
    }
    if (ex.annotation.char_span) ++spans;
    if (ex.slot == price) CHECK(ex.annotation.picklist_index == 0);
    if (ex.slot == area) CHECK_FALSE(ex.covered);
  }
  CHECK(spans == 1);
}

TEST_CASE("schema variants and counts") {
  const SlotSchema m = multiwoz_schema();
  CHECK(m.size() == 30);
  CHECK(m.count(SlotKind::kNonCategorical) == 9);
  CHECK(m.count(SlotKind::kCategorical) == 21);
  CHECK(m.domains().size() == 5);
  const SlotSchema span = apply_variant(m, Variant::kDsSpan);
  CHECK(span.count(SlotKind::kNonCategorical) == 30);
  const SlotSchema pick = apply_variant(m, Variant::kDsPicklist);
  CHECK(pick.count(SlotKind::kCategorical) == 30);

  SlotSchema dup = m;
  dup.mutable_pairs().push_back(m[0]);
  CHECK(kind_of([&] { dup.validate(false); }) == ErrorKind::kSchema);
  CHECK(kind_of([&] { m.validate(true); }) == ErrorKind::kSchema);

  const SlotSchema round = SlotSchema::from_json(m.to_json());
  CHECK(round.to_json().dump() == m.to_json().dump());
  CHECK(round.fingerprint() == m.fingerprint());
  CHECK(apply_variant(m, Variant::kDsSpan).fingerprint() != m.fingerprint());
}

TEST_CASE("bundled schema file") {
  const SlotSchema bundled = load_schema(std::filesystem::path(DSDST_SOURCE_DIR) / "data" /
                                         "multiwoz21_schema.json");
  CHECK(bundled.size() == 30);
  CHECK(bundled.count(SlotKind::kNonCategorical) == 9);
  CHECK(bundled.to_json().dump() == multiwoz_schema().to_json().dump());
}

TEST_CASE("example stream determinism") {
  auto a = testing::make_world(30, 7);
  auto b = testing::make_world(30, 7);
  CHECK(examples_to_jsonl(a.examples, a.schema) == examples_to_jsonl(b.examples, b.schema));
  CHECK(a.examples.size() == 112 * 12);
  for (const auto& ex : a.examples) {
    const auto& pair = a.schema[static_cast<std::size_t>(ex.slot)];
    if (pair.categorical() && ex.annotation.picklist_index && ex.covered) {
      CHECK(pair.picklist[static_cast<std::size_t>(*ex.annotation.picklist_index)] == ex.annotation.value);
    }
    if (ex.annotation.char_span) {
      const auto& s = *ex.annotation.char_span;
      CHECK(ex.context->text.substr(s.start, s.end - s.start) == ex.annotation.value);
    }
  }
}

TEST_CASE("bundled synthetic corpus") {
  const auto dir = std::filesystem::path(DSDST_SOURCE_DIR) / "data" / "synthetic";
  const SlotSchema schema = load_schema(dir / "schema.json");
  const auto train = load_dialogues(dir, Split::kTrain, schema);
  CHECK(train.size() == 30);
  CHECK(schema.size() == 12);
  CHECK(schema.domains().size() == 3);
  CHECK(schema.count(SlotKind::kCategorical) == 7);
  CHECK(schema.count(SlotKind::kNonCategorical) == 5);
  const auto expected = parse_dialogues(synthetic_dialogues(30, 7, "TRN"), schema);
  CHECK(dialogues_to_json(train, schema).dump() == dialogues_to_json(expected, schema).dump());
  for (const auto& [domain, count] : domain_dialogue_counts(train, schema)) CHECK(count > 0);
}
