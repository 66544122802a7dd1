#include <doctest.h>

#include "dsdst/error.h"
#include "dsdst/evalkit.h"
#include "dsdst/synthetic.h"
#include "world.h"

using namespace dsdst;
using namespace dsdst::evalkit;
using tracker::TrackedState;

namespace {

const std::vector<std::string> kSlots = {"hotel-area", "hotel-price range", "taxi-leave at"};

TrackedState state(const std::string& id, int turn, std::vector<std::string> values) {
  TrackedState s{id, turn, {}};
  for (std::size_t j = 0; j < kSlots.size(); ++j) s.slots.emplace_back(kSlots[j], values[j]);
  return s;
}

// Ten hand-labeled turns over two dialogues. Gold turns 1, 4 and 8 carry an
// empty state.
std::vector<TrackedState> fixture_gold() {
  return {
      state("A", 1, {"none", "none", "none"}),
      state("A", 2, {"north", "none", "none"}),
      state("A", 3, {"north", "cheap", "none"}),
      state("A", 4, {"none", "none", "none"}),
      state("A", 5, {"dontcare", "cheap", "none"}),
      state("B", 1, {"none", "none", "08:45"}),
      state("B", 2, {"east", "none", "08:45"}),
      state("B", 3, {"none", "none", "none"}),
      state("B", 4, {"east", "moderate", "08:45"}),
      state("B", 5, {"east", "moderate", "09:15"}),
  };
}

std::vector<TrackedState> fixture_pred() {
  return {
      state("A", 1, {"none", "none", "none"}),        // all right
      state("A", 2, {"north", "none", "none"}),       // all right
      state("A", 3, {"north", "none", "none"}),       // price wrong
      state("A", 4, {"none", "none", "10:30"}),       // leave at wrong
      state("A", 5, {"dontcare", "cheap", "none"}),   // all right
      state("B", 1, {"none", "none", "8:45"}),        // leave at wrong
      state("B", 2, {"west", "none", "08:45"}),       // area wrong
      state("B", 3, {"none", "none", "none"}),        // all right
      state("B", 4, {"east", "cheap", "none"}),       // price and leave at wrong
      state("B", 5, {"east", "moderate", "09:15"}),   // all right
  };
}

}  // namespace

TEST_CASE("joint and per-slot accuracy on the hand-labeled fixture") {
  const auto gold = fixture_gold();
  const auto pred = fixture_pred();
  // Hand count: turns A1 A2 A5 B3 B5 are fully right.
  CHECK(joint_accuracy(pred, gold) == 0.5);
  const auto per_slot = per_slot_accuracy(pred, gold);
  REQUIRE(per_slot.size() == 3);
  CHECK(per_slot[0] == std::pair<std::string, double>{"hotel-area", 0.9});
  CHECK(per_slot[1] == std::pair<std::string, double>{"hotel-price range", 0.8});
  CHECK(per_slot[2] == std::pair<std::string, double>{"taxi-leave at", 0.7});

  // Brute-force recomputation.
  int joint = 0;
  std::vector<int> right(kSlots.size(), 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    bool all = true;
    for (std::size_t j = 0; j < kSlots.size(); ++j) {
      const bool ok = gold[i].slots[j].second == pred[i].slots[j].second;
      right[j] += ok ? 1 : 0;
      all = all && ok;
    }
    joint += all ? 1 : 0;
  }
  CHECK(joint_accuracy(pred, gold) == static_cast<double>(joint) / 10.0);
  for (std::size_t j = 0; j < kSlots.size(); ++j) CHECK(per_slot[j].second == right[j] / 10.0);

  CHECK(joint_accuracy(gold, gold) == 1.0);
  CHECK(joint_accuracy(pred, pred) == 1.0);
  for (const auto& [name, acc] : per_slot_accuracy(gold, gold)) CHECK(acc == 1.0);

  // Order of the prediction list does not matter.
  auto shuffled = pred;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(joint_accuracy(shuffled, gold) == 0.5);
}

TEST_CASE("two turns with one wrong slot score one half") {
  std::vector<TrackedState> gold = {state("A", 1, {"north", "none", "none"}),
                                    state("A", 2, {"north", "cheap", "none"})};
  std::vector<TrackedState> pred = gold;
  pred[1].slots[1].second = "expensive";
  CHECK(joint_accuracy(pred, gold) == 0.5);
  const auto per_slot = per_slot_accuracy(pred, gold);
  CHECK(per_slot[0].second == 1.0);
  CHECK(per_slot[1].second == 0.5);
  CHECK(per_slot[2].second == 1.0);
}

TEST_CASE("alignment errors") {
  auto gold = fixture_gold();
  auto pred = fixture_pred();
  pred.pop_back();
  try {
    joint_accuracy(pred, gold);
    FAIL("expected an alignment error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kAlignment);
    CHECK(std::string(e.what()).find("B#5") != std::string::npos);
  }
  pred = fixture_pred();
  pred[0].slots.pop_back();
  CHECK_THROWS_AS(per_slot_accuracy(pred, gold), Error);
  CHECK(joint_accuracy({}, {}) == 0.0);
}

TEST_CASE("null predictor on a fixture with three empty turns") {
  corpus::SlotSchema schema = corpus::apply_variant(corpus::synthetic_schema(), corpus::Variant::kDsDst);
  std::vector<corpus::Dialogue> dialogues(2);
  const std::vector<std::vector<bool>> empty = {{true, false, false, true, false},
                                                {false, false, true, false, false}};
  for (std::size_t d = 0; d < 2; ++d) {
    dialogues[d].id = d == 0 ? "A" : "B";
    for (int t = 1; t <= 5; ++t) {
      dialogues[d].turns.push_back({t, t == 1 ? "" : "ok", "hello"});
      std::vector<corpus::Label> row(schema.size());
      if (!empty[d][static_cast<std::size_t>(t - 1)]) row[0] = {corpus::Gate::kPrediction, "north"};
      dialogues[d].labels.push_back(row);
    }
  }
  const auto golds = tracker::gold_states(dialogues, schema);
  const auto null = tracker::track_all(tracker::NullPredictor(schema), dialogues, schema);
  CHECK(joint_accuracy(null, golds) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(oracle_gate_joint_accuracy(dialogues, tracker::GoldPredictor(schema), schema) == 1.0);
}

TEST_CASE("unfound stats on a hand-built fixture") {
  corpus::SlotSchema schema = corpus::apply_variant(corpus::synthetic_schema(), corpus::Variant::kDsDst);
  const int internet = *schema.find("hotel-internet");
  corpus::Dialogue d;
  d.id = "U";
  d.turns = {{1, "", "it should have free wifi ."},
             {2, "ok", "yes please ."},
             {3, "ok", "thanks"},
             {4, "ok", "bye"},
             {5, "ok", "hello"}};
  d.labels.assign(5, std::vector<corpus::Label>(schema.size()));
  // Prediction turns 1..4. "free parking" and "no" occur nowhere in the
  // context; "yes" occurs in turn 2.
  d.labels[0][internet] = {corpus::Gate::kPrediction, "free parking"};
  d.labels[1][internet] = {corpus::Gate::kPrediction, "no"};
  d.labels[2][internet] = {corpus::Gate::kPrediction, "yes"};
  d.labels[3][internet] = {corpus::Gate::kPrediction, "yes"};

  auto preds = tracker::gold_states({d}, schema);
  preds[0].slots[static_cast<std::size_t>(internet)].second = "none";
  const auto stats = unfound_stats({d}, schema, &preds);
  const auto& row = stats[static_cast<std::size_t>(internet)];
  CHECK(row.slot == "hotel-internet");
  CHECK(row.unfound == 2);
  CHECK(row.relative_turns == 4);
  CHECK(row.recovered == 1);
  for (const auto& s : stats) {
    CHECK(0 <= s.recovered);
    CHECK(s.recovered <= s.unfound);
    CHECK(s.unfound <= s.relative_turns);
  }
  CHECK(unfound_stats({d}, schema, nullptr)[static_cast<std::size_t>(internet)].recovered == 0);

  // Verbatim corpus: nothing is unfound.
  const auto fixture = corpus::parse_dialogues(corpus::hotel_restaurant_fixture(), schema);
  for (const auto& s : unfound_stats(fixture, schema, nullptr)) CHECK(s.unfound == 0);

  const std::string csv = unfound_csv(stats);
  CHECK(csv.rfind("slot,unfound,relative_turns,recovered\n", 0) == 0);
  CHECK(csv.find("hotel-internet,2,4,1\n") != std::string::npos);
}

TEST_CASE("oracle gates never lower joint accuracy") {
  auto world = testing::make_world(30, 7);
  for (std::uint64_t seed : {1, 2, 3}) {
    model::DualStrategyModel m(testing::tiny_config(world.vocab.size()), seed);
    m.prepare_picklists(world.schema, world.vocab);
    tracker::ModelPredictor predictor(m, world.schema, world.vocab, 128);
    std::vector<corpus::Dialogue> some(world.dialogues.begin(), world.dialogues.begin() + 8);
    const double plain =
        joint_accuracy(tracker::track_all(predictor, some, world.schema), tracker::gold_states(some, world.schema));
    const double oracle = oracle_gate_joint_accuracy(some, predictor, world.schema);
    CHECK(oracle >= plain);
  }
}

TEST_CASE("report serialization is deterministic") {
  MetricsReport r = build_report("test", fixture_pred(), fixture_gold());
  CHECK(r.turn_count == 10);
  CHECK(r.joint_accuracy == 0.5);
  r.oracle_gate_joint_accuracy = 0.75;
  r.unfound = {{"hotel-area", 1, 4, 0}};
  const std::string a = r.to_json().dump(2);
  const std::string b = build_report("test", fixture_pred(), fixture_gold()).to_json().dump(2);
  CHECK(a != b);
  MetricsReport again = build_report("test", fixture_pred(), fixture_gold());
  again.oracle_gate_joint_accuracy = 0.75;
  again.unfound = {{"hotel-area", 1, 4, 0}};
  CHECK(again.to_json().dump(2) == a);

  const auto j = r.to_json();
  CHECK(j["split"] == "test");
  CHECK(j["per_slot"]["taxi-leave at"] == 0.7);
  CHECK(j.contains("skipped_spans"));
  CHECK(j.contains("coverage_warnings"));
  const std::string csv = r.per_slot_csv();
  CHECK(csv.rfind("slot,accuracy,unfound,relative_turns,recovered\njoint,0.500000,,,\n", 0) == 0);
  CHECK(csv.find("hotel-area,0.900000,1,4,0\n") != std::string::npos);

  testing::TempDir dir("report");
  write_report(r, dir.path() / "metrics.json");
  CHECK(testing::read_file(dir.path() / "metrics.json") == a + "\n");
  CHECK(testing::read_file(dir.path() / "metrics.csv") == csv);
}
