#include <doctest.h>

#include <random>

#include "dsdst/error.h"
#include "dsdst/synthetic.h"
#include "dsdst/tracker.h"
#include "world.h"

using namespace dsdst;
using namespace dsdst::tracker;
using model::Matrix;
using model::Vector;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

Vector random_distribution(std::mt19937_64& rng, int n, bool coarse) {
  Vector v(n);
  for (int i = 0; i < n; ++i) {
    v(i) = coarse ? static_cast<double>(rng() % 3) : std::uniform_real_distribution<double>()(rng);
  }
  if (v.sum() == 0.0) v(0) = 1.0;
  return v / v.sum();
}

}  // namespace

TEST_CASE("argmax_gate breaks ties toward the lower class") {
  CHECK(argmax_gate({0.2, 0.5, 0.3}) == corpus::Gate::kDontCare);
  CHECK(argmax_gate({0.4, 0.4, 0.2}) == corpus::Gate::kNone);
  CHECK(argmax_gate({0.1, 0.45, 0.45}) == corpus::Gate::kDontCare);
  CHECK(argmax_gate({1.0 / 3, 1.0 / 3, 1.0 / 3}) == corpus::Gate::kNone);
}

TEST_CASE("decode_span examples") {
  Vector onehot = Vector::Zero(6);
  onehot(3) = 1.0;
  SpanChoice c = decode_span(onehot, onehot, 0, 6);
  CHECK(c.start == 3);
  CHECK(c.end == 3);

  SpanChoice two = decode_span(vec({0.6, 0.4}), vec({0.3, 0.7}), 0, 2);
  CHECK(two.start == 0);
  CHECK(two.end == 1);
  CHECK(two.score == doctest::Approx(0.42).epsilon(1e-15));

  Vector start = Vector::Constant(8, 0.01);
  start(5) = 0.93;
  Vector end = Vector::Constant(8, 0.01);
  end(2) = 0.93;
  SpanChoice crossed = decode_span(start / start.sum(), end / end.sum(), 0, 8);
  CHECK(crossed.start <= crossed.end);
}

TEST_CASE("decode_span matches exhaustive enumeration") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 3000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 14);
    const bool coarse = trial % 2 == 0;
    Vector ps = random_distribution(rng, n, coarse);
    Vector pe = random_distribution(rng, n, coarse);
    const int begin = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    const int max_len = 1 + static_cast<int>(rng() % 12);
    int bi = -1, bk = -1;
    double best = -1.0;
    for (int i = begin; i < n; ++i) {
      for (int k = i; k < n && k - i < max_len; ++k) {
        if (ps(i) * pe(k) > best) {
          best = ps(i) * pe(k);
          bi = i;
          bk = k;
        }
      }
    }
    SpanChoice c = decode_span(ps, pe, begin, n, max_len);
    CHECK(c.start == bi);
    CHECK(c.end == bk);
    CHECK(c.score == best);
    CHECK(c.start <= c.end);
    CHECK(c.end - c.start < max_len);
  }
}

TEST_CASE("decode_picklist") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  Vector r(4);
  for (int i = 0; i < 4; ++i) r(i) = normal(rng);

  Matrix single(1, 4);
  single.row(0) = -r.transpose();
  CHECK(decode_picklist(r, single, {"only"}).value == "only");

  for (int trial = 0; trial < 200; ++trial) {
    const int L = 1 + static_cast<int>(rng() % 6);
    Matrix reps(L, 4);
    for (Eigen::Index i = 0; i < reps.size(); ++i) reps.data()[i] = normal(rng);
    std::vector<std::string> names;
    for (int l = 0; l < L; ++l) names.push_back("v" + std::to_string(l));
    int want = 0;
    for (int l = 1; l < L; ++l) {
      if (model::cosine(r, reps.row(l).transpose()) > model::cosine(r, reps.row(want).transpose())) want = l;
    }
    PicklistChoice c = decode_picklist(r, reps, names);
    CHECK(c.index == want);
    CHECK(c.value == names[static_cast<std::size_t>(want)]);
    CHECK(c.scores.size() == static_cast<std::size_t>(L));

    const int self = static_cast<int>(rng() % static_cast<std::uint64_t>(L));
    reps.row(self) = 2.5 * r.transpose();
    CHECK(decode_picklist(r, reps, names).index == self);
  }

  Matrix tied(3, 4);
  tied.row(0) = -r.transpose();
  tied.row(1) = r.transpose();
  tied.row(2) = r.transpose();
  CHECK(decode_picklist(r, tied, {"a", "b", "c"}).index == 1);
}

TEST_CASE("gold replay of the two-domain fixture") {
  const auto schema = corpus::apply_variant(corpus::synthetic_schema(), corpus::Variant::kDsDst);
  const auto raw = corpus::hotel_restaurant_fixture();
  const auto dialogues = corpus::parse_dialogues(raw, schema);
  const auto states = track_dialogue(GoldPredictor(schema), dialogues.front(), schema);
  REQUIRE(states.size() == 4);
  for (std::size_t t = 0; t < states.size(); ++t) {
    CHECK(states[t].slots.size() == schema.size());
    const auto& expected = raw[0]["states"][t]["slots"];
    int filled = 0;
    for (const auto& [name, value] : states[t].slots) {
      if (value == "none") {
        CHECK_FALSE(expected.contains(name));
      } else {
        ++filled;
        CHECK(expected.at(name).get<std::string>() == value);
      }
    }
    CHECK(filled == static_cast<int>(expected.size()));
  }
  // New triplets appear per turn: hotel first, then restaurant.
  CHECK(states[0].slots[0].second == "north");
  CHECK(states[1].slots[3].second == "3");
  CHECK(states[2].slots[5].second == "italian");
  CHECK(states[3].slots[7].second == "18:30");
}

TEST_CASE("model predictor shape, determinism and turn independence") {
  auto world = testing::make_world(30, 7);
  model::DualStrategyModel m(testing::tiny_config(world.vocab.size()), 11);
  m.prepare_picklists(world.schema, world.vocab);
  ModelPredictor predictor(m, world.schema, world.vocab, 128);
  const corpus::Dialogue* longest = &world.dialogues.front();
  for (const auto& d : world.dialogues) {
    if (d.turn_count() > longest->turn_count()) longest = &d;
  }
  REQUIRE(longest->turn_count() >= 3);
  auto a = track_dialogue(predictor, *longest, world.schema);
  auto b = track_dialogue(predictor, *longest, world.schema);
  CHECK(a == b);
  REQUIRE(a.size() == static_cast<std::size_t>(longest->turn_count()));
  for (const auto& s : a) CHECK(s.slots.size() == world.schema.size());

  auto preds = predictor.predict_turn(*longest, 2);
  REQUIRE(preds.size() == world.schema.size());
  for (const auto& p : preds) {
    const auto& pair = world.schema[static_cast<std::size_t>(p.slot)];
    CHECK(p.decoded_gate == argmax_gate(p.gate_probs));
    if (p.decoded_gate == corpus::Gate::kNone) CHECK(p.value == "none");
    if (p.decoded_gate == corpus::Gate::kDontCare) CHECK(p.value == "dontcare");
    if (p.decoded_gate == corpus::Gate::kPrediction && pair.categorical()) {
      CHECK(std::find(pair.picklist.begin(), pair.picklist.end(), p.value) != pair.picklist.end());
    }
    if (p.span) {
      CHECK(p.span->first <= p.span->second);
      CHECK(p.span->second - p.span->first < kDefaultMaxSpanLen);
    }
  }

  // Forced prediction gates exercise both decoders.
  std::vector<corpus::Gate> forced(world.schema.size(), corpus::Gate::kPrediction);
  for (const auto& p : predictor.predict_turn(*longest, 2, &forced)) {
    const auto& pair = world.schema[static_cast<std::size_t>(p.slot)];
    CHECK(p.decoded_gate == corpus::Gate::kPrediction);
    CHECK(p.span.has_value() == !pair.categorical());
    CHECK(p.picklist_scores.has_value() == pair.categorical());
  }

  corpus::Dialogue cut = *longest;
  cut.turns.pop_back();
  cut.labels.pop_back();
  auto shorter = track_dialogue(predictor, cut, world.schema);
  for (std::size_t t = 0; t < shorter.size(); ++t) CHECK(shorter[t] == a[t]);

  corpus::Dialogue single = *longest;
  single.turns.resize(1);
  single.labels.resize(1);
  CHECK(track_dialogue(predictor, single, world.schema).size() == 1);
}

TEST_CASE("prediction dump round trip") {
  TrackedState s{"D1", 2, {{"hotel-area", "north"}, {"hotel-price range", "none"}, {"a-b", "x \"y\""}}};
  const std::string text = states_to_jsonl({s, s});
  auto back = parse_states_jsonl(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == s);
  CHECK(text.substr(0, text.find('\n')) ==
        R"({"schema_version":1,"dialogue_id":"D1","turn":2,"state":{"hotel-area":"north","hotel-price range":"none","a-b":"x \"y\""}})");
  CHECK_THROWS_AS(parse_states_jsonl("{\"schema_version\":2,\"dialogue_id\":\"x\",\"turn\":1,\"state\":{}}"), Error);
  CHECK_THROWS_AS(parse_states_jsonl("{oops"), Error);
  const std::string pretty = pretty_state(s);
  CHECK(pretty.find("north") != std::string::npos);
  CHECK(pretty.find("price range") == std::string::npos);
}
