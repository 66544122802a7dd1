#include <array>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dsdst/synthetic.h"

namespace dsdst::corpus {
namespace {

using Slots = std::vector<std::pair<std::string, std::string>>;

// Portable draw: std::uniform_int_distribution is implementation-defined.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool coin() { return below(2) == 0; }
  template <typename T>
  const T& pick(const std::vector<T>& items) { return items[below(items.size())]; }

 private:
  std::mt19937_64 rng_;
};

const std::vector<std::string> kAreas = {"north", "south", "east", "west", "centre"};
const std::vector<std::string> kPrices = {"cheap", "moderate", "expensive"};
const std::vector<std::string> kFoods = {"italian", "chinese", "indian", "french", "thai"};
const std::vector<std::string> kPlaces = {"museum", "station", "airport", "cinema", "market"};
const std::vector<std::string> kTimes = {"08:45", "09:15", "10:30", "12:15", "17:00",
                                         "18:30", "19:00", "20:45"};
const std::vector<std::string> kPeople = {"1", "2", "3", "4", "5", "6", "7", "8"};
const std::vector<std::string> kStays = {"1", "2", "3", "4", "5"};

struct Act {
  std::string user;
  Slots slots;  // "domain-slot" -> value
};

// One user act for `domain`, avoiding slots already filled in `state`.
Act draw_act(const std::string& domain, const std::map<std::string, std::string>& state,
             Draw& draw) {
  std::vector<Act> options;
  auto free = [&](std::initializer_list<const char*> slots) {
    for (const char* s : slots) {
      if (state.count(domain + "-" + s)) return false;
    }
    return true;
  };
  if (domain == "hotel") {
    const std::string& area = draw.pick(kAreas);
    const std::string& price = draw.pick(kPrices);
    const std::string& people = draw.pick(kPeople);
    const std::string& stay = draw.pick(kStays);
    if (free({"area"})) options.push_back({"i need a hotel in the " + area + " .", {{"hotel-area", area}}});
    if (free({"price range"}))
      options.push_back({"i am looking for a " + price + " hotel .", {{"hotel-price range", price}}});
    if (free({"price range", "area"}))
      options.push_back({"i want a " + price + " place to stay in the " + area + " .",
                         {{"hotel-price range", price}, {"hotel-area", area}}});
    if (free({"internet"}))
      options.push_back({"it should have free wifi .", {{"hotel-internet", "yes"}}});
    if (free({"book people", "book stay"}))
      options.push_back({"book it for " + people + " people and " + stay + " nights .",
                         {{"hotel-book people", people}, {"hotel-book stay", stay}}});
    if (free({"book stay"}))
      options.push_back({"i need it for " + stay + " nights .", {{"hotel-book stay", stay}}});
    if (free({"area"}))
      options.push_back({"the area does not matter to me .", {{"hotel-area", "dontcare"}}});
  } else if (domain == "restaurant") {
    const std::string& area = draw.pick(kAreas);
    const std::string& food = draw.pick(kFoods);
    const std::string& people = draw.pick(kPeople);
    const std::string& time = draw.pick(kTimes);
    if (free({"food"}))
      options.push_back({"i want to eat " + food + " food .", {{"restaurant-food", food}}});
    if (free({"food", "area"}))
      options.push_back({"find me a " + food + " restaurant in the " + area + " .",
                         {{"restaurant-food", food}, {"restaurant-area", area}}});
    if (free({"book people", "book time"}))
      options.push_back({"book a table for " + people + " at " + time + " .",
                         {{"restaurant-book people", people}, {"restaurant-book time", time}}});
    if (free({"book people"}))
      options.push_back({"i would like a table for " + people + " people .",
                         {{"restaurant-book people", people}}});
    if (free({"book time"}))
      options.push_back({"make the booking at " + time + " please .",
                         {{"restaurant-book time", time}}});
    if (free({"area"}))
      options.push_back({"any area is fine .", {{"restaurant-area", "dontcare"}}});
  } else {
    std::size_t a = draw.below(kPlaces.size());
    std::size_t b = (a + 1 + draw.below(kPlaces.size() - 1)) % kPlaces.size();
    const std::string& dep = kPlaces[a];
    const std::string& dest = kPlaces[b];
    const std::string& time = draw.pick(kTimes);
    if (free({"departure", "destination"}))
      options.push_back({"i need a taxi from the " + dep + " to the " + dest + " .",
                         {{"taxi-departure", dep}, {"taxi-destination", dest}}});
    if (free({"destination"}))
      options.push_back({"please get me a taxi to the " + dest + " .", {{"taxi-destination", dest}}});
    if (free({"leave at"}))
      options.push_back({"i want to leave at " + time + " .", {{"taxi-leave at", time}}});
    if (free({"departure", "leave at"}))
      options.push_back({"pick me up at the " + dep + " at " + time + " .",
                         {{"taxi-departure", dep}, {"taxi-leave at", time}}});
  }
  if (options.empty()) return {"ok , thanks .", {}};
  return options[draw.below(options.size())];
}

std::string system_prompt(const std::string& domain, Draw& draw) {
  static const std::map<std::string, std::vector<std::string>> kPrompts = {
      {"hotel", {"what kind of hotel do you need ?", "i have a few hotels . any preference ?",
                 "shall i book the hotel for you ?"}},
      {"restaurant", {"what kind of food would you like ?", "i found some restaurants . anything else ?",
                      "would you like a reservation ?"}},
      {"taxi", {"where would you like to go ?", "when do you want the taxi ?",
                "your taxi is booked . anything else ?"}},
  };
  return draw.pick(kPrompts.at(domain));
}

}  // namespace

SlotSchema synthetic_schema() {
  static const std::pair<const char*, std::vector<const char*>> kDomains[] = {
      {"hotel", {"area", "price range", "internet", "book stay", "book people"}},
      {"restaurant", {"food", "area", "book time", "book people"}},
      {"taxi", {"leave at", "destination", "departure"}},
  };
  std::vector<DomainSlotPair> pairs;
  for (const auto& [domain, slots] : kDomains) {
    for (const char* slot : slots) {
      DomainSlotPair pair;
      pair.domain = domain;
      pair.slot = slot;
      pairs.push_back(std::move(pair));
    }
  }
  return apply_variant(SlotSchema(Variant::kDsDst, std::move(pairs)), Variant::kDsDst);
}

nlohmann::ordered_json synthetic_dialogues(int count, std::uint64_t seed,
                                           const std::string& id_prefix) {
  static const std::vector<std::string> kDomainNames = {"hotel", "restaurant", "taxi"};
  Draw draw(seed);
  auto root = nlohmann::ordered_json::array();
  for (int n = 0; n < count; ++n) {
    std::vector<std::string> domains = {draw.pick(kDomainNames)};
    if (draw.coin()) {
      std::string second = draw.pick(kDomainNames);
      if (second != domains.front()) domains.push_back(second);
    }
    std::map<std::string, std::string> state;
    nlohmann::ordered_json turns = nlohmann::ordered_json::array();
    nlohmann::ordered_json states = nlohmann::ordered_json::array();
    auto emit = [&](std::string system, std::string user) {
      turns.push_back({{"system", std::move(system)}, {"user", std::move(user)}});
      nlohmann::ordered_json slots = nlohmann::ordered_json::object();
      for (const auto& [k, v] : state) slots[k] = v;
      states.push_back({{"turn", static_cast<int>(turns.size())}, {"slots", std::move(slots)}});
    };
    for (const auto& domain : domains) {
      std::size_t acts = 2 + draw.below(2);
      for (std::size_t a = 0; a < acts; ++a) {
        Act act = draw_act(domain, state, draw);
        for (const auto& [k, v] : act.slots) state[k] = v;
        emit(turns.empty() ? std::string() : system_prompt(domain, draw), act.user);
      }
    }
    if (draw.coin()) emit("is there anything else i can help with ?", "no , that is all . thank you .");
    char id[32];
    std::snprintf(id, sizeof(id), "%s%04d", id_prefix.c_str(), n);
    root.push_back({{"id", id}, {"turns", std::move(turns)}, {"states", std::move(states)}});
  }
  return root;
}

nlohmann::ordered_json hotel_restaurant_fixture() {
  return nlohmann::ordered_json::parse(R"([{
    "id": "FIX0001",
    "turns": [
      {"system": "", "user": "i am looking for a cheap hotel in the north ."},
      {"system": "i found one . how many people and nights ?", "user": "2 people for 3 nights please ."},
      {"system": "it is booked . anything else ?", "user": "i also want to eat italian food in the centre ."},
      {"system": "what time would you like ?", "user": "a table for 2 at 18:30 , thanks ."}
    ],
    "states": [
      {"turn": 1, "slots": {"hotel-price range": "cheap", "hotel-area": "north"}},
      {"turn": 2, "slots": {"hotel-price range": "cheap", "hotel-area": "north",
                            "hotel-book people": "2", "hotel-book stay": "3"}},
      {"turn": 3, "slots": {"hotel-price range": "cheap", "hotel-area": "north",
                            "hotel-book people": "2", "hotel-book stay": "3",
                            "restaurant-food": "italian", "restaurant-area": "centre"}},
      {"turn": 4, "slots": {"hotel-price range": "cheap", "hotel-area": "north",
                            "hotel-book people": "2", "hotel-book stay": "3",
                            "restaurant-food": "italian", "restaurant-area": "centre",
                            "restaurant-book people": "2", "restaurant-book time": "18:30"}}
    ]
  }])");
}

}  // namespace dsdst::corpus
