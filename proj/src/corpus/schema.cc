#include <algorithm>
#include <fstream>
#include <set>

#include "dsdst/corpus.h"
#include "dsdst/error.h"
#include "dsdst/hash.h"

namespace dsdst::corpus {

std::string_view to_string(SlotKind kind) {
  return kind == SlotKind::kCategorical ? "categorical" : "noncategorical";
}

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::kDsDst: return "ds_dst";
    case Variant::kDsSpan: return "ds_span";
    case Variant::kDsPicklist: return "ds_picklist";
  }
  return "ds_dst";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

std::string_view to_string(Gate gate) {
  switch (gate) {
    case Gate::kNone: return "none";
    case Gate::kDontCare: return "dontcare";
    case Gate::kPrediction: return "prediction";
  }
  return "none";
}

SlotKind parse_slot_kind(std::string_view text) {
  if (text == "categorical") return SlotKind::kCategorical;
  if (text == "noncategorical" || text == "non-categorical") return SlotKind::kNonCategorical;
  fail(ErrorKind::kSchema, "unknown slot kind '" + std::string(text) + "'");
}

Variant parse_variant(std::string_view text) {
  if (text == "ds_dst") return Variant::kDsDst;
  if (text == "ds_span") return Variant::kDsSpan;
  if (text == "ds_picklist") return Variant::kDsPicklist;
  fail(ErrorKind::kUsage, "unknown variant '" + std::string(text) + "' (ds_dst|ds_span|ds_picklist)");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "validation" || text == "dev") return Split::kValidation;
  if (text == "test") return Split::kTest;
  fail(ErrorKind::kUsage, "unknown split '" + std::string(text) + "' (train|validation|test)");
}

Gate parse_gate(std::string_view text) {
  if (text == "none") return Gate::kNone;
  if (text == "dontcare") return Gate::kDontCare;
  if (text == "prediction") return Gate::kPrediction;
  fail(ErrorKind::kParse, "unknown gate '" + std::string(text) + "'");
}

std::optional<int> DomainSlotPair::picklist_index(std::string_view value) const {
  auto it = std::lower_bound(picklist.begin(), picklist.end(), value);
  if (it == picklist.end() || *it != value) return std::nullopt;
  return static_cast<int>(it - picklist.begin());
}

SlotSchema::SlotSchema(Variant variant, std::vector<DomainSlotPair> pairs)
    : variant_(variant), pairs_(std::move(pairs)) {
  for (std::size_t j = 0; j < pairs_.size(); ++j) pairs_[j].id = static_cast<int>(j);
}

std::optional<int> SlotSchema::find(std::string_view name) const {
  for (const auto& pair : pairs_) {
    if (pair.name() == name) return pair.id;
  }
  return std::nullopt;
}

std::size_t SlotSchema::count(SlotKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(pairs_.begin(), pairs_.end(), [kind](const auto& p) { return p.kind == kind; }));
}

std::vector<std::string> SlotSchema::domains() const {
  std::vector<std::string> out;
  for (const auto& pair : pairs_) {
    if (std::find(out.begin(), out.end(), pair.domain) == out.end()) out.push_back(pair.domain);
  }
  return out;
}

void SlotSchema::validate(bool require_picklists) const {
  std::set<std::string> seen;
  for (const auto& pair : pairs_) {
    if (pair.domain.empty() || pair.slot.empty()) {
      fail(ErrorKind::kSchema, "pair " + std::to_string(pair.id) + " has an empty domain or slot");
    }
    if (!seen.insert(pair.name()).second) {
      fail(ErrorKind::kSchema, "duplicate domain-slot pair '" + pair.name() + "'");
    }
    if (variant_ == Variant::kDsSpan && pair.categorical()) {
      fail(ErrorKind::kSchema, "ds_span schema has categorical pair '" + pair.name() + "'");
    }
    if (variant_ == Variant::kDsPicklist && !pair.categorical()) {
      fail(ErrorKind::kSchema, "ds_picklist schema has non-categorical pair '" + pair.name() + "'");
    }
    if (!pair.categorical() && !pair.picklist.empty()) {
      fail(ErrorKind::kSchema, "non-categorical pair '" + pair.name() + "' carries a picklist");
    }
    if (require_picklists && pair.categorical() && pair.picklist.empty()) {
      fail(ErrorKind::kSchema, "categorical pair '" + pair.name() + "' has an empty picklist");
    }
    if (!std::is_sorted(pair.picklist.begin(), pair.picklist.end()) ||
        std::adjacent_find(pair.picklist.begin(), pair.picklist.end()) != pair.picklist.end()) {
      fail(ErrorKind::kSchema, "picklist of '" + pair.name() + "' is not sorted and unique");
    }
  }
}

std::uint64_t SlotSchema::fingerprint() const {
  Fnv1a h;
  h.update(to_string(variant_));
  for (const auto& pair : pairs_) {
    h.update("\n");
    h.update(pair.name());
    h.update("\t");
    h.update(to_string(pair.kind));
    for (const auto& value : pair.picklist) {
      h.update("\t");
      h.update(value);
    }
  }
  return h.digest();
}

nlohmann::ordered_json SlotSchema::to_json() const {
  nlohmann::ordered_json root;
  root["variant"] = std::string(to_string(variant_));
  auto& out = root["pairs"] = nlohmann::ordered_json::array();
  for (const auto& pair : pairs_) {
    nlohmann::ordered_json p;
    p["domain"] = pair.domain;
    p["slot"] = pair.slot;
    p["kind"] = std::string(to_string(pair.kind));
    if (pair.categorical()) p["picklist"] = pair.picklist;
    out.push_back(std::move(p));
  }
  return root;
}

SlotSchema SlotSchema::from_json(const nlohmann::json& j) {
  try {
    Variant variant = parse_variant(j.at("variant").get<std::string>());
    std::vector<DomainSlotPair> pairs;
    for (const auto& p : j.at("pairs")) {
      DomainSlotPair pair;
      pair.domain = p.at("domain").get<std::string>();
      pair.slot = p.at("slot").get<std::string>();
      pair.kind = parse_slot_kind(p.at("kind").get<std::string>());
      if (p.contains("picklist")) pair.picklist = p.at("picklist").get<std::vector<std::string>>();
      pairs.push_back(std::move(pair));
    }
    SlotSchema schema(variant, std::move(pairs));
    schema.validate(/*require_picklists=*/false);
    return schema;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("schema json: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kUsage) fail(ErrorKind::kSchema, e.what());
    throw;
  }
}

SlotSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open schema file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return SlotSchema::from_json(j);
}

void save_schema(const SlotSchema& schema, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write schema file " + path.string());
  out << schema.to_json().dump(2) << "\n";
}

bool is_time_or_number_slot(std::string_view slot) {
  static constexpr std::string_view kSlots[] = {"leave at", "arrive by", "book time", "book people",
                                                "book stay"};
  return std::find(std::begin(kSlots), std::end(kSlots), slot) != std::end(kSlots);
}

SlotSchema apply_variant(const SlotSchema& base, Variant variant) {
  std::vector<DomainSlotPair> pairs = base.pairs();
  for (auto& pair : pairs) {
    switch (variant) {
      case Variant::kDsSpan: pair.kind = SlotKind::kNonCategorical; break;
      case Variant::kDsPicklist: pair.kind = SlotKind::kCategorical; break;
      case Variant::kDsDst:
        pair.kind = is_time_or_number_slot(pair.slot) ? SlotKind::kNonCategorical
                                                      : SlotKind::kCategorical;
        break;
    }
    if (!pair.categorical()) pair.picklist.clear();
  }
  return SlotSchema(variant, std::move(pairs));
}

SlotSchema multiwoz_schema() {
  static const std::pair<const char*, std::vector<const char*>> kDomains[] = {
      {"hotel",
       {"price range", "type", "parking", "book stay", "book day", "book people", "area", "stars",
        "internet", "name"}},
      {"train", {"destination", "day", "departure", "arrive by", "book people", "leave at"}},
      {"restaurant",
       {"food", "price range", "area", "name", "book time", "book day", "book people"}},
      {"attraction", {"area", "name", "type"}},
      {"taxi", {"leave at", "destination", "departure", "arrive by"}},
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

}  // namespace dsdst::corpus
