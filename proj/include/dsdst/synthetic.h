#ifndef DSDST_SYNTHETIC_H_
#define DSDST_SYNTHETIC_H_

#include <cstdint>

#include <json.hpp>

#include "dsdst/corpus.h"

namespace dsdst::corpus {

// Template-generated MultiWOZ-style corpus over three domains (hotel,
// restaurant, taxi) and twelve slots, five of them time/number valued. Used
// for smoke tests and the bundled example data. Output is a dialogue JSON
// array in the on-disk format; identical (count, seed) gives identical bytes.
nlohmann::ordered_json synthetic_dialogues(int count, std::uint64_t seed,
                                           const std::string& id_prefix = "SYN");

// Base schema of the synthetic corpus under the ds_dst partition (no picklists).
SlotSchema synthetic_schema();

// A hand-written two-domain dialogue (hotel, then restaurant) with its
// cumulative gold states; used by tracker and evaluation fixtures.
nlohmann::ordered_json hotel_restaurant_fixture();

}  // namespace dsdst::corpus

#endif  // DSDST_SYNTHETIC_H_
