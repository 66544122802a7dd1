#ifndef DSDST_EVALKIT_H_
#define DSDST_EVALKIT_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dsdst/corpus.h"
#include "dsdst/tracker.h"

namespace dsdst::evalkit {

using tracker::TrackedState;

// Fraction of turns whose every slot value matches exactly ("none" included).
// Throws kAlignment when the (dialogue, turn) keys or slot names differ.
double joint_accuracy(const std::vector<TrackedState>& predictions,
                      const std::vector<TrackedState>& golds);

// Per pair, the fraction of turns whose value matches; gold slot order.
std::vector<std::pair<std::string, double>> per_slot_accuracy(
    const std::vector<TrackedState>& predictions, const std::vector<TrackedState>& golds);

struct UnfoundCounts {
  std::string slot;
  int unfound = 0;
  int relative_turns = 0;  // turns with a prediction-gated gold value
  int recovered = 0;       // unfound values the predictions still got right
};

// Values with no word-aligned occurrence anywhere in the flattened context.
// `predictions` may be null, in which case nothing counts as recovered.
std::vector<UnfoundCounts> unfound_stats(const std::vector<corpus::Dialogue>& dialogues,
                                         const corpus::SlotSchema& schema,
                                         const std::vector<TrackedState>* predictions);

// Joint accuracy with every decoded gate replaced by the gold gate.
double oracle_gate_joint_accuracy(const std::vector<corpus::Dialogue>& dialogues,
                                  const tracker::TurnPredictor& predictor,
                                  const corpus::SlotSchema& schema);

struct MetricsReport {
  std::string split;
  double joint_accuracy = 0.0;
  std::vector<std::pair<std::string, double>> per_slot;
  int turn_count = 0;
  int skipped_spans = 0;
  int coverage_warnings = 0;
  std::optional<double> oracle_gate_joint_accuracy;
  std::optional<double> null_baseline_joint_accuracy;
  std::vector<UnfoundCounts> unfound;

  nlohmann::ordered_json to_json() const;
  // slot,accuracy rows with a leading joint row.
  std::string per_slot_csv() const;
};

MetricsReport build_report(std::string split, const std::vector<TrackedState>& predictions,
                           const std::vector<TrackedState>& golds);

std::string unfound_csv(const std::vector<UnfoundCounts>& stats);

// Writes `path` (JSON) and the CSV mirror next to it with extension .csv.
void write_report(const MetricsReport& report, const std::filesystem::path& path);

}  // namespace dsdst::evalkit

#endif  // DSDST_EVALKIT_H_
