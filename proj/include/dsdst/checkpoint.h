#ifndef DSDST_CHECKPOINT_H_
#define DSDST_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "dsdst/corpus.h"
#include "dsdst/model.h"
#include "dsdst/textenc.h"

namespace dsdst::model {

// Binary container:
//   8 bytes  magic "DSDSTCKP"
//   u32      format version (1)
//   u64      header length in bytes
//   header   JSON: config, fingerprints, frozen flag, tensor table, extra
//   payload  float32 little-endian values, row-major, in tensor-table order
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointInfo {
  ModelConfig config;
  std::uint64_t vocabulary_fingerprint = 0;
  std::uint64_t schema_fingerprint = 0;
  bool frozen_value_encoder = true;
  nlohmann::json extra = nlohmann::json::object();
};

void save_checkpoint(const std::filesystem::path& path, const DualStrategyModel& model,
                     const textenc::Vocabulary& vocab, const corpus::SlotSchema& schema,
                     const nlohmann::json& extra = nlohmann::json::object());

struct LoadedCheckpoint {
  DualStrategyModel model;
  CheckpointInfo info;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Throws kCompatibility when the vocabulary or schema differs from the one the
// checkpoint was trained with.
void check_compatible(const CheckpointInfo& info, const textenc::Vocabulary& vocab,
                      const corpus::SlotSchema& schema);

// Import hook. Reads {"name": {"shape": [rows, cols] | [n], "data": [...]}}.
std::map<std::string, Matrix> load_tensor_map(const std::filesystem::path& path);

// Renames BERT-style tensor names (bert.embeddings.word_embeddings.weight,
// bert.encoder.layer.N.attention.self.query.weight, ...) to encoder names,
// transposing dense kernels from [out, in] to [in, out]. Unknown names pass
// through unchanged.
std::map<std::string, Matrix> map_bert_names(const std::map<std::string, Matrix>& tensors);

}  // namespace dsdst::model

#endif  // DSDST_CHECKPOINT_H_
