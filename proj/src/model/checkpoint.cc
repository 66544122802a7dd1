#include <bit>
#include <cstring>
#include <fstream>
#include <regex>
#include <vector>

#include "dsdst/checkpoint.h"
#include "dsdst/error.h"
#include "dsdst/hash.h"

namespace dsdst::model {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

constexpr char kMagic[8] = {'D', 'S', 'D', 'S', 'T', 'C', 'K', 'P'};

std::uint64_t parse_hex64(const std::string& text) {
  return static_cast<std::uint64_t>(std::stoull(text, nullptr, 16));
}

void write_tensors(const ParameterSet& set, const std::string& group, nlohmann::ordered_json& table,
                   std::vector<float>& payload) {
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Matrix& m = set[i];
    table.push_back({{"name", set.name(i)},
                     {"group", group},
                     {"rows", m.rows()},
                     {"cols", m.cols()},
                     {"decay", set.decays(i)},
                     {"offset", payload.size()}});
    for (Eigen::Index k = 0; k < m.size(); ++k) payload.push_back(static_cast<float>(m.data()[k]));
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const DualStrategyModel& model,
                     const textenc::Vocabulary& vocab, const corpus::SlotSchema& schema,
                     const nlohmann::json& extra) {
  nlohmann::ordered_json header;
  header["format"] = "dual-dst-checkpoint";
  header["config"] = model.config().to_json();
  header["vocabulary_fingerprint"] = hex64(vocab.fingerprint());
  header["schema_fingerprint"] = hex64(schema.fingerprint());
  header["frozen_value_encoder"] = true;
  header["extra"] = extra;
  std::vector<float> payload;
  auto& table = header["tensors"] = nlohmann::ordered_json::array();
  write_tensors(model.trainable(), "trainable", table, payload);
  write_tensors(model.frozen(), "frozen", table, payload);

  std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write checkpoint " + path.string());
  const std::uint32_t version = kCheckpointVersion;
  const std::uint64_t header_len = text.size();
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) fail(ErrorKind::kIo, "short write on checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t header_len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    fail(ErrorKind::kCompatibility, path.string() + " is not a checkpoint");
  }
  if (version != kCheckpointVersion) {
    fail(ErrorKind::kCompatibility, "unsupported checkpoint version " + std::to_string(version));
  }
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  std::vector<char> rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (rest.size() % sizeof(float) != 0) fail(ErrorKind::kParse, "truncated checkpoint payload");
  std::vector<float> payload(rest.size() / sizeof(float));
  std::memcpy(payload.data(), rest.data(), rest.size());

  LoadedCheckpoint out;
  try {
    auto header = nlohmann::json::parse(text);
    out.info.config = ModelConfig::from_json(header.at("config"));
    out.info.vocabulary_fingerprint = parse_hex64(header.at("vocabulary_fingerprint"));
    out.info.schema_fingerprint = parse_hex64(header.at("schema_fingerprint"));
    out.info.frozen_value_encoder = header.at("frozen_value_encoder").get<bool>();
    out.info.extra = header.value("extra", nlohmann::json::object());
    ParameterSet trainable, frozen;
    for (const auto& t : header.at("tensors")) {
      auto rows = t.at("rows").get<Eigen::Index>();
      auto cols = t.at("cols").get<Eigen::Index>();
      auto offset = t.at("offset").get<std::size_t>();
      if (offset + static_cast<std::size_t>(rows * cols) > payload.size()) {
        fail(ErrorKind::kParse, "tensor '" + t.at("name").get<std::string>() + "' overruns payload");
      }
      ParameterSet& set = t.at("group").get<std::string>() == "frozen" ? frozen : trainable;
      std::size_t i = set.add(t.at("name").get<std::string>(), rows, cols, t.value("decay", true));
      for (Eigen::Index k = 0; k < rows * cols; ++k) {
        set[i].data()[k] = static_cast<double>(payload[offset + static_cast<std::size_t>(k)]);
      }
    }
    out.model = DualStrategyModel(out.info.config, std::move(trainable), std::move(frozen));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, "checkpoint header: " + std::string(e.what()));
  }
  return out;
}

void check_compatible(const CheckpointInfo& info, const textenc::Vocabulary& vocab,
                      const corpus::SlotSchema& schema) {
  if (info.vocabulary_fingerprint != vocab.fingerprint()) {
    fail(ErrorKind::kCompatibility, "vocabulary fingerprint " + hex64(vocab.fingerprint()) +
                                        " does not match checkpoint " +
                                        hex64(info.vocabulary_fingerprint));
  }
  if (info.schema_fingerprint != schema.fingerprint()) {
    fail(ErrorKind::kCompatibility, "schema fingerprint " + hex64(schema.fingerprint()) +
                                        " does not match checkpoint " +
                                        hex64(info.schema_fingerprint));
  }
  if (static_cast<std::size_t>(info.config.encoder.vocab_size) != vocab.size()) {
    fail(ErrorKind::kCompatibility, "vocabulary size differs from the checkpoint");
  }
}

std::map<std::string, Matrix> load_tensor_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open tensor map " + path.string());
  std::map<std::string, Matrix> out;
  try {
    nlohmann::json root;
    in >> root;
    for (const auto& [name, t] : root.items()) {
      auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
      auto data = t.at("data").get<std::vector<double>>();
      Eigen::Index rows = shape.size() == 2 ? shape[0] : 1;
      Eigen::Index cols = shape.size() == 2 ? shape[1] : (shape.empty() ? 0 : shape[0]);
      if (shape.size() > 2 || static_cast<std::size_t>(rows * cols) != data.size()) {
        fail(ErrorKind::kShape, "tensor '" + name + "' shape does not match its data");
      }
      Matrix m(rows, cols);
      std::copy(data.begin(), data.end(), m.data());
      out.emplace(name, std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return out;
}

std::map<std::string, Matrix> map_bert_names(const std::map<std::string, Matrix>& tensors) {
  static const std::pair<std::regex, std::string> kRules[] = {
      {std::regex(R"(^bert\.embeddings\.word_embeddings\.weight$)"), "embeddings.word"},
      {std::regex(R"(^bert\.embeddings\.position_embeddings\.weight$)"), "embeddings.position"},
      {std::regex(R"(^bert\.embeddings\.token_type_embeddings\.weight$)"), "embeddings.segment"},
      {std::regex(R"(^bert\.embeddings\.LayerNorm\.(weight|gamma)$)"), "embeddings.ln.gamma"},
      {std::regex(R"(^bert\.embeddings\.LayerNorm\.(bias|beta)$)"), "embeddings.ln.beta"},
      {std::regex(R"(^bert\.encoder\.layer\.(\d+)\.attention\.self\.(query|key|value)\.(weight|bias)$)"),
       "layer$1.attention.$2.$3"},
      {std::regex(R"(^bert\.encoder\.layer\.(\d+)\.attention\.output\.dense\.(weight|bias)$)"),
       "layer$1.attention.output.$2"},
      {std::regex(R"(^bert\.encoder\.layer\.(\d+)\.attention\.output\.LayerNorm\.(weight|gamma)$)"),
       "layer$1.attention.ln.gamma"},
      {std::regex(R"(^bert\.encoder\.layer\.(\d+)\.attention\.output\.LayerNorm\.(bias|beta)$)"),
       "layer$1.attention.ln.beta"},
      {std::regex(R"(^bert\.encoder\.layer\.(\d+)\.intermediate\.dense\.(weight|bias)$)"),
       "layer$1.ffn.in.$2"},
      {std::regex(R"(^bert\.encoder\.layer\.(\d+)\.output\.dense\.(weight|bias)$)"),
       "layer$1.ffn.out.$2"},
      {std::regex(R"(^bert\.encoder\.layer\.(\d+)\.output\.LayerNorm\.(weight|gamma)$)"),
       "layer$1.ffn.ln.gamma"},
      {std::regex(R"(^bert\.encoder\.layer\.(\d+)\.output\.LayerNorm\.(bias|beta)$)"),
       "layer$1.ffn.ln.beta"},
  };
  std::map<std::string, Matrix> out;
  for (const auto& [name, value] : tensors) {
    std::string mapped = name;
    bool dense_kernel = false;
    for (const auto& [pattern, replacement] : kRules) {
      if (std::regex_match(name, pattern)) {
        mapped = kEncoderPrefix + std::regex_replace(name, pattern, replacement);
        dense_kernel = name.find(".layer.") != std::string::npos && name.ends_with(".weight") &&
                       name.find("LayerNorm") == std::string::npos;
        break;
      }
    }
    out.emplace(mapped, dense_kernel ? Matrix(value.transpose()) : value);
  }
  return out;
}

}  // namespace dsdst::model
