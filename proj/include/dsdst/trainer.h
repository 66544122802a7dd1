#ifndef DSDST_TRAINER_H_
#define DSDST_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsdst/corpus.h"
#include "dsdst/evalkit.h"
#include "dsdst/model.h"
#include "dsdst/textenc.h"

namespace dsdst::trainer {

struct TrainConfig {
  double learning_rate = 1e-4;
  double warmup_proportion = 0.1;
  int batch_size = 16;
  int max_epochs = 5;
  int eval_every_iterations = 1000;
  int max_len = 512;
  std::uint64_t seed = 42;
  double margin = 0.5;
  std::string value_pooling = "mean";
  // Caps the number of optimizer steps (and the schedule length); 0 = no cap.
  int max_steps = 0;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-6;
  double weight_decay = 0.01;
  double max_grad_norm = 1.0;

  std::size_t vocab_size = 8000;
  int max_span_len = 10;
  model::EncoderConfig encoder;

  // Optional pretrained weights: a JSON name -> tensor map. With format
  // "bert", BERT-style names are translated first.
  std::string init_weights;
  std::string init_weights_format = "native";

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig load(const std::filesystem::path& path);

  model::ModelConfig model_config(std::size_t vocab_size) const;
};

// Linear warmup from 0 to learning_rate over warmup_proportion * total_steps,
// then linear decay to 0 at total_steps.
double lr_at(int step, int total_steps, const TrainConfig& config);

// Number of optimizer steps a run over `example_count` examples performs.
int planned_steps(std::size_t example_count, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Data

// Utterances, slot surface forms and picklist values: the vocabulary corpus.
std::vector<std::string> vocabulary_texts(const std::vector<corpus::Dialogue>& dialogues,
                                          const corpus::SlotSchema& schema);

struct TrainingItem {
  textenc::EncodedExample input;
  model::Target target;
  std::size_t example = 0;  // index into the materialized example list
};

// Tokenizes each distinct context once and assembles model inputs and
// targets. `unprojectable` counts gold spans lost to truncation.
std::vector<TrainingItem> encode_examples(const std::vector<corpus::Example>& examples,
                                          const corpus::SlotSchema& schema,
                                          const textenc::Vocabulary& vocab, int max_len,
                                          int* unprojectable = nullptr);

// ---------------------------------------------------------------------------
// Optimizer

// Adam with bias correction and decoupled weight decay on tensors flagged
// for decay. Parameters are rounded to float32 after each step.
class Adam {
 public:
  Adam(const model::ParameterSet& params, const TrainConfig& config);

  void step(model::ParameterSet& params, const model::ParameterSet& grads, double lr);
  int steps() const { return t_; }

 private:
  double beta1_, beta2_, epsilon_, weight_decay_;
  model::ParameterSet m_, v_;
  int t_ = 0;
};

// Scales `grads` in place so the global norm is at most `max_norm`; returns
// the norm before clipping.
double clip_global_norm(model::ParameterSet& grads, double max_norm);

// ---------------------------------------------------------------------------
// Training loop

struct TrainState {
  int step = 0;
  int epoch = 0;
  double best_validation_joint_accuracy = -1.0;  // -1 until the first evaluation
  int best_step = -1;
  std::filesystem::path best_checkpoint_path;
  std::string rng_state;
  int skipped_spans = 0;
  std::vector<double> loss_curve;  // mean batch loss per step
};

struct TrainInputs {
  const corpus::SlotSchema* schema = nullptr;  // with picklists
  const textenc::Vocabulary* vocab = nullptr;
  const std::vector<corpus::Dialogue>* train = nullptr;
  const std::vector<corpus::Dialogue>* validation = nullptr;  // may be null or empty
  std::optional<std::filesystem::path> out_dir;  // checkpoints and train_log.jsonl
};

// Runs the optimization. Validation joint accuracy is computed every
// eval_every_iterations steps and after the last step; the checkpoint is
// written whenever it improves. Throws kTraining on a non-finite loss.
TrainState train(const TrainInputs& inputs, model::DualStrategyModel& model,
                 const TrainConfig& config);

// Fresh model for `config`, with pretrained weights imported when configured.
model::DualStrategyModel initialize_model(const TrainConfig& config,
                                          const textenc::Vocabulary& vocab,
                                          const corpus::SlotSchema& schema);

// Loads a checkpoint, checks it against `vocab` and `schema`, and evaluates
// `dialogues` with the model, its oracle-gate variant and the null baseline.
evalkit::MetricsReport evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                           const std::vector<corpus::Dialogue>& dialogues,
                                           corpus::Split split, const corpus::SlotSchema& schema,
                                           const textenc::Vocabulary& vocab,
                                           const TrainConfig& config);

}  // namespace dsdst::trainer

#endif  // DSDST_TRAINER_H_
