#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dsdst/checkpoint.h"
#include "dsdst/error.h"
#include "dsdst/log.h"
#include "dsdst/trainer.h"

namespace dsdst::trainer {
namespace {

// Fisher-Yates driven by raw generator output, so the permutation does not
// depend on the standard library's distribution implementations.
void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

std::string example_key(const corpus::Example& ex, const corpus::SlotSchema& schema) {
  return ex.dialogue_id + "#" + std::to_string(ex.turn) + "/" +
         schema[static_cast<std::size_t>(ex.slot)].name();
}

double validation_accuracy(const model::DualStrategyModel& model,
                           const std::vector<corpus::Dialogue>& dialogues,
                           const corpus::SlotSchema& schema, const textenc::Vocabulary& vocab,
                           const TrainConfig& config) {
  tracker::ModelPredictor predictor(model, schema, vocab, config.max_len, config.max_span_len);
  return evalkit::joint_accuracy(tracker::track_all(predictor, dialogues, schema),
                                 tracker::gold_states(dialogues, schema));
}

}  // namespace

TrainState train(const TrainInputs& inputs, model::DualStrategyModel& model,
                 const TrainConfig& config) {
  if (inputs.schema == nullptr || inputs.vocab == nullptr || inputs.train == nullptr) {
    fail(ErrorKind::kUsage, "train needs a schema, a vocabulary and training dialogues");
  }
  config.validate();
  const corpus::SlotSchema& schema = *inputs.schema;
  const textenc::Vocabulary& vocab = *inputs.vocab;
  schema.validate(true);

  corpus::MaterializeStats stats;
  const std::vector<corpus::Example> examples =
      corpus::materialize_examples(*inputs.train, schema, &stats);
  int unprojectable = 0;
  const std::vector<TrainingItem> items =
      encode_examples(examples, schema, vocab, config.max_len, &unprojectable);
  model.prepare_picklists(schema, vocab);

  const int total_steps = planned_steps(items.size(), config);
  logger()->info("training on {} examples for {} steps ({} coverage warnings, {} unmatched spans, "
                 "{} truncated spans)",
                 items.size(), total_steps, stats.coverage_warnings, stats.unmatched_spans,
                 unprojectable);

  std::optional<std::ofstream> log;
  if (inputs.out_dir) {
    std::filesystem::create_directories(*inputs.out_dir);
    log.emplace(*inputs.out_dir / "train_log.jsonl");
    if (!*log) fail(ErrorKind::kIo, "cannot write training log in " + inputs.out_dir->string());
  }

  TrainState state;
  std::mt19937_64 shuffle_rng(config.seed);
  std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const bool use_dropout = config.encoder.dropout > 0.0;
  Adam adam(model.trainable(), config);
  model::ParameterSet grads = model.trainable().zeros_like();
  int last_eval = -1;

  auto evaluate = [&]() {
    last_eval = state.step;
    double accuracy = -1.0;
    const bool has_validation = inputs.validation != nullptr && !inputs.validation->empty();
    if (has_validation) {
      accuracy = validation_accuracy(model, *inputs.validation, schema, vocab, config);
      logger()->info("step {}: validation joint accuracy {:.4f}", state.step, accuracy);
    }
    const bool improved = !has_validation || accuracy > state.best_validation_joint_accuracy;
    if (!improved) return;
    if (has_validation) state.best_validation_joint_accuracy = accuracy;
    state.best_step = state.step;
    if (inputs.out_dir) {
      state.best_checkpoint_path = *inputs.out_dir / "best.ckpt";
      nlohmann::json extra = {{"step", state.step},
                              {"validation_joint_accuracy", accuracy},
                              {"max_span_len", config.max_span_len}};
      model::save_checkpoint(state.best_checkpoint_path, model, vocab, schema, extra);
    }
  };

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.max_epochs && state.step < total_steps; ++epoch) {
    state.epoch = epoch;
    shuffle(order, shuffle_rng);
    for (std::size_t begin = 0; begin < order.size() && state.step < total_steps;
         begin += batch_size) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      const double n = static_cast<double>(end - begin);
      grads.set_zero();
      model::LossParts sum;
      for (std::size_t b = begin; b < end; ++b) {
        const TrainingItem& item = items[order[b]];
        sum += model.example_loss(item.input, item.target, &grads,
                                  use_dropout ? &dropout_rng : nullptr);
      }
      const double loss = sum.total() / n;
      for (std::size_t i = 0; i < grads.size(); ++i) grads[i] /= n;
      const double grad_norm = clip_global_norm(grads, config.max_grad_norm);
      if (!std::isfinite(loss) || !std::isfinite(grad_norm)) {
        std::string ids;
        for (std::size_t b = begin; b < end; ++b) {
          ids += (b == begin ? "" : ",") + example_key(examples[items[order[b]].example], schema);
        }
        std::ostringstream message;
        message << "non-finite loss at step " << state.step << " (gate " << sum.gate / n
                << ", span " << sum.span / n << ", picklist " << sum.picklist / n
                << ", grad norm " << grad_norm << "); batch: " << ids;
        fail(ErrorKind::kTraining, message.str());
      }
      const double lr = lr_at(state.step, total_steps, config);
      adam.step(model.trainable(), grads, lr);
      ++state.step;
      state.skipped_spans += sum.skipped_spans;
      state.loss_curve.push_back(loss);
      if (log) {
        nlohmann::ordered_json line = {{"step", state.step},     {"epoch", epoch},
                                       {"lr", lr},               {"loss", loss},
                                       {"gate", sum.gate / n},   {"span", sum.span / n},
                                       {"picklist", sum.picklist / n}, {"grad_norm", grad_norm}};
        *log << line.dump() << '\n';
      }
      if (state.step % config.eval_every_iterations == 0) evaluate();
    }
  }
  if (last_eval != state.step) evaluate();

  std::ostringstream rng_state;
  rng_state << shuffle_rng;
  state.rng_state = rng_state.str();
  return state;
}

model::DualStrategyModel initialize_model(const TrainConfig& config,
                                          const textenc::Vocabulary& vocab,
                                          const corpus::SlotSchema& schema) {
  model::DualStrategyModel model(config.model_config(vocab.size()), config.seed);
  if (!config.init_weights.empty()) {
    auto tensors = model::load_tensor_map(config.init_weights);
    if (config.init_weights_format == "bert") tensors = model::map_bert_names(tensors);
    const int used = model.import_weights(tensors);
    logger()->info("imported {} of {} tensors from {}", used, tensors.size(), config.init_weights);
    if (used == 0) logger()->warn("no tensor in {} matched a model parameter", config.init_weights);
  }
  model.prepare_picklists(schema, vocab);
  return model;
}

evalkit::MetricsReport evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                           const std::vector<corpus::Dialogue>& dialogues,
                                           corpus::Split split, const corpus::SlotSchema& schema,
                                           const textenc::Vocabulary& vocab,
                                           const TrainConfig& config) {
  model::LoadedCheckpoint loaded = model::load_checkpoint(checkpoint);
  model::check_compatible(loaded.info, vocab, schema);
  loaded.model.prepare_picklists(schema, vocab);
  const int max_len = loaded.info.config.encoder.max_len;
  const int max_span_len = loaded.info.extra.value("max_span_len", config.max_span_len);

  tracker::ModelPredictor predictor(loaded.model, schema, vocab, max_len, max_span_len);
  const auto predictions = tracker::track_all(predictor, dialogues, schema);
  const auto golds = tracker::gold_states(dialogues, schema);
  evalkit::MetricsReport report =
      evalkit::build_report(std::string(corpus::to_string(split)), predictions, golds);
  report.oracle_gate_joint_accuracy = evalkit::oracle_gate_joint_accuracy(dialogues, predictor, schema);
  report.null_baseline_joint_accuracy = evalkit::joint_accuracy(
      tracker::track_all(tracker::NullPredictor(schema), dialogues, schema), golds);
  report.unfound = evalkit::unfound_stats(dialogues, schema, &predictions);

  corpus::MaterializeStats stats;
  const auto examples = corpus::materialize_examples(dialogues, schema, &stats);
  int unprojectable = 0;
  encode_examples(examples, schema, vocab, max_len, &unprojectable);
  report.skipped_spans = stats.unmatched_spans + unprojectable;
  report.coverage_warnings = stats.coverage_warnings;
  return report;
}

}  // namespace dsdst::trainer
