#include "dsdst/cli.h"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>

#include "dsdst/checkpoint.h"
#include "dsdst/corpus.h"
#include "dsdst/evalkit.h"
#include "dsdst/log.h"
#include "dsdst/tracker.h"
#include "dsdst/trainer.h"

namespace dsdst::cli {
namespace fs = std::filesystem;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return 2;
    case ErrorKind::kParse: return 3;
    case ErrorKind::kSchema: return 4;
    case ErrorKind::kRange: return 5;
    case ErrorKind::kConfig: return 6;
    case ErrorKind::kProjection: return 7;
    case ErrorKind::kShape: return 8;
    case ErrorKind::kDecode: return 9;
    case ErrorKind::kAlignment: return 10;
    case ErrorKind::kCompatibility: return 11;
    case ErrorKind::kTraining: return 12;
    case ErrorKind::kIo: return 13;
  }
  return 1;
}

namespace {

struct Options {
  std::string data_dir;
  std::string schema;
  std::string variant = "ds_dst";
  std::string config;
  std::string checkpoint;
  std::string split;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string dialogue_id;
  std::string predictions;
  std::string gold;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
}

void require(const std::string& value, const char* flag, const char* command) {
  if (value.empty()) fail(ErrorKind::kUsage, std::string(command) + " requires " + flag);
}

fs::path split_file(const std::string& data_dir, corpus::Split split) {
  return fs::path(data_dir) / (std::string(corpus::to_string(split)) + ".json");
}

trainer::TrainConfig load_config(const Options& o) {
  trainer::TrainConfig config =
      o.config.empty() ? trainer::TrainConfig{} : trainer::TrainConfig::load(o.config);
  if (o.seed) config.seed = *o.seed;
  return config;
}

corpus::SlotSchema load_trained_schema(const Options& o, const char* command) {
  require(o.schema, "--schema", command);
  corpus::SlotSchema schema = corpus::load_schema(o.schema);
  schema.validate(true);
  return schema;
}

// Vocabulary stored next to a checkpoint.
textenc::Vocabulary checkpoint_vocabulary(const std::string& checkpoint) {
  fs::path path = fs::path(checkpoint).parent_path() / "vocab.txt";
  if (!fs::exists(path)) {
    fail(ErrorKind::kUsage, "no vocab.txt next to checkpoint " + checkpoint);
  }
  return textenc::Vocabulary::load(path);
}

int cmd_build_schema(const Options& o, std::ostream& out) {
  require(o.data_dir, "--data-dir", "build-schema");
  require(o.out, "--out", "build-schema");
  corpus::SlotSchema base;
  if (!o.schema.empty()) {
    base = corpus::load_schema(o.schema);
  } else if (fs::exists(fs::path(o.data_dir) / "schema.json")) {
    base = corpus::load_schema(fs::path(o.data_dir) / "schema.json");
  } else {
    base = corpus::multiwoz_schema();
  }
  const corpus::Variant variant = corpus::parse_variant(o.variant);
  corpus::SlotSchema shaped = corpus::apply_variant(base, variant);
  auto train = corpus::load_dialogues(o.data_dir, corpus::Split::kTrain, shaped);
  corpus::SlotSchema schema = corpus::build_picklists(train, shaped);
  schema.validate(true);
  corpus::save_schema(schema, o.out);
  out << "wrote " << o.out << ": " << schema.size() << " pairs, "
      << schema.count(corpus::SlotKind::kCategorical) << " categorical, "
      << schema.count(corpus::SlotKind::kNonCategorical) << " non-categorical\n";
  return 0;
}

int cmd_preprocess(const Options& o, std::ostream& out) {
  require(o.data_dir, "--data-dir", "preprocess");
  require(o.out, "--out", "preprocess");
  const corpus::SlotSchema schema = load_trained_schema(o, "preprocess");
  const trainer::TrainConfig config = load_config(o);
  fs::create_directories(o.out);
  auto train = corpus::load_dialogues(o.data_dir, corpus::Split::kTrain, schema);
  auto vocab = textenc::Vocabulary::build(trainer::vocabulary_texts(train, schema), config.vocab_size);
  vocab.save(fs::path(o.out) / "vocab.txt");
  out << "vocabulary: " << vocab.size() << " tokens\n";
  for (corpus::Split split : {corpus::Split::kTrain, corpus::Split::kValidation, corpus::Split::kTest}) {
    if (!fs::exists(split_file(o.data_dir, split))) continue;
    auto dialogues = corpus::load_dialogues(o.data_dir, split, schema);
    corpus::MaterializeStats stats;
    auto examples = corpus::materialize_examples(dialogues, schema, &stats);
    const std::string name(corpus::to_string(split));
    write_text(fs::path(o.out) / (name + ".examples.jsonl"), corpus::examples_to_jsonl(examples, schema));
    write_text(fs::path(o.out) / (name + ".gold.jsonl"),
               tracker::states_to_jsonl(tracker::gold_states(dialogues, schema)));
    out << name << ": " << dialogues.size() << " dialogues, " << examples.size() << " examples, "
        << stats.coverage_warnings << " coverage warnings, " << stats.unmatched_spans
        << " unmatched spans\n";
  }
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  require(o.data_dir, "--data-dir", "train");
  require(o.out, "--out", "train");
  const corpus::SlotSchema schema = load_trained_schema(o, "train");
  const trainer::TrainConfig config = load_config(o);
  fs::create_directories(o.out);
  auto train = corpus::load_dialogues(o.data_dir, corpus::Split::kTrain, schema);
  std::vector<corpus::Dialogue> validation;
  if (fs::exists(split_file(o.data_dir, corpus::Split::kValidation))) {
    validation = corpus::load_dialogues(o.data_dir, corpus::Split::kValidation, schema);
  }
  const fs::path vocab_path = fs::path(o.out) / "vocab.txt";
  textenc::Vocabulary vocab;
  if (fs::exists(vocab_path)) {
    vocab = textenc::Vocabulary::load(vocab_path);
  } else {
    vocab = textenc::Vocabulary::build(trainer::vocabulary_texts(train, schema), config.vocab_size);
    vocab.save(vocab_path);
  }
  write_text(fs::path(o.out) / "config.json", config.to_json().dump(2) + "\n");

  model::DualStrategyModel model = trainer::initialize_model(config, vocab, schema);
  trainer::TrainInputs inputs;
  inputs.schema = &schema;
  inputs.vocab = &vocab;
  inputs.train = &train;
  inputs.validation = &validation;
  inputs.out_dir = fs::path(o.out);
  trainer::TrainState state = trainer::train(inputs, model, config);

  nlohmann::ordered_json summary = {
      {"step", state.step},
      {"epoch", state.epoch},
      {"best_validation_joint_accuracy", state.best_validation_joint_accuracy},
      {"best_step", state.best_step},
      {"best_checkpoint_path", state.best_checkpoint_path.filename().string()},
      {"skipped_spans", state.skipped_spans},
      {"final_loss", state.loss_curve.empty() ? 0.0 : state.loss_curve.back()}};
  write_text(fs::path(o.out) / "train_state.json", summary.dump(2) + "\n");
  out << "trained " << state.step << " steps; best validation joint accuracy "
      << state.best_validation_joint_accuracy << " at step " << state.best_step << "\n";
  return 0;
}

void emit_report(const evalkit::MetricsReport& report, const Options& o, std::ostream& out) {
  if (o.out.empty()) {
    out << report.to_json().dump(2) << '\n';
  } else {
    if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
    evalkit::write_report(report, o.out);
    out << "joint accuracy " << report.joint_accuracy << " over " << report.turn_count
        << " turns; wrote " << o.out << "\n";
  }
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  if (!o.predictions.empty() || !o.gold.empty()) {
    require(o.predictions, "--predictions", "evaluate");
    require(o.gold, "--gold", "evaluate");
    if (!o.checkpoint.empty()) {
      fail(ErrorKind::kUsage, "evaluate takes either --checkpoint or --predictions/--gold");
    }
    auto predictions = tracker::load_states(o.predictions);
    auto golds = tracker::load_states(o.gold);
    emit_report(evalkit::build_report(o.split.empty() ? "external" : o.split, predictions, golds), o,
                out);
    return 0;
  }
  require(o.checkpoint, "--checkpoint (or --predictions and --gold)", "evaluate");
  require(o.data_dir, "--data-dir", "evaluate");
  const corpus::SlotSchema schema = load_trained_schema(o, "evaluate");
  const corpus::Split split = corpus::parse_split(o.split.empty() ? "test" : o.split);
  const trainer::TrainConfig config = load_config(o);
  const textenc::Vocabulary vocab = checkpoint_vocabulary(o.checkpoint);
  auto dialogues = corpus::load_dialogues(o.data_dir, split, schema);
  emit_report(trainer::evaluate_checkpoint(o.checkpoint, dialogues, split, schema, vocab, config), o,
              out);
  return 0;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  require(o.data_dir, "--data-dir", "analyze");
  const corpus::SlotSchema schema = load_trained_schema(o, "analyze");
  const corpus::Split split = corpus::parse_split(o.split.empty() ? "validation" : o.split);
  auto dialogues = corpus::load_dialogues(o.data_dir, split, schema);
  std::optional<std::vector<tracker::TrackedState>> predictions;
  if (!o.checkpoint.empty()) {
    const textenc::Vocabulary vocab = checkpoint_vocabulary(o.checkpoint);
    model::LoadedCheckpoint loaded = model::load_checkpoint(o.checkpoint);
    model::check_compatible(loaded.info, vocab, schema);
    loaded.model.prepare_picklists(schema, vocab);
    const trainer::TrainConfig config = load_config(o);
    tracker::ModelPredictor predictor(loaded.model, schema, vocab, loaded.info.config.encoder.max_len,
                                      loaded.info.extra.value("max_span_len", config.max_span_len));
    predictions = tracker::track_all(predictor, dialogues, schema);
  }
  const std::string csv =
      evalkit::unfound_csv(evalkit::unfound_stats(dialogues, schema, predictions ? &*predictions : nullptr));
  if (o.out.empty()) {
    out << csv;
  } else {
    write_text(o.out, csv);
    out << "wrote " << o.out << "\n";
  }
  return 0;
}

int cmd_track(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint", "track");
  require(o.data_dir, "--data-dir", "track");
  require(o.dialogue_id, "--dialogue-id", "track");
  const corpus::SlotSchema schema = load_trained_schema(o, "track");
  const corpus::Split split = corpus::parse_split(o.split.empty() ? "test" : o.split);
  auto dialogues = corpus::load_dialogues(o.data_dir, split, schema);
  auto it = std::find_if(dialogues.begin(), dialogues.end(),
                         [&](const corpus::Dialogue& d) { return d.id == o.dialogue_id; });
  if (it == dialogues.end()) {
    fail(ErrorKind::kUsage, "dialogue '" + o.dialogue_id + "' not in the " +
                                std::string(corpus::to_string(split)) + " split");
  }
  const textenc::Vocabulary vocab = checkpoint_vocabulary(o.checkpoint);
  model::LoadedCheckpoint loaded = model::load_checkpoint(o.checkpoint);
  model::check_compatible(loaded.info, vocab, schema);
  loaded.model.prepare_picklists(schema, vocab);
  const trainer::TrainConfig config = load_config(o);
  tracker::ModelPredictor predictor(loaded.model, schema, vocab, loaded.info.config.encoder.max_len,
                                    loaded.info.extra.value("max_span_len", config.max_span_len));
  auto states = tracker::track_dialogue(predictor, *it, schema);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const corpus::Turn& turn = it->turns[i];
    if (!turn.system.empty()) out << "system: " << turn.system << '\n';
    out << "user:   " << turn.user << '\n';
    out << tracker::pretty_state(states[i]);
  }
  if (!o.out.empty()) write_text(o.out, tracker::states_to_jsonl(states));
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-strategy dialogue state tracker.", "dual_dst"};
  app.require_subcommand(1);
  app.footer("Log level: DUAL_DST_LOG=trace|debug|info|warn|error|off (default warn).");
  Options o;

  const std::vector<std::string> variants = {"ds_dst", "ds_span", "ds_picklist"};
  const std::vector<std::string> splits = {"train", "validation", "test"};
  auto data_dir = [&](CLI::App* c) {
    c->add_option("--data-dir", o.data_dir, "Directory holding train/validation/test .json files");
  };
  auto schema = [&](CLI::App* c, const char* help) { c->add_option("--schema", o.schema, help); };
  auto config = [&](CLI::App* c) {
    c->add_option("--config", o.config, "Training config JSON (flags override it)");
  };
  auto split = [&](CLI::App* c, const char* help) {
    c->add_option("--split", o.split, help)->check(CLI::IsMember(splits));
  };

  CLI::App* build_schema = app.add_subcommand("build-schema", "Assign slot kinds and build picklists");
  data_dir(build_schema);
  schema(build_schema, "Base schema JSON (default: <data-dir>/schema.json, else MultiWOZ)");
  build_schema->add_option("--variant", o.variant, "ds_dst, ds_span or ds_picklist")
      ->check(CLI::IsMember(variants))
      ->capture_default_str();
  build_schema->add_option("--out", o.out, "Output schema JSON");

  CLI::App* preprocess = app.add_subcommand("preprocess", "Build the vocabulary and materialize examples");
  data_dir(preprocess);
  schema(preprocess, "Schema JSON with picklists");
  config(preprocess);
  preprocess->add_option("--out", o.out, "Output directory");

  CLI::App* train = app.add_subcommand("train", "Train and keep the best checkpoint");
  data_dir(train);
  schema(train, "Schema JSON with picklists");
  config(train);
  train->add_option("--seed", o.seed, "Random seed (overrides the config)");
  train->add_option("--out", o.out, "Output directory (checkpoint, vocabulary, logs)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Metrics report for a checkpoint or a prediction dump");
  evaluate->add_option("--checkpoint", o.checkpoint, "Checkpoint file (vocab.txt alongside)");
  data_dir(evaluate);
  schema(evaluate, "Schema JSON with picklists");
  split(evaluate, "Split to evaluate (default test)");
  config(evaluate);
  evaluate->add_option("--predictions", o.predictions, "Prediction dump JSONL");
  evaluate->add_option("--gold", o.gold, "Gold dump JSONL");
  evaluate->add_option("--out", o.out, "Report JSON (CSV written alongside); stdout if omitted");

  CLI::App* analyze = app.add_subcommand("analyze", "Unfound-value statistics as CSV");
  data_dir(analyze);
  schema(analyze, "Schema JSON with picklists");
  split(analyze, "Split to analyze (default validation)");
  analyze->add_option("--checkpoint", o.checkpoint, "Checkpoint whose predictions count as recovery");
  config(analyze);
  analyze->add_option("--out", o.out, "Output CSV; stdout if omitted");

  CLI::App* track = app.add_subcommand("track", "Print the tracked state of one dialogue turn by turn");
  track->add_option("--checkpoint", o.checkpoint, "Checkpoint file (vocab.txt alongside)");
  data_dir(track);
  schema(track, "Schema JSON with picklists");
  split(track, "Split holding the dialogue (default test)");
  track->add_option("--dialogue-id", o.dialogue_id, "Dialogue to track");
  config(track);
  track->add_option("--out", o.out, "Also write the states as a prediction dump JSONL");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(ErrorKind::kUsage);
  }

  try {
    if (*build_schema) return cmd_build_schema(o, out);
    if (*preprocess) return cmd_preprocess(o, out);
    if (*train) return cmd_train(o, out);
    if (*evaluate) return cmd_evaluate(o, out);
    if (*analyze) return cmd_analyze(o, out);
    if (*track) return cmd_track(o, out);
  } catch (const Error& e) {
    err << "error [" << error_kind_name(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return exit_code(ErrorKind::kUsage);
}

}  // namespace dsdst::cli
