#include <doctest.h>

#include <sstream>

#include "dsdst/cli.h"
#include "dsdst/corpus.h"
#include "dsdst/tracker.h"
#include "world.h"

using namespace dsdst;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = DSDST_SOURCE_DIR;
const fs::path kData = kSource / "data" / "synthetic";

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string s(const fs::path& p) { return p.string(); }

}  // namespace

TEST_CASE("help output matches the golden files") {
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
      {"help_main.txt", {"--help"}},
      {"help_build_schema.txt", {"build-schema", "--help"}},
      {"help_preprocess.txt", {"preprocess", "--help"}},
      {"help_train.txt", {"train", "--help"}},
      {"help_evaluate.txt", {"evaluate", "--help"}},
      {"help_analyze.txt", {"analyze", "--help"}},
      {"help_track.txt", {"track", "--help"}},
  };
  std::string all;
  for (const auto& [file, args] : cases) {
    CAPTURE(file);
    Result r = run(args);
    CHECK(r.code == 0);
    CHECK(r.out == testing::read_file(kSource / "tests" / "golden" / file));
    all += r.out;
  }
  for (const char* flag : {"--data-dir", "--schema", "--variant", "--config", "--checkpoint", "--split",
                           "--out", "--seed", "--dialogue-id", "--predictions", "--gold"}) {
    CAPTURE(flag);
    CHECK(all.find(flag) != std::string::npos);
  }
  CHECK(all.find("DUAL_DST_LOG") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({"train", "--nope"}).code == 2);
  CHECK(run({"build-schema", "--data-dir", s(kData), "--variant", "ds_other", "--out", "x"}).code == 2);
  CHECK(run({"evaluate", "--split", "dev"}).code == 2);
  CHECK(run({"build-schema", "--data-dir", s(kData)}).code == 2);
  CHECK(run({"train", "--data-dir", s(kData), "--out", "x"}).code == 2);
  Result r = run({"evaluate", "--predictions", "p.jsonl"});
  CHECK(r.code == 2);
  CHECK(r.err.find("--gold") != std::string::npos);
}

TEST_CASE("build-schema variants and idempotence") {
  testing::TempDir dir("cli_schema");
  auto build = [&](const std::string& variant, const std::string& name) {
    Result r = run({"build-schema", "--data-dir", s(kData), "--variant", variant, "--out", s(dir.path() / name)});
    REQUIRE(r.code == 0);
    return corpus::load_schema(dir.path() / name);
  };
  const auto dst = build("ds_dst", "dst.json");
  const auto span = build("ds_span", "span.json");
  const auto pick = build("ds_picklist", "pick.json");
  CHECK(dst.size() == 12);
  CHECK(dst.count(corpus::SlotKind::kNonCategorical) == 5);
  CHECK(span.count(corpus::SlotKind::kCategorical) == 0);
  for (const auto& p : span.pairs()) CHECK(p.picklist.empty());
  CHECK(pick.count(corpus::SlotKind::kNonCategorical) == 0);

  build("ds_dst", "again.json");
  CHECK(testing::read_file(dir.path() / "dst.json") == testing::read_file(dir.path() / "again.json"));
}

TEST_CASE("error categories map to exit codes") {
  testing::TempDir dir("cli_errors");
  const std::string schema = s(dir.path() / "schema.json");
  REQUIRE(run({"build-schema", "--data-dir", s(kData), "--out", schema}).code == 0);

  fs::create_directories(dir.path() / "bad");
  testing::write_file(dir.path() / "bad" / "train.json", "[{\"id\": \"X1\", \"turns\": 3}]");
  CHECK(run({"preprocess", "--data-dir", s(dir.path() / "bad"), "--schema", schema, "--out", s(dir.path() / "p")})
            .code == 3);
  testing::write_file(dir.path() / "bad" / "train.json",
                      R"([{"id": "X2", "turns": [{"system": "", "user": "hi"}],
                           "states": [{"turn": 1, "slots": {"spa-area": "north"}}]}])");
  CHECK(run({"preprocess", "--data-dir", s(dir.path() / "bad"), "--schema", schema, "--out", s(dir.path() / "p")})
            .code == 4);

  testing::write_file(dir.path() / "cfg.json", R"({"learning_rat": 1})");
  CHECK(run({"train", "--data-dir", s(kData), "--schema", schema, "--config", s(dir.path() / "cfg.json"), "--out",
             s(dir.path() / "t")})
            .code == 6);
  CHECK(run({"train", "--data-dir", s(kData), "--schema", schema, "--config", s(dir.path() / "missing.json"),
             "--out", s(dir.path() / "t")})
            .code == 13);

  testing::write_file(dir.path() / "p.jsonl", "{\"schema_version\":1,\"dialogue_id\":\"A\",\"turn\":1,\"state\":{}}\n");
  testing::write_file(dir.path() / "g.jsonl", "{\"schema_version\":1,\"dialogue_id\":\"B\",\"turn\":1,\"state\":{}}\n");
  CHECK(run({"evaluate", "--predictions", s(dir.path() / "p.jsonl"), "--gold", s(dir.path() / "g.jsonl")}).code ==
        10);
}

TEST_CASE("pipeline: preprocess, train, evaluate, analyze, track") {
  testing::TempDir dir("cli_pipeline");
  const std::string schema = s(dir.path() / "schema.json");
  REQUIRE(run({"build-schema", "--data-dir", s(kData), "--out", schema}).code == 0);

  Result pre = run({"preprocess", "--data-dir", s(kData), "--schema", schema, "--out", s(dir.path() / "pre")});
  REQUIRE(pre.code == 0);
  CHECK(pre.out.find("train: 30 dialogues") != std::string::npos);
  const fs::path gold = dir.path() / "pre" / "train.gold.jsonl";
  CHECK(fs::exists(dir.path() / "pre" / "train.examples.jsonl"));

  Result same = run({"evaluate", "--predictions", s(gold), "--gold", s(gold), "--out", s(dir.path() / "m.json")});
  REQUIRE(same.code == 0);
  const auto report = nlohmann::json::parse(testing::read_file(dir.path() / "m.json"));
  CHECK(report["joint_accuracy"] == 1.0);
  CHECK(fs::exists(dir.path() / "m.csv"));

  testing::write_file(dir.path() / "cfg.json",
                      R"({"batch_size": 8, "max_steps": 2, "max_len": 128, "eval_every_iterations": 1,
                          "encoder": {"hidden": 16, "heads": 2, "feedforward": 32}})");
  const std::string out = s(dir.path() / "run");
  Result tr = run({"train", "--data-dir", s(kData), "--schema", schema, "--config", s(dir.path() / "cfg.json"),
                   "--seed", "3", "--out", out});
  REQUIRE(tr.code == 0);
  CHECK(tr.out.find("trained 2 steps") != std::string::npos);
  for (const char* f : {"best.ckpt", "vocab.txt", "config.json", "train_log.jsonl", "train_state.json"}) {
    CAPTURE(f);
    CHECK(fs::exists(fs::path(out) / f));
  }
  CHECK(nlohmann::json::parse(testing::read_file(fs::path(out) / "config.json"))["seed"] == 3);

  const std::string ckpt = s(fs::path(out) / "best.ckpt");
  Result ev1 = run({"evaluate", "--checkpoint", ckpt, "--data-dir", s(kData), "--schema", schema, "--split",
                    "validation"});
  Result ev2 = run({"evaluate", "--checkpoint", ckpt, "--data-dir", s(kData), "--schema", schema, "--split",
                    "validation"});
  REQUIRE(ev1.code == 0);
  CHECK(ev1.out == ev2.out);
  const auto ev = nlohmann::json::parse(ev1.out);
  CHECK(ev["split"] == "validation");
  CHECK(ev["oracle_gate_joint_accuracy"].get<double>() >= ev["joint_accuracy"].get<double>());

  Result an = run({"analyze", "--data-dir", s(kData), "--schema", schema, "--checkpoint", ckpt});
  REQUIRE(an.code == 0);
  CHECK(an.out.rfind("slot,unfound,relative_turns,recovered\n", 0) == 0);

  const auto dialogues = corpus::load_dialogues(kData, corpus::Split::kTest, corpus::load_schema(schema));
  const std::string id = dialogues.front().id;
  const fs::path dump = dir.path() / "track.jsonl";
  Result tk = run({"track", "--checkpoint", ckpt, "--data-dir", s(kData), "--schema", schema, "--dialogue-id", id,
                   "--out", s(dump)});
  REQUIRE(tk.code == 0);
  CHECK(tk.out.find("user:") != std::string::npos);
  CHECK(tracker::load_states(dump).size() == static_cast<std::size_t>(dialogues.front().turn_count()));
  CHECK(run({"track", "--checkpoint", ckpt, "--data-dir", s(kData), "--schema", schema, "--dialogue-id", "NOPE"})
            .code == 2);

  // A schema with a different picklist is incompatible with the checkpoint.
  const std::string other_path = s(dir.path() / "other.json");
  REQUIRE(run({"build-schema", "--data-dir", s(kData), "--variant", "ds_picklist", "--out", other_path}).code == 0);
  CHECK(run({"evaluate", "--checkpoint", ckpt, "--data-dir", s(kData), "--schema", other_path, "--split",
             "validation"})
            .code == 11);
}
