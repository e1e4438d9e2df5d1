// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <sstream>

#include <catch_amalgamated.hpp>
#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = seqrec::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f);
  return {std::istreambuf_iterator<char>(f), {}};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "seqrec_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string fixture = std::string(SEQREC_FIXTURE_DIR) + "/clicks.csv";

fs::path make_synth(const fs::path& root, const std::string& order = "markov1") {
  const auto dir = root / "syn";
  const auto r = run({"synth", "--order", order, "--items", "60", "--sequences", "200", "--valid", "30", "--test",
                      "40", "--max-length", "12", "--run-dir", dir.string()});
  REQUIRE(r.code == 0);
  return dir / "dataset.bin";
}

}  // namespace

TEST_CASE("preprocess fixture and rerun byte identity") {
  const auto root = scratch("pre");
  for (const char* name : {"a", "b"}) {
    const auto r = run({"preprocess", "--input", fixture, "--header", "--dataset-flavor", "yoochoose", "--run-dir",
                        (root / name).string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
  }
  CHECK(slurp(root / "a" / "dataset.bin") == slurp(root / "b" / "dataset.bin"));
  const auto stats = slurp(root / "a" / "stats.txt");
  CHECK(stats.find("vocabulary=3\n") != std::string::npos);
  CHECK(stats.find("train.sequences=2\n") != std::string::npos);
  CHECK(fs::exists(root / "a" / "length_histogram.tsv"));
  CHECK(slurp(root / "a" / "config.ini").rfind("[preprocess]\n", 0) == 0);

  const auto cache = (root / "a" / "dataset.bin").string();
  REQUIRE(run({"train", "--data", cache, "--model", "pop", "--run-dir", (root / "pop").string()}).code == 0);
  const auto r = run({"eval", "--checkpoint", (root / "pop" / "best.ckpt").string(), "--data", cache, "--k", "1",
                      "--max-offset", "1", "--run-dir", (root / "ev").string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(root / "ev" / "report.json"));
  CHECK(report["model"] == "pop");
  CHECK(report["points"].get<std::size_t>() == 3);
}

TEST_CASE("missing input exits 2 naming the path") {
  const auto r = run({"preprocess", "--input", "/nonexistent/clicks.csv"});
  CHECK(r.code == 2);
  CHECK(r.err.find("/nonexistent/clicks.csv") != std::string::npos);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"params", "--help"}).code == 0);
}

TEST_CASE("params rows") {
  const auto root = scratch("params");
  const auto r = run({"params", "--items", "37483", "--run-dir", root.string()});
  REQUIRE(r.code == 0);
  const auto table = slurp(root / "params.tsv");
  CHECK(table.find("gru\t7556600\t") != std::string::npos);
  CHECK(table.find("gru+re+ln\t3808900\t") != std::string::npos);
  CHECK(table.find("hm_lstm+re+ln\t3971401\t") != std::string::npos);
  CHECK(std::count(table.begin(), table.end(), '\n') == 9);
  CHECK(run({"params", "--run-dir", (root / "x").string()}).code == 2);
}

TEST_CASE("train defaults are recorded in the resolved config") {
  const auto root = scratch("defaults");
  const auto data = make_synth(root);
  const auto r = run({"train", "--data", data.string(), "--model", "coevent_mf+re", "--embedding-dim", "8",
                      "--hidden-dim", "8", "--epochs", "2", "--run-dir", (root / "t").string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto ini = slurp(root / "t" / "config.ini");
  CHECK(ini.find("start-lr=0.01\n") != std::string::npos);
  CHECK(ini.find("batch-size=128\n") != std::string::npos);
  CHECK(fs::exists(root / "t" / "epoch-0.ckpt"));
  CHECK(fs::exists(root / "t" / "epoch-1.ckpt"));
  CHECK(fs::exists(root / "t" / "best.ckpt"));
  CHECK(slurp(root / "t" / "valid.tsv").find("1\t") != std::string::npos);
}

TEST_CASE("tied model with mismatched widths is rejected before training") {
  const auto root = scratch("tied");
  const auto data = make_synth(root);
  const auto dir = root / "t";
  const auto r = run({"train", "--data", data.string(), "--model", "gru+re", "--embedding-dim", "8", "--hidden-dim",
                      "9", "--run-dir", dir.string()});
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("config file values are overridden by flags") {
  const auto root = scratch("config");
  const auto data = make_synth(root);
  const auto ini = root / "run.ini";
  std::ofstream(ini) << "[train]\nmodel=gru\nembedding-dim=6\nhidden-dim=6\nepochs=3\n";
  const auto r = run({"--config", ini.string(), "train", "--data", data.string(), "--epochs", "1", "--run-dir",
                      (root / "t").string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto resolved = slurp(root / "t" / "config.ini");
  CHECK(resolved.find("epochs=1\n") != std::string::npos);
  CHECK(resolved.find("hidden-dim=6\n") != std::string::npos);
  // The resolved file reproduces the run by itself.
  std::string again = resolved;
  again.replace(again.find("run-dir="), again.find('\n', again.find("run-dir=")) - again.find("run-dir="),
                "run-dir=\"" + (root / "u").string() + "\"");
  std::ofstream(root / "again.ini") << again;
  REQUIRE(run({"--config", (root / "again.ini").string(), "train"}).code == 0);
  CHECK(slurp(root / "t" / "best.ckpt") == slurp(root / "u" / "best.ckpt"));
}

TEST_CASE("eval reports, determinism and uplift") {
  const auto root = scratch("eval");
  const auto data = make_synth(root);
  REQUIRE(run({"train", "--data", data.string(), "--model", "pop", "--run-dir", (root / "pop").string()}).code == 0);
  REQUIRE(run({"train", "--data", data.string(), "--model", "gru", "--embedding-dim", "8", "--hidden-dim", "8",
               "--precision", "f64", "--epochs", "1", "--run-dir", (root / "gru").string()})
              .code == 0);
  const auto pop_ckpt = (root / "pop" / "best.ckpt").string();
  for (const char* name : {"e1", "e2"}) {
    const auto r = run({"eval", "--checkpoint", pop_ckpt, "--data", data.string(), "--k", "20", "--n", "5",
                        "--dataset-flavor", "yoochoose", "--run-dir", (root / name).string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
  }
  CHECK(slurp(root / "e1" / "report.json") == slurp(root / "e2" / "report.json"));
  const auto report = nlohmann::json::parse(slurp(root / "e1" / "report.json"));
  CHECK(report["recall"].contains("Recall@20,1"));
  CHECK(report["recall"].contains("Recall@20,5"));
  CHECK(report["recall"].size() == 2);
  CHECK(report["offsets"][0].get<double>() == report["recall"]["Recall@20,1"].get<double>());

  // Internal flavour defaults to N = 20.
  REQUIRE(run({"eval", "--checkpoint", pop_ckpt, "--data", data.string(), "--dataset-flavor", "internal",
               "--run-dir", (root / "e3").string()})
              .code == 0);
  CHECK(nlohmann::json::parse(slurp(root / "e3" / "report.json"))["recall"].contains("Recall@20,20"));

  const auto baseline = (root / "e1" / "report.json").string();
  const auto gru_args = [&](const std::string& out, const std::string& base) {
    return std::vector<std::string>{"eval", "--checkpoint", (root / "gru" / "best.ckpt").string(), "--data",
                                    data.string(), "--n", "5", "--baseline-report", base, "--seed", "9",
                                    "--resamples", "200", "--run-dir", (root / out).string()};
  };
  REQUIRE(run(gru_args("g1", baseline)).code == 0);
  REQUIRE(run(gru_args("g2", baseline)).code == 0);
  const auto g = nlohmann::json::parse(slurp(root / "g1" / "report.json"));
  CHECK(g["uplift"].contains("Recall@20,1"));
  CHECK(g["uplift"]["Recall@20,1"]["ci_low"].get<double>() <= g["uplift"]["Recall@20,1"]["ci_high"].get<double>());
  CHECK(slurp(root / "g1" / "report.json") == slurp(root / "g2" / "report.json"));
  CHECK(run(gru_args("g3", (root / "nope.json").string())).code == 2);
  CHECK(fs::exists(root / "g1" / "offsets.tsv"));
  CHECK(slurp(root / "g1" / "buckets.tsv").rfind("bucket\tsequences\tpoints\tRecall@20,1\tRecall@20,5\n", 0) == 0);
}

TEST_CASE("training twice gives identical logs and checkpoints") {
  const auto root = scratch("determinism");
  const auto data = make_synth(root);
  for (const char* name : {"a", "b"}) {
    REQUIRE(run({"train", "--data", data.string(), "--model", "gru+re+ln", "--embedding-dim", "8", "--hidden-dim",
                 "8", "--epochs", "2", "--seed", "5", "--run-dir", (root / name).string()})
                .code == 0);
  }
  CHECK(slurp(root / "a" / "train_log.jsonl") == slurp(root / "b" / "train_log.jsonl"));
  CHECK(slurp(root / "a" / "best.ckpt") == slurp(root / "b" / "best.ckpt"));
  CHECK(slurp(root / "a" / "epoch-1.ckpt") == slurp(root / "b" / "epoch-1.ckpt"));
}

TEST_CASE("stats on a cache") {
  const auto root = scratch("stats");
  const auto data = make_synth(root);
  const auto r = run({"stats", "--data", data.string(), "--run-dir", (root / "s").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("train.sequences=200") != std::string::npos);
  CHECK(fs::exists(root / "s" / "item_share.tsv"));
}
