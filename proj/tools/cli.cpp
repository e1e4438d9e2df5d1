// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "seqrec/baselines.hpp"
#include "seqrec/checkpoint.hpp"
#include "seqrec/data.hpp"
#include "seqrec/errors.hpp"
#include "seqrec/eval.hpp"
#include "seqrec/params.hpp"
#include "seqrec/random.hpp"
#include "seqrec/scorers.hpp"
#include "seqrec/synth.hpp"
#include "seqrec/train.hpp"

namespace seqrec::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string out = "runs";
  std::string run_dir;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads for evaluation")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--out", c.out, "Root directory for run directories")->capture_default_str();
  sub->add_option("--run-dir", c.run_dir, "Exact output directory (overrides --out naming)");
}

std::string utc_stamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

/// Creates the run directory and writes the resolved configuration into it.
fs::path open_run(CLI::App* sub, const Common& c, std::ostream& out) {
  std::string resolved = "[" + sub->get_name() + "]\n";
  std::istringstream dump(sub->config_to_str(true, false));
  for (std::string line; std::getline(dump, line);) {
    if (line.size() < 3 || line.compare(line.size() - 3, 3, "=\"\"") != 0) resolved += line + "\n";
  }
  fs::path dir;
  if (!c.run_dir.empty()) {
    dir = c.run_dir;
  } else {
    const auto base = fmt::format("{}-{}-{:016x}", utc_stamp(), sub->get_name(), stable_hash(resolved));
    dir = fs::path(c.out) / base;
    for (int k = 2; fs::exists(dir); ++k) dir = fs::path(c.out) / fmt::format("{}-{}", base, k);
  }
  fs::create_directories(dir);
  std::ofstream(dir / "config.ini") << resolved;
  out << "run_dir=" << dir.string() << "\n";
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IngestError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), {}};
}

std::string num(double v) { return fmt::format("{}", v); }

void write_stats(const fs::path& dir, const PreparedData& data) {
  std::string kv, hist = "split\tlength\tcount\n", share = "split\trank\tshare\n";
  kv += fmt::format("vocabulary={}\n", data.vocabulary.size());
  for (Split s : {Split::train, Split::valid, Split::test}) {
    const auto name = to_string(s);
    const auto st = compute_stats(data.split(s).sequences);
    kv += fmt::format("{0}.sequences={1}\n{0}.events={2}\n{0}.distinct_items={3}\n", name, st.sequences, st.events,
                      st.distinct_items);
    for (auto [len, count] : st.length_histogram) hist += fmt::format("{}\t{}\t{}\n", name, len, count);
    for (std::size_t k = 0; k < st.cumulative_item_share.size(); ++k) {
      share += fmt::format("{}\t{}\t{}\n", name, k + 1, num(st.cumulative_item_share[k]));
    }
  }
  const auto& c = data.counters;
  kv += fmt::format("sessions={}\ndropped_boundary={}\ndropped_short={}\ndropped_unknown_items={}\n", c.sessions,
                    c.dropped_boundary, c.dropped_short, c.dropped_unknown_items);
  write_text(dir / "stats.txt", kv);
  write_text(dir / "length_histogram.tsv", hist);
  write_text(dir / "item_share.tsv", share);
}

// ---------------------------------------------------------------------------

struct PreprocessArgs {
  Common common;
  std::string input;
  std::string flavor = "yoochoose";
  char delimiter = ',';
  std::size_t session_col = 0, time_col = 1, item_col = 2;
  bool header = false;
  std::optional<std::size_t> max_length;
};

int cmd_preprocess(CLI::App* sub, const PreprocessArgs& a, std::ostream& out) {
  CsvOptions opt;
  opt.delimiter = a.delimiter;
  opt.session_column = a.session_col;
  opt.timestamp_column = a.time_col;
  opt.item_column = a.item_col;
  opt.header = a.header;
  const auto events = ingest(a.input, opt);
  auto cfg = PreprocessConfig::defaults(parse_split_policy(a.flavor));
  cfg.seed = a.common.seed;
  if (a.max_length) cfg.max_length = *a.max_length;
  const auto data = preprocess(events, cfg);
  const auto dir = open_run(sub, a.common, out);
  save_prepared(dir / "dataset.bin", data);
  write_stats(dir, data);
  out << fmt::format("train={} valid={} test={} items={}\n", data.train.sequences.size(), data.valid.sequences.size(),
                     data.test.sequences.size(), data.vocabulary.size());
  return 0;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  Common common;
  SynthConfig cfg;
  std::string order = "markov1";
  std::size_t k = 20;
};

int cmd_synth(CLI::App* sub, SynthArgs& a, std::ostream& out) {
  a.cfg.order = parse_synth_order(a.order);
  a.cfg.seed = a.common.seed;
  a.cfg.validate();
  const auto data = synth_generate(a.cfg);
  const TransitionTable table(a.cfg);
  const auto dir = open_run(sub, a.common, out);
  save_prepared(dir / "dataset.bin", data);
  write_stats(dir, data);
  std::string truth;
  for (Split s : {Split::valid, Split::test}) {
    const auto& seqs = data.split(s).sequences;
    if (seqs.empty()) continue;
    for (std::size_t h : {1, 2}) {
      truth += fmt::format("{}.optimal_recall@{},1.history{}={}\n", to_string(s), a.k, h,
                           num(expected_optimal_recall(table, seqs, a.k, h)));
    }
  }
  write_text(dir / "optimal.txt", truth);
  out << truth;
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string data;
  std::string model = "gru";
  std::string precision = "f64";
  std::size_t embedding_dim = 100, hidden_dim = 100;
  std::size_t layers = 2;
  std::size_t batch_size = 128;
  std::size_t epochs = 1;
  double start_lr = 0.01, end_lr = 0.001, lr_power = 0.5;
  std::uint64_t lr_steps = 50000;
  double clip = 5.0;
  std::size_t k = 20;
};

template <class T>
double valid_recall(SequenceModel<T>& model, const PreparedData& data, std::size_t k, std::size_t threads) {
  if (data.valid.sequences.empty()) return 0.0;
  ModelScorer<T> scorer(model);
  EvalOptions opt;
  opt.k = k;
  opt.threads = threads;
  return evaluate(scorer, data.valid.sequences, opt).recall(0);
}

std::string checkpoint_bytes(const Checkpoint& c) {
  std::ostringstream s;
  write_checkpoint(s, c);
  return s.str();
}

template <class T>
int train_neural(const TrainArgs& a, ModelKind kind, const PreparedData& data, const fs::path& dir, std::ostream& out) {
  ModelDims dims{a.embedding_dim, a.hidden_dim, a.layers, a.layers};
  const auto mcfg = model_config_for(kind, data.vocabulary.size(), dims);
  TrainConfig tc;
  tc.batch_size = a.batch_size;
  tc.embedding_dim = a.embedding_dim;
  tc.hidden_dim = a.hidden_dim;
  tc.epochs = a.epochs;
  tc.seed = a.common.seed;
  tc.schedule = {a.start_lr, a.end_lr, a.lr_power, a.lr_steps};
  tc.clip_norm = a.clip;
  tc.validate();
  SequenceModel<T> model(mcfg, a.common.seed);

  std::ofstream log(dir / "train_log.jsonl", std::ios::binary | std::ios::trunc);
  // Wall time lives apart from the loss log so that log stays reproducible.
  std::ofstream timing(dir / "timing.tsv", std::ios::binary | std::ios::trunc);
  timing << "step\twall_seconds\n";
  std::string valid_tsv = "epoch\trecall\n";
  std::string best_bytes;
  double best = -1.0;
  std::size_t best_epoch = 0;
  TrainHooks hooks;
  hooks.on_step = [&](const StepRecord& r) {
    ojson j{{"step", r.step},         {"epoch", r.epoch},   {"lr", r.lr},
            {"loss_sum", r.loss_sum}, {"loss_mean", r.loss_mean}, {"events", r.events}};
    log << j.dump() << "\n";
    timing << r.step << "\t" << r.wall_seconds << "\n";
  };
  hooks.on_epoch = [&](std::size_t epoch) {
    const double r = valid_recall(model, data, a.k, a.common.threads);
    valid_tsv += fmt::format("{}\t{}\n", epoch, num(r));
    const auto bytes = checkpoint_bytes(model_checkpoint(model, kind, {{"epoch", epoch}, {"valid_recall", r}}));
    write_text(dir / fmt::format("epoch-{}.ckpt", epoch), bytes);
    if (r > best) {
      best = r;
      best_epoch = epoch;
      best_bytes = bytes;
    }
    out << fmt::format("epoch={} valid_recall@{},1={}\n", epoch, a.k, num(r));
  };
  train(model, data.train.sequences, tc, hooks);
  if (best_bytes.empty()) {
    best_bytes = checkpoint_bytes(model_checkpoint(model, kind, {{"epoch", nullptr}}));
  }
  write_text(dir / "best.ckpt", best_bytes);
  write_text(dir / "valid.tsv", valid_tsv);
  out << fmt::format("best_epoch={} parameters={}\n", best_epoch, model.parameter_count());
  return 0;
}

int cmd_train(CLI::App* sub, const TrainArgs& a, std::ostream& out) {
  const auto kind = parse_model_kind(a.model);
  if (a.precision != "f32" && a.precision != "f64") throw ConfigError("precision must be f32 or f64");
  if (a.k == 0) throw ConfigError("K must be positive");
  const auto data = load_prepared(a.data);
  if (is_neural(kind)) {
    // Reject inconsistent shapes before anything is written.
    model_config_for(kind, data.vocabulary.size(), {a.embedding_dim, a.hidden_dim, a.layers, a.layers});
    TrainConfig probe;
    probe.batch_size = a.batch_size;
    probe.schedule = {a.start_lr, a.end_lr, a.lr_power, a.lr_steps};
    probe.clip_norm = a.clip;
    probe.validate();
  }
  const auto dir = open_run(sub, a.common, out);
  if (kind == ModelKind::pop) {
    const auto pop = PopModel::fit(data.train.sequences, data.vocabulary.size());
    write_checkpoint(dir / "best.ckpt", pop_checkpoint(pop));
    return 0;
  }
  if (kind == ModelKind::item_knn) {
    const auto knn = ItemKnnModel::fit(data.train.sequences, data.vocabulary.size());
    write_checkpoint(dir / "best.ckpt", knn_checkpoint(knn));
    return 0;
  }
  return a.precision == "f32" ? train_neural<float>(a, kind, data, dir, out)
                              : train_neural<double>(a, kind, data, dir, out);
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string flavor = "yoochoose";
  std::string precision;
  std::size_t k = 20;
  std::vector<std::size_t> ns;
  std::string buckets;
  std::size_t max_offset = 10;
  std::string baseline_report;
  std::size_t resamples = 1000;
};

ojson report_json(const std::string& model, std::uint64_t params, const EvalResult& r) {
  const auto& o = r.options;
  ojson j;
  j["model"] = model;
  j["parameters"] = params;
  j["k"] = o.k;
  j["ns"] = o.ns;
  j["sequences"] = r.per_sequence.size();
  j["points"] = r.points();
  ojson recall = ojson::object();
  for (std::size_t i = 0; i < o.ns.size(); ++i) recall[fmt::format("Recall@{},{}", o.k, o.ns[i])] = r.recall(i);
  j["recall"] = recall;
  j["offsets"] = r.offset_curve();
  ojson buckets = ojson::array();
  for (const auto& row : r.bucket_rows()) {
    ojson b{{"bucket", row.bucket.label()}, {"sequences", row.sequences}, {"points", row.points}};
    ojson br = ojson::object();
    for (std::size_t i = 0; i < o.ns.size(); ++i) br[fmt::format("Recall@{},{}", o.k, o.ns[i])] = row.recall[i];
    b["recall"] = br;
    buckets.push_back(b);
  }
  j["buckets"] = buckets;
  std::vector<std::size_t> points;
  ojson sums = ojson::object();
  for (const auto& s : r.per_sequence) points.push_back(s.points);
  for (std::size_t i = 0; i < o.ns.size(); ++i) {
    std::vector<double> v;
    for (const auto& s : r.per_sequence) v.push_back(s.recall_sum[i]);
    sums[std::to_string(o.ns[i])] = v;
  }
  j["per_sequence"] = {{"points", points}, {"recall_sum", sums}};
  return j;
}

int cmd_eval(CLI::App* sub, EvalArgs& a, std::ostream& out) {
  const auto policy = parse_split_policy(a.flavor);
  const bool yoochoose = policy == SplitPolicy::yoochoose_like;
  if (a.ns.empty()) a.ns = {1, yoochoose ? std::size_t{5} : std::size_t{20}};
  if (std::find(a.ns.begin(), a.ns.end(), 1) == a.ns.end()) a.ns.insert(a.ns.begin(), 1);
  EvalOptions opt;
  opt.k = a.k;
  opt.ns = a.ns;
  opt.max_offset = a.max_offset;
  opt.threads = a.common.threads;
  opt.buckets = a.buckets.empty() ? default_buckets(yoochoose) : parse_buckets(a.buckets);
  std::optional<ojson> baseline;
  if (!a.baseline_report.empty()) {
    if (!fs::exists(a.baseline_report)) throw ConfigError("baseline report not found: " + a.baseline_report);
    try {
      baseline = ojson::parse(read_text(a.baseline_report));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("baseline report is not valid JSON: ") + e.what());
    }
  }
  const auto ckpt = read_checkpoint(a.checkpoint);
  const auto kind = ckpt.kind();
  const auto data = load_prepared(a.data);
  Split split = Split::test;
  if (a.split == "valid") split = Split::valid;
  else if (a.split == "train") split = Split::train;
  else if (a.split != "test") throw ConfigError("unknown split " + a.split);
  const auto& seqs = data.split(split).sequences;

  EvalResult result;
  std::uint64_t params = 0;
  auto run_model = [&](auto tag) {
    using T = decltype(tag);
    auto model = restore_model<T>(ckpt);
    if (model.config().num_items != data.vocabulary.size()) {
      throw ConfigError(fmt::format("checkpoint has {} items but the dataset has {}", model.config().num_items,
                                    data.vocabulary.size()));
    }
    params = model.parameter_count();
    ModelScorer<T> scorer(model);
    result = evaluate(scorer, seqs, opt);
  };
  if (kind == ModelKind::pop) {
    const auto pop = restore_pop(ckpt);
    if (pop.num_items() != data.vocabulary.size()) throw ConfigError("POP model does not match the dataset vocabulary");
    result = evaluate(PopScorer(pop), seqs, opt);
  } else if (kind == ModelKind::item_knn) {
    const auto knn = restore_knn(ckpt);
    if (knn.num_items() != data.vocabulary.size()) throw ConfigError("item-KNN model does not match the dataset vocabulary");
    result = evaluate(KnnScorer(knn), seqs, opt);
  } else {
    const auto prec = checkpoint_precision(ckpt);
    if (!a.precision.empty() && a.precision != prec) {
      throw ConfigError(fmt::format("checkpoint precision is {} but {} was requested", prec, a.precision));
    }
    if (prec == "f32") run_model(float{});
    else run_model(double{});
  }
  const auto dir = open_run(sub, a.common, out);
  auto report = report_json(to_string(kind), params, result);

  std::string text = fmt::format("model={}\nparameters={}\nsequences={}\npoints={}\n", to_string(kind), params,
                                 result.per_sequence.size(), result.points());
  for (std::size_t i = 0; i < opt.ns.size(); ++i) {
    text += fmt::format("Recall@{},{}={}\n", opt.k, opt.ns[i], num(result.recall(i)));
  }
  if (baseline) {
    ojson uplifts = ojson::object();
    try {
      const auto& per = (*baseline)["per_sequence"];
      const auto points = per.at("points").get<std::vector<std::size_t>>();
      for (std::size_t i = 0; i < opt.ns.size(); ++i) {
        const auto key = std::to_string(opt.ns[i]);
        if (!per.at("recall_sum").contains(key)) continue;
        const auto base_sums = per["recall_sum"][key].get<std::vector<double>>();
        if (points.size() != result.per_sequence.size()) throw ConfigError("baseline report covers other sequences");
        std::vector<double> model_sums;
        std::vector<std::size_t> model_points;
        for (const auto& s : result.per_sequence) {
          model_sums.push_back(s.recall_sum[i]);
          model_points.push_back(s.points);
        }
        if (model_points != points) throw ConfigError("baseline report covers other evaluation points");
        const auto u = uplift_ci(model_sums, base_sums, points, a.resamples, a.common.seed);
        const auto name = fmt::format("Recall@{},{}", opt.k, opt.ns[i]);
        uplifts[name] = {{"baseline", u.baseline_recall}, {"uplift_percent", u.uplift}, {"ci_low", u.lo},
                         {"ci_high", u.hi}, {"resamples", u.resamples}};
        text += fmt::format("uplift.{}={}\nuplift.{}.ci_low={}\nuplift.{}.ci_high={}\n", name, num(u.uplift), name,
                            num(u.lo), name, num(u.hi));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("baseline report lacks per-sequence sums: ") + e.what());
    }
    report["uplift"] = uplifts;
    report["baseline_model"] = baseline->value("model", "");
  }
  std::string offsets = "offset\trecall\n";
  const auto curve = result.offset_curve();
  for (std::size_t d = 0; d < curve.size(); ++d) offsets += fmt::format("{}\t{}\n", d, num(curve[d]));
  std::string buckets = "bucket\tsequences\tpoints";
  for (auto n : opt.ns) buckets += fmt::format("\tRecall@{},{}", opt.k, n);
  buckets += "\n";
  for (const auto& row : result.bucket_rows()) {
    buckets += fmt::format("{}\t{}\t{}", row.bucket.label(), row.sequences, row.points);
    for (double v : row.recall) buckets += "\t" + num(v);
    buckets += "\n";
  }
  write_text(dir / "report.json", report.dump(2) + "\n");
  write_text(dir / "report.txt", text);
  write_text(dir / "offsets.tsv", offsets);
  write_text(dir / "buckets.tsv", buckets);
  out << text;
  return 0;
}

// ---------------------------------------------------------------------------

struct ParamsArgs {
  Common common;
  std::optional<std::size_t> items;
  std::string data;
  std::size_t embedding_dim = 100, hidden_dim = 100, layers = 2;
};

int cmd_params(CLI::App* sub, const ParamsArgs& a, std::ostream& out) {
  std::size_t n_items = 0;
  if (a.items) n_items = *a.items;
  else if (!a.data.empty()) n_items = load_prepared(a.data).vocabulary.size();
  else throw ConfigError("params needs --items or --data");
  if (n_items == 0) throw ConfigError("item count must be positive");
  const ModelDims dims{a.embedding_dim, a.hidden_dim, a.layers, a.layers};
  std::string table = "model\tparameters\tmillions\n";
  for (ModelKind kind : all_model_kinds()) {
    if (!is_neural(kind)) continue;
    const auto n = count_params(kind, n_items, dims);
    table += fmt::format("{}\t{}\t{:.2f}\n", to_string(kind), n, static_cast<double>(n) / 1e6);
  }
  const auto dir = open_run(sub, a.common, out);
  write_text(dir / "params.tsv", table);
  out << table;
  return 0;
}

struct StatsArgs {
  Common common;
  std::string data;
};

int cmd_stats(CLI::App* sub, const StatsArgs& a, std::ostream& out) {
  const auto data = load_prepared(a.data);
  const auto dir = open_run(sub, a.common, out);
  write_stats(dir, data);
  out << read_text(dir / "stats.txt");
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Sequential recommendation toolkit", "seqrec");
  app.set_config("--config", "", "INI/TOML file; command-line flags override its values");
  app.require_subcommand(1);
  app.fallthrough(false);

  PreprocessArgs pre;
  auto* s_pre = app.add_subcommand("preprocess", "Ingest a click log and build train/valid/test splits");
  add_common(s_pre, pre.common);
  s_pre->add_option("--input", pre.input, "CSV click log")->required()->check(CLI::ExistingFile);
  s_pre->add_option("--dataset-flavor", pre.flavor, "yoochoose or internal")
      ->capture_default_str()
      ->check(CLI::IsMember({"yoochoose", "internal"}));
  s_pre->add_option("--delimiter", pre.delimiter)->capture_default_str();
  s_pre->add_option("--session-col", pre.session_col)->capture_default_str();
  s_pre->add_option("--time-col", pre.time_col)->capture_default_str();
  s_pre->add_option("--item-col", pre.item_col)->capture_default_str();
  s_pre->add_flag("--header", pre.header, "Skip the first line");
  s_pre->add_option("--max-length", pre.max_length, "Keep the last N items (0 keeps all)");

  SynthArgs syn;
  auto* s_syn = app.add_subcommand("synth", "Generate a synthetic dataset with a known transition process");
  add_common(s_syn, syn.common);
  s_syn->add_option("--order", syn.order)->capture_default_str()->check(CLI::IsMember({"markov1", "markov2", "cycle", "uniform"}));
  s_syn->add_option("--items", syn.cfg.n_items)->capture_default_str();
  s_syn->add_option("--sequences", syn.cfg.n_sequences)->capture_default_str();
  s_syn->add_option("--valid", syn.cfg.n_valid)->capture_default_str();
  s_syn->add_option("--test", syn.cfg.n_test)->capture_default_str();
  s_syn->add_option("--min-length", syn.cfg.min_length)->capture_default_str();
  s_syn->add_option("--max-length", syn.cfg.max_length)->capture_default_str();
  s_syn->add_option("--strong", syn.cfg.strong)->capture_default_str();
  s_syn->add_option("--weak", syn.cfg.weak)->capture_default_str();
  s_syn->add_option("--decay", syn.cfg.decay)->capture_default_str();
  s_syn->add_option("--weak-scale", syn.cfg.weak_scale)->capture_default_str();
  s_syn->add_option("--labels", syn.cfg.labels)->capture_default_str();
  s_syn->add_option("--successors", syn.cfg.successors)->capture_default_str();
  s_syn->add_option("--k", syn.k, "K for the reported optimum")->capture_default_str();

  TrainArgs tr;
  auto* s_tr = app.add_subcommand("train", "Train a model on a cached dataset");
  add_common(s_tr, tr.common);
  s_tr->add_option("--data", tr.data, "Dataset cache")->required()->check(CLI::ExistingFile);
  s_tr->add_option("--model", tr.model)->capture_default_str();
  s_tr->add_option("--precision", tr.precision)->capture_default_str()->check(CLI::IsMember({"f32", "f64"}));
  s_tr->add_option("--embedding-dim", tr.embedding_dim)->capture_default_str();
  s_tr->add_option("--hidden-dim", tr.hidden_dim)->capture_default_str();
  s_tr->add_option("--layers", tr.layers, "Layers of stacked GRU / HM-LSTM")->capture_default_str();
  s_tr->add_option("--batch-size", tr.batch_size)->capture_default_str();
  s_tr->add_option("--epochs", tr.epochs)->capture_default_str();
  s_tr->add_option("--start-lr", tr.start_lr)->capture_default_str();
  s_tr->add_option("--end-lr", tr.end_lr)->capture_default_str();
  s_tr->add_option("--lr-power", tr.lr_power)->capture_default_str();
  s_tr->add_option("--lr-steps", tr.lr_steps)->capture_default_str();
  s_tr->add_option("--clip", tr.clip, "Global gradient norm clip (0 disables)")->capture_default_str();
  s_tr->add_option("--k", tr.k, "K of the validation Recall@K,1 used for epoch selection")->capture_default_str();

  EvalArgs ev;
  auto* s_ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(s_ev, ev.common);
  s_ev->add_option("--checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
  s_ev->add_option("--data", ev.data)->required()->check(CLI::ExistingFile);
  s_ev->add_option("--split", ev.split)->capture_default_str()->check(CLI::IsMember({"train", "valid", "test"}));
  s_ev->add_option("--dataset-flavor", ev.flavor)->capture_default_str()->check(CLI::IsMember({"yoochoose", "internal"}));
  s_ev->add_option("--precision", ev.precision)->check(CLI::IsMember({"f32", "f64"}));
  s_ev->add_option("--k", ev.k)->capture_default_str();
  s_ev->add_option("--n", ev.ns, "Relevant-window length; repeatable");
  s_ev->add_option("--buckets", ev.buckets, "Length buckets such as 2-5,6-25,26-200");
  s_ev->add_option("--max-offset", ev.max_offset)->capture_default_str();
  s_ev->add_option("--baseline-report", ev.baseline_report, "report.json of the baseline for uplift intervals");
  s_ev->add_option("--resamples", ev.resamples)->capture_default_str();

  ParamsArgs pa;
  auto* s_pa = app.add_subcommand("params", "Parameter counts of every model row");
  add_common(s_pa, pa.common);
  s_pa->add_option("--items", pa.items, "Vocabulary size N_O");
  s_pa->add_option("--data", pa.data, "Dataset cache to read N_O from");
  s_pa->add_option("--embedding-dim", pa.embedding_dim)->capture_default_str();
  s_pa->add_option("--hidden-dim", pa.hidden_dim)->capture_default_str();
  s_pa->add_option("--layers", pa.layers)->capture_default_str();

  StatsArgs st;
  auto* s_st = app.add_subcommand("stats", "Statistics of a cached dataset");
  add_common(s_st, st.common);
  s_st->add_option("--data", st.data)->required()->check(CLI::ExistingFile);

  std::vector<std::string> storage{"seqrec"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  try {
    if (s_pre->parsed()) return cmd_preprocess(s_pre, pre, out);
    if (s_syn->parsed()) return cmd_synth(s_syn, syn, out);
    if (s_tr->parsed()) return cmd_train(s_tr, tr, out);
    if (s_ev->parsed()) return cmd_eval(s_ev, ev, out);
    if (s_pa->parsed()) return cmd_params(s_pa, pa, out);
    if (s_st->parsed()) return cmd_stats(s_st, st, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const IngestError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace seqrec::cli
