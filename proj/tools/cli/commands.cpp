// Copyright 2026 The ecgmv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "ecgmv/data/dataset.hpp"
#include "ecgmv/data/manifest.hpp"
#include "ecgmv/data/mat.hpp"
#include "ecgmv/data/synth.hpp"
#include "ecgmv/ensemble/checkpoint.hpp"
#include "ecgmv/ensemble/ensemble.hpp"
#include "ecgmv/errors.hpp"
#include "ecgmv/eval/metrics.hpp"
#include "ecgmv/io/bytes.hpp"
#include "ecgmv/nn/gradient_suite.hpp"
#include "ecgmv/train/train.hpp"

namespace ecgmv::cli {

namespace {

// Class codes in the order `synth --classes N` takes them.
constexpr std::array<int, 9> kSynthClassOrder{1, 2, 5, 4, 7, 3, 8, 9, 6};

const std::array<std::pair<Verb, const char*>, 7> kVerbs{{
    {Verb::kSynth, "synth"},
    {Verb::kTrain, "train"},
    {Verb::kPredict, "predict"},
    {Verb::kEnsembleSearch, "ensemble-search"},
    {Verb::kEval, "eval"},
    {Verb::kGradcheck, "gradcheck"},
    {Verb::kPlot, "plot"},
}};

class UsageError : public Error {
 public:
  using Error::Error;
};

class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& what) : std::runtime_error(stage + ": " + what) {}
};

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

// Flags are bound to scratch values and copied into the config only when given.
struct Overrides {
  std::vector<std::function<void(RunConfig&)>> apply;

  template <class T, class Set>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& help, Set set) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    apply.push_back([opt, value, set](RunConfig& c) {
      if (opt->count() > 0) set(c, *value);
    });
    return opt;
  }

  void add_flag(CLI::App* app, const std::string& flag, const std::string& help, std::function<void(RunConfig&)> set) {
    CLI::Option* opt = app->add_flag(flag, help);
    apply.push_back([opt, set](RunConfig& c) {
      if (opt->count() > 0) set(c);
    });
  }
};

bool has_data_source(const DataSection& d) { return !d.dataset.empty() || !d.mat_dir.empty(); }

void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError("missing required " + what);
}

void validate_command(const Command& cmd) {
  const auto& c = cmd.config;
  const Verb v = cmd.verb;
  if (c.threads < 1) throw UsageError("threads must be at least 1");
  static const std::set<std::string> subsets{"train", "val", "test", "all"};
  if (!subsets.contains(c.data.subset)) {
    throw UsageError("data.subset must be one of train, val, test, all (got '" + c.data.subset + "')");
  }
  const bool needs_data = v == Verb::kTrain || v == Verb::kPredict || v == Verb::kEval || v == Verb::kEnsembleSearch;
  if (needs_data) {
    require(has_data_source(c.data), "path: --data (data.dataset) or --mat-dir (data.mat_dir)");
    if (c.data.dataset.empty()) require(!c.data.manifest.empty(), "path: --manifest (data.manifest)");
  }
  switch (v) {
    case Verb::kSynth:
      require(!c.output.path.empty(), "path: --out (output.path)");
      if (c.synth.per_class == 0) throw UsageError("synth: per_class must be positive");
      break;
    case Verb::kTrain:
      require(!c.output.path.empty(), "path: --out (output.path)");
      nn::ArchitectureSpec::parse(c.model.arch);
      c.train_config().validate();
      break;
    case Verb::kPredict:
    case Verb::kEval:
      require(!c.ensemble.checkpoints.empty(), "path: --checkpoint (ensemble.checkpoints)");
      break;
    case Verb::kEnsembleSearch:
      require(!c.ensemble.checkpoints.empty(), "path: --checkpoint (ensemble.checkpoints)");
      if (c.ensemble.k_min < 1 || c.ensemble.k_min > c.ensemble.k_max) {
        throw UsageError("ensemble-search: need 1 <= k_min <= k_max");
      }
      break;
    case Verb::kGradcheck:
      if (c.gradcheck_seeds < 1) throw UsageError("gradcheck: seeds must be positive");
      break;
    case Verb::kPlot:
      require(!c.output.report.empty(), "path: --report (output.report)");
      require(!c.output.path.empty(), "path: --out (output.path)");
      break;
  }
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  io::write_text_file(path, text);
}

void dump_config(const Command& cmd, std::ostream& err) {
  if (cmd.config.output.path.empty()) return;
  const std::string path = cmd.config.output.path + ".config.json";
  write_text(path, config_to_json(cmd.config));
  err << "effective config written to " << path << "\n";
}

std::vector<data::EcgRecord> load_records(const DataSection& d) {
  if (!d.dataset.empty()) return stage("loading dataset " + d.dataset, [&] { return data::load_dataset(d.dataset); });
  const auto manifest =
      stage("reading manifest " + d.manifest, [&] { return data::load_manifest(io::read_text_file(d.manifest)); });
  std::vector<data::EcgRecord> out;
  for (const auto& [id, labels] : manifest) {
    const auto path = std::filesystem::path(d.mat_dir) / (id + ".mat");
    auto rec = stage("loading " + path.string(), [&] { return data::load_mat_record(path); });
    rec.labels = labels;
    out.push_back(std::move(rec));
  }
  return out;
}

data::DatasetSplit split_records(const RunConfig& c, std::ostream& err) {
  auto split = stage("splitting dataset", [&] {
    return data::split_dataset(load_records(c.data), c.data.split, c.data.split_seed);
  });
  for (const auto& w : split.warnings) err << "warning: " << w << "\n";
  return split;
}

std::vector<data::EcgRecord> subset_records(const RunConfig& c, std::ostream& err) {
  if (c.data.subset == "all") return load_records(c.data);
  auto split = split_records(c, err);
  if (c.data.subset == "train") return std::move(split.train);
  if (c.data.subset == "val") return std::move(split.val);
  return std::move(split.test);
}

// Drops records that preprocessing rejects, with a warning per record.
std::vector<data::EcgRecord> usable(std::vector<data::EcgRecord> records, std::ostream& err) {
  std::vector<data::EcgRecord> out;
  for (auto& r : records) {
    try {
      data::preprocess_record(r);
      out.push_back(std::move(r));
    } catch (const RejectedRecordError& e) {
      err << "warning: " << e.what() << "\n";
    }
  }
  return out;
}

std::vector<ensemble::Checkpoint> load_checkpoints(const EnsembleSection& e) {
  std::vector<ensemble::Checkpoint> out;
  std::set<std::string> ids;
  for (const auto& path : e.checkpoints) {
    auto ck = stage("loading checkpoint " + path, [&] { return ensemble::load_checkpoint(path); });
    if (!ids.insert(ck.id).second) ck.id = path;
    out.push_back(std::move(ck));
  }
  return out;
}

std::vector<ensemble::Prediction> fused_predictions(const std::vector<ensemble::Checkpoint>& cks,
                                                    const std::vector<data::EcgRecord>& recs, std::size_t threads) {
  for (const auto& ck : cks) {
    if (ck.class_map != cks.front().class_map) {
      throw ConfigError("ensemble members disagree on the class map ('" + ck.id + "' vs '" + cks.front().id + "')");
    }
  }
  std::vector<std::vector<ensemble::Prediction>> per_model;
  for (const auto& ck : cks) {
    per_model.push_back(stage("predicting with " + ck.id, [&] { return ensemble::predict_records(ck.model, recs, threads); }));
  }
  std::vector<ensemble::Prediction> out;
  std::vector<ensemble::Prediction> members;
  for (std::size_t r = 0; r < recs.size(); ++r) {
    members.clear();
    for (const auto& m : per_model) members.push_back(m[r]);
    out.push_back(ensemble::fuse(members));
  }
  return out;
}

std::string joined_ids(const std::vector<ensemble::Checkpoint>& cks) {
  std::string s;
  for (std::size_t i = 0; i < cks.size(); ++i) s += (i ? "+" : "") + cks[i].id;
  return s;
}

int run_synth(const Command& cmd, std::ostream& out, std::ostream& err) {
  const auto& c = cmd.config;
  data::SynthOptions opts;
  opts.classes = c.synth.classes;
  opts.n_records = c.synth.per_class * c.synth.classes.size();
  opts.min_duration_s = c.synth.min_duration_s;
  opts.max_duration_s = c.synth.max_duration_s;
  opts.seed = c.seed;
  const auto records = stage("synthesizing records", [&] { return data::synth_dataset(opts); });
  stage("writing " + c.output.path, [&] { data::save_dataset(c.output.path, records); });
  dump_config(cmd, err);
  out << "wrote " << records.size() << " records to " << c.output.path << "\n";
  return kExitOk;
}

int run_train(const Command& cmd, std::ostream& out, std::ostream& err) {
  const auto& c = cmd.config;
  const auto spec = nn::ArchitectureSpec::parse(c.model.arch);
  const auto split = split_records(c, err);
  out << "training " << spec.token() << " on " << split.train.size() << " records (validation "
      << split.val.size() << ")\n";
  const auto result = stage("training", [&] {
    return train::train_model(spec, split.train, split.val, c.train_config(), [&](const train::EpochStats& s) {
      out << "epoch " << s.epoch << " loss " << fmt("%.6f", s.loss) << " val_f1 " << fmt("%.6f", s.val_f1)
          << " lr " << fmt("%.6g", s.lr) << "\n";
      out.flush();
    });
  });
  for (const auto& id : result.rejected) err << "warning: record " << id << " rejected during preprocessing\n";
  const std::string history = c.output.history.empty() ? c.output.path + ".history.csv" : c.output.history;
  stage("writing " + c.output.path, [&] { ensemble::save_checkpoint(result.model, c.output.path); });
  stage("writing " + history, [&] { write_text(history, train::history_csv(result.history)); });
  dump_config(cmd, err);
  out << "best epoch " << result.best_epoch << "; checkpoint " << c.output.path << ", history " << history << "\n";
  return kExitOk;
}

int run_predict(const Command& cmd, std::ostream& out, std::ostream& err) {
  const auto& c = cmd.config;
  const auto cks = load_checkpoints(c.ensemble);
  const auto recs = usable(subset_records(c, err), err);
  const auto preds = fused_predictions(cks, recs, c.threads);
  std::string csv = "record,diagnosis";
  for (const auto& name : cks.front().class_map) csv += "," + name;
  csv += "\n";
  for (const auto& p : preds) {
    csv += p.record_id + "," + cks.front().class_map.at(static_cast<std::size_t>(p.diagnosis() - 1));
    for (double v : p.probs) csv += "," + fmt("%.9f", v);
    csv += "\n";
  }
  if (c.output.path.empty()) {
    out << csv;
  } else {
    stage("writing " + c.output.path, [&] { write_text(c.output.path, csv); });
    dump_config(cmd, err);
    out << "wrote " << preds.size() << " predictions to " << c.output.path << "\n";
  }
  return kExitOk;
}

int run_eval(const Command& cmd, std::ostream& out, std::ostream& err) {
  const auto& c = cmd.config;
  const auto cks = load_checkpoints(c.ensemble);
  const auto recs = usable(subset_records(c, err), err);
  if (recs.empty()) throw StageError("evaluating", "no records to evaluate");
  const auto preds = fused_predictions(cks, recs, c.threads);
  std::vector<std::vector<int>> labels;
  for (const auto& r : recs) labels.push_back(r.labels);
  const auto rep = eval::report(ensemble::confusion(preds, labels));
  std::string text = eval::report_csv_header() + "\n" + eval::report_csv_row(joined_ids(cks), rep) + "\n";
  text += "class,F1\n";
  for (std::size_t k = 0; k < data::kNumClasses; ++k) {
    text += std::string(data::kClassNames[k]) + "," + fmt("%.6f", rep.per_class[k]) + "\n";
  }
  text += "records," + std::to_string(recs.size()) + "\n";
  text += "macro_f1," + fmt("%.6f", rep.macro_f1) + "\n";
  text += "present_class_macro_f1," + fmt("%.6f", rep.present_macro_f1) + "\n";
  if (!c.output.path.empty()) {
    stage("writing " + c.output.path, [&] { write_text(c.output.path, text); });
    dump_config(cmd, err);
  }
  out << text;
  return kExitOk;
}

int run_search(const Command& cmd, std::ostream& out, std::ostream& err) {
  const auto& c = cmd.config;
  const auto cks = load_checkpoints(c.ensemble);
  const auto recs = usable(subset_records(c, err), err);
  std::vector<std::vector<int>> labels;
  for (const auto& r : recs) labels.push_back(r.labels);
  std::vector<ensemble::CandidatePredictions> candidates;
  for (const auto& ck : cks) {
    candidates.push_back({ck.id, stage("predicting with " + ck.id, [&] {
                            return ensemble::predict_records(ck.model, recs, c.threads);
                          })});
  }
  const std::size_t k_max = std::min(c.ensemble.k_max, cks.size());
  if (k_max < c.ensemble.k_max) err << "note: k_max lowered to the candidate count " << k_max << "\n";
  const auto scored =
      stage("scoring ensembles", [&] { return ensemble::score_ensembles(candidates, labels, c.ensemble.k_min, k_max); });
  const auto ranked = ensemble::rank_ensembles(scored, c.ensemble.top);
  const auto csv = ensemble::search_report_csv(ranked);
  std::vector<std::pair<std::size_t, double>> by_size;
  for (const auto& s : scored) by_size.emplace_back(s.member_ids.size(), s.report.macro_f1);
  const auto stats = eval::size_stats(by_size);
  if (c.output.path.empty()) {
    out << csv;
  } else {
    const std::string sizes = c.output.path + ".sizes.csv";
    stage("writing " + c.output.path, [&] { write_text(c.output.path, csv); });
    stage("writing " + sizes, [&] { write_text(sizes, eval::size_stats_csv(stats)); });
    dump_config(cmd, err);
    out << "scored " << scored.size() << " ensembles on " << recs.size() << " records; report " << c.output.path
        << ", size statistics " << sizes << "\n";
    if (!ranked.empty()) {
      std::string members;
      for (std::size_t i = 0; i < ranked[0].member_ids.size(); ++i) members += (i ? "+" : "") + ranked[0].member_ids[i];
      out << "best: " << members << " F1 " << fmt("%.6f", ranked[0].report.macro_f1) << "\n";
    }
  }
  return kExitOk;
}

int run_gradcheck(const Command& cmd, std::ostream& out, std::ostream&) {
  const auto results = stage("gradient checks", [&] { return nn::run_gradient_suite(cmd.config.gradcheck_seeds); });
  std::string text = "case,max_rel_error,tolerance,status\n";
  bool ok = true;
  for (const auto& r : results) {
    text += r.name + "," + fmt("%.3e", r.max_error) + "," + fmt("%.0e", r.tolerance) + "," +
            (r.passed() ? "ok" : "FAIL") + "\n";
    ok = ok && r.passed();
  }
  if (!cmd.config.output.path.empty()) write_text(cmd.config.output.path, text);
  out << text;
  return ok ? kExitOk : kExitFailure;
}

int run_plot(const Command& cmd, std::ostream& out, std::ostream& err) {
  const auto& c = cmd.config;
  const auto results =
      stage("reading " + c.output.report, [&] { return parse_search_report(io::read_text_file(c.output.report)); });
  stage("writing " + c.output.path, [&] { write_text(c.output.path, render_size_plot(results)); });
  dump_config(cmd, err);
  out << "plotted " << results.size() << " ensembles to " << c.output.path << "\n";
  return kExitOk;
}

}  // namespace

std::string verb_name(Verb verb) {
  for (const auto& [v, name] : kVerbs) {
    if (v == verb) return name;
  }
  return "?";
}

ParseOutcome parse_args(int argc, const char* const* argv) {
  CLI::App app{"Multi-view 12-lead ECG classification: synthetic data, training, ensembles, evaluation.", "ecgmv"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1, 1);

  Overrides ov;
  std::string config_path;
  std::map<CLI::App*, Verb> verbs;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration; flags override its values");
    ov.add<std::uint64_t>(sub, "--seed", "Random seed (the last occurrence wins)",
                          [](RunConfig& c, std::uint64_t v) { c.seed = v; });
    ov.add<std::size_t>(sub, "--threads", "Worker threads; 1 is fully sequential",
                        [](RunConfig& c, std::size_t v) { c.threads = v; })
        ->envname("ECGMV_THREADS");
    ov.add<std::string>(sub, "--out", "Main output file", [](RunConfig& c, const std::string& v) { c.output.path = v; });
  };
  auto data_options = [&](CLI::App* sub) {
    ov.add<std::string>(sub, "--data", "Dataset cache written by synth",
                        [](RunConfig& c, const std::string& v) { c.data.dataset = v; });
    ov.add<std::string>(sub, "--mat-dir", "Directory of <record>.mat files",
                        [](RunConfig& c, const std::string& v) { c.data.mat_dir = v; });
    ov.add<std::string>(sub, "--manifest", "Label manifest for --mat-dir",
                        [](RunConfig& c, const std::string& v) { c.data.manifest = v; });
    ov.add<std::uint64_t>(sub, "--split-seed", "Seed of the train/val/test split",
                          [](RunConfig& c, std::uint64_t v) { c.data.split_seed = v; });
    ov.add<std::string>(sub, "--subset", "Records to use: train, val, test or all",
                        [](RunConfig& c, const std::string& v) { c.data.subset = v; });
  };
  auto checkpoint_options = [&](CLI::App* sub) {
    ov.add<std::vector<std::string>>(sub, "--checkpoint", "Model checkpoint (repeatable)",
                                     [](RunConfig& c, const std::vector<std::string>& v) { c.ensemble.checkpoints = v; })
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  };
  auto add_verb = [&](Verb v, const std::string& help) {
    CLI::App* sub = app.add_subcommand(verb_name(v), help);
    verbs[sub] = v;
    common(sub);
    return sub;
  };

  auto* synth = add_verb(Verb::kSynth, "Generate a synthetic dataset cache");
  ov.add<std::size_t>(synth, "--classes", "Number of classes (1-9)", [](RunConfig& c, std::size_t n) {
    if (n < 1 || n > kSynthClassOrder.size()) throw UsageError("synth: --classes must lie in 1..9");
    c.synth.classes.assign(kSynthClassOrder.begin(), kSynthClassOrder.begin() + static_cast<std::ptrdiff_t>(n));
  });
  ov.add<std::size_t>(synth, "--per-class", "Records per class",
                      [](RunConfig& c, std::size_t v) { c.synth.per_class = v; });
  ov.add<double>(synth, "--min-duration", "Shortest record in seconds",
                 [](RunConfig& c, double v) { c.synth.min_duration_s = v; });
  ov.add<double>(synth, "--max-duration", "Longest record in seconds",
                 [](RunConfig& c, double v) { c.synth.max_duration_s = v; });

  auto* train = add_verb(Verb::kTrain, "Train one architecture and write a checkpoint");
  data_options(train);
  ov.add<std::string>(train, "--arch", "Architecture token", [](RunConfig& c, const std::string& v) { c.model.arch = v; });
  ov.add<double>(train, "--width", "Channel width multiplier", [](RunConfig& c, double v) { c.model.width = v; });
  ov.add<std::size_t>(train, "--epochs", "Training epochs", [](RunConfig& c, std::size_t v) { c.train.epochs = v; });
  ov.add<std::size_t>(train, "--batch-size", "Mini-batch size",
                      [](RunConfig& c, std::size_t v) { c.train.batch_size = v; });
  ov.add<double>(train, "--eta0", "Initial learning rate", [](RunConfig& c, double v) { c.train.eta0 = v; });
  ov.add<double>(train, "--clip-norm", "Global gradient-norm limit (0 disables)",
                 [](RunConfig& c, double v) { c.train.clip_norm = v; });
  ov.add<std::string>(train, "--history", "History CSV (default <out>.history.csv)",
                      [](RunConfig& c, const std::string& v) { c.output.history = v; });
  ov.add_flag(train, "--no-augment", "Disable augmentation", [](RunConfig& c) { c.augment.enabled = false; });

  auto* predict = add_verb(Verb::kPredict, "Per-record diagnosis and probabilities (fused over checkpoints)");
  data_options(predict);
  checkpoint_options(predict);

  auto* search = add_verb(Verb::kEnsembleSearch, "Score every ensemble of the given checkpoints");
  data_options(search);
  checkpoint_options(search);
  ov.add<std::size_t>(search, "--k-min", "Smallest ensemble", [](RunConfig& c, std::size_t v) { c.ensemble.k_min = v; });
  ov.add<std::size_t>(search, "--k-max", "Largest ensemble", [](RunConfig& c, std::size_t v) { c.ensemble.k_max = v; });
  ov.add<std::size_t>(search, "--top", "Rows to keep (0 keeps all)",
                      [](RunConfig& c, std::size_t v) { c.ensemble.top = v; });

  auto* evaluate = add_verb(Verb::kEval, "Challenge-metric report for one model or an ensemble");
  data_options(evaluate);
  checkpoint_options(evaluate);

  auto* grad = add_verb(Verb::kGradcheck, "Finite-difference checks of every primitive and block");
  ov.add<std::size_t>(grad, "--seeds", "Random seeds per case",
                      [](RunConfig& c, std::size_t v) { c.gradcheck_seeds = v; });

  auto* plot = add_verb(Verb::kPlot, "SVG of F1 against ensemble size from an ensemble-search report");
  ov.add<std::string>(plot, "--report", "ensemble-search report CSV",
                      [](RunConfig& c, const std::string& v) { c.output.report = v; });

  ParseOutcome outcome;
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    outcome.exit_code = code == 0 ? kExitOk : kExitUsage;
    outcome.message = o.str() + er.str();
    return outcome;
  }

  Command cmd;
  for (const auto& [sub, verb] : verbs) {
    if (sub->parsed()) cmd.verb = verb;
  }
  cmd.config_path = config_path;
  try {
    if (!config_path.empty()) {
      const auto text = stage("reading config " + config_path, [&] { return io::read_text_file(config_path); });
      cmd.config = config_from_json(text);
    }
    for (const auto& f : ov.apply) f(cmd.config);
    validate_command(cmd);
  } catch (const std::exception& e) {
    outcome.exit_code = kExitUsage;
    outcome.message = "ecgmv " + verb_name(cmd.verb) + ": " + e.what() + "\n";
    return outcome;
  }
  outcome.command = std::move(cmd);
  return outcome;
}

int execute(const Command& cmd, std::ostream& out, std::ostream& err) {
  try {
    switch (cmd.verb) {
      case Verb::kSynth: return run_synth(cmd, out, err);
      case Verb::kTrain: return run_train(cmd, out, err);
      case Verb::kPredict: return run_predict(cmd, out, err);
      case Verb::kEnsembleSearch: return run_search(cmd, out, err);
      case Verb::kEval: return run_eval(cmd, out, err);
      case Verb::kGradcheck: return run_gradcheck(cmd, out, err);
      case Verb::kPlot: return run_plot(cmd, out, err);
    }
  } catch (const std::exception& e) {
    err << "ecgmv " << verb_name(cmd.verb) << ": " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace ecgmv::cli
