#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "mospred/cca.hpp"
#include "mospred/checkpoint.hpp"
#include "mospred/error.hpp"
#include "mospred/feature_file.hpp"
#include "mospred/manifest.hpp"
#include "mospred/metrics.hpp"
#include "mospred/synth.hpp"
#include "mospred/trainer.hpp"

namespace mospred::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

Json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

/// The parsed subcommand's options as an INI section that `--config` accepts.
std::string resolved_config(const CLI::App& app, const CLI::App& sub) {
  const std::string prefix = sub.get_name() + ".";
  std::istringstream in(app.config_to_str(true, false));
  std::string text = "[" + sub.get_name() + "]\n";
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) text += line.substr(prefix.size()) + "\n";
  }
  return text;
}

Json level_json(const metrics::LevelReport& r) {
  return Json{{"n", r.n}, {"mse", number(r.mse)}, {"lcc", number(r.lcc)}, {"srcc", number(r.srcc)}};
}

Json eval_json(const metrics::EvalReport& r) {
  return Json{{"utterance", level_json(r.utterance)}, {"system", level_json(r.system)}};
}

Json warnings_json(const metrics::EvalReport& r) {
  Json w = Json::array();
  for (const auto& s : r.utterance.warnings) w.push_back(s);
  for (const auto& s : r.system.warnings) w.push_back(s);
  return w;
}

void emit(const Json& j, const std::string& out_file, std::ostream& out) {
  const auto text = j.dump(2) + "\n";
  if (!out_file.empty()) write_text(out_file, text);
  out << text;
}

// ---------------------------------------------------------------- training

struct TrainOptions {
  TrainConfig cfg;
  std::string judge_sampling = "all";
  std::string manifest;
  std::string valid_manifest;
  std::string test_manifest;
  std::string out;
  bool verbose = false;
};

void add_train_options(CLI::App* sub, TrainOptions& o, bool ablation_flags) {
  sub->add_option("--manifest", o.manifest, "Training manifest CSV")->required();
  sub->add_option("--valid-manifest", o.valid_manifest, "Validation manifest CSV")->required();
  sub->add_option("--test-manifest", o.test_manifest, "Held-out manifest scored with the selected checkpoint");
  sub->add_option("--out", o.out, "Output directory")->required();
  sub->add_option("--seed", o.cfg.seed, "Random seed");
  sub->add_option("--lr", o.cfg.lr, "Peak learning rate");
  sub->add_option("--alpha", o.cfg.alpha, "Segment-level loss weight");
  sub->add_option("--beta", o.cfg.beta, "Judge-level loss weight");
  sub->add_option("--steps", o.cfg.total_steps, "Optimizer steps");
  sub->add_option("--warmup", o.cfg.warmup_steps, "Linear warmup steps");
  sub->add_option("--validate-every", o.cfg.validate_every, "Steps between validations");
  sub->add_option("--batch-size", o.cfg.batch_size, "Utterances per step");
  sub->add_option("--hidden-dim", o.cfg.hidden_dim, "Projection width");
  sub->add_option("--seg-seconds", o.cfg.segments.seg_seconds, "Segment duration");
  sub->add_option("--stride-seconds", o.cfg.segments.stride_seconds, "Segment hop");
  sub->add_option("--judge-sampling", o.judge_sampling, "Judge scores per utterance and step")
      ->check(CLI::IsMember({"all", "one"}));
  sub->add_flag("--no-bias", o.cfg.no_bias, "Train without the bias network (beta = 0)");
  sub->add_flag("--bias-shares-attention", o.cfg.bias_shares_attention, "Bias network reuses the mean-path attention");
  if (ablation_flags) {
    sub->add_flag("--no-segments", o.cfg.ablation.no_segments, "Score frames instead of segments");
    sub->add_flag("--mean-pooling", o.cfg.ablation.mean_pooling, "Uniform pooling instead of attention");
    sub->add_flag("--no-clipping", o.cfg.ablation.no_clipping, "Raw segment scores instead of 2 tanh(g) + 3");
  }
  sub->add_flag("--verbose", o.verbose, "Print validation records to stderr");
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

/// A [train] section reproducing exactly one run.
std::string train_ini(const TrainOptions& o) {
  std::ostringstream s;
  const auto& c = o.cfg;
  s << "[train]\n";
  s << "manifest=" << quoted(o.manifest) << "\n";
  s << "valid-manifest=" << quoted(o.valid_manifest) << "\n";
  if (!o.test_manifest.empty()) s << "test-manifest=" << quoted(o.test_manifest) << "\n";
  s << "out=" << quoted(o.out) << "\n";
  s << "seed=" << c.seed << "\n";
  s << "lr=" << exact(c.lr) << "\n";
  s << "alpha=" << exact(c.alpha) << "\n";
  s << "beta=" << exact(c.beta) << "\n";
  s << "steps=" << c.total_steps << "\n";
  s << "warmup=" << c.warmup_steps << "\n";
  s << "validate-every=" << c.validate_every << "\n";
  s << "batch-size=" << c.batch_size << "\n";
  s << "hidden-dim=" << c.hidden_dim << "\n";
  s << "seg-seconds=" << exact(c.segments.seg_seconds) << "\n";
  s << "stride-seconds=" << exact(c.segments.stride_seconds) << "\n";
  s << "judge-sampling=" << quoted(o.judge_sampling) << "\n";
  s << std::boolalpha;
  s << "no-bias=" << c.no_bias << "\n";
  s << "bias-shares-attention=" << c.bias_shares_attention << "\n";
  s << "no-segments=" << c.ablation.no_segments << "\n";
  s << "mean-pooling=" << c.ablation.mean_pooling << "\n";
  s << "no-clipping=" << c.ablation.no_clipping << "\n";
  return s.str();
}

struct Splits {
  LoadedSplit train;
  LoadedSplit valid;
  std::optional<LoadedSplit> test;
};

Splits load_splits(const TrainOptions& o) {
  Splits s;
  s.train = load_split(o.manifest, Split::train);
  s.valid = load_split(o.valid_manifest, Split::valid);
  if (!o.test_manifest.empty()) s.test = load_split(o.test_manifest, Split::test);
  return s;
}

struct RunOutcome {
  TrainResult result;
  std::optional<metrics::EvalReport> test;
  fs::path dir;
};

std::mutex progress_mutex;

RunOutcome run_training(TrainOptions o, const Splits& splits, std::ostream& err) {
  o.cfg.judge_sampling = o.judge_sampling == "one" ? JudgeSampling::one : JudgeSampling::all;
  RunOutcome outcome;
  outcome.dir = o.out;
  fs::create_directories(outcome.dir);
  std::ofstream log(outcome.dir / "train_log.jsonl", std::ios::binary);
  if (!log) throw IoError("cannot open '" + (outcome.dir / "train_log.jsonl").string() + "' for writing");
  outcome.result = train(splits.train, splits.valid, o.cfg, [&](const ValidationRecord& r) {
    const auto line = to_json_line(r);
    log << line << '\n';
    log.flush();
    if (o.verbose) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      err << line << '\n';
    }
  });
  save_checkpoint(outcome.result.best_model, (outcome.dir / "checkpoint.mosc").string());
  if (splits.test) outcome.test = metrics::evaluate(score_split(outcome.result.best_model, *splits.test));
  return outcome;
}

const metrics::EvalReport& best_valid(const TrainResult& r) {
  for (const auto& rec : r.log) {
    if (rec.step == r.best_step) return rec.valid;
  }
  return r.log.back().valid;
}

Json run_summary(const RunOutcome& r) {
  Json j;
  j["dir"] = r.dir.string();
  j["checkpoint"] = (r.dir / "checkpoint.mosc").string();
  j["log"] = (r.dir / "train_log.jsonl").string();
  j["resolved_config"] = (r.dir / "resolved_config.ini").string();
  j["best_step"] = r.result.best_step;
  j["best_valid_sys_srcc"] = number(r.result.best_valid_srcc);
  j["valid"] = eval_json(best_valid(r.result));
  if (r.test) j["test"] = eval_json(*r.test);
  return j;
}

// ---------------------------------------------------------------- eval / predict

std::map<std::string, double> read_predictions(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open predictions '" + path + "'");
  std::map<std::string, double> out;
  std::string line;
  std::size_t offset = 0;
  bool header = true;
  while (std::getline(f, line)) {
    const auto line_offset = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      if (line != "utterance_id,score") {
        throw FormatError(path + ": expected header 'utterance_id,score'", line_offset);
      }
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError(path + ": expected 2 fields", line_offset);
    const auto id = line.substr(0, comma);
    const auto value = line.substr(comma + 1);
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0' || !std::isfinite(v)) {
      throw FormatError(path + ": score '" + value + "' is not a finite number", line_offset);
    }
    if (!out.emplace(id, v).second) throw FormatError(path + ": duplicate utterance '" + id + "'", line_offset);
  }
  if (header) throw FormatError(path + ": empty predictions file", 0);
  return out;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  // --config belongs to the root app; accept it after the subcommand as well.
  std::vector<std::string> args;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < raw_args.size(); ++i) {
    if (raw_args[i] == "--config" && i + 1 < raw_args.size()) {
      args.push_back(raw_args[i]);
      args.push_back(raw_args[++i]);
    } else if (raw_args[i].rfind("--config=", 0) == 0) {
      args.push_back(raw_args[i]);
    } else {
      rest.push_back(raw_args[i]);
    }
  }
  args.insert(args.end(), rest.begin(), rest.end());

  CLI::App app{"MOS prediction over frozen frame-level features"};
  app.name("mospred");
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "INI file with one [subcommand] section; flags override it");
  app.require_subcommand(1);

  // gen-synth
  SynthConfig synth;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* gen = app.add_subcommand("gen-synth", "Write a planted-quality synthetic corpus");
  gen->add_option("--out", synth_out, "Output directory")->required();
  gen->add_option("--seed", synth_seed, "Random seed");
  gen->add_option("--systems", synth.n_systems);
  gen->add_option("--utterances-per-system", synth.utterances_per_system);
  gen->add_option("--dim", synth.dim, "Feature dimension");
  gen->add_option("--fps", synth.frames_per_second, "Frames per second");
  gen->add_option("--min-duration", synth.min_duration, "Seconds");
  gen->add_option("--max-duration", synth.max_duration, "Seconds");
  gen->add_option("--judges", synth.n_judges);
  gen->add_option("--judges-per-utterance", synth.judges_per_utterance);
  gen->add_option("--judge-bias-std", synth.judge_bias_std);
  gen->add_option("--noise-std", synth.noise_std);
  gen->add_option("--train-fraction", synth.train_fraction);
  gen->add_option("--valid-fraction", synth.valid_fraction);

  // train
  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train the prediction head");
  add_train_options(train_cmd, train_opts, true);

  // sweep
  TrainOptions sweep_opts;
  std::vector<double> sweep_lrs{1e-4, 5e-5, 1e-5};
  int sweep_jobs = 3;
  auto* sweep = app.add_subcommand("sweep", "Train once per learning rate");
  add_train_options(sweep, sweep_opts, true);
  sweep->remove_option(sweep->get_option("--lr"));
  sweep->add_option("--lrs", sweep_lrs, "Learning rates")->delimiter(',');
  sweep->add_option("--jobs", sweep_jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  // ablate
  TrainOptions ablate_opts;
  int ablate_jobs = 4;
  auto* ablate = app.add_subcommand("ablate", "Original model plus one run per removed component");
  add_train_options(ablate, ablate_opts, false);
  ablate->add_option("--jobs", ablate_jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  // eval
  std::string eval_checkpoint;
  std::string eval_predictions;
  std::string eval_manifest;
  std::string eval_out;
  std::string eval_name;
  auto* eval = app.add_subcommand("eval", "Utterance- and system-level MSE, LCC and SRCC");
  auto* ck = eval->add_option("--checkpoint", eval_checkpoint, "Model checkpoint");
  auto* pr = eval->add_option("--predictions", eval_predictions, "CSV utterance_id,score in place of a model");
  ck->excludes(pr);
  pr->excludes(ck);
  eval->add_option("--manifest", eval_manifest, "Manifest with the reference scores")->required();
  eval->add_option("--out", eval_out, "Also write the JSON report here");
  eval->add_option("--name", eval_name, "Model name in the report");

  // predict
  std::string predict_checkpoint;
  std::string predict_manifest;
  std::vector<std::string> predict_files;
  auto* predict_cmd = app.add_subcommand("predict", "Score utterances; CSV utterance_id,score on stdout");
  predict_cmd->add_option("--checkpoint", predict_checkpoint, "Model checkpoint")->required();
  predict_cmd->add_option("--manifest", predict_manifest, "Score every utterance of a manifest");
  predict_cmd->add_option("features", predict_files, "Feature files (.mosf)");

  // cca
  std::string cca_manifest;
  std::vector<std::string> cca_tests;
  double cca_lambda = cca::kDefaultLambda;
  std::string cca_out;
  std::string cca_name = "features";
  auto* cca_cmd = app.add_subcommand("cca", "Linear-transform correlation of mean-pooled features");
  cca_cmd->add_option("--manifest", cca_manifest, "Manifest the transform is fitted on")->required();
  cca_cmd->add_option("--test-manifest", cca_tests, "Held-out manifests (repeatable)")->required();
  cca_cmd->add_option("--lambda", cca_lambda, "Ridge strength relative to the mean Gram diagonal");
  cca_cmd->add_option("--out", cca_out, "Also write the JSON table here");
  cca_cmd->add_option("--name", cca_name, "Representation name in the table");

  auto fail = [&err](const std::string& kind, const std::string& message) {
    err << Json{{"error", kind}, {"message", message}}.dump() << '\n';
    return 1;
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    return fail("ArgumentError", e.what());
  }

  try {
    if (gen->parsed()) {
      synth.validate();
      auto corpus = generate_synthetic_corpus(synth, synth_seed);
      write_synthetic_corpus(corpus, synth, synth_seed, synth_out);
      write_text(fs::path(synth_out) / "resolved_config.ini", resolved_config(app, *gen));
      Json j;
      j["out"] = synth_out;
      j["seed"] = synth_seed;
      for (const auto& [name, split] :
           {std::pair<const char*, const LoadedSplit*>{"train", &corpus.train}, {"valid", &corpus.valid},
            {"test", &corpus.test}}) {
        j["splits"][name] = Json{{"manifest", (fs::path(synth_out) / (std::string(name) + ".csv")).string()},
                                 {"utterances", split->size()},
                                 {"systems", split->manifest.system_ids().size()}};
      }
      j["corpus"] = (fs::path(synth_out) / "corpus.json").string();
      out << j.dump(2) << '\n';
      return 0;
    }

    if (train_cmd->parsed()) {
      train_opts.cfg.validate();
      const auto splits = load_splits(train_opts);
      write_text(fs::path(train_opts.out) / "resolved_config.ini", resolved_config(app, *train_cmd));
      const auto outcome = run_training(train_opts, splits, err);
      auto j = run_summary(outcome);
      write_text(fs::path(train_opts.out) / "summary.json", j.dump(2) + "\n");
      out << j.dump(2) << '\n';
      return 0;
    }

    if (sweep->parsed() || ablate->parsed()) {
      const bool is_sweep = sweep->parsed();
      TrainOptions& base = is_sweep ? sweep_opts : ablate_opts;
      const int jobs = is_sweep ? sweep_jobs : ablate_jobs;
      base.cfg.validate();
      const auto splits = load_splits(base);
      const fs::path root(base.out);
      write_text(root / "resolved_config.ini", resolved_config(app, is_sweep ? *sweep : *ablate));

      struct Planned {
        std::string name;
        TrainOptions options;
      };
      std::vector<Planned> plan;
      if (is_sweep) {
        for (double lr : sweep_lrs) {
          Planned p{"lr_" + exact(lr), base};
          p.options.cfg.lr = lr;
          plan.push_back(std::move(p));
        }
      } else {
        const std::pair<const char*, Ablation> variants[] = {
            {"original", {}},
            {"no_segments", {true, false, false}},
            {"mean_pooling", {false, true, false}},
            {"no_clipping", {false, false, true}},
        };
        for (const auto& [name, ab] : variants) {
          Planned p{name, base};
          p.options.cfg.ablation = ab;
          plan.push_back(std::move(p));
        }
      }
      for (auto& p : plan) {
        p.options.out = (root / p.name).string();
        p.options.cfg.validate();
        write_text(root / p.name / "resolved_config.ini", train_ini(p.options));
      }

      std::vector<RunOutcome> outcomes(plan.size());
      for (std::size_t first = 0; first < plan.size(); first += static_cast<std::size_t>(jobs)) {
        std::vector<std::future<RunOutcome>> running;
        const auto last = std::min(plan.size(), first + static_cast<std::size_t>(jobs));
        for (std::size_t i = first; i < last; ++i) {
          running.push_back(std::async(std::launch::async, [&, i] { return run_training(plan[i].options, splits, err); }));
        }
        for (std::size_t i = first; i < last; ++i) outcomes[i] = running[i - first].get();
      }

      Json j;
      j["eval_split"] = splits.test ? "test" : "valid";
      j["runs"] = Json::array();
      for (std::size_t i = 0; i < plan.size(); ++i) {
        Json r;
        r["name"] = plan[i].name;
        const auto& c = plan[i].options.cfg;
        if (is_sweep) r["lr"] = c.lr;
        r["flags"] = Json{{"no_segments", c.ablation.no_segments},
                          {"mean_pooling", c.ablation.mean_pooling},
                          {"no_clipping", c.ablation.no_clipping},
                          {"no_bias", c.no_bias}};
        r.update(run_summary(outcomes[i]));
        const auto& chosen = splits.test ? *outcomes[i].test : best_valid(outcomes[i].result);
        r["utterance"] = level_json(chosen.utterance);
        r["system"] = level_json(chosen.system);
        j["runs"].push_back(std::move(r));
      }
      write_text(root / (is_sweep ? "sweep.json" : "ablation.json"), j.dump(2) + "\n");
      out << j.dump(2) << '\n';
      return 0;
    }

    if (eval->parsed()) {
      if (eval_checkpoint.empty() && eval_predictions.empty()) {
        throw ArgumentError("eval needs --checkpoint or --predictions");
      }
      std::vector<metrics::ScoredUtterance> scored;
      std::string name = eval_name;
      if (!eval_checkpoint.empty()) {
        const auto model = load_checkpoint(eval_checkpoint);
        scored = score_split(model, load_split(eval_manifest, Split::test));
        if (name.empty()) name = fs::path(eval_checkpoint).stem().string();
      } else {
        const auto manifest = load_manifest(eval_manifest, Split::test, false);
        const auto preds = read_predictions(eval_predictions);
        for (const auto& rec : manifest.entries) {
          const auto it = preds.find(rec.utterance_id);
          if (it == preds.end()) throw LookupError("no prediction for utterance '" + rec.utterance_id + "'");
          scored.push_back({rec.utterance_id, rec.system_id, it->second, rec.mean_score});
        }
        if (name.empty()) name = fs::path(eval_predictions).stem().string();
      }
      const auto report = metrics::evaluate(scored);
      Json j;
      j["model"] = name;
      j["manifest"] = eval_manifest;
      j["rows"] = Json::array();
      for (const auto* level : {&report.utterance, &report.system}) {
        Json row{{"model", name}, {"level", level->level == metrics::Level::utterance ? "utterance" : "system"}};
        row.update(level_json(*level));
        j["rows"].push_back(std::move(row));
      }
      j["per_system"] = Json::array();
      for (const auto& s : report.system.per_system) {
        j["per_system"].push_back(Json{{"system_id", s.system_id},
                                       {"predicted_mean", s.predicted_mean},
                                       {"true_mean", s.true_mean},
                                       {"count", s.count}});
      }
      j["warnings"] = warnings_json(report);
      if (!eval_out.empty()) {
        write_text(fs::path(eval_out).replace_extension(".config.ini"), resolved_config(app, *eval));
      }
      emit(j, eval_out, out);
      return 0;
    }

    if (predict_cmd->parsed()) {
      if (predict_manifest.empty() && predict_files.empty()) {
        throw ArgumentError("predict needs --manifest or feature files");
      }
      const auto model = load_checkpoint(predict_checkpoint);
      std::ostringstream csv;
      csv << "utterance_id,score\n";
      if (!predict_manifest.empty()) {
        for (const auto& s : score_split(model, load_split(predict_manifest, Split::test))) {
          csv << s.utterance_id << ',' << exact(s.predicted) << '\n';
        }
      }
      for (const auto& path : predict_files) {
        const auto features = read_feature_file(path);
        csv << features.utterance_id << ',' << exact(predict(model, features)) << '\n';
      }
      out << csv.str();
      return 0;
    }

    if (cca_cmd->parsed()) {
      const auto train_split = load_split(cca_manifest, Split::train);
      auto targets = [](const LoadedSplit& s) {
        Eigen::VectorXd y(static_cast<Eigen::Index>(s.size()));
        for (std::size_t i = 0; i < s.size(); ++i) y(static_cast<Eigen::Index>(i)) = s.manifest.entries[i].mean_score;
        return y;
      };
      std::vector<std::string> warnings;
      const auto model = cca::cca_fit_with_fallback(cca::embed_split(train_split), targets(train_split), cca_lambda,
                                                    &warnings);
      auto evaluate_split = [&](const LoadedSplit& s, const std::string& name) {
        const auto x = cca::embed_split(s);
        const auto y = targets(s);
        std::vector<std::string> systems;
        for (const auto& e : s.manifest.entries) systems.push_back(e.system_id);
        Json row;
        row["split"] = name;
        row["n"] = s.size();
        row["systems"] = s.manifest.system_ids().size();
        try {
          row["utterance"] = number(cca::cca_apply(model, x, y));
        } catch (const Error& e) {
          row["utterance"] = nullptr;
          warnings.push_back(name + " utterance-level: " + e.what());
        }
        try {
          row["system"] = number(cca::cca_apply_system(model, x, y, systems));
        } catch (const Error& e) {
          row["system"] = nullptr;
          warnings.push_back(name + " system-level: " + e.what());
        }
        return row;
      };
      Json j;
      j["representation"] = cca_name;
      j["lambda"] = model.ridge_lambda;
      j["effective_lambda"] = model.effective_lambda;
      j["train"] = evaluate_split(train_split, fs::path(cca_manifest).stem().string());
      j["splits"] = Json::array();
      for (const auto& path : cca_tests) {
        j["splits"].push_back(evaluate_split(load_split(path, Split::test), fs::path(path).stem().string()));
      }
      j["warnings"] = warnings;
      if (!cca_out.empty()) {
        write_text(fs::path(cca_out).replace_extension(".config.ini"), resolved_config(app, *cca_cmd));
      }
      emit(j, cca_out, out);
      return 0;
    }
  } catch (const Error& e) {
    return fail(e.kind(), e.what());
  } catch (const fs::filesystem_error& e) {
    return fail("IoError", e.what());
  } catch (const std::exception& e) {
    return fail("InternalError", e.what());
  }
  return fail("ArgumentError", "no subcommand given");
}

}  // namespace mospred::cli
