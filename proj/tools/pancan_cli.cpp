// Copyright 2026 The PanCAN Authors. All Rights Reserved.
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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pancan/ablation.hpp"
#include "pancan/checkpoint.hpp"
#include "pancan/run_config.hpp"
#include "pancan/verify.hpp"
#include "pancan/visualize.hpp"

namespace fs = std::filesystem;
using namespace pancan;

namespace {

std::pair<int, int> parse_cell(const std::string& s) {
  int r = -1, c = -1;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%d,%d%c", &r, &c, &tail) != 2) {
    throw ConfigError("--cell expects row,col, got '" + s + "'");
  }
  return {r, c};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

ForwardTrace trace_on(const LoadedModel& lm, const fs::path& features) {
  const CellFeatures cf = load_features(features);
  const ModelConfig& m = lm.model.config();
  if (cf.grid.n_rows != m.grid_rows || cf.grid.n_cols != m.grid_cols || cf.dim() != m.in_dim) {
    throw InputError("features " + std::to_string(cf.grid.n_rows) + "x" +
                     std::to_string(cf.grid.n_cols) + " dim " + std::to_string(cf.dim()) +
                     " do not match the model (" + std::to_string(m.grid_rows) + "x" +
                     std::to_string(m.grid_cols) + " dim " + std::to_string(m.in_dim) + ")");
  }
  ForwardTrace trace;
  lm.model.predict(cf.feats, lm.params, &trace);
  return trace;
}

void emit_heatmap(const Heatmap& h, const std::string& prefix, int marked) {
  write_pgm(h, prefix + ".pgm");
  write_ppm(h, prefix + ".ppm", 16, marked);
  write_csv(h, prefix + ".csv");
  std::cout << to_json(h) << "\n";
}

int cmd_train(const fs::path& config, std::optional<std::uint64_t> seed, const fs::path& out) {
  RunConfig cfg = load_run_config(config);
  if (seed) cfg.train.seed = *seed;
  if (!out.empty()) cfg.output.dir = out;
  validate_paths(cfg);
  fs::create_directories(cfg.output.dir);
  const SynthDataset data = load_data(cfg);
  const PanCAN model(finalize_model(cfg, data.train));
  std::ofstream log(cfg.output.dir / "log.jsonl", std::ios::trunc);
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& e, const PanCANParams& p, const PanCANParams& ema) {
    log << e.to_json() << "\n";
    log.flush();
    std::cout << e.to_json() << "\n";
    if (cfg.output.save_every_epoch) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03d.ckpt", e.epoch);
      save_model(cfg.output.dir / name, model, p, &ema);
    }
  };
  const TrainResult res = train(model, cfg.train, data.train, data.val, hooks);
  save_model(cfg.output.dir / "model.ckpt", model, res.params, &res.ema);
  nlohmann::json summary{{"best_epoch", res.best_epoch},
                         {"epochs_run", res.log.size()},
                         {"stopped_early", res.stopped_early}};
  if (data.test.size() > 0) {
    const MetricsReport m = evaluate(model, res.ema, data.test);
    std::cout << format_table(m);
    summary["test"] = nlohmann::json::parse(to_json(m));
    save_split(data.test, cfg.output.dir / "test.data");
  }
  write_text(cfg.output.dir / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_eval(const fs::path& ckpt, const fs::path& data, int topk, bool raw) {
  const LoadedModel lm = load_model(ckpt, !raw);
  const DataSplit split = load_split(data);
  const MetricsReport m = evaluate(lm.model, lm.params, split, topk);
  std::cout << format_table(m) << to_json(m) << "\n";
  return 0;
}

int cmd_verify(const VerifyOptions& opt) {
  const auto checks = run_kernel_oracles(opt);
  bool ok = true;
  nlohmann::json j = nlohmann::json::array();
  for (const OracleCheck& c : checks) {
    std::printf("%-30s %s  worst=%.3e limit=%.1e %s\n", c.name.c_str(), c.passed ? "PASS" : "FAIL",
                c.worst, c.limit, c.detail.c_str());
    j.push_back({{"check", c.name}, {"passed", c.passed}, {"worst", c.worst}, {"limit", c.limit},
                 {"detail", c.detail}});
    ok = ok && c.passed;
  }
  std::cout << j.dump() << "\n";
  for (const OracleCheck& c : checks) {
    if (c.detail.find("divergence") != std::string::npos) {
      std::cerr << "error: " << c.detail << "\n";
      return 1;
    }
  }
  return ok ? 0 : 1;
}

int cmd_ablate(const std::string& axis_name, const std::vector<std::string>& values,
               const fs::path& config, const fs::path& out) {
  const AblationAxis axis = parse_axis(axis_name);
  const RunConfig cfg = load_run_config(config);
  validate_paths(cfg);
  const SynthDataset data = load_data(cfg);
  const auto vals = values.empty() ? default_values(axis) : values;
  for (const std::string& v : vals) apply_ablation(cfg, axis, v);  // fail before training
  const AblationTable t = run_ablation(axis, vals, cfg, data, [](const std::string& label) {
    std::cerr << "done: " << label << "\n";
  });
  std::cout << t.to_csv() << t.to_json() << "\n";
  if (!out.empty()) write_text(out, t.to_csv());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-scale context-aware multi-label classification on cell grids", "pancan"};
  app.require_subcommand(0, 1);

  auto* train = app.add_subcommand("train", "Train a model from a run configuration");
  fs::path train_config, train_out;
  std::uint64_t train_seed = 0;
  train->add_option("--config", train_config, "Run configuration file")->required();
  auto* seed_opt = train->add_option("--seed", train_seed, "Override [train] seed");
  train->add_option("--out", train_out, "Override [output] dir");

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset split");
  fs::path eval_ckpt, eval_data;
  int topk = 3;
  bool raw = false;
  eval->add_option("--ckpt", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--data", eval_data, "PANCAN-DATA split file")->required();
  eval->add_option("--topk", topk, "k of the top-k metrics")->check(CLI::PositiveNumber);
  eval->add_flag("--raw", raw, "Use raw weights instead of the EMA shadow");

  auto* verify = app.add_subcommand("verify", "Run the kernel fixed-point oracle suite");
  VerifyOptions vopt;
  double vgamma = -1.0;
  verify->add_option("--n", vopt.n, "Cells per instance");
  verify->add_option("--c", vopt.C, "Adjacency matrices per instance");
  verify->add_option("--t", vopt.T, "Unfolding depth");
  verify->add_option("--d0", vopt.d0, "Base feature width");
  verify->add_option("--trials", vopt.trials, "Random instances");
  verify->add_option("--seed", vopt.seed, "Instance seed");
  auto* gamma_opt = verify->add_option("--gamma", vgamma, "Context weight (default: 0.9 / (C max||P||^2))");

  auto* ablate = app.add_subcommand("ablate", "Retrain along one ablation axis and tabulate");
  std::string axis;
  std::vector<std::string> values;
  fs::path ablate_config, ablate_out;
  ablate->add_option("--axis", axis, "order, depth, threshold, interval or module")->required();
  ablate->add_option("--values", values, "Axis values (default: the full table)")->delimiter(',');
  ablate->add_option("--config", ablate_config, "Base run configuration")->required();
  ablate->add_option("--out", ablate_out, "CSV output path");

  auto* ectx = app.add_subcommand("export-context", "Heatmap of neighbor influence on one cell");
  fs::path ckpt, features, prefix = "context";
  std::string cell = "0,0";
  int layer = 0, scale = 0;
  ectx->add_option("--ckpt", ckpt, "Checkpoint file")->required();
  ectx->add_option("--image-features", features, "PANCAN-FEATS file")->required();
  ectx->add_option("--cell", cell, "row,col of the center cell")->required();
  ectx->add_option("--layer", layer, "Layer index (0-based)");
  ectx->add_option("--scale", scale, "Scale index (0 = finest)");
  ectx->add_option("--out", prefix, "Output path prefix");

  auto* escale = app.add_subcommand("export-scale", "Heatmap of micro-cell influence on macro-cells");
  escale->add_option("--ckpt", ckpt, "Checkpoint file")->required();
  escale->add_option("--image-features", features, "PANCAN-FEATS file")->required();
  escale->add_option("--scale", scale, "Fine scale of the transition")->required();
  escale->add_option("--out", prefix, "Output path prefix");

  auto* evo = app.add_subcommand("export-evolution", "Context heatmaps across epoch checkpoints");
  fs::path ckpt_dir;
  std::vector<int> epochs;
  evo->add_option("--ckpt-dir", ckpt_dir, "Directory of epoch_NNN.ckpt files")->required();
  evo->add_option("--epochs", epochs, "Epochs to export")->delimiter(',')->required();
  evo->add_option("--image-features", features, "PANCAN-FEATS file")->required();
  evo->add_option("--cell", cell, "row,col of the center cell")->required();
  evo->add_option("--layer", layer, "Layer index (0-based)");
  evo->add_option("--scale", scale, "Scale index (0 = finest)");
  evo->add_option("--out", prefix, "Output path prefix");

  auto* synth = app.add_subcommand("synth", "Write the synthetic splits of a run configuration");
  fs::path synth_config, synth_out = ".";
  synth->add_option("--config", synth_config, "Run configuration file")->required();
  synth->add_option("--out", synth_out, "Output directory");

  auto* feat = app.add_subcommand("featurize", "Cell features of a P6 image (color statistics)");
  fs::path image, feat_out;
  int rows = 8, cols = 10, d_pos = 8;
  feat->add_option("--image", image, "P6 PPM image")->required();
  feat->add_option("--rows", rows, "Grid rows");
  feat->add_option("--cols", cols, "Grid columns");
  feat->add_option("--d-pos", d_pos, "Positional code width (even)");
  feat->add_option("--out", feat_out, "PANCAN-FEATS output")->required();

  if (argc <= 1) {
    std::cout << app.help();
    return 0;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) return cmd_train(train_config, seed_opt->count() ? std::optional(train_seed) : std::nullopt, train_out);
    if (*eval) return cmd_eval(eval_ckpt, eval_data, topk, raw);
    if (*verify) {
      if (gamma_opt->count()) vopt.gamma = vgamma;
      return cmd_verify(vopt);
    }
    if (*ablate) return cmd_ablate(axis, values, ablate_config, ablate_out);
    if (*ectx || *evo) {
      const auto [r, c] = parse_cell(cell);
      std::vector<std::pair<fs::path, std::string>> jobs;
      if (*ectx) {
        jobs.push_back({ckpt, prefix.string()});
      } else {
        for (int e : epochs) {
          char name[32];
          std::snprintf(name, sizeof name, "epoch_%03d", e);
          const fs::path p = ckpt_dir / (std::string(name) + ".ckpt");
          if (!fs::is_regular_file(p)) throw InputError("missing checkpoint " + p.string());
          jobs.push_back({p, prefix.string() + "_" + name});
        }
      }
      for (const auto& [path, out] : jobs) {
        const LoadedModel lm = load_model(path, false);
        const GridSpec& g = lm.model.structure(std::clamp(scale, 0, lm.model.num_scales() - 1)).grid;
        if (r < 0 || r >= g.n_rows || c < 0 || c >= g.n_cols) {
          throw ConfigError("--cell " + cell + " outside the scale grid");
        }
        const ForwardTrace trace = trace_on(lm, features);
        emit_heatmap(context_map(lm.model, trace, scale, layer, g.index(r, c)), out, g.index(r, c));
      }
      return 0;
    }
    if (*escale) {
      const LoadedModel lm = load_model(ckpt, true);
      const ForwardTrace trace = trace_on(lm, features);
      emit_heatmap(scale_map(lm.model, trace, scale), prefix.string(), -1);
      return 0;
    }
    if (*synth) {
      const RunConfig cfg = load_run_config(synth_config);
      if (!cfg.data.synthetic) throw ConfigError("[data] source is not synthetic");
      fs::create_directories(synth_out);
      const SynthDataset ds = make_synth(cfg.data.synth);
      save_split(ds.train, synth_out / "train.data");
      save_split(ds.val, synth_out / "val.data");
      save_split(ds.test, synth_out / "test.data");
      std::cout << nlohmann::json{{"train", ds.train.size()}, {"val", ds.val.size()},
                                  {"test", ds.test.size()}, {"dim", ds.train.dim()}}
                       .dump()
                << "\n";
      return 0;
    }
    if (*feat) {
      const Image img = read_ppm(image);
      const GridSpec g{img.height, img.width, rows, cols};
      save_features(toy_featurize(img, g, d_pos), feat_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << app.help();
  return 0;
}
