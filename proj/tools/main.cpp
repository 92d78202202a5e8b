// Copyright 2026 The CAMS Authors. All Rights Reserved.
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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cams/config.hpp"
#include "cams/errors.hpp"
#include "cams/experiment.hpp"

namespace fs = std::filesystem;

namespace {

// Command-line overrides for ExperimentConfig fields. Unset options keep the
// value from --config / --preset / defaults.
struct Overrides {
  std::string config_file;
  std::string preset;
  std::optional<std::size_t> epochs, batch_size, latent_units, upper_layers,
      lora_rank, lr_period, n_attrs, n_objs, train_per_seen, test_per_seen,
      test_per_unseen;
  std::optional<double> lr, weight_decay, beta, lora_dropout, attribute_dropout,
      lr_factor, noise, clutter, seen_fraction, tau_init;
  std::optional<std::string> branches;
  bool no_gate = false;

  void add_data_options(CLI::App& app) {
    app.add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--preset", preset, "mit-states, ut-zappos or cgqa");
    app.add_option("--n-attrs", n_attrs, "Number of attributes");
    app.add_option("--n-objs", n_objs, "Number of objects");
    app.add_option("--seen-fraction", seen_fraction, "Share of compositions seen in training");
    app.add_option("--train-per-seen", train_per_seen, "Training samples per seen composition");
    app.add_option("--test-per-seen", test_per_seen, "Test samples per seen composition");
    app.add_option("--test-per-unseen", test_per_unseen, "Test samples per unseen composition");
    app.add_option("--noise", noise, "Gaussian noise sigma");
    app.add_option("--clutter", clutter, "Share of grid cells holding clutter");
  }

  void add_model_options(CLI::App& app) {
    add_data_options(app);
    app.add_option("--epochs", epochs, "Training epochs");
    app.add_option("--batch-size", batch_size, "Batch size");
    app.add_option("--lr", lr, "Base learning rate");
    app.add_option("--weight-decay", weight_decay, "Decoupled weight decay");
    app.add_option("--lr-period", lr_period, "Epochs between learning-rate decays");
    app.add_option("--lr-factor", lr_factor, "Learning-rate decay factor");
    app.add_option("--latent-units", latent_units, "Latent unit count K");
    app.add_option("--upper-layers", upper_layers, "Adapted upper layers M");
    app.add_option("--beta", beta, "Fusion weight of the global branch");
    app.add_option("--lora-rank", lora_rank, "LoRA rank");
    app.add_option("--lora-dropout", lora_dropout, "LoRA dropout");
    app.add_option("--attribute-dropout", attribute_dropout, "Attribute-loss dropout");
    app.add_option("--tau", tau_init, "Initial temperature");
    app.add_option("--branches", branches, "Enabled branches, e.g. g+c+a+o");
    app.add_flag("--no-gate", no_gate, "Replace the gate with identity");
  }

  cams::ExperimentConfig build() const {
    cams::ExperimentConfig c;
    if (!config_file.empty()) {
      std::ifstream f(config_file);
      std::ostringstream s;
      s << f.rdbuf();
      c = cams::ExperimentConfig::from_json(s.str());
    } else if (!preset.empty()) {
      c = cams::preset_config(preset);
    } else {
      c = cams::default_config();
    }
    auto set = [](auto& dst, const auto& src) {
      if (src) dst = *src;
    };
    set(c.data.n_attrs, n_attrs);
    set(c.data.n_objs, n_objs);
    set(c.data.seen_fraction, seen_fraction);
    set(c.data.train_per_seen, train_per_seen);
    set(c.data.test_per_seen, test_per_seen);
    set(c.data.test_per_unseen, test_per_unseen);
    set(c.data.noise_sigma, noise);
    set(c.data.clutter_fraction, clutter);
    set(c.epochs, epochs);
    set(c.batch_size, batch_size);
    set(c.lr, lr);
    set(c.weight_decay, weight_decay);
    set(c.scheduler.period, lr_period);
    set(c.scheduler.factor, lr_factor);
    set(c.model.gca.latent_units, latent_units);
    set(c.model.image.upper_layers, upper_layers);
    set(c.model.branch.beta, beta);
    set(c.model.image.lora.rank, lora_rank);
    set(c.model.image.lora.dropout, lora_dropout);
    set(c.model.branch.attribute_dropout, attribute_dropout);
    set(c.model.branch.tau_init, tau_init);
    if (branches) c.model.branch.branches = cams::parse_branches(*branches);
    if (no_gate) c.model.gca.gate_enabled = false;
    c.normalize();
    c.validate();
    return c;
  }
};

void print_summary(const char* label, const cams::MetricReport& r) {
  std::cout << label << ": candidates=" << r.candidates << " best_seen=" << r.best_seen
            << " best_unseen=" << r.best_unseen << " best_hm=" << r.best_hm
            << " auc=" << r.auc << '\n';
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw cams::Error("cannot write " + path.string());
  f << text;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw cams::ConfigError("bad seed '" + item + "' in --seeds");
    }
  }
  if (seeds.empty()) throw cams::ConfigError("--seeds is empty");
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compositional zero-shot learning on synthetic feature grids"};
  app.require_subcommand(1);

  Overrides gen_opts;
  std::uint64_t gen_seed = 0;
  std::string gen_dir;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--seed", gen_seed, "Master seed")->required();
  gen->add_option("--out-dir", gen_dir, "Output directory")->required();
  gen_opts.add_data_options(*gen);

  Overrides train_opts;
  std::uint64_t train_seed = 0;
  std::string train_dir;
  auto* train = app.add_subcommand("train", "Train, evaluate and write a run directory");
  train->add_option("--seed", train_seed, "Master seed")->required();
  train->add_option("--out-dir", train_dir, "Run directory")->required();
  train_opts.add_model_options(*train);

  std::string eval_dir;
  auto* eval = app.add_subcommand("eval", "Re-evaluate a trained run directory");
  eval->add_option("--run-dir", eval_dir, "Run directory written by train")
      ->required()
      ->check(CLI::ExistingDirectory);

  Overrides ablate_opts;
  std::string ablate_seeds = "1,2,3,4,5";
  std::string ablate_dir;
  auto* ablate = app.add_subcommand("ablate", "Branch and gate ablations over seeds");
  ablate->add_option("--seeds", ablate_seeds, "Comma-separated seeds")->capture_default_str();
  ablate->add_option("--out-dir", ablate_dir, "Output directory");
  ablate_opts.add_model_options(*ablate);

  std::string export_dir, export_out;
  auto* export_reps = app.add_subcommand("export-reps", "Write branch representations as CSV");
  export_reps->add_option("--run-dir", export_dir, "Run directory written by train")
      ->required()
      ->check(CLI::ExistingDirectory);
  export_reps->add_option("--output", export_out, "CSV path (default: <run-dir>/reps.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      cams::ExperimentConfig cfg = gen_opts.build();
      cfg.seed = gen_seed;
      const fs::path dir(gen_dir);
      fs::create_directories(dir);
      const cams::SyntheticDataset ds = cams::generate_dataset(cfg.data, cfg.seed);
      write_file(dir / "config.json", cfg.to_json() + "\n");
      write_file(dir / "splits.json", cams::splits_json(ds.splits) + "\n");
      std::ofstream csv(dir / "dataset.csv", std::ios::binary | std::ios::trunc);
      cams::write_dataset_csv(csv, ds);
      std::cout << "seen=" << ds.splits.seen.size() << " unseen=" << ds.splits.unseen.size()
                << " train=" << ds.train_labels.size() << " test=" << ds.test_labels.size()
                << '\n';
    } else if (*train) {
      cams::ExperimentConfig cfg = train_opts.build();
      cfg.seed = train_seed;
      const auto result = cams::run_experiment(cfg, fs::path(train_dir));
      for (const auto& e : result.epochs) {
        std::cout << "epoch " << e.epoch << " lr=" << e.lr << " loss=" << e.total << '\n';
      }
      print_summary("closed", result.reports.closed);
      print_summary("open", result.reports.open);
    } else if (*eval) {
      const cams::LoadedRun run = cams::load_run(eval_dir);
      const auto reports = cams::evaluate(*run.model, run.dataset,
                                          cams::test_features(*run.model, run.dataset));
      print_summary("closed", reports.closed);
      print_summary("open", reports.open);
    } else if (*ablate) {
      const cams::ExperimentConfig cfg = ablate_opts.build();
      std::optional<fs::path> dir;
      if (!ablate_dir.empty()) dir = ablate_dir;
      const auto result = cams::run_ablation(cfg, cams::standard_ablation_variants(),
                                             parse_seeds(ablate_seeds), dir);
      std::cout << "variant,median_auc,median_hm,median_unseen\n";
      for (const auto& s : result.summary) {
        std::cout << s.variant << ',' << s.median_auc << ',' << s.median_hm << ','
                  << s.median_unseen << '\n';
      }
    } else if (*export_reps) {
      const cams::LoadedRun run = cams::load_run(export_dir);
      const fs::path out = export_out.empty() ? fs::path(export_dir) / "reps.csv"
                                              : fs::path(export_out);
      std::ofstream csv(out, std::ios::binary | std::ios::trunc);
      if (!csv) throw cams::Error("cannot write " + out.string());
      cams::write_representations_csv(csv, *run.model, run.dataset);
      std::cout << "wrote " << out.string() << '\n';
    }
  } catch (const cams::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
