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

#include "cams/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "cams/checkpoint.hpp"
#include "cams/errors.hpp"
#include "json.hpp"

namespace cams {

using nlohmann::json;

namespace fs = std::filesystem;

namespace {

// Rethrows the in-flight exception as the same cams error type with a prefix.
[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const DimensionError& e) {
    throw DimensionError(context + e.what());
  } catch (const IndexError& e) {
    throw IndexError(context + e.what());
  } catch (const ContractError& e) {
    throw ContractError(context + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(context + e.what());
  } catch (const NumericError& e) {
    throw NumericError(context + e.what());
  } catch (const ProtocolError& e) {
    throw ProtocolError(context + e.what());
  } catch (const SplitError& e) {
    throw SplitError(context + e.what());
  } catch (const GenerationError& e) {
    throw GenerationError(context + e.what());
  } catch (const ParseError& e) {
    throw ParseError(context + e.what());
  } catch (const VersionError& e) {
    throw VersionError(context + e.what());
  } catch (const Error& e) {
    throw Error(context + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

json report_summary(const MetricReport& r) {
  return {{"best_seen", r.best_seen},
          {"best_unseen", r.best_unseen},
          {"best_hm", r.best_hm},
          {"auc", r.auc},
          {"candidates", r.candidates}};
}

FeatureSet features(const CamsModel& model, const std::vector<Tensor>& patches,
                    const std::vector<Composition>& labels) {
  FeatureSet fs;
  fs.h0 = model.lower_features(patches);
  fs.labels = labels;
  return fs;
}

std::string format_real(double x) {
  std::ostringstream s;
  s << std::setprecision(17) << x;
  return s.str();
}

}  // namespace

FeatureSet train_features(const CamsModel& model, const SyntheticDataset& ds) {
  return features(model, ds.train_patches, ds.train_labels);
}

FeatureSet test_features(const CamsModel& model, const SyntheticDataset& ds) {
  return features(model, ds.test_patches, ds.test_labels);
}

EvaluationReports evaluate(const CamsModel& model, const SyntheticDataset& ds,
                           const FeatureSet& test) {
  const CandidateSets sets = closed_open_candidates(ds.splits);
  EvaluationReports r;
  r.closed = bias_sweep(score_table(model, test, sets.closed, ds.splits.seen));
  r.open = bias_sweep(score_table(model, test, sets.open, ds.splits.seen));
  return r;
}

std::string epoch_json(const EpochStats& s) {
  const json j = {{"event", "epoch"},
                  {"epoch", s.epoch},
                  {"lr", s.lr},
                  {"steps", s.steps},
                  {"loss",
                   {{"total", s.total},
                    {"attribute", s.attribute},
                    {"object", s.object},
                    {"composition", s.composition},
                    {"global", s.global}}}};
  return j.dump();
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<fs::path>& out_dir) {
  const std::string context =
      out_dir ? "run " + out_dir->string() + ": " : std::string("run: ");
  try {
    ExperimentResult result;
    result.config = config;
    result.config.normalize();
    const ExperimentConfig& cfg = result.config;
    cfg.validate();
    if (out_dir) {
      fs::create_directories(*out_dir);
      write_text(*out_dir / "config.json", cfg.to_json() + "\n");
    }

    const SyntheticDataset ds = generate_dataset(cfg.data, cfg.seed);
    CamsModel model(cfg.model, cfg.seed);
    const FeatureSet train = train_features(model, ds);
    const FeatureSet test = test_features(model, ds);

    result.frozen_checksum_before = model.parameters().frozen_checksum();
    AdamOptions opt;
    opt.lr = cfg.lr;
    opt.weight_decay = cfg.weight_decay;
    Adam adam(model.parameters().trainable(), opt);
    TrainOptions train_opt{cfg.batch_size, cfg.seed};
    std::ostringstream log;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      adam.set_lr(cfg.scheduler.lr_at(cfg.lr, epoch));
      result.epochs.push_back(
          train_epoch(model, train, ds.splits.seen, adam, train_opt, epoch));
      log << epoch_json(result.epochs.back()) << '\n';
    }
    result.frozen_checksum_after = model.parameters().frozen_checksum();

    result.reports = evaluate(model, ds, test);
    log << json{{"event", "eval"},
                {"closed", report_summary(result.reports.closed)},
                {"open", report_summary(result.reports.open)}}
               .dump()
        << '\n';
    result.metrics_log = log.str();

    if (out_dir) {
      write_text(*out_dir / "metrics.jsonl", result.metrics_log);
      save_checkpoint(model, cfg.hash(), *out_dir / "checkpoint.bin");
      write_text(*out_dir / "report_closed.json",
                 report_to_json(result.reports.closed) + "\n");
      write_text(*out_dir / "report_open.json",
                 report_to_json(result.reports.open) + "\n");
      std::ostringstream curve;
      write_curve_csv(curve, result.reports.closed);
      write_text(*out_dir / "curve.csv", curve.str());
      std::ostringstream reps;
      write_representations_csv(reps, model, ds);
      write_text(*out_dir / "reps.csv", reps.str());
    }
    return result;
  } catch (const Error&) {
    rethrow_with_context(context);
  } catch (const fs::filesystem_error& e) {
    throw Error(context + e.what());
  }
}

LoadedRun load_run(const fs::path& run_dir) {
  try {
    LoadedRun run;
    run.config = ExperimentConfig::from_json(read_text(run_dir / "config.json"));
    run.config.validate();
    run.dataset = generate_dataset(run.config.data, run.config.seed);
    run.model = std::make_unique<CamsModel>(run.config.model, run.config.seed);
    load_checkpoint(run_dir / "checkpoint.bin", *run.model, run.config.hash());
    return run;
  } catch (const Error&) {
    rethrow_with_context("run " + run_dir.string() + ": ");
  }
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_representations_csv(std::ostream& os, const CamsModel& model,
                               const SyntheticDataset& ds) {
  const std::size_t d = model.config().image.d_t;
  os << "sample,split,attr,obj,seen,branch";
  for (std::size_t j = 0; j < d; ++j) os << ",v" << j;
  os << "\r\n";
  std::size_t sample = 0;
  auto emit = [&](const FeatureSet& set, const std::string& split) {
    const BranchRepresentations reps = represent_all(model, set);
    const std::pair<const char*, const Tensor*> branches[] = {
        {"attribute", &reps.attribute},
        {"object", &reps.object},
        {"composition", &reps.composition},
        {"global", &reps.global}};
    for (std::size_t i = 0; i < set.size(); ++i, ++sample) {
      const Composition& c = set.labels[i];
      for (const auto& [name, t] : branches) {
        if (!t->defined()) continue;
        os << sample << ',' << csv_field(split) << ',' << c.attr << ',' << c.obj << ','
           << (ds.splits.is_seen(c) ? 1 : 0) << ',' << csv_field(name);
        for (Real v : t->data().subspan(i * d, d)) os << ',' << format_real(v);
        os << "\r\n";
      }
    }
  };
  emit(train_features(model, ds), "train");
  emit(test_features(model, ds), "test");
}

void write_dataset_csv(std::ostream& os, const SyntheticDataset& ds) {
  const std::size_t width = ds.config.grid_side * ds.config.grid_side * ds.config.patch_dim;
  os << "sample,split,attr,obj,seen";
  for (std::size_t j = 0; j < width; ++j) os << ",p" << j;
  os << "\r\n";
  std::size_t sample = 0;
  auto emit = [&](const std::vector<Tensor>& patches,
                  const std::vector<Composition>& labels, const char* split) {
    for (std::size_t i = 0; i < patches.size(); ++i, ++sample) {
      const Composition& c = labels[i];
      os << sample << ',' << split << ',' << c.attr << ',' << c.obj << ','
         << (ds.splits.is_seen(c) ? 1 : 0);
      for (Real v : patches[i].data()) os << ',' << format_real(v);
      os << "\r\n";
    }
  };
  emit(ds.train_patches, ds.train_labels, "train");
  emit(ds.test_patches, ds.test_labels, "test");
}

std::string splits_json(const Splits& splits, int indent) {
  auto pairs = [](const std::vector<Composition>& v) {
    json a = json::array();
    for (const auto& c : v) a.push_back({c.attr, c.obj});
    return a;
  };
  const json j = {{"n_attrs", splits.n_attrs},
                  {"n_objs", splits.n_objs},
                  {"seen", pairs(splits.seen)},
                  {"unseen", pairs(splits.unseen)},
                  {"test", pairs(splits.test)}};
  return j.dump(indent);
}

std::vector<AblationVariant> standard_ablation_variants() {
  auto flags = [](bool g, bool c, bool ao) {
    BranchFlags f;
    f.global = g;
    f.composition = c;
    f.attribute = f.object = ao;
    return f;
  };
  return {
      {"g", flags(true, false, false), true},
      {"a+o", flags(false, false, true), true},
      {"g+a+o", flags(true, false, true), true},
      {"c+a+o", flags(false, true, true), true},
      {"g+c+a+o", flags(true, true, true), true},
      {"g+c+a+o/no-gate", flags(true, true, true), false},
  };
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

const AblationSummary& AblationResult::find(const std::string& variant) const {
  for (const auto& s : summary) {
    if (s.variant == variant) return s;
  }
  throw ContractError("no ablation variant named '" + variant + "'");
}

AblationResult run_ablation(const ExperimentConfig& base,
                            const std::vector<AblationVariant>& variants,
                            const std::vector<std::uint64_t>& seeds,
                            const std::optional<fs::path>& out_dir) {
  if (variants.empty() || seeds.empty()) {
    throw ConfigError("ablation needs at least one variant and one seed");
  }
  AblationResult result;
  for (const auto& v : variants) {
    std::vector<double> auc, hm, unseen;
    for (std::uint64_t seed : seeds) {
      ExperimentConfig cfg = base;
      cfg.seed = seed;
      cfg.model.branch.branches = v.branches;
      cfg.model.gca.gate_enabled = v.gate;
      std::optional<fs::path> dir;
      if (out_dir) {
        std::string slug = v.name;
        std::replace(slug.begin(), slug.end(), '/', '_');
        std::replace(slug.begin(), slug.end(), '+', '-');
        dir = *out_dir / (slug + "_seed" + std::to_string(seed));
      }
      const ExperimentResult r = run_experiment(cfg, dir);
      result.runs.push_back({v.name, seed, r.reports.closed});
      auc.push_back(r.reports.closed.auc);
      hm.push_back(r.reports.closed.best_hm);
      unseen.push_back(r.reports.closed.best_unseen);
    }
    result.summary.push_back({v.name, median(auc), median(hm), median(unseen)});
  }
  if (out_dir) {
    std::ostringstream csv;
    csv << "variant,seed,best_seen,best_unseen,best_hm,auc\r\n";
    for (const auto& r : result.runs) {
      csv << csv_field(r.variant) << ',' << r.seed << ',' << format_real(r.closed.best_seen)
          << ',' << format_real(r.closed.best_unseen) << ','
          << format_real(r.closed.best_hm) << ',' << format_real(r.closed.auc) << "\r\n";
    }
    write_text(*out_dir / "ablation.csv", csv.str());
    json j = json::array();
    for (const auto& s : result.summary) {
      j.push_back({{"variant", s.variant},
                   {"median_auc", s.median_auc},
                   {"median_hm", s.median_hm},
                   {"median_unseen", s.median_unseen}});
    }
    write_text(*out_dir / "ablation.json", j.dump(2) + "\n");
  }
  return result;
}

}  // namespace cams
