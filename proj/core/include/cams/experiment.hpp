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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cams/config.hpp"
#include "cams/dataset.hpp"
#include "cams/evaluation.hpp"
#include "cams/model.hpp"

namespace cams {

struct EvaluationReports {
  MetricReport closed;
  MetricReport open;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<EpochStats> epochs;
  EvaluationReports reports;
  std::string metrics_log;  // contents of metrics.jsonl
  std::uint64_t frozen_checksum_before = 0;
  std::uint64_t frozen_checksum_after = 0;
};

FeatureSet train_features(const CamsModel& model, const SyntheticDataset& ds);
FeatureSet test_features(const CamsModel& model, const SyntheticDataset& ds);

// Closed-world (test compositions) and open-world (all n*m pairs) reports.
EvaluationReports evaluate(const CamsModel& model, const SyntheticDataset& ds,
                           const FeatureSet& test);

// One metrics.jsonl line per epoch.
std::string epoch_json(const EpochStats& stats);

// generate -> train -> evaluate. With an output directory, writes
// config.json, checkpoint.bin, metrics.jsonl, report_closed.json,
// report_open.json, reps.csv and curve.csv (closed world). Errors are
// rethrown with the run directory prepended.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir = {});

// Re-creates the trained model of a run directory.
struct LoadedRun {
  ExperimentConfig config;
  SyntheticDataset dataset;
  std::unique_ptr<CamsModel> model;
};
LoadedRun load_run(const std::filesystem::path& run_dir);

// Representation export: one row per (sample, enabled branch).
// Columns: sample,split,attr,obj,seen,branch,v0..v{d_t-1}.
void write_representations_csv(std::ostream& os, const CamsModel& model,
                               const SyntheticDataset& ds);

// Dataset dump used by gen-data: one row per sample with the flattened patch
// grid. Columns: sample,split,attr,obj,seen,p0..
void write_dataset_csv(std::ostream& os, const SyntheticDataset& ds);
std::string splits_json(const Splits& splits, int indent = 2);

// RFC 4180 field quoting.
std::string csv_field(const std::string& text);

struct AblationVariant {
  std::string name;
  BranchFlags branches;
  bool gate = true;
};

// Branch rows g, a+o, g+a+o, c+a+o, g+c+a+o followed by the gate-off variant
// of the full model.
std::vector<AblationVariant> standard_ablation_variants();

struct AblationRun {
  std::string variant;
  std::uint64_t seed = 0;
  MetricReport closed;
};

struct AblationSummary {
  std::string variant;
  double median_auc = 0;
  double median_hm = 0;
  double median_unseen = 0;
};

struct AblationResult {
  std::vector<AblationRun> runs;
  std::vector<AblationSummary> summary;  // in variant order
  const AblationSummary& find(const std::string& variant) const;
};

double median(std::vector<double> values);

// Runs every variant for every seed on top of `base` (seed, branch flags and
// gate are overridden). With an output directory, each run gets its own
// subdirectory and ablation.csv / ablation.json are written at the top.
AblationResult run_ablation(const ExperimentConfig& base,
                            const std::vector<AblationVariant>& variants,
                            const std::vector<std::uint64_t>& seeds,
                            const std::optional<std::filesystem::path>& out_dir = {});

}  // namespace cams
