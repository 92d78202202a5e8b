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

#include <iosfwd>
#include <string>
#include <vector>

#include "cams/backbone.hpp"

// Seen/unseen calibrated evaluation. A scalar bias is added to the score of
// every unseen candidate; sweeping it from -inf to +inf traces the seen vs
// unseen accuracy curve summarised by best seen, best unseen, best harmonic
// mean and area under the curve.
namespace cams {

struct EvalTable {
  std::size_t candidates = 0;
  std::vector<bool> candidate_seen;  // per candidate
  std::vector<double> scores;        // samples x candidates, row-major
  std::vector<std::size_t> truth;    // candidate index per sample

  std::size_t samples() const { return truth.size(); }
  std::span<const double> row(std::size_t i) const {
    return {scores.data() + i * candidates, candidates};
  }
  // Throws ContractError on shape or truth-range problems.
  void validate() const;
};

struct CurvePoint {
  double bias = 0;  // representative bias of the state (may be +-inf)
  double seen = 0;
  double unseen = 0;
};

struct MetricReport {
  double best_seen = 0;
  double best_unseen = 0;
  double best_hm = 0;
  double auc = 0;
  std::vector<CurvePoint> curve;
  std::size_t candidates = 0;
};

double harmonic_mean(double seen, double unseen);

// Exact sweep over the per-sample critical biases. Ties in argmax go to the
// lowest candidate index. Throws ProtocolError when the table has no
// seen-truth or no unseen-truth samples.
MetricReport bias_sweep(const EvalTable& table);

// Brute-force reference: re-runs the argmax at every bias in `grid`.
MetricReport oracle_sweep(const EvalTable& table, const std::vector<double>& grid);

// Evenly spaced biases spanning every seen-minus-unseen score difference, plus
// each such difference and the points just either side of it.
std::vector<double> dense_bias_grid(const EvalTable& table,
                                    std::size_t points = 10001);

struct CandidateSets {
  std::vector<Composition> closed;  // compositions present in the test split
  std::vector<Composition> open;    // all attribute x object pairs
};

struct Splits {
  std::size_t n_attrs = 0;
  std::size_t n_objs = 0;
  std::vector<Composition> seen;
  std::vector<Composition> unseen;
  std::vector<Composition> test;  // compositions with test samples

  // Throws SplitError when seen and unseen overlap.
  void validate() const;
  bool is_seen(const Composition& c) const;
};

CandidateSets closed_open_candidates(const Splits& splits);

std::string report_to_json(const MetricReport& report, int indent = 2);
MetricReport report_from_json(const std::string& text);
void write_curve_csv(std::ostream& os, const MetricReport& report);

}  // namespace cams
