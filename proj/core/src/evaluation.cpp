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

#include "cams/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "cams/errors.hpp"
#include "json.hpp"

namespace cams {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Highest-scoring candidate within one seen/unseen class; lowest index wins
// ties. Returns candidates when the class is empty.
std::size_t class_argmax(std::span<const double> row, const std::vector<bool>& seen,
                         bool want_seen) {
  std::size_t best = row.size();
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (seen[k] != want_seen) continue;
    if (best == row.size() || row[k] > row[best]) best = k;
  }
  return best;
}

}  // namespace

void EvalTable::validate() const {
  if (candidate_seen.size() != candidates) {
    throw ContractError("eval table: seen flags do not cover every candidate");
  }
  if (scores.size() != truth.size() * candidates) {
    throw ContractError("eval table: score matrix is not samples x candidates");
  }
  for (std::size_t t : truth) {
    if (t >= candidates) {
      throw ContractError("eval table: true pair outside the candidate set");
    }
  }
}

double harmonic_mean(double seen, double unseen) {
  const double s = seen + unseen;
  return s > 0 ? 2.0 * seen * unseen / s : 0.0;
}

MetricReport bias_sweep(const EvalTable& table) {
  table.validate();
  const std::size_t n = table.samples();
  std::size_t n_seen_truth = 0;
  for (std::size_t t : table.truth) n_seen_truth += table.candidate_seen[t] ? 1 : 0;
  const std::size_t n_unseen_truth = n - n_seen_truth;
  if (n_unseen_truth == 0) {
    throw ProtocolError("bias sweep needs at least one unseen-truth sample");
  }
  if (n_seen_truth == 0) {
    throw ProtocolError("bias sweep needs at least one seen-truth sample");
  }

  // Sample i predicts its best unseen candidate once bias > flip[i].
  struct Sample {
    double flip;
    bool correct_if_seen_pred;
    bool correct_if_unseen_pred;
    bool truth_seen;
    bool unseen_at_flip = false;  // tie at bias == flip resolved toward the unseen pair
  };
  std::vector<Sample> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = table.row(i);
    const std::size_t s = class_argmax(row, table.candidate_seen, true);
    const std::size_t u = class_argmax(row, table.candidate_seen, false);
    Sample& sm = samples[i];
    sm.truth_seen = table.candidate_seen[table.truth[i]];
    sm.correct_if_seen_pred = s == table.truth[i];
    sm.correct_if_unseen_pred = u == table.truth[i];
    if (s == row.size()) {
      sm.flip = -kInf;
    } else if (u == row.size()) {
      sm.flip = kInf;
    } else {
      sm.flip = row[s] - row[u];
      const double shifted = row[u] + sm.flip;
      sm.unseen_at_flip = shifted > row[s] || (shifted == row[s] && u < s);
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].flip < samples[b].flip;
  });

  std::size_t seen_correct = 0, unseen_correct = 0;
  std::size_t next = 0;
  auto flip_sample = [&](const Sample& sm, int sign) {
    const bool c = sign > 0 ? sm.correct_if_unseen_pred : sm.correct_if_seen_pred;
    if (!c) return;
    (sm.truth_seen ? seen_correct : unseen_correct) += 1;
  };
  // State at bias -inf: every sample with a seen candidate predicts seen.
  for (const auto& sm : samples) flip_sample(sm, sm.flip == -kInf ? 1 : -1);
  while (next < n && samples[order[next]].flip == -kInf) ++next;

  MetricReport report;
  report.candidates = table.candidates;
  auto record = [&](double bias) {
    report.curve.push_back({bias, double(seen_correct) / double(n_seen_truth),
                            double(unseen_correct) / double(n_unseen_truth)});
  };
  record(-kInf);
  while (next < n && samples[order[next]].flip < kInf) {
    const double c = samples[order[next]].flip;
    const std::size_t group = next;
    while (next < n && samples[order[next]].flip == c) ++next;
    auto flip_group = [&](bool early) {
      bool any = false;
      for (std::size_t j = group; j < next; ++j) {
        const Sample& sm = samples[order[j]];
        if (sm.unseen_at_flip != early) continue;
        if (sm.correct_if_seen_pred) (sm.truth_seen ? seen_correct : unseen_correct) -= 1;
        if (sm.correct_if_unseen_pred) (sm.truth_seen ? seen_correct : unseen_correct) += 1;
        any = true;
      }
      return any;
    };
    // Exactly at bias c, tied samples already predict their unseen pair.
    if (flip_group(true)) record(c);
    flip_group(false);
    const bool last = next == n || samples[order[next]].flip == kInf;
    record(last ? kInf : 0.5 * (c + samples[order[next]].flip));
  }
  if (report.curve.size() == 1) report.curve.back().bias = 0.0;

  double prev_unseen = 0;
  for (const auto& p : report.curve) {
    report.best_seen = std::max(report.best_seen, p.seen);
    report.best_unseen = std::max(report.best_unseen, p.unseen);
    report.best_hm = std::max(report.best_hm, harmonic_mean(p.seen, p.unseen));
    report.auc += (p.unseen - prev_unseen) * p.seen;
    prev_unseen = p.unseen;
  }
  return report;
}

MetricReport oracle_sweep(const EvalTable& table, const std::vector<double>& grid) {
  table.validate();
  std::size_t n_seen_truth = 0, n_unseen_truth = 0;
  for (std::size_t t : table.truth) {
    (table.candidate_seen[t] ? n_seen_truth : n_unseen_truth) += 1;
  }
  MetricReport report;
  report.candidates = table.candidates;
  std::vector<double> shifted(table.candidates);
  for (double bias : grid) {
    std::size_t seen_ok = 0, unseen_ok = 0;
    for (std::size_t i = 0; i < table.samples(); ++i) {
      const auto row = table.row(i);
      for (std::size_t k = 0; k < row.size(); ++k) {
        shifted[k] = table.candidate_seen[k] ? row[k] : row[k] + bias;
      }
      std::size_t pred = 0;
      for (std::size_t k = 1; k < shifted.size(); ++k) {
        if (shifted[k] > shifted[pred]) pred = k;
      }
      if (pred == table.truth[i]) {
        (table.candidate_seen[pred] ? seen_ok : unseen_ok) += 1;
      }
    }
    report.curve.push_back(
        {bias, n_seen_truth ? double(seen_ok) / double(n_seen_truth) : 0.0,
         n_unseen_truth ? double(unseen_ok) / double(n_unseen_truth) : 0.0});
  }
  // Frontier: highest seen accuracy for each distinct unseen accuracy.
  std::map<double, double> frontier;
  for (const auto& p : report.curve) {
    report.best_seen = std::max(report.best_seen, p.seen);
    report.best_unseen = std::max(report.best_unseen, p.unseen);
    report.best_hm = std::max(report.best_hm, harmonic_mean(p.seen, p.unseen));
    auto [it, inserted] = frontier.emplace(p.unseen, p.seen);
    if (!inserted) it->second = std::max(it->second, p.seen);
  }
  double prev_unseen = 0;
  for (const auto& [unseen, seen] : frontier) {
    report.auc += (unseen - prev_unseen) * seen;
    prev_unseen = unseen;
  }
  return report;
}

std::vector<double> dense_bias_grid(const EvalTable& table, std::size_t points) {
  table.validate();
  std::vector<double> diffs;
  for (std::size_t i = 0; i < table.samples(); ++i) {
    const auto row = table.row(i);
    for (std::size_t a = 0; a < row.size(); ++a) {
      if (!table.candidate_seen[a]) continue;
      for (std::size_t b = 0; b < row.size(); ++b) {
        if (!table.candidate_seen[b]) diffs.push_back(row[a] - row[b]);
      }
    }
  }
  if (diffs.empty()) return {0.0};
  const auto [mn, mx] = std::minmax_element(diffs.begin(), diffs.end());
  const double lo = *mn - 1.0;
  const double hi = *mx + 1.0;
  const double delta = 1e-9 * (hi - lo);
  std::vector<double> grid;
  grid.reserve(points + 3 * diffs.size());
  for (std::size_t i = 0; i < points; ++i) {
    grid.push_back(points == 1 ? lo
                               : lo + (hi - lo) * double(i) / double(points - 1));
  }
  for (double d : diffs) {
    grid.push_back(d - delta);
    grid.push_back(d);
    grid.push_back(d + delta);
  }
  std::sort(grid.begin(), grid.end());
  return grid;
}

void Splits::validate() const {
  std::set<Composition> seen_set(seen.begin(), seen.end());
  for (const auto& c : unseen) {
    if (seen_set.count(c)) {
      throw SplitError("composition (" + std::to_string(c.attr) + ", " +
                       std::to_string(c.obj) + ") is both seen and unseen");
    }
  }
  for (const auto& group : {seen, unseen, test}) {
    for (const auto& c : group) {
      if (c.attr >= n_attrs || c.obj >= n_objs) {
        throw SplitError("composition outside the attribute x object grid");
      }
    }
  }
}

bool Splits::is_seen(const Composition& c) const {
  return std::find(seen.begin(), seen.end(), c) != seen.end();
}

CandidateSets closed_open_candidates(const Splits& splits) {
  splits.validate();
  CandidateSets sets;
  std::set<Composition> closed(splits.test.begin(), splits.test.end());
  std::set<Composition> known(splits.seen.begin(), splits.seen.end());
  known.insert(splits.unseen.begin(), splits.unseen.end());
  for (const auto& c : closed) {
    if (!known.count(c)) {
      throw SplitError("test composition is neither seen nor unseen");
    }
  }
  sets.closed.assign(closed.begin(), closed.end());
  for (std::size_t a = 0; a < splits.n_attrs; ++a)
    for (std::size_t o = 0; o < splits.n_objs; ++o) sets.open.push_back({a, o});
  return sets;
}

namespace {

nlohmann::json bias_to_json(double b) {
  if (std::isinf(b)) return b > 0 ? "inf" : "-inf";
  return b;
}

double bias_from_json(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>() == "inf" ? kInf : -kInf;
  return j.get<double>();
}

std::string bias_to_csv(double b) {
  if (std::isinf(b)) return b > 0 ? "inf" : "-inf";
  return nlohmann::json(b).dump();
}

}  // namespace

std::string report_to_json(const MetricReport& r, int indent) {
  nlohmann::json j;
  j["best_seen"] = r.best_seen;
  j["best_unseen"] = r.best_unseen;
  j["best_hm"] = r.best_hm;
  j["auc"] = r.auc;
  j["candidates"] = r.candidates;
  auto& curve = j["curve"] = nlohmann::json::array();
  for (const auto& p : r.curve) {
    curve.push_back({{"bias", bias_to_json(p.bias)}, {"seen", p.seen},
                     {"unseen", p.unseen}});
  }
  return j.dump(indent);
}

MetricReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricReport r;
    r.best_seen = j.at("best_seen").get<double>();
    r.best_unseen = j.at("best_unseen").get<double>();
    r.best_hm = j.at("best_hm").get<double>();
    r.auc = j.at("auc").get<double>();
    r.candidates = j.at("candidates").get<std::size_t>();
    for (const auto& p : j.at("curve")) {
      r.curve.push_back({bias_from_json(p.at("bias")), p.at("seen").get<double>(),
                         p.at("unseen").get<double>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("metric report: ") + e.what());
  }
}

void write_curve_csv(std::ostream& os, const MetricReport& r) {
  os << "bias,seen_acc,unseen_acc\n";
  for (const auto& p : r.curve) {
    os << bias_to_csv(p.bias) << ',' << nlohmann::json(p.seen).dump() << ','
       << nlohmann::json(p.unseen).dump() << '\n';
  }
}

}  // namespace cams
