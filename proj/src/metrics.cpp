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

#include "pancan/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace pancan {
namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

PrfScores tabulate(const Mat& predicted, const Mat& truth, const std::vector<int>& classes) {
  PrfScores out;
  double tp_all = 0.0, pred_all = 0.0, pos_all = 0.0;
  for (int c : classes) {
    double tp = 0.0, pred = 0.0, pos = 0.0;
    for (Index i = 0; i < truth.rows(); ++i) {
      const bool p = predicted(i, c) > 0.0;
      const bool t = truth(i, c) > 0.0;
      tp += (p && t) ? 1.0 : 0.0;
      pred += p ? 1.0 : 0.0;
      pos += t ? 1.0 : 0.0;
    }
    out.CP += ratio(tp, pred);
    out.CR += ratio(tp, pos);
    tp_all += tp;
    pred_all += pred;
    pos_all += pos;
  }
  const double n = static_cast<double>(classes.size());
  out.CP = n > 0 ? 100.0 * out.CP / n : 0.0;
  out.CR = n > 0 ? 100.0 * out.CR / n : 0.0;
  out.CF1 = f1(out.CP, out.CR);
  out.OP = 100.0 * ratio(tp_all, pred_all);
  out.OR = 100.0 * ratio(tp_all, pos_all);
  out.OF1 = f1(out.OP, out.OR);
  return out;
}

}  // namespace

double average_precision(const Vec& scores, const Vec& labels) {
  if (scores.size() != labels.size()) throw DimensionError("average_precision: length mismatch");
  double sum = 0.0;
  int positives = 0;
  for (Index i = 0; i < scores.size(); ++i) {
    if (labels(i) <= 0.0) continue;
    ++positives;
    double hits = 0.0, seen = 0.0;
    for (Index j = 0; j < scores.size(); ++j) {
      if (scores(j) >= scores(i)) {
        seen += 1.0;
        if (labels(j) > 0.0) hits += 1.0;
      }
    }
    sum += hits / seen;
  }
  if (positives == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / positives;
}

MetricsReport compute_metrics(const Mat& scores, const Mat& labels, int topk) {
  if (scores.rows() < 1) throw InputError("compute_metrics: need at least one sample");
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    throw DimensionError("compute_metrics: scores " + shape_str(scores) + " vs labels " +
                         shape_str(labels));
  }
  if (topk < 1) throw ConfigError("compute_metrics: topk must be positive");
  for (Index i = 0; i < labels.size(); ++i) {
    const double y = labels.data()[i];
    if (y != 1.0 && y != -1.0) throw InputError("compute_metrics: labels must be -1 or +1");
    if (!std::isfinite(scores.data()[i])) throw InputError("compute_metrics: non-finite score");
  }
  const Index N = scores.rows();
  const Index L = scores.cols();
  MetricsReport m;
  std::vector<int> classes;
  double ap_sum = 0.0;
  for (Index c = 0; c < L; ++c) {
    const double ap = average_precision(scores.col(c), labels.col(c));
    m.class_ap.push_back(ap * 100.0);
    if (std::isnan(ap)) {
      m.excluded_classes.push_back(static_cast<int>(c));
      std::fprintf(stderr, "warning: label %d has no positive sample, excluded from metrics\n",
                   static_cast<int>(c));
      continue;
    }
    classes.push_back(static_cast<int>(c));
    ap_sum += ap;
  }
  m.mAP = classes.empty() ? 0.0 : 100.0 * ap_sum / static_cast<double>(classes.size());

  Mat thresholded = Mat::Zero(N, L);
  Mat top = Mat::Zero(N, L);
  std::vector<Index> order(static_cast<std::size_t>(L));
  for (Index i = 0; i < N; ++i) {
    std::iota(order.begin(), order.end(), Index{0});
    // Highest score first; ties keep the lower label index.
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return scores(i, a) > scores(i, b); });
    for (Index c = 0; c < L; ++c) {
      if (scores(i, c) >= kDecisionThreshold) thresholded(i, c) = 1.0;
    }
    for (Index r = 0; r < std::min<Index>(topk, L); ++r) {
      const Index c = order[static_cast<std::size_t>(r)];
      if (scores(i, c) >= kDecisionThreshold) top(i, c) = 1.0;
    }
  }
  m.all = tabulate(thresholded, labels, classes);
  m.top3 = tabulate(top, labels, classes);
  return m;
}

std::string format_table(const MetricsReport& m) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%-6s %7s %7s %7s %7s %7s %7s %7s\n"
                "%-6s %7.2f %7.2f %7.2f %7.2f %7.2f %7.2f %7.2f\n"
                "%-6s %7s %7.2f %7.2f %7.2f %7.2f %7.2f %7.2f\n",
                "", "mAP", "CP", "CR", "CF1", "OP", "OR", "OF1", "all", m.mAP, m.all.CP,
                m.all.CR, m.all.CF1, m.all.OP, m.all.OR, m.all.OF1, "top-3", "-", m.top3.CP,
                m.top3.CR, m.top3.CF1, m.top3.OP, m.top3.OR, m.top3.OF1);
  return buf;
}

std::string to_json(const MetricsReport& m) {
  auto prf = [](const PrfScores& s) {
    return nlohmann::json{{"CP", s.CP}, {"CR", s.CR}, {"CF1", s.CF1},
                          {"OP", s.OP}, {"OR", s.OR}, {"OF1", s.OF1}};
  };
  nlohmann::json ap = nlohmann::json::array();
  for (double v : m.class_ap) {
    if (std::isnan(v)) {
      ap.push_back(nullptr);
    } else {
      ap.push_back(v);
    }
  }
  return nlohmann::json{{"mAP", m.mAP},
                        {"all", prf(m.all)},
                        {"top3", prf(m.top3)},
                        {"class_ap", ap},
                        {"excluded_classes", m.excluded_classes}}
      .dump();
}

}  // namespace pancan
