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

#include "pancan/ablation.hpp"

#include <cstdio>

#include "json.hpp"

namespace pancan {
namespace {

int parse_positive(const std::string& value, int max) {
  int v = 0;
  try {
    std::size_t used = 0;
    v = std::stoi(value, &used);
    if (used != value.size()) v = 0;
  } catch (const std::exception&) {
    v = 0;
  }
  if (v < 1 || v > max) {
    throw ConfigError("ablation: value '" + value + "' must be an integer in 1.." +
                      std::to_string(max));
  }
  return v;
}

bool is_all_cells(const std::string& v) { return v == "none" || v == "x" || v == "✗"; }

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

}  // namespace

AblationAxis parse_axis(const std::string& name) {
  if (name == "order") return AblationAxis::kOrder;
  if (name == "depth") return AblationAxis::kDepth;
  if (name == "threshold") return AblationAxis::kThreshold;
  if (name == "interval") return AblationAxis::kInterval;
  if (name == "module") return AblationAxis::kModule;
  throw ConfigError("ablation: unknown axis '" + name +
                    "' (expected order, depth, threshold, interval or module)");
}

std::string axis_name(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kOrder: return "order";
    case AblationAxis::kDepth: return "depth";
    case AblationAxis::kThreshold: return "threshold";
    case AblationAxis::kInterval: return "interval";
    case AblationAxis::kModule: return "module";
  }
  return "";
}

std::string axis_column(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kOrder: return "Neighborhood Order";
    case AblationAxis::kDepth: return "Layer Number";
    case AblationAxis::kThreshold: return "Threshold Value";
    case AblationAxis::kInterval: return "Scale interval";
    case AblationAxis::kModule: return "Configuration";
  }
  return "";
}

std::vector<std::string> default_values(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kOrder: return {"1", "2", "3"};
    case AblationAxis::kDepth: return {"1", "2", "3"};
    case AblationAxis::kThreshold: return {"none", "0.62", "0.67", "0.71", "0.75"};
    case AblationAxis::kInterval: return {"1", "2", "3"};
    case AblationAxis::kModule:
      return {"full", "no_multi_order", "no_cross_scale", "no_grouped_fc", "no_random_walk"};
  }
  return {};
}

std::string row_label(AblationAxis axis, const std::string& value) {
  static const char* kOrdinal[] = {"First", "Second", "Third"};
  static const char* kCount[] = {"One", "Two", "Three"};
  switch (axis) {
    case AblationAxis::kOrder: {
      const int k = parse_positive(value, 9);
      return (k <= 3 ? std::string(kOrdinal[k - 1]) : value) + "-Order";
    }
    case AblationAxis::kDepth: {
      const int k = parse_positive(value, 9);
      return (k <= 3 ? std::string(kCount[k - 1]) : value) + "-Layer";
    }
    case AblationAxis::kThreshold:
      return is_all_cells(value) ? "✗" : value;
    case AblationAxis::kInterval: {
      const int w = parse_positive(value, 9);
      return std::to_string(w) + "×" + std::to_string(w);
    }
    case AblationAxis::kModule:
      if (value == "full") return "PanCAN";
      if (value == "no_multi_order") return "PanCAN without Multi-order";
      if (value == "no_cross_scale") return "PanCAN without Cross-scale";
      if (value == "no_grouped_fc") return "PanCAN without Grouped FC";
      if (value == "no_random_walk") return "PanCAN without Random walk";
      throw ConfigError("ablation: unknown module value '" + value + "'");
  }
  return value;
}

RunConfig apply_ablation(const RunConfig& base, AblationAxis axis, const std::string& value) {
  RunConfig cfg = base;
  ModelConfig& m = cfg.model;
  row_label(axis, value);  // validates value
  switch (axis) {
    case AblationAxis::kOrder: {
      const int k = parse_positive(value, 9);
      const GridSpec g{m.grid_rows, m.grid_cols, m.grid_rows, m.grid_cols};
      const ScalePyramid p = build_pyramid(g, m.window, m.stride, m.cross_scale ? m.num_scales : 1);
      m.orders.clear();
      for (const GridSpec& s : p.scales) {
        std::vector<int> o{1};
        if (s.n_rows >= 4 && s.n_cols >= 4) {
          for (int j = 2; j <= k; ++j) o.push_back(j);
        }
        m.orders.push_back(o);
      }
      break;
    }
    case AblationAxis::kDepth:
      m.depth = {parse_positive(value, 9)};
      break;
    case AblationAxis::kThreshold:
      if (is_all_cells(value)) {
        m.tau = 0.0;
      } else {
        try {
          m.tau = std::stod(value);
        } catch (const std::exception&) {
          throw ConfigError("ablation: threshold '" + value + "' is not a number");
        }
        if (!(m.tau >= 0.0 && m.tau <= 1.0)) throw ConfigError("ablation: threshold outside [0, 1]");
      }
      break;
    case AblationAxis::kInterval: {
      const int w = parse_positive(value, 9);
      m.stride = w;
      m.window = std::max(w, 2);
      m.orders.clear();
      const GridSpec g{m.grid_rows, m.grid_cols, m.grid_rows, m.grid_cols};
      const ScalePyramid natural = build_pyramid(g, m.window, m.stride, 0);
      // Overlapping windows shrink the grid by one cell per scale; keep the
      // depth of the default pyramid.
      const ScalePyramid reference = build_pyramid(g, 2, 2, 0);
      if (m.num_scales == 0 && natural.size() > reference.size()) {
        m.num_scales = static_cast<int>(reference.size());
      }
      break;
    }
    case AblationAxis::kModule:
      if (value == "no_multi_order") m.multi_order = false;
      if (value == "no_cross_scale") {
        m.cross_scale = false;
        m.orders.clear();
        m.depth.resize(std::min<std::size_t>(m.depth.size(), 1));
      }
      if (value == "no_grouped_fc") {
        cfg.group_count = 1;
        m.groups.clear();
        m.group_weights.clear();
      }
      if (value == "no_random_walk") m.random_walk = false;
      break;
  }
  return cfg;
}

std::string AblationTable::to_csv() const {
  std::string out = first_column + ",mAP,CF1,OF1\n";
  for (const AblationRow& r : rows) {
    out += r.label + "," + fixed(r.mAP) + "," + fixed(r.CF1) + "," + fixed(r.OF1) + "\n";
  }
  return out;
}

std::string AblationTable::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const AblationRow& r : rows) {
    rows_json.push_back({{first_column, r.label}, {"mAP", r.mAP}, {"CF1", r.CF1}, {"OF1", r.OF1}});
  }
  return nlohmann::json{{"columns", {first_column, "mAP", "CF1", "OF1"}}, {"rows", rows_json}}.dump();
}

AblationTable run_ablation(AblationAxis axis, const std::vector<std::string>& values,
                           const RunConfig& base, const SynthDataset& data,
                           const AblationProgress& progress) {
  if (values.empty()) throw ConfigError("ablation: no values given");
  const DataSplit& scored = data.test.size() > 0 ? data.test : data.val;
  if (scored.size() == 0) throw InputError("ablation: need a test or validation split");
  AblationTable table;
  table.first_column = axis_column(axis);
  for (const std::string& value : values) {
    const RunConfig cfg = apply_ablation(base, axis, value);
    const PanCAN model(finalize_model(cfg, data.train));
    const TrainResult res = train(model, cfg.train, data.train, data.val);
    const MetricsReport m = evaluate(model, res.ema, scored);
    table.rows.push_back({row_label(axis, value), m.mAP, m.all.CF1, m.all.OF1});
    if (progress) progress(table.rows.back().label);
  }
  return table;
}

}  // namespace pancan
