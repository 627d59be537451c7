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

#include "pancan/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace pancan {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

struct Field {
  int line = 0;
  std::string key;
  std::string value;

  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError("config line " + std::to_string(line) + ": " + key + ": " + why);
  }

  long long as_int() const {
    long long v = 0;
    const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
    if (r.ec != std::errc() || r.ptr != value.data() + value.size()) {
      fail("expected an integer, got '" + value + "'");
    }
    return v;
  }
  int as_small_int() const { return static_cast<int>(as_int()); }
  double as_double() const {
    double v = 0.0;
    const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
    if (r.ec != std::errc() || r.ptr != value.data() + value.size() || !std::isfinite(v)) {
      fail("expected a finite number, got '" + value + "'");
    }
    return v;
  }
  bool as_bool() const {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    fail("expected true or false, got '" + value + "'");
  }
  std::vector<int> as_int_list(const std::string& s) const {
    std::vector<int> out;
    for (const std::string& part : split(s, ',')) {
      Field sub{line, key, part};
      out.push_back(sub.as_small_int());
    }
    if (out.empty()) fail("empty list");
    return out;
  }
  // "1,2;1,2;1" -> {{1,2},{1,2},{1}}
  std::vector<std::vector<int>> as_nested() const {
    std::vector<std::vector<int>> out;
    for (const std::string& part : split(value, ';')) out.push_back(as_int_list(part));
    if (out.empty()) fail("empty list");
    return out;
  }
  std::vector<double> as_double_list() const {
    std::vector<double> out;
    for (const std::string& part : split(value, ',')) out.push_back(Field{line, key, part}.as_double());
    return out;
  }
};

using Section = std::vector<Field>;

std::map<std::string, Section> parse_sections(const std::string& text) {
  std::map<std::string, Section> out;
  std::istringstream in(text);
  std::string raw;
  std::string current;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find_first_of("#;");
    // ';' separates list items inside values; only treat it as a comment at
    // the start of a line.
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (hash != std::string::npos && raw[hash] == '#') s = trim(raw.substr(0, hash));
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError("config line " + std::to_string(line) + ": bad section header");
      current = trim(s.substr(1, s.size() - 2));
      if (current != "model" && current != "train" && current != "data" && current != "output") {
        throw ParseError("config line " + std::to_string(line) + ": unknown section [" + current + "]");
      }
      out[current];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(line) + ": expected key = value");
    }
    if (current.empty()) {
      throw ParseError("config line " + std::to_string(line) + ": key outside of a section");
    }
    Field f{line, trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
    for (const Field& prev : out[current]) {
      if (prev.key == f.key) f.fail("duplicate key");
    }
    out[current].push_back(f);
  }
  return out;
}

using Handlers = std::map<std::string, std::function<void(const Field&)>>;

void dispatch(const Section& section, const Handlers& handlers, const std::string& name) {
  for (const Field& f : section) {
    const auto it = handlers.find(f.key);
    if (it == handlers.end()) f.fail("unknown key in [" + name + "]");
    it->second(f);
  }
}

Handlers model_handlers(ModelConfig& m, int* group_count, bool* inverse_frequency) {
  Handlers h{
      {"grid_rows", [&m](const Field& f) { m.grid_rows = f.as_small_int(); }},
      {"grid_cols", [&m](const Field& f) { m.grid_cols = f.as_small_int(); }},
      {"window", [&m](const Field& f) { m.window = f.as_small_int(); }},
      {"stride", [&m](const Field& f) { m.stride = f.as_small_int(); }},
      {"num_scales", [&m](const Field& f) { m.num_scales = f.as_small_int(); }},
      {"in_dim", [&m](const Field& f) { m.in_dim = f.as_small_int(); }},
      {"hidden_dim", [&m](const Field& f) { m.hidden_dim = f.as_small_int(); }},
      {"attn_dim", [&m](const Field& f) { m.attn_dim = f.as_small_int(); }},
      {"fusion_dim", [&m](const Field& f) { m.fusion_dim = f.as_small_int(); }},
      {"heads", [&m](const Field& f) { m.heads = f.as_small_int(); }},
      {"orders", [&m](const Field& f) { m.orders = f.as_nested(); }},
      {"depth", [&m](const Field& f) { m.depth = f.as_int_list(f.value); }},
      {"directions", [&m](const Field& f) { m.directions = f.as_small_int(); }},
      {"gamma", [&m](const Field& f) { m.gamma = f.as_double(); }},
      {"tau", [&m](const Field& f) { m.tau = f.as_double(); }},
      {"threshold",
       [&m](const Field& f) {
         if (f.value == "max_ratio") {
           m.threshold = ThresholdMode::kMaxRatio;
         } else if (f.value == "absolute") {
           m.threshold = ThresholdMode::kAbsolute;
         } else {
           f.fail("expected max_ratio or absolute");
         }
       }},
      {"random_walk", [&m](const Field& f) { m.random_walk = f.as_bool(); }},
      {"multi_order", [&m](const Field& f) { m.multi_order = f.as_bool(); }},
      {"cross_scale", [&m](const Field& f) { m.cross_scale = f.as_bool(); }},
      {"nms_radius", [&m](const Field& f) { m.nms_radius = f.as_small_int(); }},
      {"num_labels", [&m](const Field& f) { m.num_labels = f.as_small_int(); }},
      {"group_weights", [&m](const Field& f) { m.group_weights = f.as_double_list(); }},
      {"variant",
       [&m](const Field& f) {
         if (f.value == "pancan") {
           m.variant = ModelVariant::kPanCAN;
         } else if (f.value == "context_free") {
           m.variant = ModelVariant::kContextFree;
         } else {
           f.fail("expected pancan or context_free");
         }
       }},
  };
  h["groups"] = [&m, group_count](const Field& f) {
    if (f.value.find_first_of(",;") == std::string::npos && group_count != nullptr) {
      *group_count = f.as_small_int();
    } else {
      m.groups = f.as_nested();
      if (group_count != nullptr) *group_count = 0;
    }
  };
  if (inverse_frequency != nullptr) {
    h["group_weighting"] = [inverse_frequency](const Field& f) {
      if (f.value == "inverse_frequency") {
        *inverse_frequency = true;
      } else if (f.value == "uniform") {
        *inverse_frequency = false;
      } else {
        f.fail("expected inverse_frequency or uniform");
      }
    };
  }
  return h;
}

std::string join(const std::vector<int>& v, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_nested(const std::vector<std::vector<int>>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ';';
    out += join(v[i]);
  }
  return out;
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  auto sections = parse_sections(text);
  dispatch(sections["model"], model_handlers(cfg.model, &cfg.group_count, &cfg.inverse_frequency),
           "model");
  TrainConfig& t = cfg.train;
  dispatch(sections["train"],
           Handlers{
               {"epochs", [&t](const Field& f) { t.epochs = f.as_small_int(); }},
               {"batch", [&t](const Field& f) { t.batch = f.as_small_int(); }},
               {"lr", [&t](const Field& f) { t.lr = f.as_double(); }},
               {"weight_decay", [&t](const Field& f) { t.weight_decay = f.as_double(); }},
               {"ema_decay", [&t](const Field& f) { t.ema_decay = f.as_double(); }},
               {"patience", [&t](const Field& f) { t.patience = f.as_small_int(); }},
               {"warmup_frac", [&t](const Field& f) { t.warmup_frac = f.as_double(); }},
               {"seed", [&t](const Field& f) { t.seed = static_cast<std::uint64_t>(f.as_int()); }},
           },
           "train");
  DataConfig& d = cfg.data;
  dispatch(sections["data"],
           Handlers{
               {"source",
                [&d](const Field& f) {
                  if (f.value == "synthetic") {
                    d.synthetic = true;
                  } else if (f.value == "files") {
                    d.synthetic = false;
                  } else {
                    f.fail("expected synthetic or files");
                  }
                }},
               {"seed", [&d](const Field& f) { d.synth.seed = static_cast<std::uint64_t>(f.as_int()); }},
               {"n_train", [&d](const Field& f) { d.synth.n_train = f.as_small_int(); }},
               {"n_val", [&d](const Field& f) { d.synth.n_val = f.as_small_int(); }},
               {"n_test", [&d](const Field& f) { d.synth.n_test = f.as_small_int(); }},
               {"labels", [&d](const Field& f) { d.synth.labels = f.as_small_int(); }},
               {"noise", [&d](const Field& f) { d.synth.noise = f.as_double(); }},
               {"d_pos", [&d](const Field& f) { d.synth.d_pos = f.as_small_int(); }},
               {"train", [&d](const Field& f) { d.train = f.value; }},
               {"val", [&d](const Field& f) { d.val = f.value; }},
               {"test", [&d](const Field& f) { d.test = f.value; }},
           },
           "data");
  OutputConfig& o = cfg.output;
  dispatch(sections["output"],
           Handlers{
               {"dir", [&o](const Field& f) { o.dir = f.value; }},
               {"save_every_epoch", [&o](const Field& f) { o.save_every_epoch = f.as_bool(); }},
           },
           "output");
  cfg.data.synth.rows = cfg.model.grid_rows;
  cfg.data.synth.cols = cfg.model.grid_cols;
  check_train_config(cfg.train);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

void validate_paths(const RunConfig& cfg) {
  if (!cfg.data.synthetic) {
    if (cfg.data.train.empty()) throw InputError("config: [data] train path is required");
    for (const auto& p : {cfg.data.train, cfg.data.val, cfg.data.test}) {
      if (!p.empty() && !std::filesystem::is_regular_file(p)) {
        throw InputError("config: data file not found: " + p.string());
      }
    }
  }
  const auto parent = cfg.output.dir.parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw InputError("config: output parent directory does not exist: " + parent.string());
  }
}

SynthDataset load_data(const RunConfig& cfg) {
  if (cfg.data.synthetic) return make_synth(cfg.data.synth);
  SynthDataset ds;
  ds.train = load_split(cfg.data.train);
  if (!cfg.data.val.empty()) ds.val = load_split(cfg.data.val);
  if (!cfg.data.test.empty()) ds.test = load_split(cfg.data.test);
  for (const DataSplit* s : {&ds.val, &ds.test}) {
    if (s->size() > 0 && (!s->grid.same_lattice(ds.train.grid) || s->dim() != ds.train.dim() ||
                          s->labels.cols() != ds.train.labels.cols())) {
      throw InputError("data: splits disagree on grid, feature width or label count");
    }
  }
  return ds;
}

ModelConfig finalize_model(const RunConfig& cfg, const DataSplit& tr) {
  ModelConfig m = cfg.model;
  if (!tr.grid.same_lattice(GridSpec{m.grid_rows, m.grid_cols, m.grid_rows, m.grid_cols})) {
    throw ConfigError("data grid " + std::to_string(tr.grid.n_rows) + "x" +
                      std::to_string(tr.grid.n_cols) + " does not match the model grid");
  }
  m.in_dim = static_cast<int>(tr.dim());
  m.num_labels = static_cast<int>(tr.labels.cols());
  if (cfg.group_count > 0) {
    m.groups = group_labels(cooccurrence(tr.labels), std::min(cfg.group_count, m.num_labels));
    m.group_weights.clear();
  }
  if (m.groups.empty()) {
    auto& all = m.groups.emplace_back();
    for (int l = 0; l < m.num_labels; ++l) all.push_back(l);
  }
  if (m.group_weights.empty()) {
    m.group_weights = cfg.inverse_frequency ? inverse_frequency_weights(tr.labels, m.groups)
                                            : std::vector<double>(m.groups.size(), 1.0);
  }
  return resolve(m);
}

std::string model_config_text(const ModelConfig& raw) {
  const ModelConfig m = resolve(raw);
  std::ostringstream out;
  out << "[model]\n"
      << "grid_rows = " << m.grid_rows << "\n"
      << "grid_cols = " << m.grid_cols << "\n"
      << "window = " << m.window << "\n"
      << "stride = " << m.stride << "\n"
      << "num_scales = " << m.num_scales << "\n"
      << "in_dim = " << m.in_dim << "\n"
      << "hidden_dim = " << m.hidden_dim << "\n"
      << "attn_dim = " << m.attn_dim << "\n"
      << "fusion_dim = " << m.fusion_dim << "\n"
      << "heads = " << m.heads << "\n"
      << "orders = " << join_nested(m.orders) << "\n"
      << "depth = " << join(m.depth) << "\n"
      << "directions = " << m.directions << "\n"
      << "gamma = " << exact(m.gamma) << "\n"
      << "tau = " << exact(m.tau) << "\n"
      << "threshold = " << (m.threshold == ThresholdMode::kMaxRatio ? "max_ratio" : "absolute") << "\n"
      << "random_walk = " << (m.random_walk ? "true" : "false") << "\n"
      << "multi_order = " << (m.multi_order ? "true" : "false") << "\n"
      << "cross_scale = " << (m.cross_scale ? "true" : "false") << "\n"
      << "nms_radius = " << m.nms_radius << "\n"
      << "num_labels = " << m.num_labels << "\n"
      << "groups = " << join_nested(m.groups) << "\n";
  out << "group_weights = ";
  for (std::size_t i = 0; i < m.group_weights.size(); ++i) {
    out << (i > 0 ? "," : "") << exact(m.group_weights[i]);
  }
  out << "\nvariant = " << (m.variant == ModelVariant::kPanCAN ? "pancan" : "context_free") << "\n";
  return out.str();
}

ModelConfig parse_model_config(const std::string& text) {
  auto sections = parse_sections(text);
  for (const auto& [name, fields] : sections) {
    if (name != "model" && !fields.empty()) {
      throw ParseError("model config: unexpected section [" + name + "]");
    }
  }
  ModelConfig m;
  dispatch(sections["model"], model_handlers(m, nullptr, nullptr), "model");
  return resolve(m);
}

void save_model(const std::filesystem::path& path, const PanCAN& model,
                const PanCANParams& params, const PanCANParams* ema) {
  model.check_params(params);
  Checkpoint ckpt;
  ckpt.config_text = model_config_text(model.config());
  ckpt.values = pack(flatten(params));
  if (ema != nullptr) {
    model.check_params(*ema);
    ckpt.ema = pack(flatten(*ema));
  }
  save_checkpoint(ckpt, path);
}

LoadedModel load_model(const std::filesystem::path& path, bool prefer_ema) {
  const Checkpoint ckpt = load_checkpoint(path);
  LoadedModel out{PanCAN(parse_model_config(ckpt.config_text)), {}, !ckpt.ema.empty()};
  out.params = out.model.init_params(0);
  std::vector<Mat> flat = flatten(out.params);
  unpack(prefer_ema && out.has_ema ? ckpt.ema : ckpt.values, flat);
  unflatten(std::span<const Mat>(flat), out.params);
  return out;
}

}  // namespace pancan
