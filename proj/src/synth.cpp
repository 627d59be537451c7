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

#include "pancan/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "pancan/binary_io.hpp"

namespace pancan {
namespace {

// Motif ids owned by each label, in the order of the kind's description.
std::vector<std::vector<int>> motif_table(int labels) {
  std::vector<std::vector<int>> table;
  int next = 1;
  for (int l = 0; l < labels; ++l) {
    const LabelKind k = label_kind(l);
    const int n = (k == LabelKind::kPair || k == LabelKind::kDirectional) ? 2 : 1;
    auto& ids = table.emplace_back();
    for (int i = 0; i < n; ++i) ids.push_back(next++);
  }
  return table;
}

int manhattan(const GridSpec& g, int a, int b) {
  return std::abs(g.row_of(a) - g.row_of(b)) + std::abs(g.col_of(a) - g.col_of(b));
}

std::vector<int> cells_with(const std::vector<int>& motifs, int id) {
  std::vector<int> out;
  for (std::size_t i = 0; i < motifs.size(); ++i) {
    if (motifs[i] == id) out.push_back(static_cast<int>(i));
  }
  return out;
}

class Placer {
 public:
  Placer(const GridSpec& g, std::mt19937_64& rng)
      : g_(g), rng_(rng), motifs_(static_cast<std::size_t>(g.cells()), 0) {}

  // Uniform pick among empty cells satisfying pred; -1 when none.
  template <typename Pred>
  int pick(Pred pred) {
    std::vector<int> ok;
    for (int c = 0; c < g_.cells(); ++c) {
      if (motifs_[static_cast<std::size_t>(c)] == 0 && pred(c)) ok.push_back(c);
    }
    if (ok.empty()) return -1;
    std::uniform_int_distribution<std::size_t> d(0, ok.size() - 1);
    return ok[d(rng_)];
  }
  void put(int cell, int id) { motifs_[static_cast<std::size_t>(cell)] = id; }
  const std::vector<int>& motifs() const { return motifs_; }

 private:
  const GridSpec& g_;
  std::mt19937_64& rng_;
  std::vector<int> motifs_;
};

int block_of(const GridSpec& g, int cell) {
  return (g.row_of(cell) / 2) * ((g.n_cols + 1) / 2) + g.col_of(cell) / 2;
}

bool full_block(const GridSpec& g, int cell) {
  const int r0 = (g.row_of(cell) / 2) * 2;
  const int c0 = (g.col_of(cell) / 2) * 2;
  return r0 + 1 < g.n_rows && c0 + 1 < g.n_cols;
}

// Returns false when the layout could not be completed.
bool place_label(Placer& p, const GridSpec& g, LabelKind kind, const std::vector<int>& ids,
                 bool positive, std::mt19937_64& rng) {
  auto any = [](int) { return true; };
  switch (kind) {
    case LabelKind::kPair: {
      const int a = p.pick(any);
      if (a < 0) return false;
      p.put(a, ids[0]);
      const int b = p.pick([&](int c) {
        const int d = manhattan(g, a, c);
        return positive ? d <= 2 : d >= 4;
      });
      if (b < 0) return false;
      p.put(b, ids[1]);
      return true;
    }
    case LabelKind::kCluster: {
      if (positive) {
        const int seed = p.pick([&](int c) { return full_block(g, c); });
        if (seed < 0) return false;
        p.put(seed, ids[0]);
        for (int i = 0; i < 2; ++i) {
          const int c = p.pick([&](int x) { return block_of(g, x) == block_of(g, seed); });
          if (c < 0) return false;
          p.put(c, ids[0]);
        }
        return true;
      }
      std::vector<int> used;
      for (int i = 0; i < 3; ++i) {
        const int c = p.pick([&](int x) {
          return std::none_of(used.begin(), used.end(),
                              [&](int u) { return block_of(g, u) == block_of(g, x); });
        });
        if (c < 0) return false;
        p.put(c, ids[0]);
        used.push_back(c);
      }
      return true;
    }
    case LabelKind::kDirectional: {
      // Offsets: right (positive), then left, up, down.
      static constexpr int kDr[4] = {0, 0, -1, 1};
      static constexpr int kDc[4] = {1, -1, 0, 0};
      int dir = 0;
      if (!positive) dir = 1 + static_cast<int>(std::uniform_int_distribution<int>(0, 2)(rng));
      const int e = p.pick([&](int c) {
        const int r = g.row_of(c) + kDr[dir];
        const int col = g.col_of(c) + kDc[dir];
        return r >= 0 && r < g.n_rows && col >= 0 && col < g.n_cols;
      });
      if (e < 0) return false;
      const int f = g.index(g.row_of(e) + kDr[dir], g.col_of(e) + kDc[dir]);
      if (p.motifs()[static_cast<std::size_t>(f)] != 0) return false;
      p.put(e, ids[0]);
      p.put(f, ids[1]);
      return true;
    }
    case LabelKind::kPresence: {
      if (!positive) return true;
      const int c = p.pick(any);
      if (c < 0) return false;
      p.put(c, ids[0]);
      return true;
    }
  }
  return false;
}

DataSplit generate(const SynthOptions& opt, int n, std::mt19937_64& rng) {
  DataSplit split;
  split.grid = GridSpec{opt.rows, opt.cols, opt.rows, opt.cols};
  const GridSpec& g = split.grid;
  const int L = opt.labels;
  const auto table = motif_table(L);
  const int M = motif_count(L);
  const Mat pos = positional_encoding(g, opt.d_pos);
  split.labels.resize(n, L);
  // Balanced positives: each label is positive for exactly half the samples.
  std::vector<std::vector<bool>> positive(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    auto& col = positive[static_cast<std::size_t>(l)];
    col.assign(static_cast<std::size_t>(n), false);
    for (int i = 0; i < (n + 1) / 2; ++i) col[static_cast<std::size_t>(i)] = true;
    std::shuffle(col.begin(), col.end(), rng);
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int s = 0; s < n; ++s) {
    std::vector<int> motifs;
    for (int attempt = 0;; ++attempt) {
      if (attempt == 1000) throw ConfigError("make_synth: grid too small for the motif layout");
      Placer p(g, rng);
      bool ok = true;
      for (int l = 0; l < L && ok; ++l) {
        ok = place_label(p, g, label_kind(l), table[static_cast<std::size_t>(l)],
                         positive[static_cast<std::size_t>(l)][static_cast<std::size_t>(s)], rng);
      }
      if (ok) {
        motifs = p.motifs();
        break;
      }
    }
    Mat f = Mat::Zero(M + opt.d_pos, g.cells());
    for (int c = 0; c < g.cells(); ++c) {
      const int id = motifs[static_cast<std::size_t>(c)];
      if (id > 0) f(id - 1, c) = 1.0;
      for (int k = 0; k < M; ++k) f(k, c) += opt.noise * noise(rng);
    }
    f.bottomRows(opt.d_pos) = pos;
    split.labels.row(s) = evaluate_predicates(motifs, g, L).transpose();
    split.feats.push_back(std::move(f));
    split.motifs.push_back(std::move(motifs));
  }
  return split;
}

}  // namespace

LabelKind label_kind(int label) { return static_cast<LabelKind>(label % 4); }

int motif_count(int labels) {
  int n = 0;
  for (const auto& ids : motif_table(labels)) n += static_cast<int>(ids.size());
  return n;
}

int synth_dim(const SynthOptions& opt) { return motif_count(opt.labels) + opt.d_pos; }

Vec evaluate_predicates(const std::vector<int>& motifs, const GridSpec& g, int L) {
  if (static_cast<int>(motifs.size()) != g.cells()) {
    throw DimensionError("evaluate_predicates: motif map does not match the grid");
  }
  const auto table = motif_table(L);
  Vec y = Vec::Constant(L, -1.0);
  for (int l = 0; l < L; ++l) {
    const auto& ids = table[static_cast<std::size_t>(l)];
    bool hit = false;
    switch (label_kind(l)) {
      case LabelKind::kPair:
        for (int a : cells_with(motifs, ids[0])) {
          for (int b : cells_with(motifs, ids[1])) hit = hit || manhattan(g, a, b) <= 2;
        }
        break;
      case LabelKind::kCluster: {
        std::vector<int> count(static_cast<std::size_t>(g.cells()), 0);
        for (int c : cells_with(motifs, ids[0])) {
          hit = hit || ++count[static_cast<std::size_t>(block_of(g, c))] >= 3;
        }
        break;
      }
      case LabelKind::kDirectional:
        for (int e : cells_with(motifs, ids[0])) {
          const int col = g.col_of(e) + 1;
          hit = hit || (col < g.n_cols &&
                        motifs[static_cast<std::size_t>(g.index(g.row_of(e), col))] == ids[1]);
        }
        break;
      case LabelKind::kPresence:
        hit = !cells_with(motifs, ids[0]).empty();
        break;
    }
    if (hit) y(l) = 1.0;
  }
  return y;
}

SynthDataset make_synth(const SynthOptions& opt) {
  if (opt.labels < 2) throw ConfigError("make_synth: need at least 2 labels");
  if (opt.n_train < 1 || opt.n_val < 0 || opt.n_test < 0) {
    throw ConfigError("make_synth: sample counts must be non-negative with n_train >= 1");
  }
  if (opt.rows < 2 || opt.cols < 2) throw ConfigError("make_synth: grid must be at least 2x2");
  if (opt.noise < 0.0) throw ConfigError("make_synth: noise must be non-negative");
  std::mt19937_64 rng(opt.seed);
  SynthDataset ds;
  ds.train = generate(opt, opt.n_train, rng);
  ds.val = generate(opt, opt.n_val, rng);
  ds.test = generate(opt, opt.n_test, rng);
  return ds;
}

void save_split(const DataSplit& split, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("save_split: cannot write " + path.string());
  out << "PANCAN-DATA v1 samples=" << split.size() << " rows=" << split.grid.n_rows
      << " cols=" << split.grid.n_cols << " dim=" << split.dim()
      << " labels=" << split.labels.cols() << "\n";
  for (int s = 0; s < split.size(); ++s) {
    for (Index l = 0; l < split.labels.cols(); ++l) io::write_f64_le(out, split.labels(s, l));
    const Mat& f = split.feats[static_cast<std::size_t>(s)];
    for (Index i = 0; i < f.size(); ++i) io::write_f64_le(out, f.data()[i]);
  }
  if (!out) throw InputError("save_split: write failed for " + path.string());
}

DataSplit load_split(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("load_split: cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw ParseError("load_split: line 1: missing header");
  int n = 0, rows = 0, cols = 0, dim = 0, L = 0;
  char tail = 0;
  if (std::sscanf(header.c_str(), "PANCAN-DATA v1 samples=%d rows=%d cols=%d dim=%d labels=%d%c",
                  &n, &rows, &cols, &dim, &L, &tail) != 5 ||
      n < 0 || rows < 1 || cols < 1 || dim < 0 || L < 1) {
    throw ParseError("load_split: line 1: malformed header '" + header + "'");
  }
  DataSplit split;
  split.grid = GridSpec{rows, cols, rows, cols};
  split.labels.resize(n, L);
  const std::size_t per = static_cast<std::size_t>(L) + static_cast<std::size_t>(dim) * rows * cols;
  std::vector<unsigned char> bytes(per * 8 * static_cast<std::size_t>(n));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  const std::size_t offset = header.size() + 1;
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != bytes.size()) {
    throw ParseError("load_split: truncated payload at byte offset " + std::to_string(offset + got) +
                     ", missing " + std::to_string(bytes.size() - got) + " bytes");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("load_split: trailing data after byte offset " +
                     std::to_string(offset + bytes.size()));
  }
  std::size_t at = 0;
  auto next = [&]() {
    const double v = io::decode_f64_le(bytes.data() + at);
    if (!std::isfinite(v)) {
      throw ParseError("load_split: non-finite value at byte offset " + std::to_string(offset + at));
    }
    at += 8;
    return v;
  };
  for (int s = 0; s < n; ++s) {
    for (int l = 0; l < L; ++l) {
      const double y = next();
      if (y != 1.0 && y != -1.0) {
        throw ParseError("load_split: label value " + std::to_string(y) + " at byte offset " +
                         std::to_string(offset + at - 8) + " is not -1 or +1");
      }
      split.labels(s, l) = y;
    }
    Mat f(dim, rows * cols);
    for (Index i = 0; i < f.size(); ++i) f.data()[i] = next();
    split.feats.push_back(std::move(f));
  }
  return split;
}

}  // namespace pancan
