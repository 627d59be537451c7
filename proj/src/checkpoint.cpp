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

#include "pancan/checkpoint.hpp"

#include <cstdio>
#include <fstream>

#include "pancan/binary_io.hpp"

namespace pancan {

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (!ckpt.ema.empty() && ckpt.ema.size() != ckpt.values.size()) {
    throw DimensionError("save_checkpoint: EMA shadow has " + std::to_string(ckpt.ema.size()) +
                         " values, parameters have " + std::to_string(ckpt.values.size()));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("save_checkpoint: cannot write " + path.string());
  out << "PANCAN-CKPT v1 config_bytes=" << ckpt.config_text.size()
      << " values=" << ckpt.values.size() << " ema=" << (ckpt.ema.empty() ? 0 : 1) << "\n";
  out.write(ckpt.config_text.data(), static_cast<std::streamsize>(ckpt.config_text.size()));
  for (double v : ckpt.values) io::write_f64_le(out, v);
  for (double v : ckpt.ema) io::write_f64_le(out, v);
  if (!out) throw InputError("save_checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("load_checkpoint: cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw ParseError("load_checkpoint: line 1: missing header");
  unsigned long long config_bytes = 0, count = 0;
  int ema = -1;
  char tail = 0;
  if (std::sscanf(header.c_str(), "PANCAN-CKPT v1 config_bytes=%llu values=%llu ema=%d%c",
                  &config_bytes, &count, &ema, &tail) != 3 ||
      (ema != 0 && ema != 1)) {
    throw ParseError("load_checkpoint: line 1: malformed header '" + header + "'");
  }
  Checkpoint ckpt;
  std::size_t offset = header.size() + 1;
  ckpt.config_text.resize(config_bytes);
  in.read(ckpt.config_text.data(), static_cast<std::streamsize>(config_bytes));
  if (static_cast<unsigned long long>(in.gcount()) != config_bytes) {
    throw ParseError("load_checkpoint: truncated config echo at byte offset " +
                     std::to_string(offset + static_cast<std::size_t>(in.gcount())));
  }
  offset += config_bytes;
  const std::size_t total = count * (ema ? 2 : 1);
  std::vector<unsigned char> bytes(total * 8);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != bytes.size()) {
    throw ParseError("load_checkpoint: truncated payload at byte offset " +
                     std::to_string(offset + got) + ", missing " +
                     std::to_string(bytes.size() - got) + " bytes");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("load_checkpoint: trailing data after byte offset " +
                     std::to_string(offset + bytes.size()));
  }
  for (std::size_t i = 0; i < total; ++i) {
    const double v = io::decode_f64_le(bytes.data() + 8 * i);
    if (!std::isfinite(v)) {
      throw ParseError("load_checkpoint: non-finite value at byte offset " +
                       std::to_string(offset + 8 * i));
    }
    (i < count ? ckpt.values : ckpt.ema).push_back(v);
  }
  return ckpt;
}

std::vector<double> pack(const std::vector<Mat>& tensors) {
  std::vector<double> out;
  for (const Mat& m : tensors) {
    // Column-major, matching Eigen's storage.
    out.insert(out.end(), m.data(), m.data() + m.size());
  }
  return out;
}

void unpack(const std::vector<double>& values, std::vector<Mat>& tensors) {
  std::size_t need = 0;
  for (const Mat& m : tensors) need += static_cast<std::size_t>(m.size());
  if (need != values.size()) {
    throw DimensionError("unpack: checkpoint holds " + std::to_string(values.size()) +
                         " values, model needs " + std::to_string(need));
  }
  std::size_t at = 0;
  for (Mat& m : tensors) {
    std::copy(values.begin() + static_cast<std::ptrdiff_t>(at),
              values.begin() + static_cast<std::ptrdiff_t>(at + static_cast<std::size_t>(m.size())),
              m.data());
    at += static_cast<std::size_t>(m.size());
  }
}

}  // namespace pancan
