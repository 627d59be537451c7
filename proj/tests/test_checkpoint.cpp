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

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "pancan/checkpoint.hpp"

using namespace pancan;
namespace fs = std::filesystem;

namespace {

fs::path temp(const std::string& name) { return fs::temp_directory_path() / ("pancan_test_" + name); }

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("checkpoint round-trip is bit-exact") {
  Checkpoint c;
  c.config_text = "[model]\ngrid_rows = 4\n";
  c.values = {0.1, -1.0 / 3.0, 1e-300, -0.0, std::numeric_limits<double>::denorm_min(), 12345.678};
  c.ema = {1, 2, 3, 4, 5, 6};
  const fs::path p = temp("a.ckpt");
  save_checkpoint(c, p);
  const Checkpoint back = load_checkpoint(p);
  CHECK(back.config_text == c.config_text);
  CHECK(same_bits(back.values, c.values));
  CHECK(same_bits(back.ema, c.ema));
  c.ema.clear();
  save_checkpoint(c, p);
  CHECK(load_checkpoint(p).ema.empty());
  c.ema = {1.0};
  CHECK_THROWS_AS(save_checkpoint(c, p), DimensionError);
}

TEST_CASE("damaged checkpoints name the byte offset") {
  Checkpoint c{"cfg", {1.0, 2.0}, {}};
  const fs::path p = temp("b.ckpt");
  save_checkpoint(c, p);
  const auto size = fs::file_size(p);
  {
    std::ofstream(p, std::ios::app | std::ios::binary) << "x";
  }
  try {
    load_checkpoint(p);
    FAIL("trailing byte accepted");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("byte offset " + std::to_string(size)) != std::string::npos);
  }
  fs::resize_file(p, size - 4);
  CHECK_THROWS_WITH_AS(load_checkpoint(p), doctest::Contains("missing 4 bytes"), ParseError);
  c.values[1] = std::numeric_limits<double>::infinity();
  save_checkpoint(c, p);
  CHECK_THROWS_WITH_AS(load_checkpoint(p), doctest::Contains("non-finite"), ParseError);
  std::ofstream(p) << "PANCAN-CKPT v2 config_bytes=0 values=0 ema=0\n";
  CHECK_THROWS_AS(load_checkpoint(p), ParseError);
}

TEST_CASE("pack and unpack follow storage order") {
  Mat a(2, 2);
  a << 1, 2, 3, 4;
  const std::vector<Mat> t{a, Mat::Constant(1, 1, 5.0)};
  CHECK(pack(t) == std::vector<double>{1, 3, 2, 4, 5});
  std::vector<Mat> shaped{Mat::Zero(2, 2), Mat::Zero(1, 1)};
  unpack(pack(t), shaped);
  CHECK(shaped[0] == a);
  std::vector<Mat> wrong{Mat::Zero(3, 1)};
  CHECK_THROWS_AS(unpack(pack(t), wrong), DimensionError);
}
