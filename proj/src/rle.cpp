// Copyright 2026 The LayerComp Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "layercomp/rle.hpp"

#include "layercomp/error.hpp"

namespace layercomp {

std::vector<std::uint32_t> rle_counts(const OccupancyMap& map) {
  std::vector<std::uint32_t> counts;
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int j = 0; j < map.width(); ++j) {
    for (int i = 0; i < map.height(); ++i) {
      const std::uint8_t v = map.at(i, j);
      if (v != current) {
        counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  counts.push_back(run);
  return counts;
}

OccupancyMap rle_from_counts(const std::vector<std::uint32_t>& counts, int height, int width) {
  OccupancyMap map(height, width);
  const std::size_t total = static_cast<std::size_t>(height) * width;
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint32_t run : counts) {
    require(pos + run <= total, ErrorCode::kParse, "RLE counts exceed mask size");
    if (value) {
      for (std::size_t k = pos; k < pos + run; ++k) {
        map.set(static_cast<int>(k % height), static_cast<int>(k / height));
      }
    }
    pos += run;
    value ^= 1;
  }
  require(pos == total, ErrorCode::kParse, "RLE counts do not cover the mask");
  return map;
}

std::string rle_encode(const OccupancyMap& map) {
  const auto counts = rle_counts(map);
  std::string out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    long long x = counts[i];
    if (i > 2) x -= static_cast<long long>(counts[i - 2]);
    bool more = true;
    while (more) {
      long long c = x & 0x1f;
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      out.push_back(static_cast<char>(c + 48));
    }
  }
  return out;
}

OccupancyMap rle_decode(const std::string& rle, int height, int width) {
  std::vector<long long> counts;
  std::size_t p = 0;
  while (p < rle.size()) {
    long long x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      require(p < rle.size(), ErrorCode::kParse, "truncated RLE string");
      const long long c = static_cast<long long>(rle[p]) - 48;
      require(c >= 0 && c < 64, ErrorCode::kParse, "invalid RLE character");
      x |= (c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= -1LL << (5 * k);
    }
    if (counts.size() > 2) x += counts[counts.size() - 2];
    require(x >= 0, ErrorCode::kParse, "negative RLE run");
    counts.push_back(x);
  }
  std::vector<std::uint32_t> runs(counts.begin(), counts.end());
  return rle_from_counts(runs, height, width);
}

}  // namespace layercomp
