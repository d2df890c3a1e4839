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
#include "layercomp/error.hpp"
#include "layercomp/eval.hpp"

namespace layercomp {

nlohmann::json IouResult::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& v : per_class) per.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  return {{"per_class", per}, {"mean", mean}};
}

IouResult mean_iou(const std::vector<std::vector<std::int32_t>>& predicted,
                   const std::vector<SemanticLayout>& ground_truth) {
  require(predicted.size() == ground_truth.size(), ErrorCode::kInvalidInput,
          "prediction and ground-truth counts differ");
  require(!ground_truth.empty(), ErrorCode::kInvalidInput, "no images to score");
  const int n_classes = ground_truth.front().n_classes();
  std::vector<std::uint64_t> inter(n_classes + 1, 0), uni(n_classes + 1, 0), gt_count(n_classes + 1, 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto& layout = ground_truth[i];
    require(layout.n_classes() == n_classes, ErrorCode::kInvalidInput, "layouts disagree on class count");
    const auto gt = label_map(layout);
    const auto& pred = predicted[i];
    require(pred.size() == gt.size(), ErrorCode::kInvalidInput, "prediction has the wrong size");
    for (std::size_t p = 0; p < gt.size(); ++p) {
      const int g = gt[p], q = pred[p];
      require(q >= 0 && q <= n_classes, ErrorCode::kInvalidInput, "predicted label out of range");
      ++gt_count[g];
      if (g == q) {
        ++inter[g];
        ++uni[g];
      } else {
        ++uni[g];
        ++uni[q];
      }
    }
  }
  IouResult result;
  int present = 0;
  double sum = 0.0;
  for (int c = 1; c <= n_classes; ++c) {
    if (gt_count[c] == 0) {
      result.per_class.emplace_back(std::nullopt);
      continue;
    }
    const double iou = static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
    result.per_class.emplace_back(iou);
    sum += iou;
    ++present;
  }
  require(present > 0, ErrorCode::kInvalidInput, "ground truth has no foreground; mean IoU is undefined");
  result.mean = sum / present;
  return result;
}

}  // namespace layercomp
