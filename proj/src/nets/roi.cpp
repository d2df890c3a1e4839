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
#include "layercomp/nets/roi.hpp"

#include <cmath>

#include "layercomp/error.hpp"

namespace layercomp {
namespace {

struct Tap {
  int64_t lo, hi;
  double frac;  // weight of `hi`
};

// Sample positions along one axis for a box [first, last] and `n` outputs.
std::vector<Tap> axis_taps(int64_t first, int64_t last, int64_t n, int64_t extent) {
  std::vector<Tap> taps(static_cast<std::size_t>(n));
  for (int64_t k = 0; k < n; ++k) {
    const double pos = n == 1 ? 0.5 * static_cast<double>(first + last)
                              : static_cast<double>(first) +
                                    static_cast<double>(k * (last - first)) / static_cast<double>(n - 1);
    const int64_t lo = static_cast<int64_t>(std::floor(pos));
    const int64_t hi = std::min(lo + 1, extent - 1);
    taps[static_cast<std::size_t>(k)] = {lo, hi, pos - static_cast<double>(lo)};
  }
  return taps;
}

template <typename Fn>
void for_each_sample(const torch::Tensor& boxes, int64_t batch, int64_t height, int64_t width,
                     int64_t out_h, int64_t out_w, Fn&& fn) {
  auto b_acc = boxes.accessor<int64_t, 2>();
  for (int64_t b = 0; b < batch; ++b) {
    const auto ys = axis_taps(b_acc[b][0], b_acc[b][1], out_h, height);
    const auto xs = axis_taps(b_acc[b][2], b_acc[b][3], out_w, width);
    for (int64_t i = 0; i < out_h; ++i) {
      for (int64_t j = 0; j < out_w; ++j) {
        fn(b, i, j, ys[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)]);
      }
    }
  }
}

template <typename T>
void roi_forward(const torch::Tensor& in, torch::Tensor& out, const torch::Tensor& boxes) {
  const int64_t batch = in.size(0), channels = in.size(1);
  auto src = in.accessor<T, 4>();
  auto dst = out.accessor<T, 4>();
  for_each_sample(boxes, batch, in.size(2), in.size(3), out.size(2), out.size(3),
                  [&](int64_t b, int64_t i, int64_t j, const Tap& y, const Tap& x) {
                    const double w00 = (1 - y.frac) * (1 - x.frac), w01 = (1 - y.frac) * x.frac;
                    const double w10 = y.frac * (1 - x.frac), w11 = y.frac * x.frac;
                    for (int64_t c = 0; c < channels; ++c) {
                      dst[b][c][i][j] = static_cast<T>(
                          w00 * src[b][c][y.lo][x.lo] + w01 * src[b][c][y.lo][x.hi] +
                          w10 * src[b][c][y.hi][x.lo] + w11 * src[b][c][y.hi][x.hi]);
                    }
                  });
}

template <typename T>
void roi_backward(const torch::Tensor& grad_out, torch::Tensor& grad_in, const torch::Tensor& boxes) {
  const int64_t batch = grad_out.size(0), channels = grad_out.size(1);
  auto g = grad_out.accessor<T, 4>();
  auto gi = grad_in.accessor<T, 4>();
  for_each_sample(boxes, batch, grad_in.size(2), grad_in.size(3), grad_out.size(2), grad_out.size(3),
                  [&](int64_t b, int64_t i, int64_t j, const Tap& y, const Tap& x) {
                    const double w00 = (1 - y.frac) * (1 - x.frac), w01 = (1 - y.frac) * x.frac;
                    const double w10 = y.frac * (1 - x.frac), w11 = y.frac * x.frac;
                    for (int64_t c = 0; c < channels; ++c) {
                      const double v = g[b][c][i][j];
                      gi[b][c][y.lo][x.lo] += static_cast<T>(w00 * v);
                      gi[b][c][y.lo][x.hi] += static_cast<T>(w01 * v);
                      gi[b][c][y.hi][x.lo] += static_cast<T>(w10 * v);
                      gi[b][c][y.hi][x.hi] += static_cast<T>(w11 * v);
                    }
                  });
}

class BilinearRoiFunction : public torch::autograd::Function<BilinearRoiFunction> {
 public:
  static torch::Tensor forward(torch::autograd::AutogradContext* ctx, torch::Tensor input,
                               torch::Tensor boxes, int64_t out_h, int64_t out_w) {
    const auto in = input.contiguous();
    auto out = torch::empty({in.size(0), in.size(1), out_h, out_w}, in.options());
    if (in.scalar_type() == torch::kFloat64) {
      roi_forward<double>(in, out, boxes);
    } else {
      roi_forward<float>(in, out, boxes);
    }
    ctx->save_for_backward({boxes});
    ctx->saved_data["height"] = in.size(2);
    ctx->saved_data["width"] = in.size(3);
    return out;
  }

  static torch::autograd::variable_list backward(torch::autograd::AutogradContext* ctx,
                                                 torch::autograd::variable_list grads) {
    const auto boxes = ctx->get_saved_variables()[0];
    const int64_t height = ctx->saved_data["height"].toInt();
    const int64_t width = ctx->saved_data["width"].toInt();
    const auto grad_out = grads[0].contiguous();
    auto grad_in = torch::zeros({grad_out.size(0), grad_out.size(1), height, width}, grad_out.options());
    if (grad_out.scalar_type() == torch::kFloat64) {
      roi_backward<double>(grad_out, grad_in, boxes);
    } else {
      roi_backward<float>(grad_out, grad_in, boxes);
    }
    return {grad_in, torch::Tensor(), torch::Tensor(), torch::Tensor()};
  }
};

}  // namespace

torch::Tensor bilinear_roi(const torch::Tensor& input, const std::vector<BBox>& boxes,
                           int64_t out_h, int64_t out_w) {
  require(input.dim() == 4, ErrorCode::kInvalidInput, "bilinear_roi expects (B, C, H, W)");
  require(input.scalar_type() == torch::kFloat32 || input.scalar_type() == torch::kFloat64,
          ErrorCode::kInvalidInput, "bilinear_roi expects float32 or float64 input");
  require(static_cast<int64_t>(boxes.size()) == input.size(0), ErrorCode::kInvalidInput,
          "one box per batch item is required");
  require(out_h >= 1 && out_w >= 1, ErrorCode::kInvalidInput, "output size must be positive");
  auto box_tensor = torch::empty({static_cast<int64_t>(boxes.size()), 4}, torch::kInt64);
  auto acc = box_tensor.accessor<int64_t, 2>();
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    require(boxes[b].valid_for(static_cast<int>(input.size(2)), static_cast<int>(input.size(3))),
            ErrorCode::kInvalidInput, "roi box outside the input frame");
    acc[b][0] = boxes[b].row_min;
    acc[b][1] = boxes[b].row_max;
    acc[b][2] = boxes[b].col_min;
    acc[b][3] = boxes[b].col_max;
  }
  return BilinearRoiFunction::apply(input, box_tensor, out_h, out_w);
}

}  // namespace layercomp
