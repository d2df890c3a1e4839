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

namespace layercomp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kEmptyLayout: return "empty-layout";
    case ErrorCode::kEmptyMask: return "empty-mask";
    case ErrorCode::kOutOfFrame: return "out-of-frame";
    case ErrorCode::kContract: return "contract";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kCheckpoint: return "checkpoint";
    case ErrorCode::kVersion: return "version";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kNumerical: return "numerical";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kConflict: return "conflict";
  }
  return "unknown";
}

}  // namespace layercomp
