/*
 * Copyright 2026 The tangentscope Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "tscope/types.hpp"

namespace tscope {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::bad_magic: return "bad_magic";
    case ErrorCode::bad_dtype: return "bad_dtype";
    case ErrorCode::bad_ndim: return "bad_ndim";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::trailing_bytes: return "trailing_bytes";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::manifest_invalid: return "manifest_invalid";
    case ErrorCode::context_overlap: return "context_overlap";
    case ErrorCode::missing_tensor: return "missing_tensor";
    case ErrorCode::nonpositive_frequency: return "nonpositive_frequency";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::complement_too_small: return "complement_too_small";
    case ErrorCode::duplicate_points: return "duplicate_points";
    case ErrorCode::too_many_points: return "too_many_points";
    case ErrorCode::chart_out_of_range: return "chart_out_of_range";
    case ErrorCode::non_integrable: return "non_integrable";
    case ErrorCode::insufficient_samples: return "insufficient_samples";
    case ErrorCode::unsupported: return "unsupported";
    }
    return "unknown";
}

} // namespace tscope
