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
#pragma once

#include "tscope/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace tscope {

// AGT1 layout: "AGT1" | dtype u8 | ndim u8 | 2 zero bytes | ndim x u64 dims | row-major payload.
// Everything little-endian. dtype 1 = float32, 2 = float64.
inline constexpr std::uint8_t dtype_f32 = 1;
inline constexpr std::uint8_t dtype_f64 = 2;

struct Tensor {
    std::vector<std::uint64_t> dims;
    std::vector<double> data;

    std::uint64_t element_count() const;
};

std::size_t dtype_size(std::uint8_t dtype_code);
std::uint64_t agt1_file_size(const std::vector<std::uint64_t>& dims, std::uint8_t dtype_code);

void write_tensor(const std::filesystem::path& path, const Tensor& t, std::uint8_t dtype_code = dtype_f64);
void write_tensor(const std::filesystem::path& path, const Matrix& m, std::uint8_t dtype_code = dtype_f64);
void write_vector(const std::filesystem::path& path, const Vector& v, std::uint8_t dtype_code = dtype_f64);

Tensor read_tensor_raw(const std::filesystem::path& path);
// 1-D tensors come back as a column; ranks 3 and 4 fold leading dims into rows.
Matrix read_tensor(const std::filesystem::path& path);
Matrix to_matrix(const Tensor& t);

} // namespace tscope
