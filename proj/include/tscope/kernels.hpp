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

#include <cstddef>

namespace tscope::kernels {

enum class Isa { scalar, avx2 };

// Best instruction set supported by the running CPU.
Isa detected_isa();
// Instruction set currently routed to; defaults to detected_isa().
Isa active_isa();
// Forces a specific path (tests use this to compare variants). Requesting avx2 on a CPU
// without it falls back to scalar.
void set_isa(Isa isa);
const char* isa_name(Isa isa);

double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
// out[i] = ||q - rows[i]||^2 for n_rows contiguous rows of length dim.
void squared_distances(const double* q, const double* rows, std::size_t n_rows, std::size_t dim,
                       double* out);

} // namespace tscope::kernels
