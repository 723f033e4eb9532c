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
#include "tscope/kernels.hpp"

#include "kernels_impl.hpp"

#include <atomic>

namespace tscope::kernels {

namespace {

struct Table {
    double (*dot)(const double*, const double*, std::size_t);
    double (*squared_distance)(const double*, const double*, std::size_t);
    double (*sum_squares)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
};

constexpr Table scalar_table{scalar::dot, scalar::squared_distance, scalar::sum_squares, scalar::axpy};
constexpr Table avx2_table{avx2::dot, avx2::squared_distance, avx2::sum_squares, avx2::axpy};

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

std::atomic<const Table*>& current() {
    static std::atomic<const Table*> table{detected_isa() == Isa::avx2 ? &avx2_table : &scalar_table};
    return table;
}

const Table& table() { return *current().load(std::memory_order_relaxed); }

} // namespace

Isa detected_isa() {
    static const Isa isa = cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
    return isa;
}

Isa active_isa() { return &table() == &avx2_table ? Isa::avx2 : Isa::scalar; }

void set_isa(Isa isa) {
    const bool avx2 = isa == Isa::avx2 && detected_isa() == Isa::avx2;
    current().store(avx2 ? &avx2_table : &scalar_table, std::memory_order_relaxed);
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

double dot(const double* a, const double* b, std::size_t n) { return table().dot(a, b, n); }

double squared_distance(const double* a, const double* b, std::size_t n) {
    return table().squared_distance(a, b, n);
}

double sum_squares(const double* a, std::size_t n) { return table().sum_squares(a, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) { table().axpy(alpha, x, y, n); }

void squared_distances(const double* q, const double* rows, std::size_t n_rows, std::size_t dim,
                       double* out) {
    const auto fn = table().squared_distance;
    for (std::size_t i = 0; i < n_rows; ++i) {
        out[i] = fn(q, rows + i * dim, dim);
    }
}

} // namespace tscope::kernels
