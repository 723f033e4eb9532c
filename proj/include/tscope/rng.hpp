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
#include <random>

namespace tscope {

// SplitMix64 finalizer; used to derive independent per-sample and per-batch streams.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

    double uniform() { return unit_(engine_); }
    double normal() { return normal_(engine_); }
    std::uint64_t next() { return engine_(); }
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    Matrix gaussian(Index rows, Index cols);
    // Unit vector uniform on the sphere S^{dim-1}.
    Vector unit_vector(Index dim);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace tscope
