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
#include <functional>

namespace tscope {

// Worker count for batch-parallel loops; 0 or 1 runs inline. Results never depend on it.
void set_worker_threads(unsigned n);
unsigned worker_threads();

// Runs fn(i) for i in [0, n) on the configured workers; each index is executed exactly once.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace tscope
