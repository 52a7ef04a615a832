// Copyright 2026 The ATENT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ATENT_PARALLEL_HPP_
#define ATENT_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace atent {

// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
// concurrency, capped by $ATENT_THREADS). The first exception thrown by
// any task is rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

std::size_t default_thread_count();

}  // namespace atent

#endif  // ATENT_PARALLEL_HPP_
