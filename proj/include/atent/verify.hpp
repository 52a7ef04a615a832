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

// Self-checks behind `atent verify`: gradients against finite
// differences, sampler moments against grid densities, and the
// smoothness/dissipativity bounds. Negative controls are checks that
// pass when a deliberately wrong input is rejected.

#ifndef ATENT_VERIFY_HPP_
#define ATENT_VERIFY_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace atent {

enum class VerifySuite { kGradients, kSampler, kLemma1, kAll };

std::optional<VerifySuite> parse_suite(std::string_view name);

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<CheckResult> verify_gradients(std::uint64_t seed = 0);
std::vector<CheckResult> verify_sampler(std::uint64_t seed = 0);
std::vector<CheckResult> verify_lemma1(std::uint64_t seed = 0);

std::vector<CheckResult> run_verify(VerifySuite suite, std::uint64_t seed = 0);

}  // namespace atent

#endif  // ATENT_VERIFY_HPP_
