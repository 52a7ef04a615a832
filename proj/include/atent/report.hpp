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

#ifndef ATENT_REPORT_HPP_
#define ATENT_REPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "atent/data.hpp"
#include "atent/defenses.hpp"
#include "atent/models.hpp"
#include "atent/oracle.hpp"

namespace atent {

inline constexpr std::string_view kReportHeader =
    "defense,attack,norm,epsilon,natural_acc,robust_acc,seed,wall_ms";

struct ReportRow {
  std::string defense;
  std::string attack;
  std::string norm;
  double epsilon = 0.0;
  double natural_acc = 0.0;
  double robust_acc = 0.0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;

  bool operator==(const ReportRow&) const = default;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  bool operator==(const EvalReport&) const = default;
};

// Header line then one line per row; numbers in shortest round-trip form.
std::string report_csv(const EvalReport& report);
// Throws FormatError on a wrong header or malformed row.
EvalReport parse_report_csv(std::string_view text);
std::string report_markdown(const EvalReport& report);

// One JSON object per line: epoch, train_loss, nat_acc, rob_acc, lr,
// wall_ms.
std::string metrics_jsonl(std::span<const EpochMetrics> history);

// Predicted class on a grid x grid lattice of cell centres over
// [lo0, hi0] x [lo1, hi1], row-major with axis 1 fastest.
std::vector<std::size_t> decision_grid(const ModelParams& params, double lo0,
                                       double hi0, double lo1, double hi1,
                                       std::size_t grid);

// Decision regions on [0,1]^2 plus the data points, for 2D datasets.
std::string decision_svg(const ModelParams& params, const Dataset& ds,
                         std::size_t grid = 200);

// Histogram of 1D chain samples against the grid density.
std::string sampler_histogram_svg(std::span<const double> samples,
                                  const GridDensity& ref,
                                  std::size_t bins = 60);

// Writes report.csv (atomically) and, when `plot_data` is 2D, decision.svg
// into `dir`.
void emit_report(const EvalReport& report, const std::filesystem::path& dir,
                 const ModelParams* params = nullptr,
                 const Dataset* plot_data = nullptr);

}  // namespace atent

#endif  // ATENT_REPORT_HPP_
