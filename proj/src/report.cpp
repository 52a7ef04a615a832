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

#include "atent/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "atent/checkpoint.hpp"
#include "atent/io.hpp"

namespace atent {

namespace {

constexpr const char* kClassColors[] = {"#9ecae1", "#fdae6b", "#a1d99b",
                                        "#bcbddc", "#fc9272"};
constexpr const char* kPointColors[] = {"#08519c", "#a63603", "#006d2c",
                                        "#54278f", "#a50f15"};

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("report line " + std::to_string(line) +
                      ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string report_csv(const EvalReport& report) {
  std::string out(kReportHeader);
  out += "\n";
  for (const ReportRow& r : report.rows) {
    for (const std::string* s : {&r.defense, &r.attack, &r.norm}) {
      if (s->find_first_of(",\n\"") != std::string::npos) {
        throw FormatError("report field contains a separator: " + *s);
      }
    }
    out += r.defense + "," + r.attack + "," + r.norm + "," +
           format_double(r.epsilon) + "," + format_double(r.natural_acc) +
           "," + format_double(r.robust_acc) + "," + std::to_string(r.seed) +
           "," + format_double(r.wall_ms) + "\n";
  }
  return out;
}

EvalReport parse_report_csv(std::string_view text) {
  std::vector<std::string> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines[0] != kReportHeader) {
    throw FormatError("report header must be exactly '" +
                      std::string(kReportHeader) + "'");
  }
  EvalReport report;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 8) {
      throw FormatError("report line " + std::to_string(i + 1) +
                        ": expected 8 fields");
    }
    ReportRow r;
    r.defense = f[0];
    r.attack = f[1];
    r.norm = f[2];
    r.epsilon = parse_number(f[3], i + 1);
    r.natural_acc = parse_number(f[4], i + 1);
    r.robust_acc = parse_number(f[5], i + 1);
    std::uint64_t seed = 0;
    auto res = std::from_chars(f[6].data(), f[6].data() + f[6].size(), seed);
    if (res.ec != std::errc() || res.ptr != f[6].data() + f[6].size()) {
      throw FormatError("report line " + std::to_string(i + 1) +
                        ": bad seed");
    }
    r.seed = seed;
    r.wall_ms = parse_number(f[7], i + 1);
    report.rows.push_back(std::move(r));
  }
  return report;
}

std::string report_markdown(const EvalReport& report) {
  std::ostringstream out;
  out << "| defense | attack | norm | epsilon | natural | robust |\n"
      << "|---|---|---|---|---|---|\n";
  out.setf(std::ios::fixed);
  out.precision(4);
  for (const ReportRow& r : report.rows) {
    out << "| " << r.defense << " | " << r.attack << " | " << r.norm << " | "
        << format_double(r.epsilon) << " | " << r.natural_acc << " | "
        << r.robust_acc << " |\n";
  }
  return out.str();
}

std::string metrics_jsonl(std::span<const EpochMetrics> history) {
  std::string out;
  for (const EpochMetrics& m : history) out += to_json(m).dump() + "\n";
  return out;
}

std::vector<std::size_t> decision_grid(const ModelParams& params, double lo0,
                                       double hi0, double lo1, double hi1,
                                       std::size_t grid) {
  if (grid < 1) throw Error("decision_grid needs grid >= 1");
  std::vector<double> pts(grid * grid * 2);
  for (std::size_t i = 0; i < grid; ++i) {
    for (std::size_t j = 0; j < grid; ++j) {
      const std::size_t k = (i * grid + j) * 2;
      pts[k] = lo0 + (static_cast<double>(i) + 0.5) * (hi0 - lo0) /
                         static_cast<double>(grid);
      pts[k + 1] = lo1 + (static_cast<double>(j) + 0.5) * (hi1 - lo1) /
                             static_cast<double>(grid);
    }
  }
  return predict(params, Tensor({grid * grid, 2}, std::move(pts)));
}

std::string decision_svg(const ModelParams& params, const Dataset& ds,
                         std::size_t grid) {
  if (ds.sample_shape() != Shape{2}) {
    throw ShapeError("decision_svg needs 2D inputs");
  }
  constexpr double kSize = 400.0;
  const double cell = kSize / static_cast<double>(grid);
  const auto pred = decision_grid(params, 0.0, 1.0, 0.0, 1.0, grid);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize
      << "\" height=\"" << kSize << "\" viewBox=\"0 0 " << kSize << " "
      << kSize << "\">\n";
  // Row-wise run-length encoding keeps 200x200 grids small.
  for (std::size_t i = 0; i < grid; ++i) {
    for (std::size_t j = 0; j < grid;) {
      std::size_t end = j;
      const std::size_t c = pred[i * grid + j];
      while (end < grid && pred[i * grid + end] == c) ++end;
      out << "<rect x=\"" << static_cast<double>(i) * cell << "\" y=\""
          << kSize - static_cast<double>(end) * cell << "\" width=\"" << cell
          << "\" height=\"" << static_cast<double>(end - j) * cell
          << "\" fill=\"" << kClassColors[c % 5] << "\"/>\n";
      j = end;
    }
  }
  const auto labels = label_indices(ds.labels);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << "<circle cx=\"" << ds.inputs[2 * i] * kSize << "\" cy=\""
        << kSize - ds.inputs[2 * i + 1] * kSize << "\" r=\"2\" fill=\""
        << kPointColors[labels[i] % 5] << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string sampler_histogram_svg(std::span<const double> samples,
                                  const GridDensity& ref, std::size_t bins) {
  if (ref.dims() != 1) throw ShapeError("histogram needs a 1D grid density");
  if (bins < 1) throw Error("histogram needs bins >= 1");
  const double lo = ref.lo[0], hi = ref.hi[0];
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<double> hist(bins, 0.0);
  for (double s : samples) {
    if (s < lo || s >= hi) continue;
    hist[std::min(bins - 1, static_cast<std::size_t>((s - lo) / width))] += 1;
  }
  const double n = static_cast<double>(samples.size());
  for (double& h : hist) h /= n * width;  // density units
  const double ref_cell = (hi - lo) / static_cast<double>(ref.resolution);
  double peak = *std::max_element(hist.begin(), hist.end());
  for (double p : ref.probs) peak = std::max(peak, p / ref_cell);
  if (peak <= 0.0) peak = 1.0;

  constexpr double kW = 480.0, kH = 300.0;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
      << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH
      << "\">\n";
  const double bar = kW / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double h = hist[b] / peak * (kH - 10.0);
    out << "<rect x=\"" << static_cast<double>(b) * bar << "\" y=\""
        << kH - h << "\" width=\"" << bar << "\" height=\"" << h
        << "\" fill=\"#9ecae1\" stroke=\"#3182bd\" stroke-width=\"0.5\"/>\n";
  }
  out << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" "
         "points=\"";
  for (std::size_t c = 0; c < ref.resolution; ++c) {
    const double x = (static_cast<double>(c) + 0.5) /
                     static_cast<double>(ref.resolution) * kW;
    const double y = kH - ref.probs[c] / ref_cell / peak * (kH - 10.0);
    out << x << "," << y << " ";
  }
  out << "\"/>\n</svg>\n";
  return out.str();
}

void emit_report(const EvalReport& report, const std::filesystem::path& dir,
                 const ModelParams* params, const Dataset* plot_data) {
  std::filesystem::create_directories(dir);
  atomic_write(dir / "report.csv", report_csv(report));
  if (params != nullptr && plot_data != nullptr &&
      plot_data->sample_shape() == Shape{2}) {
    atomic_write(dir / "decision.svg", decision_svg(*params, *plot_data));
  }
}

}  // namespace atent
