// Copyright 2026 The ecgmv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "cli/commands.hpp"
#include "ecgmv/errors.hpp"
#include "ecgmv/eval/metrics.hpp"

namespace ecgmv::cli {

namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::vector<std::pair<std::size_t, double>> parse_search_report(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("rank,members,", 0) != 0) {
    throw ParseError("not an ensemble-search report (header must start with 'rank,members,')");
  }
  std::vector<std::pair<std::size_t, double>> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (cells.size() != 7) throw ParseError("report row " + std::to_string(row) + ": expected 7 columns");
    const auto& members = cells[1];
    const std::size_t size = 1 + static_cast<std::size_t>(std::count(members.begin(), members.end(), '+'));
    try {
      std::size_t used = 0;
      const double f1 = std::stod(cells[6], &used);
      if (used != cells[6].size()) throw std::invalid_argument(cells[6]);
      out.emplace_back(size, f1);
    } catch (const std::exception&) {
      throw ParseError("report row " + std::to_string(row) + ": F1 is not a number");
    }
  }
  return out;
}

std::string render_size_plot(const std::vector<std::pair<std::size_t, double>>& results) {
  if (results.empty()) throw ContractError("plot: no ensemble results");
  std::map<std::size_t, std::pair<double, double>> range;
  for (const auto& [size, f1] : results) {
    auto [it, fresh] = range.try_emplace(size, f1, f1);
    if (!fresh) {
      it->second.first = std::min(it->second.first, f1);
      it->second.second = std::max(it->second.second, f1);
    }
  }
  const auto stats = eval::size_stats(results);

  double lo = 1.0, hi = 0.0;
  for (const auto& [size, mm] : range) {
    lo = std::min(lo, mm.first);
    hi = std::max(hi, mm.second);
  }
  const double pad = std::max(0.01, 0.05 * (hi - lo));
  lo = std::max(0.0, lo - pad);
  hi = std::min(1.0, hi + pad);
  if (hi <= lo) hi = lo + 0.01;

  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  const double slot = plot_w / static_cast<double>(stats.size());
  auto y = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << "F1 by ensemble size</text>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
    << kTop + plot_h << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = lo + (hi - lo) * t / 5.0;
    s << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << num(y(v)) << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << num(y(v)) << "\" stroke=\"#dddddd\"/>\n";
    s << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(y(v) + 4) << "\" text-anchor=\"end\">" << label(v)
      << "</text>\n";
  }
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& st = stats[i];
    const auto& mm = range.at(st.size);
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double half = std::min(18.0, slot * 0.3);
    s << "<g>\n";
    s << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y(mm.second)) << "\" x2=\"" << num(cx) << "\" y2=\""
      << num(y(mm.first)) << "\" stroke=\"#444444\"/>\n";
    s << "<rect x=\"" << num(cx - half) << "\" y=\"" << num(y(st.q3)) << "\" width=\"" << num(2 * half)
      << "\" height=\"" << num(std::max(0.5, y(st.q1) - y(st.q3))) << "\" fill=\"#9ecae1\" stroke=\"#08519c\"/>\n";
    s << "<line x1=\"" << num(cx - half) << "\" y1=\"" << num(y(st.median)) << "\" x2=\"" << num(cx + half)
      << "\" y2=\"" << num(y(st.median)) << "\" stroke=\"#08306b\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << num(cx) << "\" y=\"" << num(kTop + plot_h + 18) << "\" text-anchor=\"middle\">" << st.size
      << "</text>\n";
    s << "<title>size " << st.size << ": n=" << st.count << " median=" << label(st.median) << " IQR="
      << label(st.iqr) << " max=" << label(st.max) << "</title>\n";
    s << "</g>\n";
  }
  s << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
    << "Number of models</text>\n";
  s << "<text x=\"18\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << kTop + plot_h / 2 << ")\">Macro F1</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace ecgmv::cli
