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

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cli/config.hpp"

namespace ecgmv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

enum class Verb { kSynth, kTrain, kPredict, kEnsembleSearch, kEval, kGradcheck, kPlot };

std::string verb_name(Verb verb);

struct Command {
  Verb verb = Verb::kGradcheck;
  std::string config_path;
  RunConfig config;
};

struct ParseOutcome {
  std::optional<Command> command;  // empty when the process should exit now
  int exit_code = kExitOk;
  std::string message;  // usage text or error
};

/// Flags override values read from --config. Repeated scalar flags keep the
/// last value. --threads falls back to ECGMV_THREADS.
ParseOutcome parse_args(int argc, const char* const* argv);

/// Runs the verb. Progress and reports go to `out`, diagnostics to `err`.
int execute(const Command& cmd, std::ostream& out, std::ostream& err);

/// F1 against ensemble size as an SVG box plot (quartile box, median line,
/// min-max whiskers, one box per size).
std::string render_size_plot(const std::vector<std::pair<std::size_t, double>>& results);

/// (ensemble size, F1) pairs from an ensemble-search report.
std::vector<std::pair<std::size_t, double>> parse_search_report(const std::string& csv);

}  // namespace ecgmv::cli
