#pragma once

// Command-line front end: `simulate`, `estimate` and `classify`.
//
// Exit status: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "permchol/simulation.hpp"

namespace permchol::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 2,
  kData = 3,
  kNumerical = 4,
};

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

/// `results` and `failures` sections of a simulate report.
nlohmann::ordered_json experiment_results_json(const ExperimentReport& report);
nlohmann::ordered_json experiment_failures_json(const ExperimentReport& report);

/// Off-diagonal entries that are exactly nonzero.
long long nonzero_offdiag_count(const Matrix& omega);

nlohmann::ordered_json matrix_json(const Matrix& A);
Matrix matrix_from_json(const nlohmann::ordered_json& rows);

/// Fixed-width summary table: one row per method, "mean (se)" per loss.
void print_experiment_table(const ExperimentReport& report, std::ostream& out);

}  // namespace permchol::cli
