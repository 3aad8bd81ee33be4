#pragma once

#include "sspop/config.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace sspop {

struct RunReport {
  Task task = Task::simulate;
  double wall_seconds = 0.0;
  /// Every file written, in write order; all exist and are non-empty.
  std::vector<std::filesystem::path> files;
  /// Headline numbers and verdicts, in the order they appear in report.csv.
  std::vector<std::pair<std::string, std::string>> headline;

  /// Value of a headline key, or an empty string.
  std::string value(const std::string& key) const;
  std::string summary_line() const;
};

/// Executes the configured task and writes its CSV outputs into out_dir:
/// observables.csv, profile_<t>.csv, spectral.csv, eigenvector.csv and
/// report.csv depending on the task. On failure every file written so far is
/// removed and the error is rethrown.
RunReport run(const RunConfig& config, const std::filesystem::path& out_dir);

/// Writes plot.gp (gnuplot) next to the report's CSVs and returns its path.
/// Throws ConfigError when the report has no plottable CSV or a CSV is missing.
std::filesystem::path emit_plot_script(const RunReport& report);

}  // namespace sspop
