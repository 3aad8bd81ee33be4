// Command-line driver: one config file = one task.
//
//   sspop run <config.json> [--out <dir>] [--quiet]
//   sspop sweep <config.json>... [--out <dir>] [--jobs <n>]
//
// Exit codes: 0 success, 1 invalid input, 2 numerical failure.

#include "sspop/config.hpp"
#include "sspop/errors.hpp"
#include "sspop/run.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <future>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;

namespace {

int exit_code(const std::exception_ptr& ep, const std::string& context) {
  try {
    std::rethrow_exception(ep);
  } catch (const sspop::InputError& e) {
    std::cerr << context << ": " << e.what() << '\n';
    return 1;
  } catch (const sspop::NumericalFailure& e) {
    std::cerr << context << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << context << ": " << e.what() << '\n';
    return 1;
  }
}

int run_one(const std::string& config_path, const fs::path& out, bool quiet) {
  try {
    const auto config = sspop::load_config(config_path);
    const auto report = sspop::run(config, out);
    if (config.task != sspop::Task::report) sspop::emit_plot_script(report);
    if (!quiet) std::cout << report.summary_line() << '\n';
    return 0;
  } catch (...) {
    return exit_code(std::current_exception(), config_path);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-phase size-structured population laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run the task described by a config file");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--quiet", quiet, "Suppress the summary line");

  std::vector<std::string> sweep_paths;
  std::string sweep_out = ".";
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "Run several configs concurrently, one output directory each");
  sweep->add_option("configs", sweep_paths, "JSON config files")->required();
  sweep->add_option("--out", sweep_out, "Parent output directory");
  sweep->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_flag("--quiet", quiet, "Suppress summary lines");

  CLI11_PARSE(app, argc, argv);

  if (*run) return run_one(config_path, out_dir, quiet);

  int worst = 0;
  for (std::size_t begin = 0; begin < sweep_paths.size(); begin += jobs) {
    const std::size_t end = std::min(sweep_paths.size(), begin + jobs);
    std::vector<std::future<int>> batch;
    for (std::size_t i = begin; i < end; ++i) {
      const fs::path dir = fs::path(sweep_out) / fs::path(sweep_paths[i]).stem();
      batch.push_back(std::async(std::launch::async, run_one, sweep_paths[i], dir, quiet));
    }
    for (auto& f : batch) worst = std::max(worst, f.get());
  }
  return worst;
}
