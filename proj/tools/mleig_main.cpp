// SPDX-License-Identifier: Apache-2.0
//
// CLI driver. Exit codes: 0 success, 2 config error, 3 solver failure,
// 4 I/O error.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mleig/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"multilevel correction eigensolver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string csv_path;
  std::string out_dir;
  int threads = 0;

  CLI::App* run = app.add_subcommand("run", "run an experiment and write the CSV report");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("-o,--output", out_path, "output CSV path")->required();
  run->add_option("--threads", threads, "override the worker count");

  CLI::App* table = app.add_subcommand("table", "pretty-print a CSV report");
  table->add_option("csv", csv_path, "CSV report produced by run")->required();

  CLI::App* vtk = app.add_subcommand("export-vtk", "write final-level eigenfunctions as VTK");
  vtk->add_option("config", config_path, "JSON config file")->required();
  vtk->add_option("-o,--output", out_dir, "output directory")->required();
  vtk->add_option("--threads", threads, "override the worker count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      mleig::RunConfig config = mleig::parse_config_file(config_path);
      if (threads > 0) config.workers = threads;
      mleig::run_experiment(config, out_path);
      std::cout << "wrote " << out_path << "\n";
    } else if (table->parsed()) {
      mleig::print_table(csv_path, std::cout);
    } else if (vtk->parsed()) {
      mleig::RunConfig config = mleig::parse_config_file(config_path);
      if (threads > 0) config.workers = threads;
      mleig::export_vtk(config, out_dir);
      std::cout << "wrote " << out_dir << "/eigenfunctions.vtk\n";
    }
  } catch (const mleig::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const mleig::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const mleig::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
