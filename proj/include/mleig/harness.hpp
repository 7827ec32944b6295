// SPDX-License-Identifier: Apache-2.0
//
// Experiment driver: JSON config parsing, convergence-order estimation,
// CSV reporting and VTK export of eigenfunctions.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mleig/corrector.hpp"

namespace mleig {

// Strict JSON -> RunConfig: every field required, unknown keys rejected.
RunConfig parse_config_json(const std::string& json_text);
RunConfig parse_config_file(const std::string& path);

// order_k = ln(e_{k-1}/e_k) / ln(beta); errors must be positive, beta > 1.
std::vector<double> estimate_orders(const std::vector<double>& errors, double beta);

// Reference eigenvalues (and closed-form eigenfunctions where available) for
// the built-in examples.
ReferenceSet make_reference(const std::string& example, int nev);

struct ReportRow {
  int level = 0;
  double h = 0.0;
  int dofs = 0;       // interior dof count
  int eig_index = 0;  // 1-based
  double lambda = 0.0;
  double eig_err = 0.0;
  std::optional<double> h1_err;
  std::optional<double> order;
  double local_s = 0.0;
  double iface_s = 0.0;
  double aug_s = 0.0;
};

struct ExperimentReport {
  RunConfig config;
  std::vector<ReportRow> rows;
  MultilevelResult run;
};

// Runs the multilevel scheme and writes the CSV report. With
// config.deterministic the timing columns are written as zero so the file is
// byte-identical across runs and worker counts.
ExperimentReport run_experiment(const RunConfig& config, const std::string& csv_path);

void write_csv(const ExperimentReport& report, const std::string& path);

// Pretty-prints a CSV produced by run_experiment, grouped like an
// error/order table.
void print_table(const std::string& csv_path, std::ostream& os);

// Runs the scheme and writes the final-level eigenfunctions as VTK legacy
// ASCII point data on the final mesh.
void export_vtk(const RunConfig& config, const std::string& out_dir);

}  // namespace mleig
