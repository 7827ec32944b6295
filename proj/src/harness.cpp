// SPDX-License-Identifier: Apache-2.0

#include "mleig/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace mleig {

namespace {

using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

double require_number(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number())
    throw ConfigError("config field \"" + key + "\" must be a number");
  return j[key].get<double>();
}

int require_int(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number_integer())
    throw ConfigError("config field \"" + key + "\" must be an integer");
  return j[key].get<int>();
}

bool require_bool(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_boolean())
    throw ConfigError("config field \"" + key + "\" must be a boolean");
  return j[key].get<bool>();
}

std::string require_string(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_string())
    throw ConfigError("config field \"" + key + "\" must be a string");
  return j[key].get<std::string>();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_config_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const std::vector<std::string> keys = {"domain",  "H",      "delta",   "m",
                                                "n_levels", "degree", "nev",     "example",
                                                "cg_tol",   "workers", "deterministic"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError("unknown config field \"" + key + "\"");
  }
  for (const auto& key : keys) {
    if (!j.contains(key)) throw ConfigError("missing config field \"" + key + "\"");
  }
  if (!j["domain"].is_object()) throw ConfigError("config field \"domain\" must be an object");
  static const std::vector<std::string> dkeys = {"x_min", "x_max", "y_min", "y_max"};
  for (const auto& [key, value] : j["domain"].items()) {
    (void)value;
    if (std::find(dkeys.begin(), dkeys.end(), key) == dkeys.end())
      throw ConfigError("unknown domain field \"" + key + "\"");
  }

  RunConfig c;
  c.domain.x_min = require_number(j["domain"], "x_min");
  c.domain.x_max = require_number(j["domain"], "x_max");
  c.domain.y_min = require_number(j["domain"], "y_min");
  c.domain.y_max = require_number(j["domain"], "y_max");
  c.H = require_number(j, "H");
  c.delta = require_number(j, "delta");
  c.m = require_int(j, "m");
  c.n_levels = require_int(j, "n_levels");
  c.degree = require_int(j, "degree");
  c.nev = require_int(j, "nev");
  c.example = require_string(j, "example");
  c.cg_tol = require_number(j, "cg_tol");
  c.workers = require_int(j, "workers");
  c.deterministic = require_bool(j, "deterministic");
  validate_config(c);
  return c;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_json(ss.str());
}

std::vector<double> estimate_orders(const std::vector<double>& errors, double beta) {
  if (!(beta > 1.0)) throw ConfigError("estimate_orders: beta must exceed 1");
  for (const double e : errors) {
    if (!(e > 0.0)) throw ConfigError("estimate_orders: errors must be positive");
  }
  std::vector<double> orders;
  for (std::size_t k = 1; k < errors.size(); ++k)
    orders.push_back(std::log(errors[k - 1] / errors[k]) / std::log(beta));
  return orders;
}

ReferenceSet make_reference(const std::string& example, int nev) {
  ReferenceSet refs;
  if (example == "laplace") {
    // Dirichlet eigenpairs of the Laplacian on (-1,1)^2 by separation of
    // variables: lambda = (pi^2/4)(m^2+n^2), u = sin(m pi (x+1)/2) sin(...).
    struct Mode {
      double lambda;
      int mx, my;
    };
    std::vector<Mode> modes;
    const int span = std::max(8, static_cast<int>(std::ceil(std::sqrt(2.0 * nev))) + 4);
    for (int mx = 1; mx <= span; ++mx)
      for (int my = 1; my <= span; ++my)
        modes.push_back({kPi * kPi / 4.0 * (mx * mx + my * my), mx, my});
    std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
      if (a.lambda != b.lambda) return a.lambda < b.lambda;
      if (a.mx != b.mx) return a.mx < b.mx;
      return a.my < b.my;
    });
    if (nev > static_cast<int>(modes.size()))
      throw ConfigError("nev too large for the reference table");

    for (int i = 0; i < nev; ++i) {
      refs.lambdas.push_back(modes[i].lambda);
      // Closed-form eigenfunctions only where the eigenvalue is simple; the
      // members of a multiple eigenvalue have no canonical representative.
      const double lam = modes[i].lambda;
      int mult = 0;
      for (const Mode& mode : modes)
        if (std::abs(mode.lambda - lam) <= 1e-9 * lam) ++mult;
      if (mult == 1) {
        const int mx = modes[i].mx;
        const int my = modes[i].my;
        ExactFunction fn;
        fn.value = [mx, my](double x, double y) {
          return std::sin(mx * kPi * (x + 1.0) / 2.0) * std::sin(my * kPi * (y + 1.0) / 2.0);
        };
        fn.gradient = [mx, my](double x, double y) {
          const double sx = std::sin(mx * kPi * (x + 1.0) / 2.0);
          const double cx = std::cos(mx * kPi * (x + 1.0) / 2.0);
          const double sy = std::sin(my * kPi * (y + 1.0) / 2.0);
          const double cy = std::cos(my * kPi * (y + 1.0) / 2.0);
          return std::array<double, 2>{mx * kPi / 2.0 * cx * sy, my * kPi / 2.0 * sx * cy};
        };
        refs.eigenfunctions.emplace(i, std::move(fn));
      }
    }
    return refs;
  }
  if (example == "variable") {
    const std::vector<double> table = {17.982932, 33.384973, 38.381968,
                                       47.670103, 66.874113, 68.323961};
    if (nev > static_cast<int>(table.size()))
      throw ConfigError("reference eigenvalues for the variable example cover 6 modes only");
    refs.lambdas.assign(table.begin(), table.begin() + nev);
    return refs;
  }
  throw ConfigError("no reference data for example \"" + example + "\"");
}

ExperimentReport run_experiment(const RunConfig& config, const std::string& csv_path) {
  validate_config(config);
  const ReferenceSet refs = make_reference(config.example, config.nev);

  Hierarchy hierarchy(config);
  ExperimentReport report;
  report.config = config;
  report.run = multilevel_correction(hierarchy, &refs);

  const auto& levels = report.run.levels;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const LevelTrace& trace = levels[li];
    for (int i = 0; i < config.nev; ++i) {
      ReportRow row;
      row.level = trace.level;
      row.h = trace.h;
      row.dofs = trace.interior_dofs;
      row.eig_index = i + 1;
      row.lambda = trace.lambdas[i];
      row.eig_err = trace.eig_errors[i];
      if (!std::isnan(trace.h1_errors[i])) row.h1_err = trace.h1_errors[i];
      if (li > 0) {
        const double prev = levels[li - 1].eig_errors[i];
        const double cur = trace.eig_errors[i];
        if (prev > 0.0 && cur > 0.0)
          row.order = std::log(prev / cur) / std::log(2.0);
      }
      if (!config.deterministic) {
        row.local_s = trace.timings.local_seconds;
        row.iface_s = trace.timings.iface_seconds;
        row.aug_s = trace.timings.aug_seconds;
      }
      report.rows.push_back(row);
    }
  }
  write_csv(report, csv_path);
  return report;
}

void write_csv(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file " + path);
  out << "level,h,dofs,eig_index,lambda,eig_err,h1_err,order,local_s,iface_s,aug_s\n";
  for (const ReportRow& r : report.rows) {
    out << r.level << ',' << format_double(r.h) << ',' << r.dofs << ',' << r.eig_index << ','
        << format_double(r.lambda) << ',' << format_double(r.eig_err) << ',';
    if (r.h1_err) out << format_double(*r.h1_err);
    out << ',';
    if (r.order) out << format_double(*r.order);
    out << ',' << format_double(r.local_s) << ',' << format_double(r.iface_s) << ','
        << format_double(r.aug_s) << '\n';
  }
  if (!out) throw IoError("failed while writing " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

}  // namespace

void print_table(const std::string& csv_path, std::ostream& os) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open CSV file " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV file " + csv_path);
  if (split_csv_line(line).size() != 11)
    throw ConfigError("unexpected CSV header in " + csv_path);

  struct Row {
    int level, dofs, eig_index;
    double h, lambda, eig_err;
    std::string h1_err, order;
  };
  std::vector<Row> rows;
  int max_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 11) throw ConfigError("malformed CSV row in " + csv_path);
    Row r;
    r.level = std::stoi(f[0]);
    r.h = std::stod(f[1]);
    r.dofs = std::stoi(f[2]);
    r.eig_index = std::stoi(f[3]);
    r.lambda = std::stod(f[4]);
    r.eig_err = std::stod(f[5]);
    r.h1_err = f[6];
    r.order = f[7];
    rows.push_back(r);
    max_index = std::max(max_index, r.eig_index);
  }

  for (int i = 1; i <= max_index; ++i) {
    os << "eigenvalue " << i << ":\n";
    os << "  level        h     dofs        lambda       eig_err     order    h1_err\n";
    for (const Row& r : rows) {
      if (r.eig_index != i) continue;
      os << "  " << std::setw(5) << r.level << ' ' << std::setw(8) << std::setprecision(6)
         << r.h << ' ' << std::setw(8) << r.dofs << ' ' << std::setw(13)
         << std::setprecision(10) << r.lambda << ' ' << std::setw(13) << std::setprecision(6)
         << r.eig_err << ' ' << std::setw(9) << (r.order.empty() ? "-" : r.order.substr(0, 7))
         << ' ' << std::setw(9) << (r.h1_err.empty() ? "-" : r.h1_err.substr(0, 9)) << '\n';
    }
  }
}

void export_vtk(const RunConfig& config, const std::string& out_dir) {
  validate_config(config);
  Hierarchy hierarchy(config);
  const MultilevelResult result = multilevel_correction(hierarchy, nullptr);
  const LevelTrace& last = result.levels.back();
  const LevelSystem& sys = hierarchy.level(last.level);
  const Mesh& mesh = *sys.mesh;
  const FeSpace& space = sys.space;

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir);
  const std::string path = out_dir + "/eigenfunctions.vtk";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file " + path);

  // Vertex values: the dof sitting at twice the vertex lattice coordinate.
  const int stride = 2 * mesh.nx + 1;
  std::unordered_map<std::int64_t, int> dof_at;
  dof_at.reserve(space.ndofs * 2);
  for (int d = 0; d < space.ndofs; ++d)
    dof_at.emplace(static_cast<std::int64_t>(space.dof_lattice[d][1]) * stride +
                       space.dof_lattice[d][0],
                   d);

  out << "# vtk DataFile Version 3.0\n";
  out << "eigenfunctions level " << last.level << "\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.vertices.size() << " double\n";
  for (const Point& p : mesh.vertices)
    out << format_double(p.x) << ' ' << format_double(p.y) << " 0\n";
  out << "CELLS " << mesh.triangles.size() << ' ' << 4 * mesh.triangles.size() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.triangles.size() << '\n';
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) out << "5\n";

  out << "POINT_DATA " << mesh.vertices.size() << '\n';
  for (std::size_t i = 0; i < last.pairs.size(); ++i) {
    const Vector full = expand_interior(space, last.pairs[i].coeffs);
    out << "SCALARS eig_" << (i + 1) << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
      const auto& l = mesh.vertex_lattice[v];
      const int d = dof_at.at(static_cast<std::int64_t>(2 * l[1]) * stride + 2 * l[0]);
      out << format_double(full[d]) << '\n';
    }
  }
  if (!out) throw IoError("failed while writing " + path);
}

}  // namespace mleig
