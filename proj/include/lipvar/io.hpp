#pragma once

// CSV tables. Every floating-point field is printed with 17 significant digits, so a
// written value reads back to the same double.

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lipvar/coefficients.hpp"
#include "lipvar/core.hpp"
#include "lipvar/geometry.hpp"
#include "lipvar/transforms.hpp"

namespace lipvar::io {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Minimal CSV field quoting: fields holding a comma or quote are wrapped in quotes.
inline std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Header line followed by rows of numbers, all of the header's width.
inline NumericTable read_numeric_csv(std::istream& in) {
  NumericTable t;
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("csv: missing header");
  t.header = split_row(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_row(line);
    if (cells.size() != t.header.size()) {
      throw InvalidArgument("csv: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                            " fields, expected " + std::to_string(t.header.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size()) {
        throw InvalidArgument("csv: line " + std::to_string(lineno) + ": '" + c + "' is not a number");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---- graph samples: x1..xn,a1..a_{d-n}

inline void write_graph_csv(std::ostream& out, const geometry::SampleTable& table) {
  for (int i = 1; i <= table.n; ++i) out << (i > 1 ? "," : "") << "x" << i;
  for (int i = 1; i <= table.codim; ++i) out << ",a" << i;
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << fmt(row[k]);
    out << "\n";
  }
}

/// Samples A at `count` equispaced base points of [lo, hi] (n = 1).
inline geometry::SampleTable sample_graph(const geometry::LipschitzGraph& g, double lo, double hi, int count) {
  require(g.n() == 1, "sample_graph: only n = 1 graphs are tabulated");
  require(count >= 2 && hi > lo, "sample_graph: need count >= 2 and hi > lo");
  geometry::SampleTable t{1, g.codim(), {}};
  for (int k = 0; k < count; ++k) {
    const double x = lo + (hi - lo) * k / (count - 1);
    std::vector<double> row{x};
    const auto a = g.eval(std::vector<double>{x});
    row.insert(row.end(), a.begin(), a.end());
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline geometry::SampleTable read_graph_csv(std::istream& in) {
  const auto t = read_numeric_csv(in);
  geometry::SampleTable out;
  out.n = 0;
  out.codim = 0;
  for (const auto& h : t.header) {
    if (!h.empty() && h[0] == 'x') ++out.n;
    else if (!h.empty() && h[0] == 'a') ++out.codim;
    else throw InvalidArgument("graph csv: unexpected column '" + h + "'");
  }
  require(out.n >= 1 && out.codim >= 1, "graph csv: need x and a columns");
  out.rows = t.rows;
  return out;
}

// ---- measures: x1..xd,weight

inline void write_measure_csv(std::ostream& out, const geometry::DiscreteMeasure& mu) {
  for (int i = 1; i <= mu.d(); ++i) out << (i > 1 ? "," : "") << "x" << i;
  out << ",weight\n";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (double v : mu.point(i)) out << fmt(v) << ",";
    out << fmt(mu.weight(i)) << "\n";
  }
}

/// Densities are not stored; they read back as 1.
inline geometry::DiscreteMeasure read_measure_csv(std::istream& in, int n, double h) {
  const auto t = read_numeric_csv(in);
  require(t.header.size() >= 3 && t.header.back() == "weight", "measure csv: last column must be 'weight'");
  const int d = static_cast<int>(t.header.size()) - 1;
  std::vector<double> coords;
  std::vector<double> w;
  for (const auto& r : t.rows) {
    coords.insert(coords.end(), r.begin(), r.end() - 1);
    w.push_back(r.back());
  }
  std::vector<double> dens(w.size(), 1.0);
  return geometry::DiscreteMeasure(n, d, std::move(coords), std::move(w), std::move(dens), h);
}

// ---- families: eps,value (grid order, decreasing eps)

inline void write_family_csv(std::ostream& out, const transforms::SampledFamily& fam) {
  out << "eps,value\n";
  for (std::size_t i = 0; i < fam.values.size(); ++i) out << fmt(fam.grid[i]) << "," << fmt(fam.values[i]) << "\n";
}

inline std::pair<std::vector<double>, std::vector<double>> read_family_csv(std::istream& in) {
  const auto t = read_numeric_csv(in);
  require(t.header == std::vector<std::string>{"eps", "value"}, "family csv: header must be eps,value");
  std::vector<double> eps;
  std::vector<double> vals;
  for (const auto& r : t.rows) {
    eps.push_back(r[0]);
    vals.push_back(r[1]);
  }
  return {eps, vals};
}

// ---- coefficients: gen,center...,ell,beta2,alpha,c

inline void write_coefficients_csv(std::ostream& out, const std::vector<coefficients::CubeCoefficients>& rows, int n) {
  out << "gen";
  for (int i = 1; i <= n; ++i) out << ",center" << i;
  out << ",ell,beta2,alpha,c\n";
  for (const auto& r : rows) {
    out << r.gen;
    for (double v : r.cube.center()) out << "," << fmt(v);
    out << "," << fmt(r.cube.side()) << "," << fmt(r.beta2) << "," << fmt(r.alpha) << "," << fmt(r.c) << "\n";
  }
}

// ---- martingale traces: x...,m,E_m,W_partial

struct MartingaleRow {
  std::vector<double> x;
  int m = 0;
  double em = 0.0;
  double w_partial = 0.0;
};

inline void write_martingale_csv(std::ostream& out, const std::vector<MartingaleRow>& rows, int d) {
  for (int i = 1; i <= d; ++i) out << (i > 1 ? "," : "") << "x" << i;
  out << ",m,E_m,W_partial\n";
  for (const auto& r : rows) {
    for (double v : r.x) out << fmt(v) << ",";
    out << r.m << "," << fmt(r.em) << "," << fmt(r.w_partial) << "\n";
  }
}

// ---- experiment results

struct ResultRow {
  std::string experiment;
  std::string graph;
  double lip = 0.0;
  std::string kernel;
  double rho = 0.0;
  double p = 0.0;
  double h = 0.0;
  double ratio = 0.0;
  double stability_factor = 0.0;
  std::string witness;
};

inline void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "experiment,graph,lip,kernel,rho,p,h,ratio,stability_factor,witness\n";
  for (const auto& r : rows) {
    out << field(r.experiment) << "," << field(r.graph) << "," << fmt(r.lip) << "," << field(r.kernel) << ","
        << fmt(r.rho) << "," << fmt(r.p) << "," << fmt(r.h) << "," << fmt(r.ratio) << "," << fmt(r.stability_factor)
        << "," << field(r.witness) << "\n";
  }
}

inline std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("results csv: missing header");
  require(split_row(line).size() == 10, "results csv: header must have 10 columns");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_row(line);
    require(c.size() == 10, "results csv: row must have 10 fields");
    rows.push_back(ResultRow{c[0], c[1], std::stod(c[2]), c[3], std::stod(c[4]), std::stod(c[5]), std::stod(c[6]),
                             std::stod(c[7]), std::stod(c[8]), c[9]});
  }
  return rows;
}

}  // namespace lipvar::io
