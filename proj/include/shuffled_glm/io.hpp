// CSV / JSON serialization and the minimal SVG curve plot.
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shuffled_glm/common.hpp"
#include "shuffled_glm/permutation.hpp"
#include "shuffled_glm/sim.hpp"

namespace shuffled_glm {

// Full-precision decimal so written matrices re-parse bit identically.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Headerless comma-separated numeric matrix. Parse errors name the file,
// row and column (1-based).
inline Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument("trailing characters");
        row.push_back(v);
      } catch (const std::exception&) {
        throw IoError(path + ": row " + std::to_string(lineno) + ", column " +
                      std::to_string(col) + ": not a number: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError(path + ": row " + std::to_string(lineno) + " has " +
                    std::to_string(row.size()) + " fields, expected " +
                    std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": empty matrix");
  Matrix M(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j) M(i, j) = rows[i][j];
  return M;
}

inline void write_csv_matrix(const std::string& path, const Matrix& M) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
}

// Permutation as a single 0-based index column.
inline void write_permutation_csv(const std::string& path, const Permutation& perm) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (int i = 0; i < perm.size(); ++i) out << perm(i) << '\n';
}

inline nlohmann::json permutation_to_json(const Permutation& perm) {
  return nlohmann::json(perm.map());
}

inline Permutation permutation_from_json(const nlohmann::json& j) {
  return Permutation(j.get<std::vector<int>>());
}

// Fixed curve schema: grid, success_rate, stderr, mean_hamming.
inline void write_curve_csv(const std::string& path, const RecoveryCurve& curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    out << format_double(curve.grid[k]) << ',' << format_double(curve.success_rate[k]) << ','
        << format_double(curve.stderr_rate[k]) << ',' << format_double(curve.mean_hamming[k])
        << '\n';
  }
}

// Hand-emitted polyline plot of one or more recovery curves; convenience
// output only, the CSV is the contract.
inline void write_curve_svg(const std::string& path,
                            const std::vector<std::pair<std::string, RecoveryCurve>>& curves) {
  const int W = 640, H = 420, ml = 60, mr = 20, mt = 20, mb = 50;
  double xmin = 0, xmax = 1;
  bool first = true;
  for (const auto& [name, c] : curves) {
    for (double g : c.grid) {
      if (first) {
        xmin = xmax = g;
        first = false;
      }
      xmin = std::min(xmin, g);
      xmax = std::max(xmax, g);
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  const auto sx = [&](double g) { return ml + (g - xmin) / (xmax - xmin) * (W - ml - mr); };
  const auto sy = [&](double r) { return mt + (1.0 - r) * (H - mt - mb); };

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<line x1='" << ml << "' y1='" << sy(0) << "' x2='" << W - mr << "' y2='" << sy(0)
      << "' stroke='black'/>\n";
  out << "<line x1='" << ml << "' y1='" << sy(0) << "' x2='" << ml << "' y2='" << sy(1)
      << "' stroke='black'/>\n";
  for (double tick : {0.0, 0.5, 1.0}) {
    out << "<text x='" << ml - 35 << "' y='" << sy(tick) + 4 << "' font-size='12'>" << tick
        << "</text>\n";
  }
  out << "<text x='" << ml - 35 << "' y='" << sy(0) + 30
      << "' font-size='12'>" << format_double(xmin) << "</text>\n";
  out << "<text x='" << W - mr - 40 << "' y='" << sy(0) + 30
      << "' font-size='12'>" << format_double(xmax) << "</text>\n";

  const char* colors[] = {"#1f6fb4", "#d95f02", "#1b9e77", "#7570b3"};
  int ci = 0;
  for (const auto& [name, c] : curves) {
    const char* color = colors[ci % 4];
    std::ostringstream pts;
    for (std::size_t k = 0; k < c.grid.size(); ++k)
      pts << sx(c.grid[k]) << ',' << sy(c.success_rate[k]) << ' ';
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='"
        << pts.str() << "'/>\n";
    out << "<text x='" << W - mr - 150 << "' y='" << mt + 16 * (ci + 1) << "' fill='" << color
        << "' font-size='12'>" << name << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

}  // namespace shuffled_glm
