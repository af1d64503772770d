#include "ketra/factor_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ketra/error.hpp"

namespace ketra {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_manifest(const Manifest& m, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (const auto& [k, v] : m) out << k << '=' << v << '\n';
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path.string());
  Manifest m;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path.string() + ":" + std::to_string(n) + ": expected key=value");
    m[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

void write_matrix_csv(const Eigen::MatrixXd& m, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto* end = cell.data() + cell.size();
      const auto [p, ec] = std::from_chars(cell.data(), end, v);
      if (ec != std::errc() || p != end) throw ParseError(path.string() + ": bad number '" + cell + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw ParseError(path.string() + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": empty matrix");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_factors(const FactorSet& f, const fs::path& dir, const Manifest& extra) {
  fs::create_directories(dir);
  Manifest m = extra;
  m["kind"] = f.kind == FactorKind::quadratic ? "quadratic" : "linear";
  m["rank"] = std::to_string(f.rank());
  m["n_entities"] = std::to_string(f.n_entities());
  m["n_relations"] = std::to_string(f.n_relations());
  m["multipliers"] = f.multipliers ? "1" : "0";
  if (f.kind == FactorKind::quadratic) {
    write_matrix_csv(f.a, dir / "A.csv");
  } else {
    write_matrix_csv(f.a1, dir / "A1.csv");
    write_matrix_csv(f.a2, dir / "A2.csv");
  }
  for (std::size_t k = 0; k < f.r.size(); ++k) write_matrix_csv(f.r[k], dir / ("R_" + std::to_string(k) + ".csv"));
  if (f.multipliers) write_matrix_csv(*f.multipliers, dir / "lambda.csv");
  write_manifest(m, dir / "manifest.txt");
}

FactorSet read_factors(const fs::path& dir, Manifest* manifest) {
  const auto m = read_manifest(dir / "manifest.txt");
  auto get = [&](const std::string& key) {
    auto it = m.find(key);
    if (it == m.end()) throw ParseError("manifest lacks '" + key + "'");
    return it->second;
  };
  FactorSet f;
  const auto kind = get("kind");
  if (kind == "quadratic") {
    f.kind = FactorKind::quadratic;
    f.a = read_matrix_csv(dir / "A.csv");
  } else if (kind == "linear") {
    f.kind = FactorKind::linear;
    f.a1 = read_matrix_csv(dir / "A1.csv");
    f.a2 = read_matrix_csv(dir / "A2.csv");
    if (f.a1.rows() != f.a2.rows() || f.a1.cols() != f.a2.cols()) throw ParseError("A1 and A2 differ in shape");
  } else {
    throw ParseError("manifest kind must be quadratic or linear");
  }
  const auto nr = std::stoul(get("n_relations"));
  for (std::size_t k = 0; k < nr; ++k) {
    f.r.push_back(read_matrix_csv(dir / ("R_" + std::to_string(k) + ".csv")));
    if (f.r.back().rows() != f.rank() || f.r.back().cols() != f.rank()) {
      throw ParseError("R_" + std::to_string(k) + " is not p x p");
    }
  }
  if (get("multipliers") == "1") f.multipliers = read_matrix_csv(dir / "lambda.csv");
  if (manifest) *manifest = m;
  return f;
}

}  // namespace ketra
