#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "ketra/models.hpp"

namespace ketra {

/// Flat key=value lines, written in key order.
using Manifest = std::map<std::string, std::string>;

void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

/// A.csv (or A1.csv and A2.csv), R_<k>.csv for every slice, lambda.csv for
/// the constrained models, and manifest.txt. Values are written in their
/// shortest round-trip form so a reload is exact. `extra` is merged into the manifest.
void write_factors(const FactorSet& f, const std::filesystem::path& dir, const Manifest& extra = {});
FactorSet read_factors(const std::filesystem::path& dir, Manifest* manifest = nullptr);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace ketra
