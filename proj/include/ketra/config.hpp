#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ketra/factor_io.hpp"
#include "ketra/graph.hpp"
#include "ketra/protocol.hpp"

namespace ketra {

/// Flat key=value configuration. Top-level keys: dataset, output, seed,
/// threads, literal_policy. Sections: model.* (kind, encoding, rank and the
/// coefficients), fit.* (max_iter, tol, coupling, split), eval.* (mode,
/// per_slice, repeats, test_file, validation_file, threshold,
/// weighted_mode, search, metric), sweep.* (fractions, models).
struct RunConfig {
  std::filesystem::path dataset_dir;
  std::filesystem::path output_dir = "ketra_out";
  LiteralPolicy literal_policy = LiteralPolicy::keep;
  int threads = 0;
  std::optional<Encoding> encoding;
  std::string train_split = "all";
  std::filesystem::path validation_file;
  std::optional<double> threshold;
  ProtocolConfig protocol;
  std::vector<double> fractions{0.02, 0.1, 0.25, 0.5, 0.75, 1.0};
  std::vector<ModelKind> sweep_models{ModelKind::rescal, ModelKind::quad_constraint, ModelKind::linear_constraint};

  /// Throws ValidationError for an unknown key or a bad value.
  void set(const std::string& key, const std::string& value);
  /// Cross-field checks: a similarity encoding for the models that need it,
  /// valid hyperparameters and fit settings.
  void validate() const;
  /// Every resolved setting as key=value pairs, in the same vocabulary as set().
  Manifest to_manifest() const;
};

/// Lines of key=value; '#' starts a comment, blank lines are ignored.
/// Throws ParseError with the line number on malformed lines and
/// ValidationError on unknown keys.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// "a=b" -> {"a", "b"}; ParseError without '='.
std::pair<std::string, std::string> split_assignment(const std::string& s);

}  // namespace ketra
