#include "ketra/config.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>

#include "ketra/error.hpp"

namespace ketra {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ValidationError(key + ": expected an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ValidationError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

std::pair<std::string, std::string> split_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw ParseError("expected key=value, got '" + s + "'");
  return {trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto& p = protocol;
  auto& h = p.hyper;
  if (key == "dataset") dataset_dir = value;
  else if (key == "output") output_dir = value;
  else if (key == "seed") {
    const auto s = to_int(key, value);
    if (s < 0) throw ValidationError("seed must be nonnegative");
    p.seed = static_cast<std::uint64_t>(s);
  } else if (key == "threads") {
    threads = static_cast<int>(to_int(key, value));
    if (threads < 0) throw ValidationError("threads must be >= 0");
  } else if (key == "literal_policy") literal_policy = parse_literal_policy(value);
  else if (key == "model.kind") p.model = parse_model_kind(value);
  else if (key == "model.encoding") encoding = parse_encoding(value);
  else if (key == "model.rank") {
    const auto r = to_int(key, value);
    if (r < 0) throw ValidationError("model.rank must be >= 0");
    h.rank = static_cast<int>(r);
  } else if (key == "model.lambda_A") h.lambda_A = to_double(key, value);
  else if (key == "model.lambda_r") h.lambda_r = to_double(key, value);
  else if (key == "model.lambda_e") h.lambda_e = to_double(key, value);
  else if (key == "model.lambda_s") h.lambda_s = to_double(key, value);
  else if (key == "model.lambda_a1") h.lambda_a1 = to_double(key, value);
  else if (key == "model.lambda_a2") h.lambda_a2 = to_double(key, value);
  else if (key == "model.rho") h.rho = to_double(key, value);
  else if (key == "model.lagrange_step") h.lagrange_step = to_double(key, value);
  else if (key == "fit.max_iter") p.fit.max_iter = static_cast<int>(to_int(key, value));
  else if (key == "fit.tol") p.fit.tol = to_double(key, value);
  else if (key == "fit.coupling") p.fit.coupling = parse_coupling_mode(value);
  else if (key == "fit.split") train_split = value;
  else if (key == "eval.mode") p.mode = parse_eval_mode(value);
  else if (key == "eval.per_slice") {
    const auto n = to_int(key, value);
    if (n < 0) throw ValidationError("eval.per_slice must be >= 0");
    p.per_slice = static_cast<std::size_t>(n);
  } else if (key == "eval.repeats") p.repeats = static_cast<int>(to_int(key, value));
  else if (key == "eval.test_file") p.test_file = value;
  else if (key == "eval.validation_file") validation_file = value;
  else if (key == "eval.threshold") threshold = to_double(key, value);
  else if (key == "eval.weighted_mode") p.weighted = parse_weighted_mode(value);
  else if (key == "eval.search") p.search = to_bool(key, value);
  else if (key == "eval.metric") p.search_metric = parse_metric(value);
  else if (key == "sweep.fractions") {
    fractions.clear();
    for (const auto& f : split_list(value)) fractions.push_back(to_double(key, f));
  } else if (key == "sweep.models") {
    sweep_models.clear();
    for (const auto& m : split_list(value)) sweep_models.push_back(parse_model_kind(m));
  } else {
    throw ValidationError("unknown configuration key '" + key + "'");
  }
  if (key == "model.encoding") p.encoding = *encoding;
}

void RunConfig::validate() const {
  protocol.validate();
  if (uses_similarity(protocol.model) && !encoding) {
    throw ValidationError("model " + std::string(to_string(protocol.model)) +
                          " needs a similarity matrix; set model.encoding");
  }
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ValidationError("sweep.fractions must lie in (0, 1]");
  }
}

Manifest RunConfig::to_manifest() const {
  const auto& p = protocol;
  const auto& h = p.hyper;
  Manifest m;
  m["dataset"] = dataset_dir.string();
  m["seed"] = std::to_string(p.seed);
  m["literal_policy"] = literal_policy == LiteralPolicy::keep ? "keep" : "tag_by_type";
  m["model.kind"] = to_string(p.model);
  if (encoding) m["model.encoding"] = to_string(*encoding);
  m["model.rank"] = std::to_string(h.rank);
  m["model.lambda_A"] = fmt(h.lambda_A);
  m["model.lambda_r"] = fmt(h.lambda_r);
  m["model.lambda_e"] = fmt(h.lambda_e);
  m["model.lambda_s"] = fmt(h.lambda_s);
  m["model.lambda_a1"] = fmt(h.a1());
  m["model.lambda_a2"] = fmt(h.a2());
  m["model.rho"] = std::isinf(h.rho) ? "inf" : fmt(h.rho);
  m["model.lagrange_step"] = fmt(h.lagrange_step);
  m["fit.max_iter"] = std::to_string(p.fit.max_iter);
  m["fit.tol"] = fmt(p.fit.tol);
  m["fit.coupling"] = to_string(p.fit.coupling);
  m["fit.split"] = train_split;
  m["eval.mode"] = to_string(p.mode);
  m["eval.per_slice"] = std::to_string(p.per_slice);
  m["eval.repeats"] = std::to_string(p.repeats);
  m["eval.search"] = p.search ? "true" : "false";
  m["eval.metric"] = p.search_metric == Metric::auc ? "auc" : "f1_micro";
  m["eval.weighted_mode"] = p.weighted == WeightedMode::keep_all ? "keep_all" : "split_60_40";
  if (!p.test_file.empty()) m["eval.test_file"] = p.test_file.string();
  if (!validation_file.empty()) m["eval.validation_file"] = validation_file.string();
  if (threshold) m["eval.threshold"] = fmt(*threshold);
  return m;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(ss, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(origin + ":" + std::to_string(n) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    try {
      cfg.set(key, trim(line.substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError(origin + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace ketra
