#pragma once

// Scenario files, batch execution, prior sweeps and report emission.

#include "infotrap/comparison.hpp"
#include "infotrap/dynamics.hpp"
#include "infotrap/oracle.hpp"
#include "infotrap/parallel.hpp"
#include "infotrap/spanning.hpp"
#include "infotrap/types.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace infotrap {

using Json = nlohmann::ordered_json;

/// Parse or validation failure at a location inside a scenario document.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string path, const std::string& reason)
      : Error(path + ": " + reason), path_(std::move(path)) {}
  [[nodiscard]] const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct Scenario {
  std::string name;
  Environment environment;
  GaussianPrior prior;
  std::int64_t horizon = 1;
  TieBreakRule tie_break;
  InterventionSpec intervention;
  std::optional<double> escalate_gamma0;  // free_signals_auto
  bool sample_realizations = false;
  std::uint64_t seed = 0;
  std::optional<Json> expected;
};

namespace detail {

inline bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char ch : s) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                    ch == '_' || ch == '-' || ch == '.';
    if (!ok) return false;
  }
  return true;
}

inline double read_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ScenarioError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ScenarioError(path, "expected a finite number");
  return v;
}

inline Eigen::VectorXd read_vector(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ScenarioError(path, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = read_number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline Eigen::MatrixXd read_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ScenarioError(path, "expected a non-empty array of rows");
  std::size_t cols = 0;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = read_vector(j[r], path + "[" + std::to_string(r) + "]");
    if (r == 0) {
      cols = static_cast<std::size_t>(row.size());
      if (cols == 0) throw ScenarioError(path + "[0]", "rows must be non-empty");
    } else if (static_cast<std::size_t>(row.size()) != cols) {
      throw ScenarioError(path + "[" + std::to_string(r) + "]",
                          "row has " + std::to_string(row.size()) + " entries, expected " +
                              std::to_string(cols));
    }
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    m.row(static_cast<Eigen::Index>(r)) = read_vector(j[r], path).transpose();
  }
  return m;
}

inline std::int64_t read_positive_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ScenarioError(path, "expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < 1) throw ScenarioError(path, "expected a positive integer");
  return v;
}

inline std::uint64_t read_seed(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
  throw ScenarioError(path, "expected a non-negative integer seed");
}

template <typename Fn>
auto located(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ScenarioError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioError(path, e.what());
  }
}

inline Scenario parse_scenario_object(const Json& doc, const std::string& default_name,
                                      const std::string& root) {
  if (!doc.is_object()) throw ScenarioError(root, "expected an object");
  static const std::set<std::string> known{
      "name",     "coefficients", "objective",           "prior_mean", "prior_cov", "horizon",
      "tie_break", "intervention", "sample_realizations", "seed",       "expected"};
  for (const auto& item : doc.items()) {
    if (!known.count(item.key())) throw ScenarioError(root + "." + item.key(), "unknown key");
  }
  auto at = [&](const char* key) -> const Json& {
    if (!doc.contains(key)) throw ScenarioError(root + "." + key, "missing required key");
    return doc.at(key);
  };

  std::string name = default_name;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw ScenarioError(root + ".name", "expected a string");
    name = doc["name"].get<std::string>();
  }
  if (!valid_name(name)) {
    throw ScenarioError(root + ".name", "name must match [A-Za-z0-9_.-]+, got \"" + name + "\"");
  }

  const Eigen::MatrixXd c = read_matrix(at("coefficients"), root + ".coefficients");
  const auto k = static_cast<std::size_t>(c.cols());
  std::vector<ObjectiveTerm> objective;
  if (doc.contains("objective")) {
    const auto& obj = doc["objective"];
    const std::string p = root + ".objective";
    if (!obj.is_array() || obj.empty()) throw ScenarioError(p, "expected a non-empty array");
    for (std::size_t r = 0; r < obj.size(); ++r) {
      const std::string pr = p + "[" + std::to_string(r) + "]";
      if (!obj[r].is_object() || !obj[r].contains("direction")) {
        throw ScenarioError(pr, "expected {weight, direction}");
      }
      ObjectiveTerm term;
      term.weight = obj[r].contains("weight") ? read_number(obj[r]["weight"], pr + ".weight") : 1.0;
      if (!(term.weight > 0.0)) throw ScenarioError(pr + ".weight", "weight must be positive");
      term.direction = read_vector(obj[r]["direction"], pr + ".direction");
      if (static_cast<std::size_t>(term.direction.size()) != k) {
        throw ScenarioError(pr + ".direction", "direction has " + std::to_string(term.direction.size()) +
                                                   " entries, expected " + std::to_string(k));
      }
      objective.push_back(std::move(term));
    }
  } else {
    objective.push_back({1.0, Eigen::VectorXd::Unit(static_cast<Eigen::Index>(k), 0)});
  }
  Environment env = located(root + ".objective", [&] { return Environment(c, objective); });

  const Eigen::MatrixXd cov = read_matrix(at("prior_cov"), root + ".prior_cov");
  if (static_cast<std::size_t>(cov.rows()) != k || static_cast<std::size_t>(cov.cols()) != k) {
    throw ScenarioError(root + ".prior_cov", "covariance must be " + std::to_string(k) + "x" +
                                                 std::to_string(k));
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  if (doc.contains("prior_mean")) {
    mean = read_vector(doc["prior_mean"], root + ".prior_mean");
    if (static_cast<std::size_t>(mean.size()) != k) {
      throw ScenarioError(root + ".prior_mean", "mean has " + std::to_string(mean.size()) +
                                                    " entries, expected " + std::to_string(k));
    }
  }
  GaussianPrior prior = located(root + ".prior_cov", [&] { return GaussianPrior(mean, cov); });

  const std::int64_t horizon = read_positive_int(at("horizon"), root + ".horizon");

  TieBreakRule rule;
  if (doc.contains("tie_break")) {
    const auto& tb = doc["tie_break"];
    const std::string p = root + ".tie_break";
    if (tb.is_string() && tb.get<std::string>() == "lowest_index") {
      rule = TieBreakRule::lowest_index();
    } else if (tb.is_object() && tb.size() == 1 && tb.contains("random")) {
      rule = TieBreakRule::random(read_seed(tb["random"], p + ".random"));
    } else {
      throw ScenarioError(p, "expected \"lowest_index\" or {\"random\": seed}");
    }
  }

  InterventionSpec spec;
  std::optional<double> gamma0;
  if (doc.contains("intervention")) {
    const auto& iv = doc["intervention"];
    const std::string p = root + ".intervention";
    const bool is_none = (iv.is_string() && iv.get<std::string>() == "none") ||
                         (iv.is_object() && (iv.empty() || (iv.size() == 1 && iv.contains("none"))));
    if (is_none) {
      spec = InterventionSpec::none();
    } else if (!iv.is_object()) {
      throw ScenarioError(p, "expected \"none\" or an intervention object");
    } else if (iv.contains("precision")) {
      spec = InterventionSpec::precision(read_positive_int(iv["precision"], p + ".precision"));
    } else if (iv.contains("batch")) {
      const auto b = read_positive_int(iv["batch"], p + ".batch");
      if (b > kMaxBatch) {
        throw ScenarioError(p + ".batch", "batch size must be at most " + std::to_string(kMaxBatch));
      }
      if (env.num_sources() > kMaxBatchSources) {
        throw ScenarioError(p + ".batch", "batch allocation supports at most " +
                                              std::to_string(kMaxBatchSources) + " sources");
      }
      spec = InterventionSpec::batch(b);
    } else if (iv.contains("free_signals")) {
      const auto& fs = iv["free_signals"];
      if (!fs.is_array()) throw ScenarioError(p + ".free_signals", "expected an array of vectors");
      std::vector<Eigen::VectorXd> vectors;
      for (std::size_t j = 0; j < fs.size(); ++j) {
        vectors.push_back(read_vector(fs[j], p + ".free_signals[" + std::to_string(j) + "]"));
      }
      std::optional<double> gamma;
      if (iv.contains("gamma")) gamma = read_number(iv["gamma"], p + ".gamma");
      spec = InterventionSpec::free_signals(std::move(vectors), gamma);
    } else if (iv.contains("free_signals_auto")) {
      const auto& fa = iv["free_signals_auto"];
      if (!fa.is_object() || !fa.contains("gamma0")) {
        throw ScenarioError(p + ".free_signals_auto", "expected {\"gamma0\": g}");
      }
      gamma0 = read_number(fa["gamma0"], p + ".free_signals_auto.gamma0");
      if (!(*gamma0 > 0.0)) throw ScenarioError(p + ".free_signals_auto.gamma0", "must be positive");
    } else {
      throw ScenarioError(p, "unknown intervention");
    }
    located(p, [&] {
      spec.validate(k);
      return 0;
    });
  }

  bool sample = false;
  if (doc.contains("sample_realizations")) {
    if (!doc["sample_realizations"].is_boolean()) {
      throw ScenarioError(root + ".sample_realizations", "expected a boolean");
    }
    sample = doc["sample_realizations"].get<bool>();
  }
  const std::uint64_t seed = doc.contains("seed") ? read_seed(doc["seed"], root + ".seed") : 0;
  std::optional<Json> expected;
  if (doc.contains("expected")) expected = doc["expected"];

  return Scenario{name,  std::move(env), std::move(prior), horizon, rule, std::move(spec),
                  gamma0, sample,        seed,             std::move(expected)};
}

inline Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError("$", std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace detail

/// Parses one scenario object.
inline Scenario parse_scenario(const std::string& text, const std::string& default_name = "scenario") {
  return detail::parse_scenario_object(detail::parse_json(text), default_name, "$");
}

/// Parses a file holding one scenario object, an array of them, or
/// {"scenarios": [...]}. Names must be unique.
inline std::vector<Scenario> parse_scenarios(const std::string& text,
                                             const std::string& default_name = "scenario") {
  const Json doc = detail::parse_json(text);
  std::vector<Scenario> out;
  const Json* list = nullptr;
  std::string root = "$";
  if (doc.is_array()) {
    list = &doc;
  } else if (doc.is_object() && doc.contains("scenarios") && doc.size() == 1) {
    list = &doc["scenarios"];
    root = "$.scenarios";
    if (!list->is_array()) throw ScenarioError(root, "expected an array");
  }
  if (!list) {
    out.push_back(detail::parse_scenario_object(doc, default_name, "$"));
    return out;
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const std::string p = root + "[" + std::to_string(i) + "]";
    out.push_back(detail::parse_scenario_object((*list)[i], default_name + "_" + std::to_string(i + 1), p));
    if (!names.insert(out.back().name).second) {
      throw ScenarioError(p + ".name", "duplicate scenario name \"" + out.back().name + "\"");
    }
  }
  return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<Scenario> load_scenarios(const std::filesystem::path& path) {
  return parse_scenarios(read_text_file(path), path.stem().string());
}

// ---- Emission --------------------------------------------------------------

namespace detail {

inline Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json matrix_json(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vector_json(m.row(r).transpose()));
  return a;
}

inline Json index_set_json(const IndexSet& s) {
  Json a = Json::array();
  for (auto i : s) a.push_back(i + 1);
  return a;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Scenario as a JSON document accepted by parse_scenario.
inline Json emit(const Scenario& s) {
  Json j;
  j["name"] = s.name;
  j["coefficients"] = detail::matrix_json(s.environment.coefficients());
  Json obj = Json::array();
  for (const auto& t : s.environment.objective()) {
    obj.push_back({{"weight", t.weight}, {"direction", detail::vector_json(t.direction)}});
  }
  j["objective"] = obj;
  j["prior_mean"] = detail::vector_json(s.prior.mean());
  j["prior_cov"] = detail::matrix_json(s.prior.covariance());
  j["horizon"] = s.horizon;
  if (s.tie_break.kind == TieBreakRule::Kind::lowest_index) {
    j["tie_break"] = "lowest_index";
  } else {
    j["tie_break"] = {{"random", s.tie_break.seed}};
  }
  if (s.escalate_gamma0) {
    j["intervention"] = {{"free_signals_auto", {{"gamma0", *s.escalate_gamma0}}}};
  } else {
    switch (s.intervention.kind) {
      case InterventionSpec::Kind::none: j["intervention"] = "none"; break;
      case InterventionSpec::Kind::precision: j["intervention"] = {{"precision", s.intervention.b}}; break;
      case InterventionSpec::Kind::batch: j["intervention"] = {{"batch", s.intervention.b}}; break;
      case InterventionSpec::Kind::free_signals: {
        Json fs = Json::array();
        for (const auto& v : s.intervention.vectors) fs.push_back(detail::vector_json(v));
        Json iv = {{"free_signals", fs}};
        if (s.intervention.gamma) iv["gamma"] = *s.intervention.gamma;
        j["intervention"] = iv;
        break;
      }
    }
  }
  j["sample_realizations"] = s.sample_realizations;
  j["seed"] = s.seed;
  if (s.expected) j["expected"] = *s.expected;
  return j;
}

/// Field-exact equality (matrices compared entry by entry).
inline bool same_scenario(const Scenario& a, const Scenario& b) {
  auto same_obj = [](const Environment& x, const Environment& y) {
    if (x.objective().size() != y.objective().size()) return false;
    for (std::size_t r = 0; r < x.objective().size(); ++r) {
      if (x.objective()[r].weight != y.objective()[r].weight) return false;
      if (x.objective()[r].direction != y.objective()[r].direction) return false;
    }
    return true;
  };
  auto same_vectors = [](const std::vector<Eigen::VectorXd>& x, const std::vector<Eigen::VectorXd>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] != y[i]) return false;
    }
    return true;
  };
  return a.name == b.name && a.environment.coefficients() == b.environment.coefficients() &&
         same_obj(a.environment, b.environment) && a.prior.mean() == b.prior.mean() &&
         a.prior.covariance() == b.prior.covariance() && a.horizon == b.horizon &&
         a.tie_break == b.tie_break && a.intervention.kind == b.intervention.kind &&
         a.intervention.b == b.intervention.b && same_vectors(a.intervention.vectors, b.intervention.vectors) &&
         a.intervention.gamma == b.intervention.gamma && a.escalate_gamma0 == b.escalate_gamma0 &&
         a.sample_realizations == b.sample_realizations && a.seed == b.seed &&
         a.expected == b.expected;
}

// ---- Execution ---------------------------------------------------------------

struct ScenarioResult {
  SimulationTrace trace;
  std::optional<AssumptionReport> assumptions;
  std::optional<double> gamma_final;
};

inline ScenarioResult run_scenario(const Scenario& s) {
  ScenarioResult out;
  const auto& env = s.environment;
  if (env.single_direction()) out.assumptions = check_assumptions(env);
  if (s.escalate_gamma0) {
    auto esc = escalate_gamma(env, s.prior, s.horizon, *s.escalate_gamma0, s.tie_break,
                              s.sample_realizations, s.seed);
    out.gamma_final = esc.gamma;
    out.trace = std::move(esc.trace);
  } else {
    out.trace = simulate(env, s.prior, s.horizon, s.tie_break, s.intervention, s.sample_realizations, s.seed);
  }
  return out;
}

inline Json assumption_json(const AssumptionReport& a) {
  Json w = Json::array();
  for (const auto& x : a.witnesses) w.push_back({{"kind", x.kind}, {"indices", detail::index_set_json(x.indices)}});
  Json j;
  j["unique_minimizer"] = a.unique_minimizer;
  j["gap"] = a.gap;
  j["strong_linear_independence"] = a.strong_linear_independence;
  j["unique_minimizer_every_subspace"] = a.unique_minimizer_every_subspace;
  j["all_minimal_sets_size_K"] = a.all_minimal_sets_size_K;
  j["witnesses"] = w;
  return j;
}

inline Json report_json(const Scenario& s, const ScenarioResult& r) {
  const auto& tr = r.trace;
  Json j;
  j["name"] = s.name;
  j["classification"] = to_string(tr.classification.kind);
  j["trapped_set"] = tr.classification.kind == Classification::Kind::trap
                         ? detail::index_set_json(tr.classification.trapped_set)
                         : Json(nullptr);
  j["inefficiency_ratio"] = tr.inefficiency_ratio;
  j["frequency_estimate"] = detail::vector_json(tr.frequency_estimate.weights());
  j["phi_best"] = tr.benchmark.phi_best;
  j["best_set"] = detail::index_set_json(tr.benchmark.best_set);
  j["lambda_star"] = detail::vector_json(tr.benchmark.lambda_star.weights());
  j["assumption_report"] = r.assumptions ? assumption_json(*r.assumptions) : Json(nullptr);
  if (r.gamma_final) j["gamma_final"] = *r.gamma_final;
  Json counts = Json::array();
  for (auto c : tr.final_counts.counts()) counts.push_back(c);
  j["final_counts"] = counts;
  return j;
}

/// Trace CSV: t,choice,posterior_variance,count_1..count_N.
inline void write_trace_csv(std::ostream& out, const SimulationTrace& tr) {
  const std::size_t n = tr.final_counts.size();
  out << "t,choice,posterior_variance";
  for (std::size_t i = 1; i <= n; ++i) out << ",count_" << i;
  out << "\n";
  DivisionVector m(n);
  for (std::size_t t = 0; t < tr.choices.size(); ++t) {
    const auto& a = tr.choices[t];
    m.add(a.increment);
    out << (t + 1) << ",";
    if (a.source) {
      out << (*a.source + 1);
    } else {
      for (std::size_t i = 0; i < n; ++i) out << (i ? ";" : "") << a.increment[i];
    }
    out << "," << detail::format_double(tr.variance_path[t]);
    for (std::size_t i = 0; i < n; ++i) out << "," << m[i];
    out << "\n";
  }
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

/// Runs every scenario and writes <name>.trace.csv and <name>.report.json
/// into out_dir. Returns 0 iff every scenario executed.
inline int run_batch(const std::vector<Scenario>& scenarios, const std::filesystem::path& out_dir,
                     bool quiet = false, std::ostream& log = std::cerr) {
  if (scenarios.empty()) return 0;
  std::set<std::string> names;
  for (const auto& s : scenarios) {
    if (!names.insert(s.name).second) {
      log << "error: duplicate scenario name " << s.name << "\n";
      return 1;
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    log << "error: cannot create " << out_dir.string() << ": " << ec.message() << "\n";
    return 1;
  }
  std::vector<std::string> errors(scenarios.size());
  std::vector<std::string> summaries(scenarios.size());
  parallel_for(scenarios.size(), [&](std::size_t i) {
    const auto& s = scenarios[i];
    try {
      const auto result = run_scenario(s);
      std::ostringstream csv;
      write_trace_csv(csv, result.trace);
      write_file(out_dir / (s.name + ".trace.csv"), csv.str());
      write_file(out_dir / (s.name + ".report.json"), report_json(s, result).dump(2) + "\n");
      summaries[i] = s.name + ": " + to_string(result.trace.classification.kind);
      if (result.trace.classification.kind == Classification::Kind::trap) {
        summaries[i] += " " + format_index_set(result.trace.classification.trapped_set) +
                        " ratio " + detail::format_double(result.trace.inefficiency_ratio);
      }
    } catch (const std::exception& e) {
      errors[i] = s.name + ": " + e.what();
    }
  });
  int status = 0;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (!errors[i].empty()) {
      log << "error: " << errors[i] << "\n";
      status = 1;
    } else if (!quiet) {
      log << summaries[i] << "\n";
    }
  }
  return status;
}

// ---- Sweeps ------------------------------------------------------------------

/// Varies the prior variance of one state over a grid.
struct SweepSpec {
  Scenario base;
  std::size_t state = 0;
  std::vector<double> grid;
};

struct SweepRow {
  double value = 0.0;
  Classification classification;
  double inefficiency_ratio = 1.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::optional<std::size_t> threshold_index;  // first row whose class differs from the previous one

  [[nodiscard]] std::optional<double> threshold() const {
    if (!threshold_index) return std::nullopt;
    return rows[*threshold_index].value;
  }
};

inline SweepReport sweep(const SweepSpec& spec) {
  if (spec.grid.empty()) throw InvalidArgument("sweep grid is empty");
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    if (!(spec.grid[i] > 0.0) || !std::isfinite(spec.grid[i])) {
      throw InvalidArgument("sweep grid values must be positive");
    }
    if (i > 0 && !(spec.grid[i] > spec.grid[i - 1])) {
      throw InvalidArgument("sweep grid must be strictly increasing");
    }
  }
  if (spec.state >= spec.base.environment.num_states()) throw InvalidArgument("sweep state out of range");
  SweepReport rep;
  rep.rows.resize(spec.grid.size());
  parallel_for(spec.grid.size(), [&](std::size_t i) {
    Eigen::MatrixXd cov = spec.base.prior.covariance();
    const auto k = static_cast<Eigen::Index>(spec.state);
    cov(k, k) = spec.grid[i];
    Scenario s = spec.base;
    s.prior = GaussianPrior(spec.base.prior.mean(), cov);
    const auto res = run_scenario(s);
    rep.rows[i] = {spec.grid[i], res.trace.classification, res.trace.inefficiency_ratio};
  });
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (rep.rows[i].classification.kind != rep.rows[i - 1].classification.kind ||
        rep.rows[i].classification.trapped_set != rep.rows[i - 1].classification.trapped_set) {
      rep.threshold_index = i;
      break;
    }
  }
  return rep;
}

inline Json sweep_json(const SweepSpec& spec, const SweepReport& rep) {
  Json rows = Json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"value", r.value},
                    {"classification", to_string(r.classification.kind)},
                    {"trapped_set", r.classification.kind == Classification::Kind::trap
                                        ? detail::index_set_json(r.classification.trapped_set)
                                        : Json(nullptr)},
                    {"inefficiency_ratio", r.inefficiency_ratio}});
  }
  Json j;
  j["name"] = spec.base.name;
  j["state"] = spec.state + 1;
  j["rows"] = rows;
  if (rep.threshold_index) {
    j["threshold"] = rep.rows[*rep.threshold_index].value;
    j["threshold_below"] = rep.rows[*rep.threshold_index - 1].value;
  } else {
    j["threshold"] = nullptr;
  }
  return j;
}

}  // namespace infotrap
