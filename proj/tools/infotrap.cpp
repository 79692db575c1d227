// infotrap command-line driver.

#include "infotrap.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using infotrap::Json;

namespace {

struct Options {
  std::string file;
  std::string out = "infotrap_out";
  bool quiet = false;
  std::int64_t t = 0;
  std::size_t state = 0;
  std::string grid;
};

void emit_json(const Options& opt, const std::string& filename, const Json& j) {
  if (!opt.quiet) std::cout << j.dump(2) << "\n";
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    infotrap::write_file(fs::path(opt.out) / filename, j.dump(2) + "\n");
  }
}

Json analysis_json(const infotrap::Scenario& s) {
  using namespace infotrap;
  const auto& env = s.environment;
  Json j;
  j["name"] = s.name;
  if (!env.single_direction()) {
    const auto opt = optimal_frequency_numeric(env);
    j["numeric_only"] = true;
    j["lambda_star"] = detail::vector_json(opt.lambda.weights());
    j["asymptotic_variance"] = opt.value;
    j["unique"] = opt.unique;
    return j;
  }
  Json sets = Json::array();
  for (const auto& rep : enumerate_minimal_spanning_sets(env)) {
    sets.push_back({{"indices", detail::index_set_json(rep.indices)},
                    {"beta", detail::vector_json(rep.beta)},
                    {"phi", rep.phi},
                    {"lambda_star", detail::vector_json(rep.lambda_star.weights())},
                    {"subspace_optimal", is_subspace_optimal(env, rep.indices)}});
  }
  const auto l1 = phi_by_l1(env);
  j["minimal_spanning_sets"] = sets;
  j["phi_by_l1"] = l1.phi_min;
  j["assumption_report"] = assumption_json(check_assumptions(env));
  return j;
}

Json oracle_json(const infotrap::Scenario& s, std::int64_t t) {
  using namespace infotrap;
  const auto res = optimal_division(s.environment, s.prior, t);
  Json optima = Json::array();
  for (const auto& d : res.all_optima) optima.push_back(d.counts());
  Json j;
  j["name"] = s.name;
  j["t"] = t;
  j["counts"] = res.counts.counts();
  j["value"] = res.value;
  j["num_optima"] = res.num_optima;
  j["all_optima"] = optima;
  return j;
}

std::string compare_csv(const infotrap::Scenario& s, std::int64_t t) {
  using namespace infotrap;
  const auto rows = greedy_vs_optimal(s.environment, s.prior, t, s.tie_break);
  std::ostringstream out;
  out << "t,greedy_variance,optimal_variance,ratio,exact\n";
  for (const auto& r : rows) {
    out << r.t << "," << detail::format_double(r.greedy_variance) << ","
        << detail::format_double(r.optimal_variance) << "," << detail::format_double(r.ratio) << ","
        << (r.exact ? 1 : 0) << "\n";
  }
  return out.str();
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      grid.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw infotrap::InvalidArgument("bad grid value \"" + item + "\"");
    }
  }
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential learning from correlated Gaussian sources"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("file", opt.file, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_flag("--quiet", opt.quiet, "Suppress stdout output");
  };
  auto* analyze = app.add_subcommand("analyze", "Minimal spanning sets, phi and assumption checks");
  add_common(analyze);
  auto* simulate = app.add_subcommand("simulate", "Run greedy dynamics and write traces and reports");
  add_common(simulate);
  auto* oracle = app.add_subcommand("oracle", "Exact t-optimal division");
  add_common(oracle);
  oracle->add_option("--t", opt.t, "Number of observations")->required()->check(CLI::PositiveNumber);
  auto* sweep = app.add_subcommand("sweep", "Sweep one prior variance over a grid");
  add_common(sweep);
  sweep->add_option("--state", opt.state, "State index (1-based)")->required()->check(CLI::PositiveNumber);
  sweep->add_option("--grid", opt.grid, "Comma-separated increasing variances")->required();
  auto* compare = app.add_subcommand("compare", "Greedy against the t-optimal benchmark");
  add_common(compare);
  compare->add_option("--t", opt.t, "Horizon")->required()->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto scenarios = infotrap::load_scenarios(opt.file);
    if (*simulate) return infotrap::run_batch(scenarios, opt.out, opt.quiet, std::cout);
    for (const auto& s : scenarios) {
      if (*analyze) {
        emit_json(opt, s.name + ".analysis.json", analysis_json(s));
      } else if (*oracle) {
        emit_json(opt, s.name + ".oracle.json", oracle_json(s, opt.t));
      } else if (*sweep) {
        infotrap::SweepSpec spec{s, opt.state - 1, parse_grid(opt.grid)};
        emit_json(opt, s.name + ".sweep.json", infotrap::sweep_json(spec, infotrap::sweep(spec)));
      } else if (*compare) {
        const std::string csv = compare_csv(s, opt.t);
        if (!opt.quiet) std::cout << csv;
        fs::create_directories(opt.out);
        infotrap::write_file(fs::path(opt.out) / (s.name + ".compare.csv"), csv);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
