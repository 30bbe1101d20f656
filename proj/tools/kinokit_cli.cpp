#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kinokit/parallel.hpp"
#include "kinokit/scenario.hpp"

using namespace kinokit;

namespace {

constexpr int kConfigError = 2;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double x = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("not a number: '" + item + "'");
    out.push_back(x);
  }
  return out;
}

std::vector<std::string> split_ids(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Vec to_vec(const std::vector<double>& xs, const char* what) {
  if (xs.size() < 2 || xs.size() > 3) throw std::invalid_argument(std::string(what) + ": need 2 or 3 components");
  Vec v(static_cast<int>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<int>(i)] = xs[i];
  return v;
}

struct Common {
  std::string config;
  std::string seed;
  int workers = 0;
  std::string out = "kinokit_out";
  std::string format = "all";
  std::string checks;
  std::string v0;
  double tolerance_scale = 0.0;
  bool all = false;
};

void add_common(CLI::App* app, Common& c, bool outputs) {
  app->add_option("--config", c.config, "Scenario file (YAML, or JSON by extension)");
  app->add_option("--seed", c.seed, "Override the scenario seed");
  app->add_option("--workers", c.workers, "Worker threads (default: KINOKIT_WORKERS or 1)")->check(CLI::PositiveNumber);
  app->add_option("--checks", c.checks, "Comma-separated check ids replacing the scenario selection");
  app->add_option("--v0", c.v0, "Comma-separated |v0| grid");
  app->add_option("--tolerance-scale", c.tolerance_scale, "Loosen every tolerance by this factor");
  if (outputs) {
    app->add_option("--out", c.out, "Output directory");
    app->add_option("--format", c.format, "json, csv or all")->check(CLI::IsMember({"json", "csv", "all"}));
  }
}

Scenario reference_scenario() { return parse_scenario("seed: 42\nparams: {d: 3, gamma: 0, s: 0.25}\n"); }

Scenario build_scenario(const Common& c) {
  Scenario sc = c.config.empty() ? reference_scenario() : load_scenario(c.config);
  if (!c.seed.empty()) {
    std::size_t used = 0;
    const auto seed = std::stoull(c.seed, &used);
    if (used != c.seed.size()) throw ScenarioError("--seed: not an unsigned integer");
    sc.seed = seed;
  }
  if (c.all) {
    sc.checks.clear();
    for (const auto& id : check_ids()) sc.checks.push_back({id, {}});
  } else if (!c.checks.empty()) {
    std::vector<CheckSelection> sel;
    for (const auto& id : split_ids(c.checks)) {
      auto it = std::find_if(sc.checks.begin(), sc.checks.end(), [&](const auto& x) { return x.id == id; });
      sel.push_back(it != sc.checks.end() ? *it : CheckSelection{id, {}});
    }
    sc.checks = sel;
  }
  if (!c.v0.empty()) sc.sweep.v0_magnitudes = parse_list(c.v0);
  if (c.tolerance_scale != 0.0) sc.tolerance_scale = c.tolerance_scale;
  const auto bad = sc.violations();
  if (!bad.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ScenarioError(msg);
  }
  return sc;
}

void print_summary(const Report& rep, std::ostream& os) {
  for (const auto& e : rep.entries) {
    const auto& r = e.result;
    const bool ok = r.pass && r.errors.empty();
    os << (ok ? "PASS " : "FAIL ") << r.check_id;
    for (const auto& [k, v] : r.constants)
      if (k.find("uniformity") != std::string::npos) os << "  " << k << "=" << v;
    for (const auto& [k, f] : r.fits) os << "  fit." << k << "=" << f.exponent;
    os << "\n";
    for (const auto& w : r.errors) os << "    error: " << w << "\n";
  }
  if (!rep.hydro_ok) os << "FAIL hydro gate (mass " << rep.hydro.mass << ", energy " << rep.hydro.energy << ")\n";
}

int cmd_verify(const Common& c, bool print_series) {
  const Scenario sc = build_scenario(c);
  const Report rep = run_scenario(sc, c.workers);
  const auto files = emit_report(rep, c.out, emit_format_from_string(c.format));
  print_summary(rep, std::cout);
  if (print_series)
    for (const auto& e : rep.entries) std::cout << "# " << e.result.check_id << "\n" << series_csv(e.result);
  for (const auto& f : files) std::cerr << "wrote " << f.string() << "\n";
  return rep.exit_code();
}

int cmd_report(const std::string& in, const std::string& format) {
  std::filesystem::path p(in);
  if (std::filesystem::is_directory(p)) p /= "report.json";
  std::ifstream is(p);
  if (!is) {
    std::cerr << "cannot open " << p.string() << "\n";
    return kConfigError;
  }
  const auto j = nlohmann::json::parse(is);
  if (format == "csv") {
    std::cout << "check_id,pass,errors\n";
    for (const auto& r : j["results"])
      std::cout << r["check_id"].get<std::string>() << "," << (r["pass"].get<bool>() ? 1 : 0) << ","
                << r["errors"].size() << "\n";
  } else {
    std::cout << j["tool_version"].get<std::string>() << "  scenario " << j["scenario_digest"].get<std::string>()
              << "\n";
    for (const auto& r : j["results"]) {
      std::cout << (r["pass"].get<bool>() && r["errors"].empty() ? "PASS " : "FAIL ")
                << r["check_id"].get<std::string>();
      for (auto it = r["fits"].begin(); it != r["fits"].end(); ++it)
        std::cout << "  fit." << it.key() << "=" << it.value()["exponent"];
      std::cout << "\n";
    }
    const auto& s = j["summary"];
    std::cout << s["passed"] << "/" << s["checks"] << " passed\n";
  }
  return j["summary"]["all_pass"].get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetic kernel ellipticity verification toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  Common verify_opts, sweep_opts, hydro_opts, kernel_opts;
  auto* verify = app.add_subcommand("verify", "Run the selected checks and write the report");
  add_common(verify, verify_opts, true);
  verify->add_flag("--all", verify_opts.all, "Run every registered check");

  auto* sweep = app.add_subcommand("sweep", "Run checks over a |v0| grid and print their series");
  add_common(sweep, sweep_opts, true);

  auto* hydro = app.add_subcommand("hydro", "Mass, energy and entropy of the scenario profile");
  hydro->add_option("--config", hydro_opts.config, "Scenario file");

  std::string z1s, z2s;
  double dist_s = 0.25;
  auto* distance = app.add_subcommand("distance", "Kinetic distance between two phase-space points");
  distance->add_option("--z1", z1s, "t,x...,v... (2d+1 numbers)")->required();
  distance->add_option("--z2", z2s, "t,x...,v... (2d+1 numbers)")->required();
  distance->add_option("--s", dist_s, "Order s in (0,1)");

  std::string vs, vps, cov;
  auto* kernel = app.add_subcommand("kernel", "Evaluate the collision kernel K_f(v, v')");
  kernel->add_option("--config", kernel_opts.config, "Scenario file for params and profile");
  kernel->add_option("--v", vs, "Base velocity")->required();
  kernel->add_option("--vp", vps, "Second velocity")->required();
  kernel->add_option("--cov", cov, "Base velocity v0 of a change of variables; evaluates the transformed kernel");

  std::string report_in = "kinokit_out", report_format = "text";
  auto* report = app.add_subcommand("report", "Summarise an existing report.json");
  report->add_option("--in", report_in, "Report file or output directory");
  report->add_option("--format", report_format, "text or csv")->check(CLI::IsMember({"text", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  try {
    for (Common* c : {&verify_opts, &sweep_opts})
      if (c->workers > 0) set_default_workers(c->workers);
    if (*verify) return cmd_verify(verify_opts, false);
    if (*sweep) return cmd_verify(sweep_opts, true);
    if (*report) return cmd_report(report_in, report_format);
    if (*hydro) {
      const Scenario sc = hydro_opts.config.empty() ? reference_scenario() : load_scenario(hydro_opts.config);
      const auto h = hydro_quantities(sc.profile, sc.params);
      const bool ok = hydro_gate(h, sc.hydro_bounds);
      std::printf("mass %.12g\nenergy %.12g\nentropy %.12g (+- %.3g)\ngate %s\n", h.mass, h.energy, h.entropy,
                  h.entropy_error, ok ? "pass" : "fail");
      return ok ? 0 : 1;
    }
    if (*distance) {
      const auto a = parse_list(z1s), b = parse_list(z2s);
      if (a.size() != b.size() || (a.size() != 5 && a.size() != 7))
        throw std::invalid_argument("points need 5 (d=2) or 7 (d=3) matching components");
      const int d = static_cast<int>(a.size() - 1) / 2;
      auto point = [d](const std::vector<double>& xs) {
        Point z{xs[0], Vec(d), Vec(d)};
        for (int i = 0; i < d; ++i) {
          z.x[i] = xs[static_cast<std::size_t>(1 + i)];
          z.v[i] = xs[static_cast<std::size_t>(1 + d + i)];
        }
        return z;
      };
      if (!(dist_s > 0.0 && dist_s < 1.0)) throw std::invalid_argument("0 < s < 1 violated");
      std::printf("%.15g\n", kdistance(point(a), point(b), dist_s));
      return 0;
    }
    if (*kernel) {
      const Scenario sc = kernel_opts.config.empty() ? reference_scenario() : load_scenario(kernel_opts.config);
      const Vec v = to_vec(parse_list(vs), "--v"), vp = to_vec(parse_list(vps), "--vp");
      if (v.dim() != sc.params.d || vp.dim() != sc.params.d)
        throw std::invalid_argument("velocity dimension differs from params.d");
      KernelEval k;
      if (cov.empty()) {
        k = kernel_eval(sc.profile, sc.params, v, vp, sc.quadrature);
      } else {
        const Vec v0 = to_vec(parse_list(cov), "--cov");
        const CovMap M = make_cov_map(v0, sc.params);
        k = kernel_cov_eval(sc.profile, sc.params, M, Point{0.0, Vec::zero(v.dim()), v}, vp - v, sc.quadrature);
      }
      std::printf("%.15g\n", k.value);
      return 0;
    }
  } catch (const ScenarioError& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
