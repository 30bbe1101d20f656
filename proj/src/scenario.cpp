#include "kinokit/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "kinokit/parallel.hpp"

namespace kinokit {

namespace {

using nlohmann::ordered_json;

std::string num(double x) {
  if (std::isnan(x)) return ".nan";
  if (std::isinf(x)) return x > 0 ? ".inf" : "-.inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string num_list(const std::vector<double>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + num(xs[i]);
  return out + "]";
}

std::string vec_list(const Vec& v) {
  std::vector<double> xs;
  for (int i = 0; i < v.dim(); ++i) xs.push_back(v[i]);
  return num_list(xs);
}

// ---- reading -------------------------------------------------------------

class Reader {
public:
  std::vector<std::string> problems;

  void keys(const YAML::Node& n, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!n.IsMap()) {
      problems.push_back(where + ": expected a mapping");
      return;
    }
    for (const auto& kv : n) {
      const auto k = kv.first.as<std::string>();
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
        problems.push_back(where + ": unknown key '" + k + "'" + line_of(kv.first));
    }
  }

  double number(const YAML::Node& n, const std::string& where, double fallback) {
    if (!n) return fallback;
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      problems.push_back(where + ": expected a number" + line_of(n));
      return fallback;
    }
  }

  template <class Int>
  Int integer(const YAML::Node& n, const std::string& where, Int fallback) {
    if (!n) return fallback;
    try {
      return n.as<Int>();
    } catch (const YAML::Exception&) {
      problems.push_back(where + ": expected an integer" + line_of(n));
      return fallback;
    }
  }

  std::string text(const YAML::Node& n, const std::string& where, const std::string& fallback) {
    if (!n) return fallback;
    if (!n.IsScalar()) {
      problems.push_back(where + ": expected a string" + line_of(n));
      return fallback;
    }
    return n.as<std::string>();
  }

  std::vector<double> numbers(const YAML::Node& n, const std::string& where, std::vector<double> fallback) {
    if (!n) return fallback;
    if (!n.IsSequence()) {
      problems.push_back(where + ": expected a list" + line_of(n));
      return fallback;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(number(n[i], where + "[" + std::to_string(i) + "]", 0.0));
    return out;
  }

  Vec vec(const YAML::Node& n, const std::string& where, int d) {
    if (!n) return Vec::zero(d);
    const auto xs = numbers(n, where, {});
    if (static_cast<int>(xs.size()) != d) {
      problems.push_back(where + ": expected " + std::to_string(d) + " entries");
      return Vec::zero(d);
    }
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = xs[static_cast<std::size_t>(i)];
    return v;
  }

  static std::string line_of(const YAML::Node& n) {
    const auto m = n.Mark();
    if (m.line < 0) return "";
    return " (line " + std::to_string(m.line + 1) + ")";
  }
};

YAML::Node json_to_yaml(const nlohmann::json& j) {
  YAML::Node n;
  switch (j.type()) {
    case nlohmann::json::value_t::object:
      n = YAML::Node(YAML::NodeType::Map);
      for (auto it = j.begin(); it != j.end(); ++it) n[it.key()] = json_to_yaml(it.value());
      break;
    case nlohmann::json::value_t::array:
      n = YAML::Node(YAML::NodeType::Sequence);
      for (const auto& x : j) n.push_back(json_to_yaml(x));
      break;
    case nlohmann::json::value_t::string:
      n = j.get<std::string>();
      break;
    case nlohmann::json::value_t::boolean:
      n = j.get<bool>();
      break;
    case nlohmann::json::value_t::number_unsigned:
      n = j.get<std::uint64_t>();
      break;
    case nlohmann::json::value_t::number_integer:
      n = j.get<std::int64_t>();
      break;
    case nlohmann::json::value_t::number_float:
      n = num(j.get<double>());
      break;
    default:
      break;
  }
  return n;
}

Scenario from_node(const YAML::Node& root) {
  Reader rd;
  Scenario sc;
  if (!root.IsMap()) throw ScenarioError("scenario: top level must be a mapping");
  rd.keys(root, "scenario",
          {"seed", "params", "profile", "hydro_bounds", "sweep", "quadrature", "tolerances", "tolerance_scale",
           "mc_samples", "checks"});
  if (!root["seed"])
    rd.problems.push_back("seed: required");
  else
    sc.seed = rd.integer<std::uint64_t>(root["seed"], "seed", 42);

  const YAML::Node P = root["params"];
  if (!P) {
    rd.problems.push_back("params: required");
  } else {
    rd.keys(P, "params", {"d", "gamma", "s", "kernel_mode", "c_b", "b_norm", "a_cap"});
    auto& p = sc.params;
    p.d = rd.integer<int>(P["d"], "params.d", p.d);
    p.gamma = rd.number(P["gamma"], "params.gamma", p.gamma);
    p.s = rd.number(P["s"], "params.s", p.s);
    try {
      p.kernel_mode = kernel_mode_from_string(rd.text(P["kernel_mode"], "params.kernel_mode", "model"));
    } catch (const std::exception& e) {
      rd.problems.push_back(std::string("params.kernel_mode: ") + e.what());
    }
    p.c_b = rd.number(P["c_b"], "params.c_b", p.c_b);
    p.b_norm = rd.number(P["b_norm"], "params.b_norm", p.b_norm);
    p.a_cap = rd.number(P["a_cap"], "params.a_cap", p.a_cap);
  }
  const int d = (sc.params.d == 2 || sc.params.d == 3) ? sc.params.d : 3;

  sc.profile = Profile::maxwellian(d);
  if (const YAML::Node F = root["profile"]) {
    rd.keys(F, "profile", {"components", "bump"});
    Profile prof(d);
    if (const YAML::Node C = F["components"]) {
      if (!C.IsSequence()) rd.problems.push_back("profile.components: expected a list");
      for (std::size_t i = 0; C.IsSequence() && i < C.size(); ++i) {
        const std::string w = "profile.components[" + std::to_string(i) + "]";
        rd.keys(C[i], w, {"mass", "temperature", "drift"});
        if (!C[i].IsMap()) continue;
        GaussianComponent g;
        g.mass = rd.number(C[i]["mass"], w + ".mass", 1.0);
        g.temperature = rd.number(C[i]["temperature"], w + ".temperature", 1.0);
        g.drift = rd.vec(C[i]["drift"], w + ".drift", d);
        try {
          prof.add(g);
        } catch (const std::exception& e) {
          rd.problems.push_back(w + ": " + e.what());
        }
      }
    }
    if (const YAML::Node B = F["bump"]) {
      rd.keys(B, "profile.bump", {"center", "radius", "amplitude", "smoothness"});
      if (B.IsMap()) {
        CompactBump b;
        b.center = rd.vec(B["center"], "profile.bump.center", d);
        b.radius = rd.number(B["radius"], "profile.bump.radius", 1.0);
        b.amplitude = rd.number(B["amplitude"], "profile.bump.amplitude", 1.0);
        b.smoothness = rd.integer<int>(B["smoothness"], "profile.bump.smoothness", 0);
        try {
          prof.set_bump(b);
        } catch (const std::exception& e) {
          rd.problems.push_back(std::string("profile.bump: ") + e.what());
        }
      }
    }
    sc.profile = prof;
  }

  if (const YAML::Node H = root["hydro_bounds"]) {
    rd.keys(H, "hydro_bounds", {"m0", "M0", "E0", "H0"});
    auto& h = sc.hydro_bounds;
    h.m0 = rd.number(H["m0"], "hydro_bounds.m0", h.m0);
    h.M0 = rd.number(H["M0"], "hydro_bounds.M0", h.M0);
    h.E0 = rd.number(H["E0"], "hydro_bounds.E0", h.E0);
    h.H0 = rd.number(H["H0"], "hydro_bounds.H0", h.H0);
  }
  if (const YAML::Node S = root["sweep"]) {
    rd.keys(S, "sweep", {"v0_magnitudes", "radii", "directions"});
    auto& g = sc.sweep;
    g.v0_magnitudes = rd.numbers(S["v0_magnitudes"], "sweep.v0_magnitudes", g.v0_magnitudes);
    g.radii = rd.numbers(S["radii"], "sweep.radii", g.radii);
    g.directions = rd.integer<int>(S["directions"], "sweep.directions", g.directions);
  }
  if (const YAML::Node Q = root["quadrature"]) {
    rd.keys(Q, "quadrature", {"rel_tol", "abs_tol", "max_subdivisions", "radial_cutoff"});
    auto& q = sc.quadrature;
    q.rel_tol = rd.number(Q["rel_tol"], "quadrature.rel_tol", q.rel_tol);
    q.abs_tol = rd.number(Q["abs_tol"], "quadrature.abs_tol", q.abs_tol);
    q.max_subdivisions = rd.integer<int>(Q["max_subdivisions"], "quadrature.max_subdivisions", q.max_subdivisions);
    q.radial_cutoff = rd.number(Q["radial_cutoff"], "quadrature.radial_cutoff", q.radial_cutoff);
  }
  if (const YAML::Node T = root["tolerances"]) {
    rd.keys(T, "tolerances",
            {"lambda_min", "anchor_factor", "uniformity", "mu_min", "fit_slack", "cone_slack", "min_r_squared",
             "distance_band", "c_max", "ratio_spread"});
    auto& t = sc.tolerances;
    t.lambda_min = rd.number(T["lambda_min"], "tolerances.lambda_min", t.lambda_min);
    t.anchor_factor = rd.number(T["anchor_factor"], "tolerances.anchor_factor", t.anchor_factor);
    t.uniformity = rd.number(T["uniformity"], "tolerances.uniformity", t.uniformity);
    t.mu_min = rd.number(T["mu_min"], "tolerances.mu_min", t.mu_min);
    t.fit_slack = rd.number(T["fit_slack"], "tolerances.fit_slack", t.fit_slack);
    t.cone_slack = rd.number(T["cone_slack"], "tolerances.cone_slack", t.cone_slack);
    t.min_r_squared = rd.number(T["min_r_squared"], "tolerances.min_r_squared", t.min_r_squared);
    t.distance_band = rd.number(T["distance_band"], "tolerances.distance_band", t.distance_band);
    t.c_max = rd.number(T["c_max"], "tolerances.c_max", t.c_max);
    t.ratio_spread = rd.number(T["ratio_spread"], "tolerances.ratio_spread", t.ratio_spread);
  }
  sc.tolerance_scale = rd.number(root["tolerance_scale"], "tolerance_scale", 1.0);
  sc.mc_samples = rd.integer<std::size_t>(root["mc_samples"], "mc_samples", sc.mc_samples);

  if (const YAML::Node C = root["checks"]) {
    if (!C.IsSequence()) rd.problems.push_back("checks: expected a list");
    for (std::size_t i = 0; C.IsSequence() && i < C.size(); ++i) {
      const std::string w = "checks[" + std::to_string(i) + "]";
      CheckSelection sel;
      if (C[i].IsScalar()) {
        sel.id = C[i].as<std::string>();
      } else {
        rd.keys(C[i], w, {"id", "overrides"});
        if (!C[i].IsMap()) continue;
        sel.id = rd.text(C[i]["id"], w + ".id", "");
        if (const YAML::Node O = C[i]["overrides"]) {
          if (!O.IsMap()) rd.problems.push_back(w + ".overrides: expected a mapping");
          for (const auto& kv : O) {
            const auto k = kv.first.as<std::string>();
            sel.overrides[k] = rd.number(kv.second, w + ".overrides." + k, 0.0);
          }
        }
      }
      sc.checks.push_back(sel);
    }
  }
  auto v = sc.violations();
  rd.problems.insert(rd.problems.end(), v.begin(), v.end());
  if (!rd.problems.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& p : rd.problems) msg += "\n  " + p;
    throw ScenarioError(msg);
  }
  return sc;
}

// ---- report --------------------------------------------------------------

ordered_json jnum(double x) {
  if (std::isfinite(x)) return x;
  return num(x);
}

ordered_json result_json(const CheckResult& r) {
  ordered_json j;
  j["check_id"] = r.check_id;
  j["pass"] = r.pass;
  ordered_json p;
  p["d"] = r.params.d;
  p["gamma"] = jnum(r.params.gamma);
  p["s"] = jnum(r.params.s);
  p["kernel_mode"] = to_string(r.params.kernel_mode);
  p["c_b"] = jnum(r.params.c_b);
  p["b_norm"] = jnum(r.params.b_norm);
  p["a_cap"] = jnum(r.params.a_cap);
  j["params"] = p;
  j["profile_hash"] = r.profile_hash;
  ordered_json coords = ordered_json::object();
  for (const auto& [k, v] : r.coords) coords[k] = jnum(v);
  j["coords"] = coords;
  ordered_json constants = ordered_json::object();
  for (const auto& [k, v] : r.constants) constants[k] = jnum(v);
  j["constants"] = constants;
  ordered_json fits = ordered_json::object();
  for (const auto& [k, f] : r.fits)
    fits[k] = {{"exponent", jnum(f.exponent)},
               {"intercept", jnum(f.intercept)},
               {"r_squared", jnum(f.r_squared)},
               {"n_points", f.n_points}};
  j["fits"] = fits;
  ordered_json series = ordered_json::object();
  for (const auto& [k, pts] : r.series) {
    ordered_json arr = ordered_json::array();
    for (const auto& [x, y] : pts) arr.push_back({jnum(x), jnum(y)});
    auto it = r.series_axis.find(k);
    series[k] = {{"axis", it == r.series_axis.end() ? "x" : it->second}, {"points", arr}};
  }
  j["series"] = series;
  ordered_json tol = ordered_json::object();
  for (const auto& [k, v] : r.tolerance) tol[k] = jnum(v);
  j["tolerance"] = tol;
  j["witness"] = r.witness;
  j["errors"] = r.errors;
  return j;
}

bool entry_ok(const ReportEntry& e) { return e.result.pass && e.result.errors.empty(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

void write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << body;
  if (!out) throw std::runtime_error("write failed for " + p.string());
}

}  // namespace

VerifyConfig Scenario::config() const {
  VerifyConfig c;
  c.grid = sweep;
  c.grid.seed = seed;
  c.tol = tolerances.scaled(tolerance_scale);
  c.quadrature = quadrature;
  c.mc_samples = mc_samples;
  return c;
}

std::vector<std::string> Scenario::violations() const {
  std::vector<std::string> out;
  auto guard = [&](const char* where, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      out.push_back(std::string(where) + ": " + e.what());
    }
  };
  guard("params", [&] { params.validate(); });
  if (profile.dim() != params.d) out.push_back("profile: dimension differs from params.d");
  guard("hydro_bounds", [&] { hydro_bounds.validate(); });
  guard("sweep", [&] { sweep.validate(); });
  if (!(quadrature.rel_tol > 0.0) || !(quadrature.abs_tol >= 0.0) || quadrature.max_subdivisions < 1 ||
      !(quadrature.radial_cutoff > 0.0))
    out.push_back("quadrature: tolerances and limits must be positive");
  if (!(tolerance_scale > 0.0) || !std::isfinite(tolerance_scale)) out.push_back("tolerance_scale must be positive");
  if (mc_samples == 0) out.push_back("mc_samples must be positive");
  std::set<std::string> seen;
  for (const auto& c : checks) {
    if (!is_check_id(c.id)) {
      out.push_back("checks: unknown check id '" + c.id + "'");
      continue;
    }
    if (!seen.insert(c.id).second) out.push_back("checks: duplicate check id '" + c.id + "'");
    const auto& keys = check_override_keys(c.id);
    for (const auto& [k, v] : c.overrides)
      if (std::find(keys.begin(), keys.end(), k) == keys.end())
        out.push_back("checks: '" + c.id + "' has no override '" + k + "'");
  }
  return out;
}

Scenario parse_scenario(const std::string& text, bool json) {
  YAML::Node root;
  if (json) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ScenarioError(std::string("parse error: ") + e.what());
    }
    root = json_to_yaml(j);
  } else {
    try {
      root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
      throw ScenarioError("parse error at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
  }
  return from_node(root);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.extension() == ".json");
}

std::string save_scenario(const Scenario& sc) {
  std::ostringstream o;
  const auto& p = sc.params;
  o << "seed: " << sc.seed << "\n";
  o << "params:\n";
  o << "  d: " << p.d << "\n";
  o << "  gamma: " << num(p.gamma) << "\n";
  o << "  s: " << num(p.s) << "\n";
  o << "  kernel_mode: " << to_string(p.kernel_mode) << "\n";
  o << "  c_b: " << num(p.c_b) << "\n";
  o << "  b_norm: " << num(p.b_norm) << "\n";
  o << "  a_cap: " << num(p.a_cap) << "\n";
  o << "profile:\n";
  if (sc.profile.components().empty()) {
    o << "  components: []\n";
  } else {
    o << "  components:\n";
    for (const auto& c : sc.profile.components()) {
      o << "    - mass: " << num(c.mass) << "\n";
      o << "      temperature: " << num(c.temperature) << "\n";
      o << "      drift: " << vec_list(c.drift) << "\n";
    }
  }
  if (const auto& b = sc.profile.bump()) {
    o << "  bump:\n";
    o << "    center: " << vec_list(b->center) << "\n";
    o << "    radius: " << num(b->radius) << "\n";
    o << "    amplitude: " << num(b->amplitude) << "\n";
    o << "    smoothness: " << b->smoothness << "\n";
  }
  const auto& h = sc.hydro_bounds;
  o << "hydro_bounds:\n";
  o << "  m0: " << num(h.m0) << "\n  M0: " << num(h.M0) << "\n  E0: " << num(h.E0) << "\n  H0: " << num(h.H0) << "\n";
  o << "sweep:\n";
  o << "  v0_magnitudes: " << num_list(sc.sweep.v0_magnitudes) << "\n";
  o << "  radii: " << num_list(sc.sweep.radii) << "\n";
  o << "  directions: " << sc.sweep.directions << "\n";
  const auto& q = sc.quadrature;
  o << "quadrature:\n";
  o << "  rel_tol: " << num(q.rel_tol) << "\n  abs_tol: " << num(q.abs_tol) << "\n";
  o << "  max_subdivisions: " << q.max_subdivisions << "\n  radial_cutoff: " << num(q.radial_cutoff) << "\n";
  const auto& t = sc.tolerances;
  o << "tolerances:\n";
  o << "  lambda_min: " << num(t.lambda_min) << "\n";
  o << "  anchor_factor: " << num(t.anchor_factor) << "\n";
  o << "  uniformity: " << num(t.uniformity) << "\n";
  o << "  mu_min: " << num(t.mu_min) << "\n";
  o << "  fit_slack: " << num(t.fit_slack) << "\n";
  o << "  cone_slack: " << num(t.cone_slack) << "\n";
  o << "  min_r_squared: " << num(t.min_r_squared) << "\n";
  o << "  distance_band: " << num(t.distance_band) << "\n";
  o << "  c_max: " << num(t.c_max) << "\n";
  o << "  ratio_spread: " << num(t.ratio_spread) << "\n";
  o << "tolerance_scale: " << num(sc.tolerance_scale) << "\n";
  o << "mc_samples: " << sc.mc_samples << "\n";
  if (sc.checks.empty()) {
    o << "checks: []\n";
  } else {
    o << "checks:\n";
    for (const auto& c : sc.checks) {
      o << "  - id: " << c.id << "\n";
      if (c.overrides.empty()) continue;
      o << "    overrides:\n";
      for (const auto& [k, v] : c.overrides) o << "      " << k << ": " << num(v) << "\n";
    }
  }
  return o.str();
}

std::string scenario_digest(const Scenario& sc) {
  const std::string text = save_scenario(sc);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool Report::all_pass() const {
  return hydro_ok && std::all_of(entries.begin(), entries.end(), entry_ok);
}

int Report::exit_code() const { return all_pass() ? 0 : 1; }

Report run_scenario(const Scenario& sc, int workers) {
  const auto bad = sc.violations();
  if (!bad.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ScenarioError(msg);
  }
  const int saved = default_workers();
  if (workers > 0) set_default_workers(workers);
  Report rep;
  rep.scenario_digest = scenario_digest(sc);
  try {
    if (sc.profile.is_zero()) {
      rep.hydro = {};
    } else {
      rep.hydro = hydro_quantities(sc.profile, sc.params);
    }
    rep.hydro_ok = hydro_gate(rep.hydro, sc.hydro_bounds);
    const VerifyConfig cfg = sc.config();
    for (const auto& sel : sc.checks) {
      const auto t0 = std::chrono::steady_clock::now();
      ReportEntry e;
      e.result = run_check(sel.id, sc.profile, sc.params, cfg, sel.overrides);
      e.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rep.entries.push_back(std::move(e));
    }
  } catch (...) {
    set_default_workers(saved);
    throw;
  }
  set_default_workers(saved);
  std::stable_sort(rep.entries.begin(), rep.entries.end(), [](const ReportEntry& a, const ReportEntry& b) {
    if (a.result.check_id != b.result.check_id) return a.result.check_id < b.result.check_id;
    return a.result.coords < b.result.coords;
  });
  return rep;
}

std::string report_json(const Report& r, bool with_timing) {
  ordered_json j;
  j["tool_version"] = r.tool_version;
  j["scenario_digest"] = r.scenario_digest;
  j["hydro"] = {{"mass", jnum(r.hydro.mass)},
                {"energy", jnum(r.hydro.energy)},
                {"entropy", jnum(r.hydro.entropy)},
                {"entropy_error", jnum(r.hydro.entropy_error)},
                {"gate", r.hydro_ok}};
  std::size_t passed = 0, errored = 0;
  ordered_json worst = nullptr;
  double worst_val = -1.0;
  ordered_json exps = ordered_json::object();
  for (const auto& e : r.entries) {
    if (entry_ok(e)) ++passed;
    if (!e.result.errors.empty()) ++errored;
    for (const auto& [k, v] : e.result.constants) {
      if (k.find("uniformity") == std::string::npos) continue;
      if (v > worst_val) {
        worst_val = v;
        worst = {{"check_id", e.result.check_id}, {"name", k}, {"value", jnum(v)}};
      }
    }
    for (const auto& [k, f] : e.result.fits) exps[e.result.check_id + "." + k] = jnum(f.exponent);
  }
  j["summary"] = {{"checks", r.entries.size()},
                  {"passed", passed},
                  {"failed", r.entries.size() - passed},
                  {"with_errors", errored},
                  {"all_pass", r.all_pass()},
                  {"worst_uniformity", worst},
                  {"fitted_exponents", exps}};
  ordered_json results = ordered_json::array();
  for (const auto& e : r.entries) results.push_back(result_json(e.result));
  j["results"] = results;
  if (with_timing) {
    ordered_json t = ordered_json::object();
    for (const auto& e : r.entries) t[e.result.check_id] = e.wall_seconds;
    j["wall_seconds"] = t;
  }
  return j.dump(2) + "\n";
}

std::string report_csv(const Report& r) {
  std::ostringstream o;
  o << "check_id,v0,r,name,value,pass\n";
  auto coord = [](const CheckResult& c, const char* k) {
    auto it = c.coords.find(k);
    return it == c.coords.end() ? std::string() : num(it->second);
  };
  for (const auto& e : r.entries) {
    const auto& c = e.result;
    const std::string pass = entry_ok(e) ? "1" : "0";
    const std::string v0 = coord(c, "v0"), rr = coord(c, "r");
    for (const auto& [k, v] : c.constants)
      o << csv_field(c.check_id) << "," << v0 << "," << rr << "," << csv_field(k) << "," << num(v) << "," << pass
        << "\n";
    for (const auto& [k, f] : c.fits)
      o << csv_field(c.check_id) << "," << v0 << "," << rr << "," << csv_field("fit." + k + ".exponent") << ","
        << num(f.exponent) << "," << pass << "\n";
    for (const auto& [k, pts] : c.series) {
      auto it = c.series_axis.find(k);
      const std::string axis = it == c.series_axis.end() ? "x" : it->second;
      for (const auto& [x, y] : pts) {
        std::string sv0 = v0, sr = rr, name = k;
        if (axis == "v0")
          sv0 = num(x);
        else if (axis == "r" || axis == "R")
          sr = num(x);
        else
          name += "[" + axis + "=" + num(x) + "]";
        o << csv_field(c.check_id) << "," << sv0 << "," << sr << "," << csv_field(name) << "," << num(y) << ","
          << pass << "\n";
      }
    }
  }
  return o.str();
}

std::string series_csv(const CheckResult& r) {
  std::ostringstream o;
  o << "series,x_axis,x,value\n";
  for (const auto& [k, pts] : r.series) {
    auto it = r.series_axis.find(k);
    const std::string axis = it == r.series_axis.end() ? "x" : it->second;
    for (const auto& [x, y] : pts) o << csv_field(k) << "," << axis << "," << num(x) << "," << num(y) << "\n";
  }
  return o.str();
}

EmitFormat emit_format_from_string(const std::string& s) {
  if (s == "json") return EmitFormat::json;
  if (s == "csv") return EmitFormat::csv;
  if (s == "all") return EmitFormat::all;
  throw std::invalid_argument("unknown format '" + s + "' (json, csv or all)");
}

std::vector<std::filesystem::path> emit_report(const Report& r, const std::filesystem::path& dir, EmitFormat fmt) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  if (fmt != EmitFormat::csv) {
    out.push_back(dir / "report.json");
    write_file(out.back(), report_json(r));
  }
  if (fmt != EmitFormat::json) {
    out.push_back(dir / "report.csv");
    write_file(out.back(), report_csv(r));
    for (const auto& e : r.entries) {
      if (e.result.series.empty()) continue;
      out.push_back(dir / ("series_" + e.result.check_id + ".csv"));
      write_file(out.back(), series_csv(e.result));
    }
  }
  ordered_json t = ordered_json::object();
  for (const auto& e : r.entries) t[e.result.check_id] = e.wall_seconds;
  out.push_back(dir / "timing.json");
  write_file(out.back(), t.dump(2) + "\n");
  return out;
}

}  // namespace kinokit
