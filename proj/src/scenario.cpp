#include "qc/scenario.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qc/numeric.hpp"

namespace qc {

using nlohmann::json;

namespace {

// ---- field access with path-carrying errors

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw SchemaError(path + "." + key, "missing required field");
  return j.at(key);
}

double num_at(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) throw SchemaError(path + "." + key, "expected a number");
  return v.get<double>();
}

double num_or(const json& j, const char* key, double fallback,
              const std::string& path) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) throw SchemaError(path + "." + key, "expected a number");
  return v.get<double>();
}

int int_or(const json& j, const char* key, int fallback,
           const std::string& path) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer())
    throw SchemaError(path + "." + key, "expected an integer");
  return v.get<int>();
}

bool bool_or(const json& j, const char* key, bool fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return j.at(key).get<bool>();
}

std::string str_at(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_string()) throw SchemaError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> vec_at(const json& j, const char* key,
                           const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_array()) throw SchemaError(path + "." + key, "expected an array");
  std::vector<double> out;
  for (const json& x : v) {
    if (!x.is_number())
      throw SchemaError(path + "." + key, "expected numeric entries");
    out.push_back(x.get<double>());
  }
  return out;
}

// ---- domain object parsers

Weight parse_weight(const json& j, const std::string& path) {
  const std::string kind = str_at(j, "kind", path);
  if (kind == "constant") return Weight::constant(num_at(j, "c", path));
  if (kind == "power") {
    std::vector<double> center;
    if (j.contains("center")) center = vec_at(j, "center", path);
    return Weight::power(num_at(j, "beta", path), std::move(center));
  }
  if (kind == "log_power") {
    std::vector<double> center;
    if (j.contains("center")) center = vec_at(j, "center", path);
    return Weight::log_power(num_at(j, "gamma", path), std::move(center));
  }
  if (kind == "linear")
    return Weight::linear(vec_at(j, "a", path), num_at(j, "b", path));
  if (kind == "grid") {
    GridSpec spec;
    spec.origin = vec_at(j, "origin", path);
    spec.spacing = vec_at(j, "spacing", path);
    for (double s : vec_at(j, "shape", path))
      spec.shape.push_back(static_cast<int>(s));
    spec.values = vec_at(j, "values", path);
    return Weight::grid(std::move(spec));
  }
  if (kind == "product" || kind == "sum") {
    const char* key = kind == "product" ? "factors" : "terms";
    const json& arr = require(j, key, path);
    if (!arr.is_array() || arr.empty())
      throw SchemaError(path + "." + key, "expected a nonempty array");
    std::vector<Weight> parts;
    for (std::size_t i = 0; i < arr.size(); ++i)
      parts.push_back(
          parse_weight(arr[i], path + "." + key + "[" + std::to_string(i) + "]"));
    return kind == "product" ? Weight::product(std::move(parts))
                             : Weight::sum(std::move(parts));
  }
  throw SchemaError(path + ".kind", "unknown weight kind '" + kind + "'");
}

Mapping parse_mapping(const json& j, int n, const std::string& path) {
  const std::string kind = str_at(j, "kind", path);
  Mapping m = Mapping::identity(n);
  if (kind == "identity") {
    m = Mapping::identity(n);
  } else if (kind == "linear") {
    const json& rows = require(j, "matrix", path);
    if (!rows.is_array() || static_cast<int>(rows.size()) != n)
      throw SchemaError(path + ".matrix", "expected an n x n array");
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i) {
      const json& row = rows[i];
      if (!row.is_array() || static_cast<int>(row.size()) != n)
        throw SchemaError(path + ".matrix", "expected an n x n array");
      for (int k = 0; k < n; ++k) a(i, k) = row[k].get<double>();
    }
    m = Mapping::linear(std::move(a));
  } else if (kind == "radial_stretch") {
    m = Mapping::radial_stretch(n, num_at(j, "c", path));
  } else if (kind == "translate") {
    const std::vector<double> v = vec_at(j, "v", path);
    if (static_cast<int>(v.size()) != n)
      throw SchemaError(path + ".v", "dimension mismatch");
    m = Mapping::translate(Eigen::Map<const Eigen::VectorXd>(v.data(), n));
  } else if (kind == "compose") {
    const json& arr = require(j, "chain", path);
    if (!arr.is_array() || arr.empty())
      throw SchemaError(path + ".chain", "expected a nonempty array");
    std::vector<Mapping> chain;
    for (std::size_t i = 0; i < arr.size(); ++i)
      chain.push_back(
          parse_mapping(arr[i], n, path + ".chain[" + std::to_string(i) + "]"));
    m = Mapping::compose(std::move(chain));
  } else {
    throw SchemaError(path + ".kind", "unknown mapping kind '" + kind + "'");
  }
  const int mult = int_or(j, "multiplicity", 1, path);
  return mult == 1 ? m : m.with_multiplicity(mult);
}

Orlicz parse_orlicz(const json& j, const std::string& path) {
  const std::string kind = str_at(j, "kind", path);
  if (kind == "power") return Orlicz::power(num_at(j, "q", path));
  if (kind == "power_log")
    return Orlicz::power_log(num_at(j, "q", path), num_at(j, "a", path));
  if (kind == "table")
    return Orlicz::table(vec_at(j, "t", path), vec_at(j, "v", path));
  throw SchemaError(path + ".kind", "unknown gauge kind '" + kind + "'");
}

// ---- serializers

json to_json(const ExtReal& x) {
  return json{{"value", x.infinite ? 0.0 : x.value}, {"infinite", x.infinite}};
}

json to_json(const CriterionVerdict& v) {
  json ladder = json::array();
  for (const LadderRung& r : v.ladder)
    ladder.push_back(json{{"endpoint", r.endpoint},
                          {"increment", r.finite ? r.increment : 0.0},
                          {"finite", r.finite},
                          {"partial", r.partial}});
  return json{{"classification", to_string(v.cls)},
              {"value", v.value},
              {"limit_ratio", v.limit_ratio},
              {"fit_residual", v.fit_residual},
              {"ladder", std::move(ladder)},
              {"note", v.note}};
}

json to_json(const PairVerdict& v) {
  return json{{"finite_part", to_json(v.finite_part)},
              {"divergence_part", to_json(v.divergence_part)},
              {"satisfied", v.satisfied}};
}

json to_json(const RatioVerdict& v) {
  return json{{"r", v.r},         {"ratio", v.ratio},
              {"sup", v.sup},     {"classification", to_string(v.cls)},
              {"slope", v.slope}, {"note", v.note}};
}

json to_json(const FmoDiagnostic& v) {
  return json{{"eps", v.eps},
              {"oscillation", v.osc},
              {"limsup_estimate", v.limsup_estimate},
              {"slope", v.slope},
              {"classification", to_string(v.cls)},
              {"note", v.note}};
}

json to_json(const LogLogBound& v) {
  return json{{"eps", v.eps},
              {"lhs", v.lhs},
              {"ratio", v.ratio},
              {"band_factor", v.band_factor},
              {"classification", to_string(v.cls)},
              {"note", v.note}};
}

json to_json(const LittleOResult& v) {
  return json{{"eps", v.eps},     {"numerator", v.numer},
              {"I", v.ival},      {"ratio", v.ratio},
              {"classification", to_string(v.cls)},
              {"note", v.note}};
}

json to_json(const ExtensionReport& rep) {
  json items = json::array();
  for (const ExtensionItem& it : rep.items)
    items.push_back(json{{"name", it.name},
                         {"verdict", it.verdict},
                         {"detail", it.detail},
                         {"ok", it.ok},
                         {"informational", it.informational}});
  json out{{"items", std::move(items)}, {"overall", rep.overall}};
  if (rep.calderon) out["gauge"] = to_json(*rep.calderon);
  if (rep.pair) out["twin"] = to_json(*rep.pair);
  if (rep.fmo) out["fmo"] = to_json(*rep.fmo);
  if (rep.loglog) out["loglog"] = to_json(*rep.loglog);
  return out;
}

json to_json(const ModulusSolution& s) {
  return json{{"value", s.infinite ? 0.0 : s.value},
              {"infinite", s.infinite},
              {"p", s.p},
              {"max_violation", s.max_violation},
              {"iterations", s.iterations},
              {"gap", s.gap},
              {"note", s.note}};
}

json to_json(const DualityReport& r) {
  return json{{"p", r.p},
              {"p_prime", r.p_prime},
              {"capacity", r.cap},
              {"connecting_modulus", r.conn_mod},
              {"separating_modulus", r.sep_mod},
              {"residual_connecting", r.residual_connecting},
              {"residual_separating", r.residual_separating},
              {"note", r.note}};
}

// ---- analysis scenarios

struct AnalysisContext {
  int n = 0;
  std::vector<double> x0;
  Weight weight;
  std::optional<Mapping> mapping;
  std::optional<Orlicz> phi;
  CriterionParams params;
  double eps0 = 0.5;
  double e0 = 0.5;
  double r1 = 0.0, r2 = 0.0;
  double r_in = 0.0, r_out = 0.0;
  int ladder_depth = 20;
  int profile_per_octave = 8;
  std::uint64_t seed = 0;
  SphereResolution sphere;
  RadialRule radial{32, 8};
  double ls_s = 1.0;
  int perturbations = 20;
  std::vector<Route> routes{Route::divergence_pair, Route::fmo};
};

AnalysisContext parse_analysis(const json& doc, const RunOptions& opt) {
  AnalysisContext cx;
  cx.n = static_cast<int>(num_at(doc, "dimension", "$"));
  if (cx.n < 2 || cx.n > kMaxDim)
    throw SchemaError("$.dimension", "must be in [2, 6]");
  if (doc.contains("center")) {
    cx.x0 = vec_at(doc, "center", "$");
    if (static_cast<int>(cx.x0.size()) != cx.n)
      throw SchemaError("$.center", "dimension mismatch");
  }
  cx.weight = parse_weight(require(doc, "weight", "$"), "$.weight");
  if (doc.contains("mapping"))
    cx.mapping = parse_mapping(doc.at("mapping"), cx.n, "$.mapping");

  const json& par = require(doc, "parameters", "$");
  const std::string ppath = "$.parameters";
  const double p = num_or(par, "p", 0.0, ppath);
  const double alpha = num_or(par, "alpha", 0.0, ppath);
  if (p > 0.0) {
    cx.params = CriterionParams::from_p(cx.n, p);
    if (alpha > 0.0 && std::abs(alpha - cx.params.alpha) >
                           1e-9 * std::max(1.0, cx.params.alpha))
      throw SchemaError(ppath + ".alpha",
                        "inconsistent with p: alpha must equal p/(p-n+1)");
  } else if (alpha > 0.0) {
    cx.params = CriterionParams::from_alpha(cx.n, alpha);
  } else {
    throw SchemaError(ppath, "one of p or alpha is required");
  }
  if (par.contains("phi")) cx.phi = parse_orlicz(par.at("phi"), ppath + ".phi");

  cx.eps0 = num_or(par, "eps0", 0.5, ppath);
  cx.e0 = num_or(par, "e0", cx.eps0, ppath);
  cx.r1 = num_or(par, "r1", 1.0, ppath);
  cx.r2 = num_or(par, "r2", std::exp(1.0), ppath);
  cx.r_in = num_or(par, "r_in", 0.5, ppath);
  cx.r_out = num_or(par, "r_out", 2.0, ppath);
  cx.ladder_depth = int_or(par, "ladder_depth", 20, ppath);
  cx.profile_per_octave = int_or(par, "profile_per_octave", 8, ppath);
  cx.perturbations = int_or(par, "perturbations", 20, ppath);
  cx.ls_s = num_or(par, "s", cx.params.s, ppath);

  if (par.contains("seed")) {
    const json& s = par.at("seed");
    if (!s.is_number_unsigned())
      throw SchemaError(ppath + ".seed", "expected an unsigned integer");
    cx.seed = s.get<std::uint64_t>();
  }
  if (opt.seed_override) cx.seed = *opt.seed_override;
  if (opt.ladder_depth_override) cx.ladder_depth = *opt.ladder_depth_override;

  if (par.contains("sphere")) {
    const json& sp = par.at("sphere");
    cx.sphere.m = int_or(sp, "m", cx.sphere.m, ppath + ".sphere");
    cx.sphere.m1 = int_or(sp, "m1", cx.sphere.m1, ppath + ".sphere");
    cx.sphere.m2 = int_or(sp, "m2", cx.sphere.m2, ppath + ".sphere");
    cx.sphere.mc_samples =
        int_or(sp, "mc_samples", cx.sphere.mc_samples, ppath + ".sphere");
  }
  cx.sphere.seed = cx.seed;
  if (cx.n >= 4 && cx.seed == 0)
    throw SchemaError(ppath + ".seed",
                      "a nonzero seed is mandatory for Monte Carlo spheres (n >= 4)");
  cx.radial.panels = int_or(par, "radial_panels", 32, ppath);
  cx.radial.gauss = int_or(par, "gauss_order", 8, ppath);
  if (par.contains("routes")) {
    cx.routes.clear();
    for (const json& r : par.at("routes")) {
      const std::string name = r.get<std::string>();
      if (name == "twin") cx.routes.push_back(Route::divergence_pair);
      else if (name == "fmo") cx.routes.push_back(Route::fmo);
      else if (name == "loglog") cx.routes.push_back(Route::loglog_majorant);
      else throw SchemaError(ppath + ".routes", "unknown route '" + name + "'");
    }
    if (cx.routes.empty())
      throw SchemaError(ppath + ".routes", "route list is empty");
  }
  if (opt.strict) {
    cx.sphere = cx.sphere.scaled(2);
    cx.radial.panels *= 2;
    cx.profile_per_octave *= 2;
  }
  return cx;
}

// Deterministic random admissible candidates eta = eta0 + t (eta_alt - eta0):
// mixtures of eta0 with normalized positive bump profiles.
std::vector<RadialCandidate> random_candidates(const ExtremalWeight& ew,
                                               const RadialRule& rule,
                                               int count, std::uint64_t seed) {
  std::vector<RadialCandidate> out;
  Rng rng(seed ? seed : 0x5eedULL);
  const double r1 = ew.r1, r2 = ew.r2;
  for (int i = 0; i < count; ++i) {
    const double a = 0.5 + 2.0 * rng.uniform();   // bump exponent
    const double b = 0.2 + 0.6 * rng.uniform();   // mixing parameter
    const double c = rng.uniform();               // bump center (log coord)
    // normalized positive profile: (r/r1)^k restricted bump in log r
    const auto bump = [r1, r2, a, c](double r) {
      const double t = std::log(r / r1) / std::log(r2 / r1);
      const double d = t - c;
      return std::exp(-a * d * d * 8.0) / r;
    };
    const double z = radial_integral(rule, r1, r2, bump);
    ExtremalWeight base = ew;
    out.push_back(RadialCandidate{
        [base, bump, z, b](double r) {
          return (1.0 - b) * base(r) + b * bump(r) / z;
        },
        "mixture-" + std::to_string(i)});
  }
  return out;
}

json run_analysis_criteria(const AnalysisContext& cx,
                           const std::vector<std::string>& criteria,
                           const json& declared, bool& criterion_error,
                           std::vector<std::pair<std::string, std::string>>* csv) {
  json results = json::object();
  const SphereRule sphere = make_sphere_rule(cx.n, cx.sphere);
  const AnnulusRule arule{cx.radial, sphere};
  ZeroLadder ladder;
  ladder.eps0 = cx.eps0;
  ladder.depth = cx.ladder_depth;

  const auto guarded = [&](const char* name, auto&& fn) {
    try {
      results[name] = fn();
    } catch (const std::exception& e) {
      results[name] = json{{"error", e.what()}};
      criterion_error = true;
    }
  };

  const auto weight_profile = [&](double lo_scale) {
    const double r_lo = cx.eps0 * std::pow(2.0, -cx.ladder_depth - 2.0) * lo_scale;
    return mean_profile(cx.weight, cx.x0, r_lo, cx.eps0 * 1.0001,
                        cx.profile_per_octave, sphere);
  };

  for (const std::string& name : criteria) {
    if (name == "calderon") {
      guarded("calderon", [&] {
        if (!cx.phi.has_value() && cx.n >= 3)
          throw std::invalid_argument("calderon requested without a gauge");
        return to_json(calderon_test(cx.phi.has_value() ? *cx.phi
                                                        : Orlicz::power(1.0),
                                     cx.n));
      });
    } else if (name == "twin") {
      guarded("twin", [&] {
        return to_json(divergence_pair_test(weight_profile(1.0), cx.params,
                                            ladder));
      });
    } else if (name == "loglog") {
      guarded("loglog", [&] {
        return to_json(loglog_majorant_check(weight_profile(1.0), cx.n, ladder));
      });
    } else if (name == "fmo") {
      guarded("fmo", [&] {
        const BallRule ball{cx.radial, sphere};
        return to_json(fmo_diagnostic(cx.weight, cx.x0, ladder, ball));
      });
    } else if (name == "fmo_loglog") {
      guarded("fmo_loglog", [&] {
        return to_json(
            fmo_loglog_bound(cx.weight, cx.x0, cx.e0, ladder, cx.n, arule));
      });
    } else if (name == "little_o") {
      guarded("little_o", [&] {
        return to_json(little_o_test(cx.weight, cx.x0, TestWeightSpec{},
                                     cx.params, cx.eps0, ladder, arule));
      });
    } else if (name == "extremal_identity") {
      guarded("extremal_identity", [&] {
        IdentityCheck base = lower_bound_identity_check(
            cx.weight, cx.x0, cx.n, cx.params.p, cx.r1, cx.r2, {}, arule,
            cx.profile_per_octave);
        const std::vector<RadialCandidate> cands = random_candidates(
            base.eta0, cx.radial, cx.perturbations, cx.seed);
        IdentityCheck chk = lower_bound_identity_check(
            cx.weight, cx.x0, cx.n, cx.params.p, cx.r1, cx.r2, cands, arule,
            cx.profile_per_octave);
        double worst = 0.0;
        for (double m : chk.alt_margin) worst = std::min(worst, m);
        return json{{"lhs", chk.lhs},
                    {"rhs", chk.rhs0},
                    {"rel_err", chk.rel_err},
                    {"I", chk.eta0.I},
                    {"alternatives", chk.rhs_alt},
                    {"worst_margin", worst}};
      });
    } else if (name == "ring_bound") {
      guarded("ring_bound", [&] {
        const RingBound rb =
            ring_upper_bound(cx.weight, cx.x0, cx.n, cx.params.p, cx.r1, cx.r2,
                             std::nullopt, arule, cx.profile_per_octave);
        return json{{"value", rb.value},
                    {"alpha", rb.alpha},
                    {"closed_form", rb.closed_form},
                    {"used_extremal", rb.used_extremal}};
      });
    } else if (name == "extension") {
      guarded("extension", [&] {
        ExtensionScenario sc;
        sc.n = cx.n;
        sc.p = cx.params.p;
        sc.alpha = cx.params.alpha;
        sc.phi = cx.phi;
        sc.mapping = cx.mapping;
        sc.majorant = cx.weight;
        sc.x0 = cx.x0;
        sc.r_in = cx.r_in;
        sc.r_out = cx.r_out;
        sc.eps0 = cx.eps0;
        sc.routes = cx.routes;
        sc.declared_open = bool_or(declared, "open", false);
        sc.declared_discrete = bool_or(declared, "discrete", false);
        sc.declared_closed = bool_or(declared, "closed", false);
        sc.declared_accessible = bool_or(declared, "strongly_accessible", false);
        sc.ladder_depth = cx.ladder_depth;
        sc.sphere = cx.sphere;
        sc.radial = cx.radial;
        return to_json(extension_report(sc));
      });
    } else if (name == "profile") {
      guarded("profile", [&] {
        const RadialProfile mean = weight_profile(1.0);
        const RadialProfile ls =
            ls_norm_profile(cx.weight, cx.x0, mean.r.front(), mean.r.back(),
                            cx.profile_per_octave, cx.ls_s, sphere);
        // deterministic error estimate: difference against the halved rule
        std::vector<double> err = mean.err;
        if (!sphere.monte_carlo) {
          const SphereRule half = make_sphere_rule(cx.n, cx.sphere.halved());
          for (std::size_t i = 0; i < mean.r.size(); ++i)
            err[i] = std::abs(
                mean.value[i] -
                sphere_mean(cx.weight, cx.x0, mean.r[i], half).value);
        }
        if (csv) {
          std::ostringstream os;
          os.precision(17);
          os << "r,q,ls_norm,q_error\n";
          for (std::size_t i = 0; i < mean.r.size(); ++i)
            os << mean.r[i] << ',' << mean.value[i] << ',' << ls.value[i]
               << ',' << err[i] << '\n';
          csv->emplace_back("profile.csv", os.str());
        }
        return json{{"samples", mean.r.size()}, {"s", cx.ls_s}};
      });
    } else {
      throw SchemaError("$.criteria", "unknown criterion '" + name + "'");
    }
  }
  return results;
}

// ---- network scenarios

Graph parse_inline_graph(const json& j, std::vector<int>& E,
                         std::vector<int>& F, const std::string& path) {
  Graph g;
  g.num_nodes = static_cast<int>(num_at(j, "nodes", path));
  const json& edges = require(j, "edges", path);
  if (!edges.is_array()) throw SchemaError(path + ".edges", "expected array");
  for (const json& row : edges) {
    if (!row.is_array() || row.size() != 5)
      throw SchemaError(path + ".edges", "each edge is [u, v, len, mass, area]");
    Edge e;
    e.u = row[0].get<int>();
    e.v = row[1].get<int>();
    e.len = row[2].get<double>();
    e.mass = row[3].get<double>();
    e.area = row[4].get<double>();
    g.edges.push_back(e);
  }
  for (double v : vec_at(j, "E", path)) E.push_back(static_cast<int>(v));
  for (double v : vec_at(j, "F", path)) F.push_back(static_cast<int>(v));
  g.validate();
  return g;
}

json run_network(const json& doc, bool& criterion_error,
                 std::vector<std::pair<std::string, std::string>>* csv) {
  json results = json::object();
  const json& gspec = require(doc, "graph", "$");
  Graph g;
  std::vector<int> E, F;
  std::optional<AnnulusGrid> grid;
  if (gspec.contains("annulus")) {
    const json& a = gspec.at("annulus");
    AnnulusGridSpec spec;
    spec.r1 = num_at(a, "r1", "$.graph.annulus");
    spec.r2 = num_at(a, "r2", "$.graph.annulus");
    spec.layers = int_or(a, "layers", 32, "$.graph.annulus");
    spec.sectors = int_or(a, "sectors", 128, "$.graph.annulus");
    grid = annulus_grid(spec);
    g = grid->g;
    E = grid->inner;
    F = grid->outer;
    results["grid"] = json{{"nodes", g.num_nodes},
                           {"edges", g.edges.size()},
                           {"layers", spec.layers},
                           {"sectors", spec.sectors}};
  } else if (gspec.contains("inline")) {
    g = parse_inline_graph(gspec.at("inline"), E, F, "$.graph.inline");
  } else {
    throw SchemaError("$.graph", "expected 'annulus' or 'inline'");
  }

  const double p = num_at(doc, "p", "$");
  const json& solve = require(doc, "solve", "$");
  if (!solve.is_array()) throw SchemaError("$.solve", "expected an array");

  const auto guarded = [&](const char* name, auto&& fn) {
    try {
      results[name] = fn();
    } catch (const std::exception& e) {
      results[name] = json{{"error", e.what()}};
      criterion_error = true;
    }
  };

  for (const json& sj : solve) {
    const std::string s = sj.get<std::string>();
    if (s == "capacity") {
      guarded("capacity", [&] {
        const CapacitySolution sol = capacity(g, E, F, p);
        if (csv) csv->emplace_back("potential.csv", potential_csv(sol));
        return json{{"value", sol.value},
                    {"iterations", sol.iterations},
                    {"grad_norm", sol.grad_norm},
                    {"disconnected", sol.disconnected},
                    {"note", sol.note}};
      });
    } else if (s == "modulus") {
      guarded("modulus", [&] {
        const ModulusSolution sol = modulus_connecting(g, E, F, p);
        if (csv) csv->emplace_back("modulus.csv", solution_csv(g, sol));
        return to_json(sol);
      });
    } else if (s == "separating") {
      guarded("separating", [&] {
        return to_json(separating_modulus(g, E, F, p / (p - 1.0)));
      });
    } else if (s == "duality") {
      guarded("duality", [&] { return to_json(duality_check(g, E, F, p)); });
    } else if (s == "lemma4") {
      guarded("sphere_family_bound", [&] {
        if (!grid)
          throw std::invalid_argument("sphere family bound needs an annulus grid");
        const json& l4 = require(doc, "lemma4", "$");
        const SphereFamilyBound b = sphere_family_lower_bound(
            *grid, num_at(l4, "q_const", "$.lemma4"),
            num_or(l4, "p", p, "$.lemma4"), num_at(l4, "eps", "$.lemma4"),
            num_at(l4, "r0", "$.lemma4"));
        return json{{"lhs", b.lhs},
                    {"rhs", b.rhs},
                    {"margin", b.margin},
                    {"satisfied", b.satisfied},
                    {"applicable", b.applicable},
                    {"note", b.note}};
      });
    } else if (s == "export") {
      guarded("export", [&] {
        std::ostringstream os;
        write_edge_list(g, os);
        if (csv) csv->emplace_back("graph.txt", os.str());
        return json{{"edges", g.edges.size()}};
      });
    } else {
      throw SchemaError("$.solve", "unknown solve target '" + s + "'");
    }
  }
  return results;
}

json make_report(const json& doc, const RunOptions& opt, json results,
                 bool criterion_error) {
  json report;
  report["toolkit"] = json{{"name", kToolkitName}, {"version", kToolkitVersion}};
  report["scenario"] = doc;
  report["options"] =
      json{{"strict", opt.strict},
           {"seed_override", opt.seed_override ? json(*opt.seed_override)
                                               : json(nullptr)},
           {"ladder_depth_override",
            opt.ladder_depth_override ? json(*opt.ladder_depth_override)
                                      : json(nullptr)}};
  report["results"] = std::move(results);
  if (criterion_error) {
    report["overall"] = "error";
  } else if (report["results"].contains("extension")) {
    report["overall"] = report["results"]["extension"]["overall"];
  } else {
    report["overall"] = "completed";
  }
  return report;
}

}  // namespace

RunResult run_scenario(const json& doc, const RunOptions& opt) {
  if (!doc.is_object()) throw SchemaError("$", "scenario must be an object");
  RunResult out;
  out.name = doc.contains("name") ? doc.at("name").get<std::string>() : "";
  const std::string kind =
      doc.contains("kind") ? doc.at("kind").get<std::string>() : "analysis";

  json results;
  if (kind == "analysis") {
    const AnalysisContext cx = parse_analysis(doc, opt);
    std::vector<std::string> criteria;
    for (const json& c : require(doc, "criteria", "$")) {
      if (!c.is_string()) throw SchemaError("$.criteria", "expected strings");
      criteria.push_back(c.get<std::string>());
    }
    const json declared =
        doc.contains("declared") ? doc.at("declared") : json::object();
    results = run_analysis_criteria(cx, criteria, declared,
                                    out.criterion_error, &out.csv);
  } else if (kind == "network") {
    results = run_network(doc, out.criterion_error, &out.csv);
  } else {
    throw SchemaError("$.kind", "unknown scenario kind '" + kind + "'");
  }
  const json report = make_report(doc, opt, std::move(results),
                                  out.criterion_error);
  out.report_json = report.dump(2) + "\n";
  return out;
}

RunResult run_scenario_file(const std::filesystem::path& file,
                            const RunOptions& opt) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open scenario file: " + file.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("not valid JSON: ") + e.what());
  }
  return run_scenario(doc, opt);
}

RunResult profile_scenario(const json& doc, const RunOptions& opt) {
  json copy = doc;
  copy["criteria"] = json::array({"profile"});
  return run_scenario(copy, opt);
}

namespace {

void diff_walk(const json& a, const json& b, double tol,
               const std::string& path, std::vector<std::string>& out) {
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>(), y = b.get<double>();
    if (std::abs(x - y) >
        tol * std::max({1.0, std::abs(x), std::abs(y)})) {
      std::ostringstream os;
      os.precision(17);
      os << path << ": " << x << " vs " << y;
      out.push_back(os.str());
    }
    return;
  }
  if (a.type() != b.type()) {
    out.push_back(path + ": type mismatch");
    return;
  }
  if (a.is_object()) {
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key())) {
        out.push_back(path + "." + it.key() + ": missing in second report");
        continue;
      }
      diff_walk(it.value(), b.at(it.key()), tol, path + "." + it.key(), out);
    }
    for (auto it = b.begin(); it != b.end(); ++it)
      if (!a.contains(it.key()))
        out.push_back(path + "." + it.key() + ": missing in first report");
    return;
  }
  if (a.is_array()) {
    if (a.size() != b.size()) {
      out.push_back(path + ": array length " + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()));
      return;
    }
    for (std::size_t i = 0; i < a.size(); ++i)
      diff_walk(a[i], b[i], tol, path + "[" + std::to_string(i) + "]", out);
    return;
  }
  if (a != b) out.push_back(path + ": value mismatch");
}

}  // namespace

std::vector<std::string> report_diff(const json& a, const json& b, double tol) {
  std::vector<std::string> out;
  diff_walk(a, b, tol, "$", out);
  return out;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace qc
