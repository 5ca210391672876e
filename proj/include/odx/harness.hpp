#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "odx/catalogue.hpp"
#include "odx/escape_scan.hpp"
#include "odx/farey_operator.hpp"
#include "odx/induced.hpp"
#include "odx/io/config_schema.hpp"
#include "odx/io/csv.hpp"
#include "odx/io/files.hpp"
#include "odx/io/schema.hpp"
#include "odx/large_deviations.hpp"
#include "odx/lscan.hpp"
#include "odx/ly_probe.hpp"

namespace odx::harness {

using nlohmann::json;
using io::CsvTable;

inline constexpr const char* kVersion = "1.0.0";

/// Process exit status for a library error.
inline int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::NonMonotoneLengths:
    case ErrorCode::HypothesisFailed:
      return 2;
    case ErrorCode::BudgetExceeded:
    case ErrorCode::UnresolvedMassExceeds:
    case ErrorCode::ExcessCensoring:
      return 3;
    default:
      return 4;
  }
}

/// `--set` value: JSON when it parses, otherwise a plain string.
inline json parse_value(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) return json(text);
  return v;
}

/// cfg[a][b][c] = value for the dotted path "a.b.c"; intermediate objects are created.
inline void set_path(json& cfg, const std::string& dotted, json value) {
  if (dotted.empty()) throw Error(ErrorCode::ConfigInvalid, "empty --set key");
  json* node = &cfg;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw Error(ErrorCode::ConfigInvalid, "bad --set key '" + dotted + "'");
    if (!node->is_object()) {
      if (!node->is_null()) throw Error(ErrorCode::ConfigInvalid, "--set path '" + dotted + "' crosses a non-object value");
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

/// Schema check plus schema defaults. Throws ConfigInvalid listing every problem.
inline json validate_config(json cfg) {
  static const io::SchemaValidator validator(json::parse(io::kConfigSchema));
  auto errs = validator.validate(cfg);
  if (!errs.empty()) {
    std::string msg = "config rejected:";
    for (auto& e : errs) msg += "\n  " + e;
    throw Error(ErrorCode::ConfigInvalid, msg);
  }
  return cfg;
}

namespace detail {

// Reads obj[key], writing the fallback back so the resolved config echoes it.
template <class T>
T def(json& obj, const char* key, T fallback) {
  if (!obj.is_object()) obj = json::object();
  if (!obj.contains(key)) obj[key] = fallback;
  return obj[key].get<T>();
}

inline TailSpec tail_from_json(json& t) {
  const std::string cls = t["class"];
  json& p = t["params"];
  if (!p.is_object()) p = json::object();
  TailSpec s;
  if (cls == "exponential")
    s = TailSpec::exponential(def(p, "theta", 0.5));
  else if (cls == "polynomial")
    s = TailSpec::polynomial(def(p, "beta", 2.0));
  else
    s = TailSpec::stretched(def(p, "c", 1.0), def(p, "gamma", 0.5));
  s.depth = def<std::size_t>(t, "depth", 0);
  return s;
}

/// Everything a run derives from the map section.
struct Setup {
  MapPtr map;
  std::optional<TailSpec> tail;
  Interval base{0.5L, 1};
  std::function<coord(coord)> cdf;
  std::function<coord(coord)> pdf;
  std::string mu_tag;
  std::optional<Partition> density_partition;  // set when the measure comes from an Ulam estimate
};

// grid for the measure when no closed-form density exists
inline Partition density_partition_for(const IntervalMap& m) {
  if (m.name.rfind("lsv", 0) == 0) return Partition::graded(1024, {0}, 0.9L, 1e-12L);
  return Partition::uniform(4096);
}

inline Setup make_setup(json& cfg) {
  Setup s;
  json& m = cfg["map"];
  const std::string name = m["name"];
  json& params = m["params"];
  if (!params.is_object()) params = json::object();
  if (name == "farey") {
    s.tail = tail_from_json(m["tail"]);
    s.map = make_farey(*s.tail);
    s.base = {s.tail->t(2), 1};
  } else {
    std::map<std::string, double> p;
    if (name == "lsv") p["gamma"] = def(params, "gamma", 0.5);
    if (name == "ly_tent") p["slope"] = def(params, "slope", 1.8);
    if (name == "gauss") p["j_max"] = static_cast<double>(def<std::size_t>(params, "j_max", 100000));
    s.map = make_map(name, p);
  }
  if (s.map->density && s.map->density->cdf) {
    s.cdf = s.map->density->cdf;
    s.pdf = s.map->density->pdf;
    s.mu_tag = "analytic";
  } else {
    Partition part = density_partition_for(*s.map);
    auto g = invariant_density(build_ulam(*s.map, part));
    s.cdf = density_cdf(part, g);
    s.pdf = [part, g](coord x) { return g[part.cell_of(x)]; };
    s.mu_tag = "ulam";
    s.density_partition = part;
  }
  if (cfg.contains("induce") && cfg["induce"].contains("base") && !s.tail) {
    auto& b = cfg["induce"]["base"];
    s.base = {b[0].get<coord>(), b[1].get<coord>()};
    if (!(s.base.hi > s.base.lo)) throw Error(ErrorCode::ConfigInvalid, "induce.base must be an increasing pair");
  }
  return s;
}

inline HoleFamily make_holes(json& cfg, const Setup& s) {
  json& h = cfg["hole"];
  coord z = h["centre"].get<coord>();
  if (h["frame"] == "base") z = s.base.lo + z * s.base.length();
  const bool one_sided = h["shape"] == "one_sided";
  const bool has_r = h.contains("radii"), has_mu = h.contains("mu");
  if (has_r == has_mu) throw Error(ErrorCode::ConfigInvalid, "hole needs exactly one of 'radii' and 'mu'");
  std::vector<coord> radii;
  if (has_r) {
    for (auto& r : h["radii"]) radii.push_back(r.get<coord>());
  } else {
    const coord dens = s.pdf(z);
    if (!(dens > 0)) throw Error(ErrorCode::ConfigInvalid, "density vanishes at the hole centre");
    for (auto& mu : h["mu"]) radii.push_back(mu.get<coord>() / (one_sided ? dens : 2 * dens));
  }
  std::optional<std::size_t> period;
  if (h.contains("period")) period = h["period"].get<std::size_t>();
  HoleFamily f = one_sided ? HoleFamily::one_sided(z, radii, period) : HoleFamily::symmetric(z, radii, period);
  return f;
}

inline std::vector<coord> hole_breakpoints(const HoleFamily& holes) {
  std::vector<coord> b;
  for (coord r : holes.radii) {
    const Interval u = holes.at(r);
    b.push_back(u.lo);
    b.push_back(u.hi);
  }
  return b;
}

/// Operator grid from the budgets: uniform, or graded toward the given points.
inline Partition operator_partition(json& budgets, const Setup& s, std::vector<coord> focus) {
  const bool lsv = s.map->name.rfind("lsv", 0) == 0;
  const std::string grading = def<std::string>(budgets, "grading", lsv ? "graded" : "uniform");
  const std::size_t cells = def<std::size_t>(budgets, "cells", grading == "graded" ? 1024 : 4096);
  if (grading == "uniform") return Partition::uniform(cells);
  if (lsv) focus.push_back(0);
  const double ratio = def(budgets, "graded_ratio", 0.9);
  const double floor = def(budgets, "graded_floor", lsv ? 1e-12 : 1e-9);
  return Partition::graded(cells, focus, ratio, floor);
}

inline SamplerConfig sampler_for(const Setup& s, std::uint64_t seed) {
  SamplerConfig c;
  c.seed = seed;
  if (s.density_partition) {
    c.source = SamplerConfig::Source::UlamDensity;
    c.partition = s.density_partition;
  }
  return c;
}

inline SurvivalEngine mc_engine(const Setup& s, std::size_t samples, std::uint64_t seed) {
  McOptions o;
  o.samples = samples;
  o.sampler = sampler_for(s, seed);
  MapPtr m = s.map;
  return {"mc", [m, o](Interval u, const std::vector<std::size_t>& ts) { return survival_curve_mc(*m, u, ts, o); }};
}

inline SurvivalEngine operator_engine(json& budgets, const Setup& s, const HoleFamily& holes) {
  if (s.tail) {
    FareyOperatorOptions fo;
    fo.cells = def<std::size_t>(budgets, "cells", 256);
    return farey_operator_engine(*s.tail, fo);
  }
  Partition part = operator_partition(budgets, s, {holes.z}).with_breakpoints(hole_breakpoints(holes));
  auto op = std::make_shared<const UlamOperator>(build_ulam(*s.map, part));
  std::vector<real> g0 = cell_masses(part, s.cdf);
  return {"operator", [op, g0](Interval u, const std::vector<std::size_t>& ts) {
            return survival_curve_operator(puncture(op, u), g0, ts);
          }};
}

inline void write_survival(CsvTable& t, const SurvivalCurve& c) {
  for (std::size_t i = 0; i < c.t.size(); ++i)
    t.add(c.t[i], c.p_hat[i], c.ci_lo[i], c.ci_hi[i], c.censored, c.method);
}

inline CsvTable lscan_table(const ScanResult& res) {
  CsvTable t({"alpha", "s", "r", "mu_U", "t", "log_p", "L_hat", "ci_lo", "ci_hi", "mu_source", "method"});
  for (auto& r : res.rows)
    t.add(r.alpha, r.s, r.r, r.mu_U, r.t, static_cast<double>(r.log_p), r.L_hat, r.ci_lo, r.ci_hi, r.mu_source, r.method);
  return t;
}

inline json scan_summary(const ScanResult& res) {
  json out = json::object();
  json sums = json::array();
  for (auto& a : res.summaries)
    sums.push_back({{"alpha", a.alpha}, {"s", a.s}, {"L_extrapolated", a.L_extrapolated}, {"kappa", a.kappa_valid ? json(a.kappa) : json()}});
  out["summaries"] = sums;
  out["alpha0"] = res.alpha0 ? json(*res.alpha0) : json();
  out["alpha0_threshold"] = res.alpha0_threshold ? json(*res.alpha0_threshold) : json();
  auto rc = remark_bound_check(res);
  out["remark_rows_checked"] = rc.checked.size();
  out["remark_violations"] = rc.violations.size();
  return out;
}

inline std::vector<double> to_doubles(const json& a) { return a.get<std::vector<double>>(); }
inline std::vector<std::size_t> to_sizes(const json& a) { return a.get<std::vector<std::size_t>>(); }

/// Files produced by one run, in emission order, plus the summary for the manifest.
struct Products {
  std::vector<std::pair<std::string, std::string>> files;
  json results = json::object();
  void add(std::string name, std::string body) { files.emplace_back(std::move(name), std::move(body)); }
};

// -- per-kind runners --------------------------------------------------------

inline Products run_ulam(json& cfg, const Setup& s) {
  Products out;
  json& b = cfg["budgets"];
  std::optional<HoleFamily> holes;
  std::vector<coord> focus;
  if (cfg.contains("hole")) {
    holes = make_holes(cfg, s);
    focus.push_back(holes->z);
  }
  Partition part = operator_partition(b, s, focus);
  if (holes) part = part.with_breakpoints(hole_breakpoints(*holes));
  auto op = std::make_shared<const UlamOperator>(build_ulam(*s.map, part));
  auto g = invariant_density(*op);
  if (def(cfg["ulam"], "write_matrix", true)) {
    std::ostringstream ms;
    write_matrix_csv(op->matrix, ms);
    out.add("matrix.csv", ms.str());
  }
  CsvTable dens({"cell_lo", "cell_hi", "density"});
  for (std::size_t i = 0; i < part.size(); ++i) dens.add(part.cell(i).lo, part.cell(i).hi, g[i]);
  out.add("density.csv", dens.str());
  out.results["cells"] = part.size();
  out.results["grading"] = part.grading();
  if (holes) {
    const bool ly = def(cfg["ulam"], "ly_probe", false);
    CsvTable sp({"r", "mu_U", "lambda", "rho", "l1_distance", "l1_bound", "sigma_hat", "ly_c"});
    std::size_t violations = 0;
    for (coord r : holes->radii) {
      const Interval u = holes->at(r);
      auto p = puncture(op, u);
      auto sd = power_leading(p);
      const double d = static_cast<double>(operator_l1_distance(*op, p));
      const double bound = static_cast<double>(u.length() + part.max_width());
      violations += d > bound;
      double sigma = std::nan(""), c = std::nan("");
      if (ly) {
        auto pr = ly_probe(p);
        sigma = pr.sigma_hat;
        c = pr.c;
      }
      sp.add(r, static_cast<double>(s.cdf(u.hi) - s.cdf(u.lo)), sd.lambda, sd.rho, d, bound, sigma, c);
    }
    out.add("spectral.csv", sp.str());
    out.results["l1_bound_violations"] = violations;
  }
  return out;
}

inline Products run_escape_scan(json& cfg, const Setup& s) {
  Products out;
  json& b = cfg["budgets"];
  HoleFamily holes = make_holes(cfg, s);
  const std::string grading = def<std::string>(b, "grading", "uniform");
  PartitionRule rule;
  if (grading == "uniform") {
    const double per = def(b, "cells_per_radius", 8.0);
    rule = [per](coord r, Interval u) {
      return Partition::uniform(static_cast<std::size_t>(std::lround(per / static_cast<double>(r)))).with_breakpoints({u.lo, u.hi});
    };
  } else {
    const std::size_t cells = def<std::size_t>(b, "cells", 2048);
    const coord ratio = def(b, "graded_ratio", 0.9), floor = def(b, "graded_floor", 1e-7);
    const coord z = holes.z;
    rule = [=](coord, Interval u) { return Partition::graded(cells, {z}, ratio, floor).with_breakpoints({u.lo, u.hi}); };
  }
  auto scan = escape_derivative_scan(*s.map, holes, rule);
  CsvTable t({"r", "mu_U", "lambda", "neg_log_lambda", "ratio", "rho", "cells"});
  for (auto& r : scan.rows) t.add(r.r, r.mu_hole, r.lambda, r.neg_log_lambda, r.ratio, r.rho, r.cells);
  out.add("escape.csv", t.str());
  out.results["limit"] = scan.limit;
  out.results["fit_slope"] = scan.fit.slope;
  return out;
}

inline ScanOptions scan_options(json& cfg, const Setup& s, const HoleFamily& holes, std::vector<double> alphas_default,
                                std::vector<double> s_default, const char* method_default) {
  json& sc = cfg["scan"];
  json& b = cfg["budgets"];
  ScanOptions o;
  o.alphas = def(sc, "alphas", alphas_default);
  o.s_values = def(sc, "s_values", s_default);
  const std::string method = def<std::string>(sc, "method", method_default);
  o.mc_samples = def<std::size_t>(b, "samples", 1'000'000);
  o.min_survivors = def<std::size_t>(b, "min_survivors", 100);
  o.mc_max_t = def<std::size_t>(b, "mc_max_t", 200'000);
  o.max_t = def<std::size_t>(b, "max_t", 1'000'000'000);
  const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();
  if (method != "operator") o.mc = mc_engine(s, o.mc_samples, seed);
  if (method != "mc") o.op = operator_engine(b, s, holes);
  return o;
}

inline Products run_hts_scan(json& cfg, const Setup& s) {
  Products out;
  HoleFamily holes = make_holes(cfg, s);
  ScanOptions o = scan_options(cfg, s, holes, {1.0}, {0.5, 1.0, 2.0}, "mc");
  auto res = l_alpha_scan(holes, MuSource::from_cdf(s.cdf, s.mu_tag), o);
  out.add("lscan.csv", lscan_table(res).str());
  // survival on the smallest hole: the scan times plus any requested grid
  const coord r_min = holes.radii.back();
  const Interval u = holes.at(r_min);
  std::set<std::size_t> ts;
  for (auto& r : res.rows)
    if (r.r == static_cast<double>(r_min)) ts.insert(r.t);
  for (std::size_t t : def(cfg["scan"], "t_grid", std::vector<std::size_t>{})) ts.insert(t);
  std::vector<std::size_t> grid(ts.begin(), ts.end());
  auto c = (o.mc ? *o.mc : *o.op).run(u, grid);
  CsvTable sv({"t", "p_hat", "ci_lo", "ci_hi", "censored", "method"});
  write_survival(sv, c);
  out.add("survival.csv", sv.str());
  out.results = scan_summary(res);
  json diag = json::array();
  for (auto& r : res.rows) {
    if (r.r != static_cast<double>(r_min) || r.alpha != 1.0) continue;
    const auto it = std::find(c.t.begin(), c.t.end(), r.t);
    const std::size_t i = static_cast<std::size_t>(it - c.t.begin());
    const double target = std::exp(-r.s);
    const double half = (c.ci_hi[i] - c.ci_lo[i]) / 2;
    diag.push_back({{"s", r.s}, {"t", r.t}, {"p_hat", c.p_hat[i]}, {"exp_minus_s", target},
                    {"within_3ci", std::fabs(c.p_hat[i] - target) <= 3 * half}});
  }
  out.results["diagonal"] = diag;
  return out;
}

inline Products run_alpha_phase(json& cfg, const Setup& s) {
  Products out;
  HoleFamily holes = make_holes(cfg, s);
  ScanOptions o = scan_options(cfg, s, holes, {0.5, 1, 1.5, 2, 2.5, 3}, {1.0}, "auto");
  auto res = l_alpha_scan(holes, MuSource::from_cdf(s.cdf, s.mu_tag), o);
  out.add("lscan.csv", lscan_table(res).str());
  CsvTable a({"alpha", "s", "L_extrapolated", "kappa"});
  for (auto& x : res.summaries) a.add(x.alpha, x.s, x.L_extrapolated, x.kappa_valid ? x.kappa : std::nan(""));
  out.add("alpha.csv", a.str());
  out.results = scan_summary(res);
  return out;
}

inline Products run_alpha_zero(json& cfg, const Setup& s) {
  Products out;
  HoleFamily holes = make_holes(cfg, s);
  if (!holes.period)
    if (auto p = detect_period(*s.map, holes.z, 64)) holes.period = *p;
  const std::size_t t = def<std::size_t>(cfg["alpha_zero"], "t", 9);
  auto res = alpha_zero_limit(*s.map, Potential::geometric(), holes, t, s.cdf);
  CsvTable tab({"r", "mu_U", "value"});
  for (auto& r : res.rows) tab.add(r.r, r.mu_U, r.value);
  out.add("alphazero.csv", tab.str());
  out.results = {{"t", t}, {"extrapolated", res.extrapolated}, {"target", res.target},
                 {"period", holes.period ? json(*holes.period) : json()}};
  return out;
}

inline InducedMap build_induced(json& cfg, const Setup& s, bool want_table) {
  if (s.tail) return farey_first_return(*s.tail);
  json& in = cfg["induce"];
  json& b = cfg["budgets"];
  def(in, "base", std::vector<double>{static_cast<double>(s.base.lo), static_cast<double>(s.base.hi)});
  if (!want_table) return induced_base(s.map, s.base, s.cdf);
  FirstReturnOptions fo;
  fo.tolerance = def(in, "tolerance", 1e-6);
  fo.cdf = s.cdf;
  const std::size_t depth = def<std::size_t>(b, "depth", s.map->name.rfind("lsv", 0) == 0 ? 200 : 60);
  return first_return_map(s.map, s.base, depth, fo);
}

inline CsvTable tail_table(const InducedMap& ind, std::size_t points) {
  CsvTable t({"u", "mu_R_ge_u"});
  for (std::size_t u = 1; u < ind.tail.size() && u <= points; ++u) t.add(u, static_cast<double>(ind.tail_at(u)));
  return t;
}

inline json induced_summary(const InducedMap& ind) {
  return {{"base", {static_cast<double>(ind.Y.lo), static_cast<double>(ind.Y.hi)}},
          {"mu_Y", static_cast<double>(ind.mu_Y)},
          {"mean_return", static_cast<double>(ind.mean_return())},
          {"kac_mean", static_cast<double>(ind.kac_mean())},
          {"unresolved", static_cast<double>(ind.unresolved)},
          {"depth_max", ind.depth_max},
          {"branches", ind.branches.size()}};
}

inline Products run_induce(json& cfg, const Setup& s) {
  Products out;
  auto ind = build_induced(cfg, s, true);
  const std::size_t points = def<std::size_t>(cfg["induce"], "tail_points", ind.depth_max + 1);
  out.add("tail.csv", tail_table(ind, points).str());
  auto tw = tower_profile(ind);
  CsvTable t({"level", "mass"});
  for (std::size_t l = 0; l < tw.levels.size() && l < points; ++l) t.add(l, static_cast<double>(tw.levels[l]));
  out.add("tower.csv", t.str());
  CsvTable br({"lo", "hi", "R", "mass"});
  for (auto& x : ind.branches) br.add(x.domain.lo, x.domain.hi, x.R, x.mass);
  out.add("branches.csv", br.str());
  out.results = induced_summary(ind);
  return out;
}

inline Products run_ld(json& cfg, const Setup& s) {
  Products out;
  auto ind = build_induced(cfg, s, true);
  json& l = cfg["ld"];
  json& b = cfg["budgets"];
  const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();
  const double kac = static_cast<double>(1 / ind.mu_Y);
  std::vector<std::size_t> n_default;
  for (std::size_t n = 10; n <= 120; n += 10) n_default.push_back(n);
  LdOptions lo;
  lo.samples = def<std::size_t>(b, "samples", 200'000);
  lo.seed = seed;
  const double eps = def(l, "eps", 0.25 * kac);
  auto curve = ld_curve(induced_return_system(ind), eps, def(l, "n_grid", n_default), lo);
  CsvTable lc({"n", "ell_hat", "ci_lo", "ci_hi", "count"});
  for (std::size_t k = 0; k < curve.n.size(); ++k) lc.add(curve.n[k], curve.ell_hat[k], curve.ci_lo[k], curve.ci_hi[k], curve.count[k]);
  out.add("ldcurve.csv", lc.str());

  DeviationOptions dopt;
  dopt.samples = lo.samples;
  dopt.seed = seed;
  const double deps = def(l, "deviation_eps", default_deviation_eps(ind));
  auto dev = deviation_table(ind, def(l, "u_grid", std::vector<std::size_t>{4, 8, 16, 32, 64}), deps, dopt);
  CsvTable dv({"eps", "u", "n_max", "mu_A_lo", "ci"});
  for (auto& r : dev.rows) dv.add(r.eps, r.u, r.n_max, r.mu_A_lo, (r.ci_hi - r.ci_lo) / 2);
  out.add("deviation.csv", dv.str());

  std::vector<double> tu, tv;
  for (std::size_t u = 1; u < ind.tail.size(); ++u) {
    const double v = static_cast<double>(ind.tail_at(u));
    if (v > 0) {
      tu.push_back(static_cast<double>(u));
      tv.push_back(v);
    }
  }
  auto fit = tail_fit(tu, tv);
  json cands = json::array();
  auto cand_json = [](const TailCandidate& c) {
    return json{{"class", c.cls}, {"rate", c.rate}, {"gamma", c.gamma}, {"c", c.c}, {"beta", c.beta}, {"r2", c.r2}};
  };
  for (auto& c : fit.candidates) cands.push_back(cand_json(c));
  json grid = json::array();
  for (auto& [g, r2] : fit.stretched_grid) grid.push_back({{"gamma", g}, {"r2", r2}});
  json tf = {{"candidates", cands}, {"stretched_grid", grid}, {"selected", cand_json(fit.selected)}};
  out.add("tailfit.json", tf.dump(2) + "\n");

  out.results = induced_summary(ind);
  out.results["psi_bar"] = curve.psi_bar;
  out.results["eps"] = eps;
  const std::size_t n_lo = curve.n.front(), n_hi = curve.n.back();
  bool finite = true;
  for (std::size_t k = 0; k < curve.n.size(); ++k) finite = finite && !curve.zero_count[k];
  if (curve.n.size() >= 2 && finite) {
    out.results["rate_slope"] = rate_slope(curve, n_lo, n_hi).slope;
    out.results["rate_slope_raw"] = rate_slope(curve, n_lo, n_hi, 0).slope;
  }
  if (dev.rows.size() >= 2) {
    std::vector<double> x, y;
    for (auto& r : dev.rows)
      if (r.mu_A_lo > 0) {
        x.push_back(static_cast<double>(r.u));
        y.push_back(std::log(r.mu_A_lo) + 0.5 * std::log(static_cast<double>(r.u)));
      }
    if (x.size() >= 2) out.results["deviation_rate"] = -linear_fit(x, y).slope;
  }
  try {
    const std::size_t terms = def<std::size_t>(l, "pressure_terms", std::min<std::size_t>(50, ind.branches.size()));
    auto pp = pressure_series_probe(ind, def(l, "pressure_t", 0.0), terms);
    out.results["pressure"] = {{"t", pp.t}, {"ratio", pp.ratio}, {"verdict", pp.verdict}, {"stable", pp.stable},
                               {"t_star", pp.t_star ? json(*pp.t_star) : json()}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NonFullBranched && e.code() != ErrorCode::ConfigInvalid) throw;
    out.results["pressure"] = {{"skipped", e.what()}};
  }
  return out;
}

inline Products run_farey_build(json& cfg, const Setup& s) {
  Products out;
  const TailSpec& sp = *s.tail;
  const std::size_t depth = sp.depth_for();
  auto ind = farey_first_return(sp);
  const std::size_t points = def<std::size_t>(cfg["induce"], "tail_points", std::min<std::size_t>(depth, 1000));
  CsvTable f({"n", "t_n", "a_n", "density"});
  for (std::size_t n = 1; n <= points; ++n) {
    const coord mid = sp.t(n + 1) + sp.a(n) / 2;
    f.add(n, static_cast<double>(sp.t(n)), static_cast<double>(sp.a(n)), static_cast<double>(s.map->density->pdf(mid)));
  }
  out.add("farey.csv", f.str());
  out.add("tail.csv", tail_table(ind, points).str());
  out.results = induced_summary(ind);
  out.results["class"] = sp.class_name();
  out.results["depth"] = depth;
  out.results["truncation_mass"] = static_cast<double>(s.map->truncation_mass);
  out.results["lebesgue_invariant"] = s.map->lebesgue_invariant;
  return out;
}

inline Products run_obstruction(json& cfg, const Setup& s) {
  Products out;
  HoleFamily holes = make_holes(cfg, s);
  auto ind = build_induced(cfg, s, false);
  json& ob = cfg["obstruction"];
  json& b = cfg["budgets"];
  ObstructionOptions oo;
  oo.samples = def<std::size_t>(b, "samples", 100'000);
  oo.seed = cfg["seed"].get<std::uint64_t>();
  oo.eps = def(ob, "eps", 0.4);
  const double alpha = def(ob, "alpha", 2.0), sv = def(ob, "s", 1.0);
  CsvTable t({"r", "mu_U", "alpha", "s", "t", "u", "joint", "joint_lo", "joint_hi", "tail", "tail_lo", "tail_hi", "ratio", "violations",
              "containment_applies"});
  std::size_t violations = 0, applicable = 0;
  for (coord r : holes.radii) {
    auto rep = polynomial_obstruction_probe(ind, holes.at(r), alpha, sv, oo);
    t.add(r, rep.mu_U, rep.alpha, rep.s, rep.t, rep.u, rep.joint.p, rep.joint.lo, rep.joint.hi, rep.tail.p, rep.tail.lo, rep.tail.hi,
          rep.ratio, rep.violations, rep.containment_applies);
    if (rep.containment_applies) {
      ++applicable;
      violations += rep.violations;
    }
  }
  out.add("obstruction.csv", t.str());
  const auto grid = def(ob, "t_grid", std::vector<std::size_t>{8, 16, 32, 64, 128, 256});
  auto tail = return_tail_mc(ind, grid, oo.samples, oo.seed);
  CsvTable rt({"t", "mu_R_gt_t", "ci_lo", "ci_hi"});
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rt.add(grid[i], tail[i].p, tail[i].lo, tail[i].hi);
    if (tail[i].p > 0) {
      lx.push_back(std::log(static_cast<double>(grid[i])));
      ly.push_back(std::log(tail[i].p));
    }
  }
  out.add("returntail.csv", rt.str());
  out.results = {{"containment_rows", applicable}, {"containment_violations", violations}, {"mu_Y", static_cast<double>(ind.mu_Y)}};
  if (lx.size() >= 2) out.results["tail_slope"] = linear_fit(lx, ly).slope;
  return out;
}

inline Products dispatch(json& cfg, const Setup& s) {
  const std::string kind = cfg["kind"];
  if (kind == "ulam") return run_ulam(cfg, s);
  if (kind == "escape-scan") return run_escape_scan(cfg, s);
  if (kind == "hts-scan") return run_hts_scan(cfg, s);
  if (kind == "alpha-phase") return run_alpha_phase(cfg, s);
  if (kind == "alpha-zero") return run_alpha_zero(cfg, s);
  if (kind == "induce") return run_induce(cfg, s);
  if (kind == "ld") return run_ld(cfg, s);
  if (kind == "farey-build") return run_farey_build(cfg, s);
  if (kind == "obstruction") return run_obstruction(cfg, s);
  throw Error(ErrorCode::ConfigInvalid, "unknown kind '" + kind + "'");
}

}  // namespace detail

/// Input file recorded in the manifest (name and contents).
struct InputFile {
  std::string path;
  std::string contents;
};

struct RunManifest {
  json config;
  std::string version = kVersion;
  unsigned threads = 1;
  double wall_time = 0;
  json inputs = json::array();
  json outputs = json::array();
  json results = json::object();

  json to_json() const {
    return {{"tool", "odx"}, {"version", version}, {"threads", threads}, {"wall_time_s", wall_time}, {"config", config},
            {"inputs", inputs},  {"outputs", outputs}, {"results", results}};
  }
};

/// Validates, computes, then writes every output atomically followed by
/// manifest.json. Nothing touches the output directory before the computation
/// has succeeded.
inline RunManifest run(json config, const std::vector<InputFile>& inputs = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  json cfg = validate_config(std::move(config));
  auto setup = detail::make_setup(cfg);
  auto prod = detail::dispatch(cfg, setup);
  // defaults written during the run must themselves be schema-valid
  cfg = validate_config(cfg);

  RunManifest man;
  man.config = cfg;
  man.threads = thread_count();
  man.results = prod.results;
  for (auto& in : inputs) man.inputs.push_back({{"path", in.path}, {"sha256", io::sha256_hex(in.contents)}});

  const std::filesystem::path dir = cfg["output_dir"].get<std::string>();
  std::filesystem::create_directories(dir);
  std::set<std::string> names;
  for (auto& [name, body] : prod.files) {
    io::write_atomic(dir / name, body);
    names.insert(name);
    man.outputs.push_back({{"path", name}, {"sha256", io::sha256_hex(body)}, {"bytes", body.size()}});
  }
  // files owned by an earlier manifest in this directory and not re-emitted
  const auto old = dir / "manifest.json";
  if (std::filesystem::exists(old)) {
    json prev = json::parse(io::read_file(old), nullptr, false);
    if (prev.is_object() && prev.contains("outputs"))
      for (auto& o : prev["outputs"]) {
        const std::string p = o.value("path", "");
        if (!p.empty() && !names.count(p) && p.find('/') == std::string::npos) std::filesystem::remove(dir / p);
      }
  }
  man.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  io::write_atomic(old, man.to_json().dump(2) + "\n");
  return man;
}

/// Text table of the catalogue: parameters, validity and invariant-density facts.
inline std::string list_catalogue() {
  struct Row {
    const char *name, *params, *density;
  };
  static const Row rows[] = {
      {"doubling", "none", "Lebesgue (density 1)"},
      {"ly_tent(slope)", "slope in (1,2]", "Lebesgue at slope 2; Ulam estimate otherwise"},
      {"gauss", "j_max >= 1 (enumeration depth)", "1/(ln2 (1+x))"},
      {"lsv(gamma)", "gamma in (0,1)", "acip with density ~ x^(-gamma) at 0; Ulam estimate"},
      {"farey(tail_spec)", "tail_spec = {class, params, depth}", "t_n/a_n on A_n (normalised); Lebesgue for exponential tails"},
  };
  std::ostringstream os;
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  os << pad("map", 18) << pad("parameters", 36) << "invariant density\n";
  for (auto& r : rows) os << pad(r.name, 18) << pad(r.params, 36) << r.density << '\n';
  os << "\nfarey tail classes: exponential {theta in (0,1)}, stretched {c > 0, gamma in (0,1)}, polynomial {beta > 1}\n";
  return os.str();
}

}  // namespace odx::harness
