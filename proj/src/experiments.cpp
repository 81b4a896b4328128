#include "smallball/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "smallball/constants_lab.hpp"
#include "smallball/errors.hpp"
#include "smallball/quantization.hpp"
#include "smallball/rsbf_lab.hpp"

namespace smallball {

const char* const kArtifactVersion = "smallball-lab 1.0.0";

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_number(v[i]);
  return out;
}

long parse_count(const std::string& text, const std::string& what) {
  const double v = parse_number(text, what);
  if (!(v >= 1.0) || v != std::floor(v) || v > 9.0e15) throw ConfigError(what + " must be a positive integer");
  return static_cast<long>(v);
}

std::uint64_t parse_seed(const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError("seed must be an unsigned 64-bit integer");
  return v;
}

bool strictly(const std::vector<double>& v, bool increasing) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (increasing ? !(v[i] > v[i - 1]) : !(v[i] < v[i - 1])) return false;
  return true;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.experiment", [](auto& c, const auto& v) { c.experiment = trim(v); }},
      {"run.seed", [](auto& c, const auto& v) { c.seed = parse_seed(v); }},
      {"run.out", [](auto& c, const auto& v) { c.out = trim(v); }},
      {"run.format", [](auto& c, const auto& v) { c.format = trim(v); }},
      {"model.kind", [](auto& c, const auto& v) { c.model = trim(v); }},
      {"model.sigma", [](auto& c, const auto& v) { c.sigma = parse_number(v, "model.sigma"); }},
      {"model.lambdas", [](auto& c, const auto& v) { c.lambdas = parse_list(v, "model.lambdas"); }},
      {"model.grid_n", [](auto& c, const auto& v) { c.grid_n = static_cast<int>(parse_count(v, "model.grid_n")); }},
      {"model.horizon", [](auto& c, const auto& v) { c.horizon = parse_number(v, "model.horizon"); }},
      {"model.dim", [](auto& c, const auto& v) { c.dim = static_cast<int>(parse_count(v, "model.dim")); }},
      {"norm.kind", [](auto& c, const auto& v) { c.norm = trim(v); }},
      {"estimator.method", [](auto& c, const auto& v) { c.method = trim(v); }},
      {"estimator.samples", [](auto& c, const auto& v) { c.samples = parse_count(v, "estimator.samples"); }},
      {"estimator.particles",
       [](auto& c, const auto& v) { c.particles = static_cast<int>(parse_count(v, "estimator.particles")); }},
      {"estimator.replicas",
       [](auto& c, const auto& v) { c.replicas = static_cast<int>(parse_count(v, "estimator.replicas")); }},
      {"grids.eps", [](auto& c, const auto& v) { c.eps = parse_list(v, "grids.eps"); }},
      {"grids.r", [](auto& c, const auto& v) { c.r_grid = parse_list(v, "grids.r"); }},
      {"grids.s", [](auto& c, const auto& v) { c.s = parse_list(v, "grids.s"); }},
      {"grids.a", [](auto& c, const auto& v) { c.a_grid = parse_list(v, "grids.a"); }},
      {"budget.centers", [](auto& c, const auto& v) { c.centers = static_cast<int>(parse_count(v, "budget.centers")); }},
      {"budget.n_test", [](auto& c, const auto& v) { c.n_test = parse_count(v, "budget.n_test"); }},
      {"budget.kappa", [](auto& c, const auto& v) { c.kappa = parse_number(v, "budget.kappa"); }},
      {"constants.mode", [](auto& c, const auto& v) { c.constant_mode = trim(v); }},
      {"constants.dt", [](auto& c, const auto& v) { c.series_dt = parse_number(v, "constants.dt"); }},
  };
  return table;
}

// Estimator without sampling noise for (model, norm), when one exists.
std::optional<EstimatorOptions> exact_estimator(const GaussianModel& m, const NormSpec& n) {
  EstimatorOptions o;
  if ((m.kind() == ModelKind::scalar && n.kind != NormKind::hoelder) ||
      (m.kind() == ModelKind::finite_spectrum && n.kind == NormKind::sup)) {
    o.method = Method::analytic;
    return o;
  }
  if (transfer_supported(m, n)) {
    o.method = Method::transfer;
    return o;
  }
  return std::nullopt;
}

double model_scale(const GaussianModel& m) {
  switch (m.kind()) {
    case ModelKind::scalar: return m.sigma();
    case ModelKind::finite_spectrum: return std::sqrt(m.lambdas().sum());
    case ModelKind::wiener: return std::sqrt(m.horizon() * m.dim());
    case ModelKind::brownian_bridge: return 0.5;
  }
  return 1.0;
}

struct Outputs {
  std::vector<std::pair<std::string, Table>> tables;
  std::vector<VerifierReport> reports;

  void append(Outputs other, const std::string& prefix) {
    for (auto& [name, t] : other.tables) tables.emplace_back(prefix + name, std::move(t));
    for (auto& r : other.reports) reports.push_back(std::move(r));
  }
};

json sbf_row(const GaussianModel& model, const NormSpec& norm, double eps, const ProbEstimate& e) {
  const auto a = sbf_analytic(model, norm, eps);
  json row;
  row["model"] = model.describe();
  row["norm"] = norm.describe();
  row["method"] = method_name(e.method);
  row["eps"] = eps;
  row["phi"] = e.phi();
  row["stderr"] = e.stderr_log;
  row["n_samples"] = e.n_samples;
  row["upper_bound"] = e.upper_bound;
  row["analytic_phi"] = a ? a->phi() : kNaN;
  return row;
}

Table sbf_table(const GaussianModel& model, const NormSpec& norm, const SBFCurve& c) {
  Table t;
  for (std::size_t i = 0; i < c.eps_grid.size(); ++i) t.add(sbf_row(model, norm, c.eps_grid[i], c.phi[i]));
  return t;
}

Table gauge_table(const GaugeCurve& g) {
  Table t;
  for (std::size_t j = 0; j < g.eps_grid.size(); ++j) {
    json row;
    row["eps"] = g.eps_grid[j];
    row["median"] = g.median[j];
    row["median_lo"] = g.median_ci[j].lo;
    row["median_hi"] = g.median_ci[j].hi;
    row["mean"] = g.mean[j];
    row["mean_lo"] = g.mean_ci[j].lo;
    row["mean_hi"] = g.mean_ci[j].hi;
    row["mean_stderr"] = g.mean_stderr[j];
    row["iqr"] = g.iqr[j];
    row["dispersion"] = g.dispersion[j];
    row["dispersion_lo"] = g.dispersion_ci[j].lo;
    row["dispersion_hi"] = g.dispersion_ci[j].hi;
    for (std::size_t k = 0; k < g.moments.size(); ++k) row["lp_" + format_number(g.moments[k])] = g.lp_moments[k][j];
    row["n_bounded"] = g.n_bounded[j];
    row["n_centers"] = g.n_centers;
    t.add(std::move(row));
  }
  return t;
}

// Decreasing union of eps, eps / 2 and eps / sqrt 2.
std::vector<double> verifier_grid(const std::vector<double>& eps) {
  std::vector<double> g;
  for (double e : eps)
    for (double v : {e, e / 2.0, e / std::numbers::sqrt2}) g.push_back(v);
  std::sort(g.begin(), g.end(), std::greater<>());
  g.erase(std::unique(g.begin(), g.end(), [](double a, double b) { return std::abs(a - b) <= 1e-12 * a; }), g.end());
  return g;
}

Outputs run_sbf(const ExperimentConfig& cfg, const RandomStream& root) {
  const GaussianModel model = cfg.make_model();
  const NormSpec norm = cfg.make_norm();
  Outputs out;
  out.tables.emplace_back("sbf", sbf_table(model, norm, sbf_curve(model, norm, cfg.eps, cfg.make_estimator(), root.child(0))));
  return out;
}

Outputs run_rsbf(const ExperimentConfig& cfg, const RandomStream& root) {
  const GaussianModel model = cfg.make_model();
  const NormSpec norm = cfg.make_norm();
  const EstimatorOptions opts = cfg.make_estimator();
  const RandomStream st = root.child(1);
  const auto samples = sample_rsbf(model, norm, cfg.eps, cfg.centers, opts, st.child(0));
  GaugeOptions go;
  go.seed = st.child(1).seed() ^ 0x5bd1e995ULL;
  const GaugeCurve gauge = gauge_stats(samples, go);
  const SBFCurve sbf = sbf_curve(model, norm, verifier_grid(cfg.eps), opts, st.child(2));

  Outputs out;
  Table ts;
  for (const auto& s : samples) {
    json row;
    row["center"] = s.center_id;
    row["eps"] = s.eps;
    row["ell"] = s.ell();
    row["stderr"] = s.ell_hat.stderr_log;
    row["bounded"] = s.bounded();
    ts.add(std::move(row));
  }
  out.tables.emplace_back("rsbf_samples", std::move(ts));
  out.tables.emplace_back("gauge", gauge_table(gauge));
  out.tables.emplace_back("sbf", sbf_table(model, norm, sbf));
  VerifierConfig vc;
  out.reports.push_back(verify_enclosure(sbf, gauge, vc));
  out.reports.push_back(verify_gauge_sandwich(sbf, gauge, vc));
  if (gauge.eps_grid.size() >= 2) {
    out.reports.push_back(check_concentration_trend(gauge));
    out.reports.push_back(check_mean_median_trend(gauge, go.seed));
  }
  return out;
}

struct Inverses {
  std::optional<LogLogInterpolant> gauge;
  std::optional<LogLogInterpolant> sbf;
  std::optional<DoublingReport> growth;
};

double eval_or_nan(const std::optional<LogLogInterpolant>& f, double r) {
  if (!f) return kNaN;
  try {
    return (*f)(r);
  } catch (const RangeError&) {
    return kNaN;
  }
}

// A doubling check inside an experiment gates other comparisons; its rows are recorded
// as informational with the computed outcome in the note.
VerifierReport as_hypothesis(VerifierReport rep) {
  for (auto& row : rep.rows) {
    if (row.verdict == Verdict::informational) continue;
    const std::string outcome = row.verdict == Verdict::pass ? "hypothesis holds" : "hypothesis not satisfied";
    row.note = row.note.empty() ? outcome : outcome + "; " + row.note;
    row.verdict = Verdict::informational;
  }
  return rep;
}

// Gauge and centered curves on a geometric eps ladder reaching past the largest rate,
// both with an estimator free of sampling noise; empty when none exists.
Inverses build_inverses(const GaussianModel& model, const NormSpec& norm, double r_max, int n_centers,
                        const RandomStream& st) {
  Inverses inv;
  const auto exact = exact_estimator(model, norm);
  if (!exact) return inv;
  const std::vector<Path> centers = sample(model, st.child(0), n_centers);
  std::vector<RSBFSample> all;
  std::vector<double> ladder;
  double eps = 3.0 * model_scale(model);
  const double target = 1.2 * r_max + 1.0;
  for (int chunk = 0; chunk < 10; ++chunk) {
    std::vector<double> grid;
    for (int i = 0; i < 8; ++i, eps *= 0.8) grid.push_back(eps);
    const auto part = sample_rsbf_at(model, norm, centers, grid, *exact, st.child(1 + static_cast<std::uint64_t>(chunk)));
    bool done = false;
    for (std::size_t j = 0; j < grid.size() && !done; ++j) {
      double total = 0.0;
      bool finite = true;
      for (std::size_t i = 0; i < centers.size(); ++i) {
        const double v = part[i * grid.size() + j].ell();
        finite = finite && std::isfinite(v);
        total += v;
      }
      if (!finite) {
        done = true;
        break;
      }
      for (std::size_t i = 0; i < centers.size(); ++i) all.push_back(part[i * grid.size() + j]);
      ladder.push_back(grid[j]);
      done = total / static_cast<double>(centers.size()) >= target;
    }
    if (done) break;
  }
  if (ladder.size() < 2) return inv;
  GaugeOptions go;
  go.bootstrap = 10;
  const GaugeCurve g = gauge_stats(all, go);
  inv.gauge = invert_gauge(g);
  const SBFCurve c = sbf_curve(model, norm, ladder, *exact, st.child(20));
  inv.sbf = invert_gauge(c);
  const double base = eval_or_nan(inv.gauge, r_max);
  if (std::isfinite(base)) {
    std::vector<double> dgrid;
    for (int j = 3; j >= 0; --j) dgrid.push_back(base * std::ldexp(1.0, j));
    inv.growth = check_doubling(sbf_curve(model, norm, dgrid, *exact, st.child(21)), DoublingKind::growth, VerifierConfig{});
  }
  return inv;
}

Outputs run_quantize(const ExperimentConfig& cfg, const RandomStream& root) {
  const GaussianModel model = cfg.make_model();
  const NormSpec norm = cfg.make_norm();
  const RandomStream st = root.child(2);
  const double r_max = *std::max_element(cfg.r_grid.begin(), cfg.r_grid.end());
  const Inverses inv = build_inverses(model, norm, std::max(r_max, 1.0), cfg.centers, st.child(1));
  const std::vector<std::string> qnames = {"z_q10", "z_q25", "z_q50", "z_q75", "z_q90"};

  std::vector<std::vector<QuantizationResult>> by_s(cfg.s.size());
  std::vector<CoverageResult> coverage;
  Table t;
  for (std::size_t ri = 0; ri < cfg.r_grid.size(); ++ri) {
    const double r = cfg.r_grid[ri];
    const QuantizationResult base = distortion(model, norm, r, cfg.s[0], cfg.n_test, st.child(2).child(ri));
    const double g = eval_or_nan(inv.gauge, r);
    const double bound = 2.0 * eval_or_nan(inv.sbf, 0.5 * r);
    CoverageResult cov;
    if (std::isfinite(g)) {
      cov = coverage_from_z(base.z, r, g, cfg.kappa);
      coverage.push_back(cov);
    }
    for (std::size_t si = 0; si < cfg.s.size(); ++si) {
      QuantizationResult q = si == 0 ? base : summarize_distortion(r, base.n, cfg.s[si], base.z, 64);
      json row;
      row["model"] = model.describe();
      row["norm"] = norm.describe();
      row["s"] = cfg.s[si];
      row["r"] = r;
      row["n"] = q.n;
      row["D_hat"] = q.D_hat;
      row["stderr"] = q.stderr_D;
      row["gauge_inverse"] = g;
      row["ratio_to_gauge_inverse"] = q.D_hat / g;
      row["sbf_bound"] = bound;
      row["coverage"] = std::isfinite(g) ? cov.rate : kNaN;
      row["coverage_lo"] = std::isfinite(g) ? cov.ci.lo : kNaN;
      row["coverage_hi"] = std::isfinite(g) ? cov.ci.hi : kNaN;
      for (std::size_t k = 0; k < qnames.size(); ++k) row[qnames[k]] = q.z_quantiles[k];
      t.add(std::move(row));
      q.z.clear();
      if (std::isfinite(g) && std::isfinite(bound)) by_s[si].push_back(std::move(q));
    }
  }
  Outputs out;
  out.tables.emplace_back("quantize", std::move(t));
  const bool growth = inv.growth && inv.growth->holds;
  if (inv.growth) out.reports.push_back(as_hypothesis(inv.growth->report));
  VerifierConfig vc;
  for (const auto& results : by_s) {
    if (results.empty()) continue;
    out.reports.push_back(verify_distortion_asymptotics(results, [&](double r) { return (*inv.gauge)(r); }, growth, vc));
    out.reports.push_back(verify_distortion_upper_bound(results, [&](double r) { return (*inv.sbf)(r); }, growth, vc));
  }
  if (coverage.size() >= 2) out.reports.push_back(check_coverage_trend(coverage));
  return out;
}

Table series_table(const SubadditiveSeries& s) {
  Table t;
  const auto ratio = s.ratios();
  const auto rse = s.ratio_stderrs();
  for (std::size_t k = 0; k < s.a_grid.size(); ++k) {
    json row;
    row["kind"] = series_kind_name(s.kind);
    row["a"] = s.a_grid[k];
    row["value"] = s.values[k];
    row["stderr"] = s.stderrs[k];
    row["ratio"] = ratio[k];
    row["ratio_stderr"] = rse[k];
    t.add(std::move(row));
  }
  return t;
}

Outputs run_constants(const ExperimentConfig& cfg, const RandomStream& root) {
  const GaussianModel model = cfg.make_model();
  const NormSpec norm = cfg.make_norm();
  const RandomStream st = root.child(3);
  ConstantParams params;
  params.n_centers = cfg.centers;
  if (cfg.eps.size() >= 2) params.eps_grid = cfg.eps;
  params.estimator = exact_estimator(model, norm).value_or(cfg.make_estimator());
  params.series.a_grid = cfg.a_grid;
  params.series.n_centers = cfg.centers;
  params.series.dt = cfg.series_dt;

  std::vector<ConstantMode> modes;
  if (cfg.constant_mode != "subadditive") modes.push_back(ConstantMode::eps_fit);
  if (cfg.constant_mode != "eps_fit") modes.push_back(ConstantMode::subadditive);

  Outputs out;
  Table tc, tscaled;
  VerifierConfig vc;
  const bool sandwich = norm.kind == NormKind::sup && model.kind() == ModelKind::wiener;
  const double k0 = sandwich ? dirichlet_eigenvalue(model.dim()) : kNaN;
  VerifierReport rep{"constant between 2 K0 and 8 K0", "constant-sandwich", {}};
  for (ConstantMode mode : modes) {
    const ConstantEstimate ce =
        estimate_constant(model, norm, mode, params, st.child(mode == ConstantMode::eps_fit ? 0 : 1));
    const std::string mode_name = mode == ConstantMode::eps_fit ? "eps_fit" : "subadditive";
    json row;
    row["mode"] = mode_name;
    row["value"] = ce.value;
    row["stderr"] = ce.stderr_value;
    row["gamma"] = ce.gamma;
    row["lower"] = 2.0 * k0;
    row["upper"] = 8.0 * k0;
    row["diagnostics"] = ce.diagnostics;
    tc.add(std::move(row));
    if (mode == ConstantMode::eps_fit) {
      for (std::size_t i = 0; i < ce.eps_grid.size(); ++i) {
        json r;
        r["eps"] = ce.eps_grid[i];
        r["scaled"] = ce.scaled[i];
        tscaled.add(std::move(r));
      }
    } else {
      out.tables.emplace_back("series", series_table(ce.series));
      out.reports.push_back(check_series_trend(ce.series, vc.confidence));
    }
    if (sandwich) {
      rep.add("lower-" + mode_name, 0.0, 2.0 * k0 * (1.0 - vc.delta), ce.value,
              vc.confidence * ce.stderr_value);
      rep.add("upper-" + mode_name, 0.0, ce.value, 8.0 * k0 * (1.0 + vc.delta),
              vc.confidence * ce.stderr_value);
    }
  }
  out.tables.emplace_back("constants", std::move(tc));
  if (!tscaled.rows.empty()) out.tables.emplace_back("scaled", std::move(tscaled));
  if (sandwich) out.reports.push_back(std::move(rep));
  return out;
}

Outputs run_verify_all(const ExperimentConfig& cfg, const RandomStream& root) {
  const GaussianModel model = cfg.make_model();
  const NormSpec norm = cfg.make_norm();
  Outputs out;
  out.append(run_rsbf(cfg, root), "rsbf_");
  out.append(run_quantize(cfg, root), "quantize_");

  const auto exact = exact_estimator(model, norm);
  const double e0 = cfg.eps.front();
  std::vector<double> dgrid;
  for (int j = 2; j >= -2; --j) dgrid.push_back(e0 * std::ldexp(1.0, j));
  const SBFCurve dc = sbf_curve(model, norm, dgrid, exact.value_or(cfg.make_estimator()), root.child(4));
  VerifierConfig vc;
  out.reports.push_back(as_hypothesis(check_doubling(dc, DoublingKind::regularity, vc).report));

  const bool wiener1 = model.kind() == ModelKind::wiener && model.dim() == 1;
  if (wiener1 && (norm.kind == NormKind::sup || norm.kind == NormKind::lp)) {
    out.append(run_constants(cfg, root), "constants_");
    const GaussianModel base = GaussianModel::wiener(static_cast<int>(std::lround(1.0 / cfg.series_dt)));
    const SeriesKind kind = norm.kind == NormKind::sup ? SeriesKind::hard : SeriesKind::soft;
    const SplitCheck sc = check_split(base, kind, norm, 2.0, 2.0, std::min(cfg.centers, 100), {}, root.child(5));
    out.reports.push_back(sc.report);
  }
  return out;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw DataError("format_number failed");
  return std::string(buf, ptr);
}

double parse_number(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError(what + ": not a number: '" + t + "'");
  return v;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, what));
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::string section = "run";
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    line = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out[key.find('.') == std::string::npos ? section + "." + key : key] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

ConfigMap ExperimentConfig::to_map() const {
  ConfigMap m;
  m["run.experiment"] = experiment;
  m["run.seed"] = seed ? std::to_string(*seed) : "";
  m["run.format"] = format;
  m["model.kind"] = model;
  m["model.sigma"] = format_number(sigma);
  m["model.lambdas"] = join(lambdas);
  m["model.grid_n"] = std::to_string(grid_n);
  m["model.horizon"] = format_number(horizon);
  m["model.dim"] = std::to_string(dim);
  m["norm.kind"] = norm;
  m["estimator.method"] = method;
  m["estimator.samples"] = std::to_string(samples);
  m["estimator.particles"] = std::to_string(particles);
  m["estimator.replicas"] = std::to_string(replicas);
  m["grids.eps"] = join(eps);
  m["grids.r"] = join(r_grid);
  m["grids.s"] = join(s);
  m["grids.a"] = join(a_grid);
  m["budget.centers"] = std::to_string(centers);
  m["budget.n_test"] = std::to_string(n_test);
  m["budget.kappa"] = format_number(kappa);
  m["constants.mode"] = constant_mode;
  m["constants.dt"] = format_number(series_dt);
  return m;
}

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& keys) {
  ExperimentConfig c;
  for (const auto& [k, v] : keys) {
    const auto it = setters().find(k);
    if (it == setters().end()) throw ConfigError("unknown configuration key '" + k + "'");
    if (k == "run.seed" && trim(v).empty()) continue;
    it->second(c, v);
  }
  return c;
}

void ExperimentConfig::validate() const {
  static const std::vector<std::string> experiments = {"sbf", "rsbf", "quantize", "constants", "verify-all"};
  if (std::find(experiments.begin(), experiments.end(), experiment) == experiments.end())
    throw ConfigError("unknown experiment '" + experiment + "'");
  if (!seed) throw ConfigError("a seed is required");
  if (out.empty()) throw ConfigError("output directory must be set");
  if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
  if (model != "scalar" && model != "spectrum" && model != "wiener" && model != "bridge")
    throw ConfigError("unknown model '" + model + "'");
  if (!(sigma > 0.0) || !(horizon > 0.0)) throw ConfigError("sigma and horizon must be positive");
  if (lambdas.empty() || std::any_of(lambdas.begin(), lambdas.end(), [](double l) { return !(l > 0.0); }))
    throw ConfigError("spectrum eigenvalues must be positive");
  if (grid_n < 1 || dim < 1 || dim > 3) throw ConfigError("grid_n must be positive and dim in 1..3");
  if (samples < 1 || particles < 2 || replicas < 1 || centers < 2 || n_test < 1)
    throw ConfigError("budgets must be positive");
  if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("kappa must lie in (0, 1)");
  if (constant_mode != "eps_fit" && constant_mode != "subadditive" && constant_mode != "both")
    throw ConfigError("constants mode must be eps_fit, subadditive or both");
  if (!(series_dt > 0.0)) throw ConfigError("constants dt must be positive");
  if (eps.empty() || r_grid.empty() || s.empty() || a_grid.empty()) throw ConfigError("grids must be nonempty");
  if (!strictly(eps, false)) throw ConfigError("eps grid must be strictly decreasing");
  if (!strictly(r_grid, true) || !strictly(s, true) || !strictly(a_grid, true))
    throw ConfigError("r, s and a grids must be strictly increasing");
  if (std::any_of(eps.begin(), eps.end(), [](double e) { return !(e > 0.0); })) throw ConfigError("eps must be positive");
  if (std::any_of(s.begin(), s.end(), [](double v) { return !(v > 0.0); })) throw ConfigError("s must be positive");
  if (std::any_of(r_grid.begin(), r_grid.end(), [](double v) { return !(v >= 0.0); }))
    throw ConfigError("r must be nonnegative");
  make_model();
  make_norm().validate();
  parse_method(method);
}

GaussianModel ExperimentConfig::make_model() const {
  if (model == "scalar") return GaussianModel::scalar(sigma);
  if (model == "spectrum") return GaussianModel::finite_spectrum(Eigen::Map<const Eigen::VectorXd>(lambdas.data(), static_cast<Eigen::Index>(lambdas.size())));
  if (model == "wiener") return GaussianModel::wiener(grid_n, horizon, dim);
  if (model == "bridge") return GaussianModel::brownian_bridge(grid_n);
  throw ConfigError("unknown model '" + model + "'");
}

NormSpec ExperimentConfig::make_norm() const {
  if (norm == "sup") return NormSpec::sup_norm();
  const auto colon = norm.find(':');
  const std::string kind = norm.substr(0, colon);
  if (colon == std::string::npos) throw ConfigError("norm needs a parameter, e.g. lp:2 or hoelder:0.25");
  const double v = parse_number(norm.substr(colon + 1), "norm parameter");
  if (kind == "lp") return NormSpec::lp_norm(v);
  if (kind == "hoelder") return NormSpec::hoelder(v);
  throw ConfigError("unknown norm '" + norm + "'");
}

EstimatorOptions ExperimentConfig::make_estimator() const {
  EstimatorOptions o;
  o.method = parse_method(method);
  o.n_samples = samples;
  o.splitting.n_particles = particles;
  o.splitting.replicas = replicas;
  return o;
}

const std::map<std::string, std::string>& flag_keys() {
  static const std::map<std::string, std::string> table = {
      {"model", "model.kind"},      {"norm", "norm.kind"},           {"eps", "grids.eps"},
      {"r-grid", "grids.r"},        {"s", "grids.s"},                {"samples", "estimator.samples"},
      {"centers", "budget.centers"}, {"seed", "run.seed"},           {"grid-n", "model.grid_n"},
      {"out", "run.out"},           {"format", "run.format"},        {"method", "estimator.method"},
      {"a-grid", "grids.a"},        {"n-test", "budget.n_test"},     {"sigma", "model.sigma"},
      {"horizon", "model.horizon"}, {"dim", "model.dim"},            {"kappa", "budget.kappa"},
      {"mode", "constants.mode"},   {"particles", "estimator.particles"}, {"replicas", "estimator.replicas"},
      {"lambdas", "model.lambdas"}, {"dt", "constants.dt"},
  };
  return table;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::string text;
  for (const auto& [k, v] : cfg.to_map()) text += k + "=" + v + "\n";
  return fnv1a_hex(text);
}

void Table::add(json row) {
  if (columns.empty() && rows.empty()) {
    for (const auto& item : row.items()) columns.push_back(item.key());
  } else {
    std::vector<std::string> keys;
    for (const auto& item : row.items()) keys.push_back(item.key());
    if (keys != columns) throw DataError("table row does not match the columns");
  }
  rows.push_back(std::move(row));
}

namespace {

std::string csv_cell(const json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_null()) return "nan";
  throw DataError("unsupported table cell");
}

json parse_cell(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  if (s == "nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (!s.empty() && s.find_first_not_of("-0123456789") == std::string::npos) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  }
  double d = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (!s.empty() && ec == std::errc() && ptr == s.data() + s.size()) return d;
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += "\n";
  for (const auto& row : rows) {
    std::size_t i = 0;
    for (const auto& item : row.items()) out += (i++ ? "," : "") + csv_cell(item.value());
    out += "\n";
  }
  return out;
}

std::string Table::to_json() const {
  json arr = json::array();
  for (const auto& row : rows) arr.push_back(row);
  return arr.dump(2) + "\n";
}

Table Table::from_csv(const std::string& text) {
  Table t;
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) return t;
  t.columns = split_csv_line(line);
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != t.columns.size()) throw DataError("csv row has the wrong number of cells");
    json row;
    for (std::size_t i = 0; i < cells.size(); ++i) row[t.columns[i]] = parse_cell(cells[i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table Table::from_json(const std::string& text) {
  Table t;
  for (auto& row : json::parse(text)) {
    if (t.columns.empty())
      for (const auto& item : row.items()) t.columns.push_back(item.key());
    for (auto& item : row.items())
      if (item.value().is_null()) item.value() = kNaN;
    t.rows.push_back(row);
  }
  return t;
}

Table report_table(const std::vector<VerifierReport>& reports) {
  Table t;
  for (const auto& rep : reports) {
    for (const auto& r : rep.rows) {
      json row;
      row["report"] = rep.name;
      row["tag"] = rep.tag;
      row["check"] = r.check;
      row["x"] = r.x;
      row["lhs"] = r.lhs;
      row["rhs"] = r.rhs;
      row["tolerance"] = r.tolerance;
      row["verdict"] = verdict_name(r.verdict);
      row["note"] = r.note;
      t.add(std::move(row));
    }
  }
  return t;
}

void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw DataError("cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json ResultManifest::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["artifact_version"] = artifact_version;
  j["config"] = json::object();
  for (const auto& [k, v] : config) j["config"][k] = v;
  j["files"] = files;
  j["file_digests"] = json::object();
  for (const auto& [k, v] : file_digests) j["file_digests"][k] = v;
  j["verdicts"] = {{"pass", verdicts.pass}, {"fail", verdicts.fail}, {"informational", verdicts.informational}};
  j["reports"] = json::array();
  for (const auto& r : reports) j["reports"].push_back({{"name", r.name}, {"tag", r.tag}, {"verdict", r.verdict}});
  return j;
}

ResultManifest ResultManifest::from_json(const json& j) {
  ResultManifest m;
  m.config_hash = j.at("config_hash").get<std::string>();
  m.artifact_version = j.at("artifact_version").get<std::string>();
  for (const auto& item : j.at("config").items()) m.config[item.key()] = item.value().get<std::string>();
  m.files = j.at("files").get<std::vector<std::string>>();
  for (const auto& item : j.at("file_digests").items()) m.file_digests[item.key()] = item.value().get<std::string>();
  m.verdicts.pass = j.at("verdicts").at("pass").get<int>();
  m.verdicts.fail = j.at("verdicts").at("fail").get<int>();
  m.verdicts.informational = j.at("verdicts").at("informational").get<int>();
  for (const auto& r : j.at("reports"))
    m.reports.push_back({r.at("name").get<std::string>(), r.at("tag").get<std::string>(), r.at("verdict").get<std::string>()});
  return m;
}

ResultManifest read_manifest(const std::string& out_dir) {
  return ResultManifest::from_json(json::parse(read_file((fs::path(out_dir) / "manifest.json").string())));
}

ResultManifest run(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const RandomStream root(*cfg.seed, 0);
  Outputs out;
  if (cfg.experiment == "sbf") out = run_sbf(cfg, root);
  else if (cfg.experiment == "rsbf") out = run_rsbf(cfg, root);
  else if (cfg.experiment == "quantize") out = run_quantize(cfg, root);
  else if (cfg.experiment == "constants") out = run_constants(cfg, root);
  else out = run_verify_all(cfg, root);
  if (!out.reports.empty()) out.tables.emplace_back("verifiers", report_table(out.reports));

  ResultManifest m;
  m.config_hash = config_hash(cfg);
  m.artifact_version = kArtifactVersion;
  m.config = cfg.to_map();
  for (const auto& [name, table] : out.tables) {
    const std::string file = name + "." + cfg.format;
    const std::string content = cfg.format == "csv" ? table.to_csv() : table.to_json();
    write_atomic((fs::path(cfg.out) / file).string(), content);
    m.files.push_back(file);
    m.file_digests[file] = fnv1a_hex(content);
  }
  std::sort(m.files.begin(), m.files.end());
  for (const auto& rep : out.reports) {
    m.reports.push_back({rep.name, rep.tag, verdict_name(rep.verdict())});
    for (const auto& r : rep.rows) {
      if (r.verdict == Verdict::pass) ++m.verdicts.pass;
      else if (r.verdict == Verdict::fail) ++m.verdicts.fail;
      else ++m.verdicts.informational;
    }
  }
  write_atomic((fs::path(cfg.out) / "manifest.json").string(), m.to_json().dump(2) + "\n");
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json timing;
  timing["config_hash"] = m.config_hash;
  timing["wall_seconds"] = m.wall_seconds;
  write_atomic((fs::path(cfg.out) / "timing.json").string(), timing.dump(2) + "\n");
  return m;
}

}  // namespace smallball
