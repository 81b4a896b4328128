// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "smallball/constants_lab.hpp"
#include "smallball/errors.hpp"
#include "smallball/estimators.hpp"
#include "smallball/experiments.hpp"
#include "smallball/parallel.hpp"
#include "smallball/quantization.hpp"
#include "smallball/rsbf_lab.hpp"
#include "smallball/special_functions.hpp"
#include "smallball/verifiers.hpp"

using namespace smallball;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[violated: " << what << "] ";
    }
  }
};

std::string report_summary(const VerifierReport& rep) {
  std::ostringstream s;
  int failed = 0;
  for (const auto& row : rep.rows)
    if (row.verdict == Verdict::fail) {
      ++failed;
      s << " " << row.check << "@" << row.x << " lhs " << row.lhs << " rhs " << row.rhs << " tol " << row.tolerance << ";";
    }
  return rep.tag + " rows " + std::to_string(rep.rows.size()) + " failed " + std::to_string(failed) + s.str();
}

// Shared between criteria that reuse an expensive estimate.
std::optional<Extrapolation> brownian_at_03;
std::optional<SubadditiveSeries> hard_series;

void scalar_oracle(Outcome& o) {
  const auto m = GaussianModel::scalar(1.0);
  const EstimatorOptions mc{Method::mc, 1000000};
  int k = 0;
  for (double eps : {0.05, 0.5, 1.0}) {
    const auto t0 = Clock::now();
    const ProbEstimate p = ball_prob(m, NormSpec::sup_norm(), m.zero_path(), eps, mc, RandomStream(101, k++));
    const double secs = seconds_since(t0);
    const double exact = oracle::scalar_phi(eps, 1.0);
    o.detail << "eps " << eps << ": phi " << p.phi() << " exact " << exact << " se " << p.stderr_log << " " << secs << "s; ";
    o.require(std::abs(p.phi() - exact) <= 3.0 * p.stderr_log, "within 3 SE at eps " + std::to_string(eps));
    o.require(p.stderr_log > 0.0, "nonzero SE");
    o.require(secs < 60.0, "runtime under 1 min");
  }
}

void brownian_oracle(Outcome& o) {
  const auto t0 = Clock::now();
  EstimatorOptions opts{Method::splitting};
  opts.splitting.n_particles = 4000;
  opts.splitting.replicas = 2;
  for (double eps : {0.3, 0.5, 0.8}) {
    std::vector<double> dt, val, se;
    for (int n : {256, 1024, 4096}) {
      const auto m = GaussianModel::wiener(n);
      const ProbEstimate p =
          ball_prob(m, NormSpec::sup_norm(), m.zero_path(), eps, opts, RandomStream(102, static_cast<std::uint64_t>(n)));
      dt.push_back(1.0 / n);
      val.push_back(p.phi());
      se.push_back(p.stderr_log);
    }
    const Extrapolation e = extrapolate_in_step(dt, val, se);
    if (eps == 0.3) brownian_at_03 = e;
    const double exact = oracle::brownian_sup_phi(eps);
    const double rel = e.value / exact - 1.0;
    o.detail << "eps " << eps << ": n-ladder " << val[0] << "," << val[1] << "," << val[2] << " extrapolated " << e.value
             << " exact " << exact << " rel " << rel << "; ";
    o.require(std::abs(rel) <= 0.05, "within 5% at eps " + std::to_string(eps));
  }
  const double secs = seconds_since(t0);
  o.detail << secs << "s";
  o.require(secs < 600.0, "runtime under 10 min");
}

void centered_constant(Outcome& o) {
  if (!brownian_at_03) {
    o.require(false, "extrapolated estimate at eps 0.3 unavailable");
    return;
  }
  const double k0 = std::numbers::pi * std::numbers::pi / 8.0;
  const double scaled = 0.09 * brownian_at_03->value;
  o.detail << "eps^2 phi(0.3) " << scaled << " vs " << k0 << " rel " << scaled / k0 - 1.0;
  o.require(std::abs(scaled / k0 - 1.0) <= 0.10, "within 10%");
}

void subadditive_constant(Outcome& o) {
  const auto t0 = Clock::now();
  hard_series = lambda_hard(GaussianModel::wiener(256), SeriesOptions{}, RandomStream(104, 0));
  const double secs = seconds_since(t0);
  const double k0 = std::numbers::pi * std::numbers::pi / 8.0;
  const double lo = 2.0 * k0 * 0.9, hi = 8.0 * k0 * 1.1;
  o.detail << "K " << hard_series->constant << " +- " << hard_series->constant_stderr << " band [" << lo << ", " << hi
           << "] ratio_last " << hard_series->ratio_last << (hard_series->partial ? " partial" : "") << " " << secs << "s";
  o.require(hard_series->constant >= lo && hard_series->constant <= hi, "inside the band");
  o.require(secs < 1800.0, "runtime under 30 min");
}

struct GaugeSetup {
  SBFCurve sbf;
  GaugeCurve gauge;
};

std::optional<GaugeSetup> wiener_gauge;

const GaugeSetup& gauge_setup() {
  if (wiener_gauge) return *wiener_gauge;
  const auto m = GaussianModel::wiener(1024);
  const EstimatorOptions opts{Method::transfer};
  const std::vector<double> eps = {0.5, 0.4, 0.3};
  std::vector<double> grid;
  for (double e : eps)
    for (double v : {e, e / std::numbers::sqrt2, 0.5 * e}) grid.push_back(v);
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  GaugeSetup g;
  g.sbf = sbf_curve(m, NormSpec::sup_norm(), grid, opts, RandomStream(105, 0));
  GaugeOptions go;
  go.seed = 105;
  g.gauge = gauge_stats(sample_rsbf(m, NormSpec::sup_norm(), eps, 200, opts, RandomStream(105, 1)), go);
  wiener_gauge = std::move(g);
  return *wiener_gauge;
}

void enclosure(Outcome& o) {
  const GaugeSetup& g = gauge_setup();
  const VerifierReport rep = verify_enclosure(g.sbf, g.gauge, VerifierConfig{});
  o.detail << report_summary(rep) << "; fractions";
  for (const auto& row : rep.rows)
    if (row.check == "upper-bound-fraction") o.detail << " " << row.lhs;
  o.require(rep.passed(), "enclosure report");
}

void sandwich(Outcome& o) {
  const GaugeSetup& g = gauge_setup();
  const VerifierReport rep = verify_gauge_sandwich(g.sbf, g.gauge, VerifierConfig{});
  o.detail << report_summary(rep) << "; means";
  for (double v : g.gauge.mean) o.detail << " " << v;
  o.require(rep.passed(), "sandwich report");
}

void concentration(Outcome& o) {
  const GaugeSetup& g = gauge_setup();
  const VerifierReport rep = check_concentration_trend(g.gauge);
  o.detail << report_summary(rep) << "; iqr/median";
  for (double v : g.gauge.dispersion) o.detail << " " << v;
  o.require(rep.passed(), "concentration report");
}

void quantization_anchors(Outcome& o) {
  const auto m = GaussianModel::scalar(1.0);
  const auto one2 = distortion(m, NormSpec::sup_norm(), 0.0, 2.0, 200000, RandomStream(108, 0));
  const auto one1 = distortion(m, NormSpec::sup_norm(), 0.0, 1.0, 200000, RandomStream(108, 1));
  o.detail << "D(0,2) " << one2.D_hat << " +- " << one2.stderr_D << "; D(0,1) " << one1.D_hat << " +- " << one1.stderr_D << "; ";
  o.require(one2.n == 1 && one1.n == 1, "single codeword at r = 0");
  o.require(std::abs(one2.D_hat - std::numbers::sqrt2) <= 3.0 * one2.stderr_D, "D(0,2) = sqrt 2");
  o.require(std::abs(one1.D_hat - 2.0 / std::sqrt(std::numbers::pi)) <= 3.0 * one1.stderr_D, "D(0,1) = 2 / sqrt pi");
  for (double s : {1.0, 2.0}) {
    const auto q = distortion(m, NormSpec::sup_norm(), std::log(2.0), s, 200000, RandomStream(108, 2 + static_cast<std::uint64_t>(s)));
    const double exact = oracle::scalar_distortion(2, s);
    o.detail << "n=2 s=" << s << " " << q.D_hat << " +- " << q.stderr_D << " quadrature " << exact << "; ";
    o.require(q.n == 2, "two codewords");
    o.require(std::abs(q.D_hat - exact) <= 3.0 * q.stderr_D, "n = 2 quadrature at s " + std::to_string(s));
  }
}

std::string scratch_dir(const std::string& name) {
  const fs::path p = fs::path(SMALLBALL_TEST_TMP) / "acceptance" / name;
  fs::remove_all(p);
  return p.string();
}

void quantization_trend(Outcome& o) {
  ExperimentConfig c;
  c.experiment = "quantize";
  c.seed = 109;
  c.model = "wiener";
  c.grid_n = 64;
  c.r_grid = {4.0, 8.0, 12.0};
  c.s = {2.0};
  c.n_test = 1280;
  c.centers = 200;
  c.kappa = 0.5;
  c.out = scratch_dir("quantize");
  const ResultManifest man = run(c);
  const Table t = Table::from_csv(read_file(c.out + "/quantize.csv"));
  std::vector<double> dev, dev_se, cov, cov_lo, cov_hi;
  for (const auto& row : t.rows) {
    const double ratio = row["ratio_to_gauge_inverse"].get<double>();
    const double g = row["gauge_inverse"].get<double>();
    dev.push_back(std::abs(ratio - 1.0));
    dev_se.push_back(row["stderr"].get<double>() / g);
    cov.push_back(row["coverage"].get<double>());
    cov_lo.push_back(row["coverage_lo"].get<double>());
    cov_hi.push_back(row["coverage_hi"].get<double>());
    o.detail << "r " << row["r"].get<double>() << ": ratio " << ratio << " coverage " << cov.back() << "; ";
  }
  o.require(t.rows.size() == 3, "three rates");
  if (t.rows.size() != 3) return;
  for (std::size_t k = 1; k < dev.size(); ++k) {
    o.require(dev[k] <= dev[k - 1] + 3.0 * std::hypot(dev_se[k], dev_se[k - 1]), "ratio approaches 1 within CI");
    // Increasing within the Wilson intervals.
    o.require(cov[k] >= cov[k - 1] - ((cov[k - 1] - cov_lo[k - 1]) + (cov_hi[k] - cov[k])), "coverage increasing in r");
  }
  o.require(dev.back() <= 0.3, "final ratio in [0.7, 1.3]");
  for (const auto& r : man.reports)
    if (r.tag == "coverage-trend" || r.tag == "distortion-asymptotics") {
      o.detail << r.tag << " " << r.verdict << "; ";
      o.require(r.verdict != "fail", r.tag + " report");
    }
}

void subadditivity(Outcome& o) {
  if (!hard_series) {
    o.require(false, "hard series unavailable");
    return;
  }
  const SubadditiveSeries& s = *hard_series;
  auto at = [&](double a) {
    for (std::size_t k = 0; k < s.a_grid.size(); ++k)
      if (s.a_grid[k] == a) return k;
    throw DataError("a missing from the series grid");
  };
  const std::size_t i2 = at(2.0), i4 = at(4.0);
  const double lhs = 2.0 * s.values[i2], rhs = s.values[i4];
  const double tol = 3.0 * std::hypot(2.0 * s.stderrs[i2], s.stderrs[i4]);
  o.detail << "2 Lambda(2) " << lhs << " Lambda(4) " << rhs << " tol " << tol << "; ";
  o.require(lhs <= rhs + tol, "Lambda(2) + Lambda(2) <= Lambda(4)");
  const VerifierReport trend = check_series_trend(s);
  o.detail << report_summary(trend) << "; ";
  o.require(trend.passed(), "Lambda(a) / a nondecreasing");

  const auto m = GaussianModel::wiener(64);
  const SplitCheck soft = check_split(m, SeriesKind::soft, NormSpec::lp_norm(2.0), 2.0, 2.0, 100, {}, RandomStream(110, 0));
  o.detail << "soft split violations " << soft.n_violations << " mean gap " << soft.mean_gap << "; ";
  o.require(soft.report.passed(), "soft per-path split over 100 paths");
  const SplitCheck hard = check_split(m, SeriesKind::hard, NormSpec::sup_norm(), 2.0, 2.0, 100, {}, RandomStream(110, 1));
  o.detail << "hard split violations " << hard.n_violations << " mean gap " << hard.mean_gap;
  o.require(hard.report.passed(), "hard per-path split over 100 paths");
}

void distributional_identities(Outcome& o) {
  // Scalar law of ell against the quadrature CDF.
  const auto scalar = GaussianModel::scalar(1.0);
  const double eps = 0.5;
  const auto samples =
      sample_rsbf(scalar, NormSpec::sup_norm(), {eps}, 2000, EstimatorOptions{Method::analytic}, RandomStream(111, 0));
  std::vector<double> ell;
  for (const auto& s : samples) ell.push_back(s.ell());
  const KsResult law = ks_one_sample(ell, [&](double t) { return oracle::scalar_ell_cdf(t, eps, 1.0); });
  o.detail << "scalar law KS D " << law.statistic << " p " << law.p_value << "; ";
  o.require(law.p_value > 0.01, "scalar law KS at 0.01");

  int k = 0;
  for (double e : {1.0 / std::numbers::sqrt2, 0.5}) {
    const auto r = equidistribution_check(e, 256, 300, {}, RandomStream(111, 1 + static_cast<std::uint64_t>(k++)));
    o.detail << "scaling identity eps " << e << " KS D " << r.ks.statistic << " p " << r.ks.p_value << "; ";
    o.require(r.ks.p_value > 0.01, "two-sample KS at 0.01");
  }

  const auto w = GaussianModel::wiener(64);
  const auto norm = NormSpec::hoelder(0.2);
  const EstimatorOptions mc{Method::mc, 20000};
  RandomStream cs(111, 9);
  int equal = 0;
  for (int i = 0; i < 20; ++i) {
    Path x = sample_path(w, cs);
    const auto plain = ball_prob(w, norm, x, 1.5, mc, RandomStream(112, static_cast<std::uint64_t>(i)));
    x.values.array() += 3.0;
    const auto tilde = tilde_rsbf(w, norm, x, 1.5, mc, RandomStream(112, static_cast<std::uint64_t>(i)));
    equal += tilde.estimate.log_prob == plain.log_prob ? 1 : 0;
  }
  o.detail << "hoelder tilde == plain on " << equal << "/20 shifted centers";
  o.require(equal == 20, "Hoelder tilde equals plain exactly");
}

int cli(const std::string& env, const std::string& args) {
  const std::string cmd = env + " " + std::string(SMALLBALL_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string directory_bytes(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename() != "timing.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += f.filename().string() + "\n" + read_file(f.string());
  return all;
}

void determinism(Outcome& o) {
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"sbf", "sbf --model wiener --grid-n 128 --method splitting --particles 500 --eps 0.5,0.4 --seed 12"},
      {"rsbf", "rsbf --model wiener --grid-n 128 --method transfer --eps 0.5,0.4 --centers 60 --seed 12"},
      {"quantize", "quantize --model wiener --grid-n 32 --r-grid 3,5 --s 2 --n-test 128 --centers 60 --seed 12"},
      {"constants", "constants --model wiener --grid-n 64 --mode subadditive --a-grid 1,2,4 --centers 30 --seed 12"},
  };
  for (const auto& [name, args] : runs) {
    std::vector<std::string> bytes;
    for (int w : {1, 2, 4}) {
      const std::string dir = scratch_dir(name + "_w" + std::to_string(w));
      const int code = cli("SMALLBALL_WORKERS=" + std::to_string(w), args + " --out " + dir);
      o.require(code == 0 || code == 3, name + " ran");
      bytes.push_back(fs::exists(dir) ? directory_bytes(dir) : "");
    }
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1] && bytes[0] == bytes[2];
    o.detail << name << (same ? " identical" : " differs") << " (" << bytes[0].size() << " bytes); ";
    o.require(same, name + " byte-identical across workers");
  }
  // In-process worker counts on a splitting curve.
  std::vector<double> phis;
  for (int w : {1, 3}) {
    set_worker_count(w);
    EstimatorOptions opts{Method::splitting};
    opts.splitting.n_particles = 500;
    const auto c = sbf_curve(GaussianModel::wiener(64), NormSpec::sup_norm(), {0.5, 0.3}, opts, RandomStream(113, 0));
    phis.push_back(c.phi[1].log_prob);
  }
  set_worker_count(0);
  o.require(phis[0] == phis[1], "in-process splitting identical across workers");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"scalar oracle equivalence", scalar_oracle},
      {"Brownian sup oracle equivalence", brownian_oracle},
      {"centered constant", centered_constant},
      {"subadditive constant band", subadditive_constant},
      {"enclosure on Wiener sup", enclosure},
      {"gauge sandwich", sandwich},
      {"concentration trend", concentration},
      {"quantization anchors", quantization_anchors},
      {"distortion vs gauge inverse trend", quantization_trend},
      {"subadditivity suites", subadditivity},
      {"distributional identities", distributional_identities},
      {"determinism across workers", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s criterion %zu (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.str().c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
