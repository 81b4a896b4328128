#include "smallball/plotdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <tuple>

#include "smallball/errors.hpp"

namespace smallball {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Point {
  std::string series;
  double x, y, lo, hi;
};

double num(const json& row, const char* key) {
  const auto& v = row.at(key);
  return v.is_number() ? v.get<double>() : std::nan("");
}

Point with_se(std::string series, double x, double y, double se) {
  const double h = std::isfinite(se) ? 1.96 * se : 0.0;
  return {std::move(series), x, y, y - h, y + h};
}

Table finish(std::vector<Point> pts) {
  pts.erase(std::remove_if(pts.begin(), pts.end(), [](const Point& p) { return !std::isfinite(p.x) || !std::isfinite(p.y); }),
            pts.end());
  std::stable_sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return std::tie(a.series, a.x) < std::tie(b.series, b.x); });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.series == b.series && a.x == b.x; }),
            pts.end());
  Table t;
  for (const auto& p : pts) {
    json row;
    row["x"] = p.x;
    row["y"] = p.y;
    row["y_lo"] = std::isfinite(p.lo) ? std::min(p.lo, p.y) : p.y;
    row["y_hi"] = std::isfinite(p.hi) ? std::max(p.hi, p.y) : p.y;
    row["series"] = p.series;
    t.add(std::move(row));
  }
  if (t.columns.empty()) t.columns = {"x", "y", "y_lo", "y_hi", "series"};
  return t;
}

bool stem_is(const std::string& stem, const std::string& name) {
  return stem == name || (stem.size() > name.size() && stem.compare(stem.size() - name.size() - 1, std::string::npos, "_" + name) == 0);
}

}  // namespace

Table plot_sbf_vs_eps(const std::vector<const Table*>& sbf, const std::vector<const Table*>& gauge) {
  std::vector<Point> pts;
  for (const Table* t : sbf)
    for (const auto& r : t->rows) pts.push_back(with_se("phi", num(r, "eps"), num(r, "phi"), num(r, "stderr")));
  for (const Table* t : gauge)
    for (const auto& r : t->rows) {
      pts.push_back({"gauge-median", num(r, "eps"), num(r, "median"), num(r, "median_lo"), num(r, "median_hi")});
      pts.push_back({"gauge-mean", num(r, "eps"), num(r, "mean"), num(r, "mean_lo"), num(r, "mean_hi")});
    }
  return finish(std::move(pts));
}

Table plot_distortion_vs_r(const Table& quantize) {
  std::vector<Point> pts;
  for (const auto& r : quantize.rows) {
    const double x = num(r, "r");
    pts.push_back(with_se("D(s=" + format_number(num(r, "s")) + ")", x, num(r, "D_hat"), num(r, "stderr")));
    const double g = num(r, "gauge_inverse");
    pts.push_back({"gauge-inverse", x, g, g, g});
  }
  return finish(std::move(pts));
}

Table plot_series_ratio(const Table& series) {
  std::vector<Point> pts;
  for (const auto& r : series.rows)
    pts.push_back(with_se(r.at("kind").get<std::string>(), num(r, "a"), num(r, "ratio"), num(r, "ratio_stderr")));
  return finish(std::move(pts));
}

Table plot_scaled_vs_eps(const Table& scaled) {
  std::vector<Point> pts;
  for (const auto& r : scaled.rows) {
    const double y = num(r, "scaled");
    pts.push_back({"scaled-mean-ell", num(r, "eps"), y, y, y});
  }
  return finish(std::move(pts));
}

std::vector<std::string> emit_plotdata(const std::string& out_dir) {
  const ResultManifest m = read_manifest(out_dir);
  std::vector<std::pair<std::string, Table>> tables;
  for (const auto& file : m.files) {
    const fs::path p = fs::path(out_dir) / file;
    const std::string text = read_file(p.string());
    tables.emplace_back(p.stem().string(), p.extension() == ".json" ? Table::from_json(text) : Table::from_csv(text));
  }
  std::vector<const Table*> sbf, gauge;
  std::vector<std::pair<std::string, Table>> figures;
  for (const auto& [stem, t] : tables) {
    if (stem_is(stem, "sbf")) sbf.push_back(&t);
    if (stem_is(stem, "gauge")) gauge.push_back(&t);
    if (stem_is(stem, "quantize")) figures.emplace_back("plot_distortion_vs_r.csv", plot_distortion_vs_r(t));
    if (stem_is(stem, "series")) figures.emplace_back("plot_series_ratio_vs_a.csv", plot_series_ratio(t));
    if (stem_is(stem, "scaled")) figures.emplace_back("plot_scaled_vs_eps.csv", plot_scaled_vs_eps(t));
  }
  if (!sbf.empty() || !gauge.empty()) figures.emplace_back("plot_sbf_vs_eps.csv", plot_sbf_vs_eps(sbf, gauge));
  std::vector<std::string> written;
  for (const auto& [name, t] : figures) {
    write_atomic((fs::path(out_dir) / name).string(), t.to_csv());
    written.push_back(name);
  }
  std::sort(written.begin(), written.end());
  return written;
}

}  // namespace smallball
