// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include "swa/meta_analysis.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "swa/error.hpp"
#include "swa/format.hpp"

namespace swa {

namespace {

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_number(const std::string& cell, int line, const std::string& column) {
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line) + ": column '" + column +
                                                "' has non-numeric value '" + cell + "'");
  }
  return v;
}

std::optional<double> target_value(const ModelRecord& r, Target t) {
  switch (t) {
    case Target::Top1Error:
      if (r.reported_top1) return 100.0 - *r.reported_top1;
      return std::nullopt;
    case Target::Top1Acc: return r.reported_top1;
    case Target::Top5Error:
      if (r.reported_top5) return 100.0 - *r.reported_top5;
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::string_view target_name(Target t) {
  switch (t) {
    case Target::Top1Error: return "top1_error";
    case Target::Top1Acc: return "top1_acc";
    case Target::Top5Error: return "top5_error";
  }
  return "?";
}

Target parse_target(std::string_view name) {
  if (name == "top1_error") return Target::Top1Error;
  if (name == "top1_acc") return Target::Top1Acc;
  if (name == "top5_error") return Target::Top5Error;
  throw Error(ErrorCode::InvalidArgument, "unknown target '" + std::string(name) + "'");
}

std::string_view direction_name(Direction d) {
  return d == Direction::TargetOnMetric ? "target-on-metric" : "metric-on-target";
}

Direction parse_direction(std::string_view name) {
  if (name == "target-on-metric") return Direction::TargetOnMetric;
  if (name == "metric-on-target") return Direction::MetricOnTarget;
  throw Error(ErrorCode::InvalidArgument, "unknown regression direction '" + std::string(name) + "'");
}

OlsResult ols_regression(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "x has " + std::to_string(x.size()) + " values, y has " +
                                               std::to_string(y.size()));
  }
  const auto n = x.size();
  if (n < 3) throw Error(ErrorCode::TooFewModels, "regression needs at least 3 points");
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) {
    throw Error(ErrorCode::ConstantPredictor, "predictor is constant");
  }
  OlsResult r;
  if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) {
    r.slope = 0.0;
    r.intercept = y[0];
    r.rmse = 0.0;
    r.r2 = 1.0;
    return r;
  }

  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (r.slope * x[i] + r.intercept);
    ss_res += e * e;
  }
  r.rmse = std::sqrt(ss_res / static_cast<double>(n));
  r.r2 = 1.0 - ss_res / ss_tot;
  return r;
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "x and y lengths differ");
  if (x.size() < 2) throw Error(ErrorCode::InvalidArgument, "kendall_tau needs at least 2 points");
  long concordant = 0, discordant = 0, tie_x_only = 0, tie_y_only = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) continue;
      if (dx == 0.0) {
        ++tie_x_only;
      } else if (dy == 0.0) {
        ++tie_y_only;
      } else if ((dx > 0.0) == (dy > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double cd = static_cast<double>(concordant + discordant);
  const double denom = std::sqrt((cd + static_cast<double>(tie_y_only)) * (cd + static_cast<double>(tie_x_only)));
  if (denom == 0.0) throw Error(ErrorCode::AllTied, "all pairs tied in x or in y");
  return static_cast<double>(concordant - discordant) / denom;
}

RegressionResult evaluate_metric(std::vector<ModelRecord> records, const std::string& metric_name,
                                 Target target, const EvaluateOptions& options) {
  std::erase_if(records, [&](const ModelRecord& r) {
    return std::find(options.exclude_models.begin(), options.exclude_models.end(), r.model_id) !=
           options.exclude_models.end();
  });
  if (records.empty()) throw Error(ErrorCode::TooFewModels, "no records to evaluate");
  for (const auto& r : records) {
    if (r.series != records.front().series) {
      throw Error(ErrorCode::MixedSeries, "records span series '" + records.front().series +
                                              "' and '" + r.series + "'; filter to one series");
    }
  }
  const bool known = std::any_of(records.begin(), records.end(),
                                 [&](const ModelRecord& r) { return r.metrics.count(metric_name) > 0; });
  if (!known) throw Error(ErrorCode::MissingMetric, "no record carries metric '" + metric_name + "'");

  struct Pair {
    std::string id;
    double metric, target;
  };
  std::vector<Pair> pairs;
  for (const auto& r : records) {
    const auto m = r.metrics.find(metric_name);
    const auto t = target_value(r, target);
    if (m != r.metrics.end() && t && !std::isnan(m->second)) pairs.push_back({r.model_id, m->second, *t});
  }
  if (pairs.size() < 3) {
    throw Error(ErrorCode::TooFewModels, "metric '" + metric_name + "' has " +
                                             std::to_string(pairs.size()) +
                                             " usable models, need at least 3");
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.id < b.id; });

  std::vector<double> x, y;
  for (const auto& p : pairs) {
    const bool forward = options.direction == Direction::TargetOnMetric;
    x.push_back(forward ? p.metric : p.target);
    y.push_back(forward ? p.target : p.metric);
  }

  RegressionResult rr;
  rr.series = records.front().series;
  rr.metric_name = metric_name;
  rr.target = std::string(target_name(target));
  rr.direction = std::string(direction_name(options.direction));
  rr.n = static_cast<int>(pairs.size());
  const auto ols = ols_regression(x, y);
  rr.slope = ols.slope;
  rr.intercept = ols.intercept;
  rr.rmse = ols.rmse;
  rr.r2 = ols.r2;
  rr.kendall_tau = kendall_tau(x, y);

  // Pointwise band on the mean response: y_hat +- t * s * sqrt(1/n + (x - mx)^2 / Sxx).
  const double n = static_cast<double>(rr.n);
  const double mx = mean(x);
  double sxx = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    const double e = y[i] - (ols.slope * x[i] + ols.intercept);
    ss_res += e * e;
  }
  const double s = std::sqrt(ss_res / (n - 2.0));
  const boost::math::students_t dist(n - 2.0);
  const double tq = boost::math::quantile(dist, 0.5 + options.confidence / 2.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    PlotPoint p;
    p.model_id = pairs[i].id;
    p.x = x[i];
    p.y = y[i];
    p.y_hat = ols.slope * x[i] + ols.intercept;
    const double half = tq * s * std::sqrt(1.0 / n + (x[i] - mx) * (x[i] - mx) / sxx);
    p.band_lo = p.y_hat - half;
    p.band_hi = p.y_hat + half;
    rr.plot.push_back(p);
  }
  std::sort(rr.plot.begin(), rr.plot.end(), [](const PlotPoint& a, const PlotPoint& b) {
    return a.x != b.x ? a.x < b.x : a.model_id < b.model_id;
  });
  return rr;
}

std::vector<ModelRecord> parse_records_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    for (auto& h : split_csv_line(line)) header.push_back(trim(h));
  }
  if (header.empty()) throw Error(ErrorCode::InvalidArgument, "CSV has no header row");
  auto column = [&](const std::string& name) -> int {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int c_series = column("series"), c_id = column("model_id"), c_top1 = column("reported_top1"),
            c_top5 = column("reported_top5");
  if (c_series < 0 || c_id < 0 || c_top1 < 0) {
    throw Error(ErrorCode::InvalidArgument,
                "CSV header must contain series, model_id and reported_top1 columns");
  }

  std::vector<ModelRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line_no) + " has " +
                                                  std::to_string(cells.size()) + " fields, header has " +
                                                  std::to_string(header.size()));
    }
    for (auto& c : cells) c = trim(c);
    ModelRecord r;
    r.series = cells[static_cast<std::size_t>(c_series)];
    r.model_id = cells[static_cast<std::size_t>(c_id)];
    for (std::size_t i = 0; i < header.size(); ++i) {
      const int ci = static_cast<int>(i);
      if (ci == c_series || ci == c_id) continue;
      const auto v = parse_number(cells[i], line_no, header[i]);
      if (ci == c_top1 || ci == c_top5) {
        if (v && (*v < 0.0 || *v > 100.0)) {
          throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line_no) +
                                                      ": accuracy outside [0, 100]");
        }
        (ci == c_top1 ? r.reported_top1 : r.reported_top5) = v;
      } else if (v) {
        r.metrics[header[i]] = *v;
      }
    }
    for (const auto& other : records) {
      if (other.series == r.series && other.model_id == r.model_id) {
        throw Error(ErrorCode::InvalidArgument, "duplicate model_id '" + r.model_id +
                                                    "' in series '" + r.series + "'");
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ModelRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "failed to open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_records_csv(ss.str());
}

std::string records_csv_header() {
  std::string h = "series,model_id,reported_top1,reported_top5";
  for (const auto& m : regression_metric_names()) h += "," + m;
  return h;
}

std::string record_csv_row(const ModelRecord& r) {
  std::string row = csv_field(r.series) + "," + csv_field(r.model_id) + ",";
  if (r.reported_top1) row += format_double(*r.reported_top1);
  row += ",";
  if (r.reported_top5) row += format_double(*r.reported_top5);
  for (const auto& m : regression_metric_names()) {
    row += ",";
    const auto it = r.metrics.find(m);
    if (it != r.metrics.end()) row += format_double(it->second);
  }
  return row;
}

std::map<std::string, std::vector<ModelRecord>> split_by_series(const std::vector<ModelRecord>& records) {
  std::map<std::string, std::vector<ModelRecord>> out;
  for (const auto& r : records) out[r.series].push_back(r);
  return out;
}

}  // namespace swa
