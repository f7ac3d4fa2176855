// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include "swa/cli.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "swa/error.hpp"
#include "swa/meta_analysis.hpp"
#include "swa/pipeline.hpp"
#include "swa/report.hpp"
#include "swa/tensor_io.hpp"

namespace swa::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CommonFlags {
  int min_size = 50;
  std::vector<std::string> exclude;
  std::vector<std::string> include;
  bool skip_embeddings = true;
  int min_tail = 5;
  std::string log_base = "10";
  std::string conv_layout = "oikk";
  std::string averaging = "per-matrix";
  bool normalize_by_n = false;
  int jobs = 0;
  std::string order_file;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--min-size", f.min_size, "Skip matrices with fewer than this many columns")
      ->capture_default_str()
      ->check(CLI::Range(2, 1 << 30));
  cmd->add_option("--exclude", f.exclude, "Regex of tensor names to skip (repeatable)");
  cmd->add_option("--include", f.include, "Regex of tensor names to keep (repeatable)");
  cmd->add_flag("--skip-embeddings,!--keep-embeddings", f.skip_embeddings,
                "Exclude embedding-like layers from model averages");
  cmd->add_option("--min-tail", f.min_tail, "Minimum power-law tail size")
      ->capture_default_str()
      ->check(CLI::Range(2, 1 << 30));
  cmd->add_option("--log-base", f.log_base, "Logarithm base for norm metrics")
      ->capture_default_str()
      ->check(CLI::IsMember({"10", "e"}));
  cmd->add_option("--conv-layout", f.conv_layout, "Conv2D axis layout")
      ->capture_default_str()
      ->check(CLI::IsMember({"oikk", "kkio"}));
  cmd->add_option("--averaging", f.averaging, "Unit of the model averages")
      ->capture_default_str()
      ->check(CLI::IsMember({"per-matrix", "per-layer"}));
  cmd->add_flag("--normalize-by-n", f.normalize_by_n, "Use X = W^T W / N");
  cmd->add_option("--jobs", f.jobs, "Worker threads (default: all cores)")
      ->envname("SWA_JOBS")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--order-file", f.order_file, "File listing tensor names in depth order");
}

AnalysisConfig make_config(const CommonFlags& f, const std::string& model_id) {
  AnalysisConfig c;
  c.extraction.model_id = model_id;
  c.extraction.min_matrix_dim = f.min_size;
  c.extraction.include_patterns = f.include;
  c.extraction.exclude_patterns = f.exclude;
  c.extraction.skip_embedding_like = f.skip_embeddings;
  c.extraction.conv_layout = parse_conv_layout(f.conv_layout);
  if (!f.order_file.empty()) c.extraction.explicit_order = read_order_file(f.order_file);
  c.spectral.normalize_by_n = f.normalize_by_n;
  c.fit.min_tail = f.min_tail;
  c.log_base = parse_log_base(f.log_base);
  c.summary.exclude_embedding_like = f.skip_embeddings;
  c.summary.averaging = parse_averaging_unit(f.averaging);
  return c;
}

int jobs_of(const CommonFlags& f) { return f.jobs > 0 ? f.jobs : omp_get_max_threads(); }

std::string model_id_for(const std::string& path, const std::string& given) {
  return given.empty() ? fs::path(path).stem().string() : given;
}

std::string sanitize(std::string s) {
  for (auto& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')) c = '_';
  }
  return s;
}

struct Loaded {
  std::string sha256;
  AnalysisResult result;
};

Loaded load_and_analyze(const std::string& path, const AnalysisConfig& config, int jobs) {
  const auto bytes = read_file(path);
  Loaded l;
  l.sha256 = sha256_hex(bytes);
  l.result = analyze_store(parse_container(bytes), config, jobs);
  return l;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoAnalyzableLayers:
    case ErrorCode::NoIncludedLayers:
    case ErrorCode::TooFewModels:
    case ErrorCode::NoMatchedLayers:
    case ErrorCode::InsufficientLayers:
    case ErrorCode::UnknownLayer:
      return kExitEmpty;
    default:
      return kExitFailure;
  }
}

void report_error(std::ostream& err, std::string_view code, const std::string& message) {
  err << json{{"error", code}, {"message", message}}.dump() << "\n";
}

ModelRecord record_for(const AnalysisResult& r, const std::string& series, std::optional<double> top1,
                       std::optional<double> top5) {
  ModelRecord rec;
  rec.series = series;
  rec.model_id = r.model_id;
  rec.reported_top1 = top1;
  rec.reported_top5 = top5;
  rec.metrics = {{"log_frobenius", r.model.avg_log_frobenius},
                 {"log_spectral", r.model.avg_log_spectral},
                 {"weighted_alpha", r.model.weighted_alpha},
                 {"log_alpha_norm", r.model.avg_log_alpha_norm},
                 {"alpha_bar", r.model.alpha_bar}};
  return rec;
}

void append_record(const fs::path& csv, const ModelRecord& rec) {
  std::string text;
  if (fs::exists(csv)) {
    const auto bytes = read_file(csv);
    text.assign(bytes.begin(), bytes.end());
    if (!text.empty() && text.back() != '\n') text += '\n';
  } else {
    text = records_csv_header() + "\n";
  }
  text += record_csv_row(rec) + "\n";
  write_file_atomic(csv, text);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Data-free spectral quality metrics for neural-network weight files", "swa"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  // analyze
  CommonFlags analyze_flags;
  std::string analyze_path, analyze_model, analyze_out = ".", analyze_format = "both";
  std::string append_to, append_series;
  std::optional<double> append_top1, append_top5;
  auto* analyze = app.add_subcommand("analyze", "Compute per-layer and model metrics for a weight file");
  analyze->add_option("weights", analyze_path, "Weight file (safetensors)")->required();
  analyze->add_option("--model-id", analyze_model, "Model id (default: file stem)");
  analyze->add_option("--out-dir", analyze_out, "Output directory")->capture_default_str();
  analyze->add_option("--format", analyze_format, "Outputs to write")
      ->capture_default_str()
      ->check(CLI::IsMember({"json", "csv", "both"}));
  analyze->add_option("--append-to", append_to, "Append model metrics as a row of a regression CSV");
  analyze->add_option("--series", append_series, "Series name for --append-to");
  analyze->add_option("--top1", append_top1, "Reported top-1 accuracy (percent) for --append-to")
      ->check(CLI::Range(0.0, 100.0));
  analyze->add_option("--top5", append_top5, "Reported top-5 accuracy (percent) for --append-to")
      ->check(CLI::Range(0.0, 100.0));
  add_common(analyze, analyze_flags);

  // esd
  CommonFlags esd_flags;
  std::string esd_path, esd_layer, esd_out, esd_model;
  int esd_slice = 0, esd_bins = 50;
  bool esd_log = false;
  auto* esd = app.add_subcommand("esd", "Eigenvalue histogram and power-law fit for one layer");
  esd->add_option("weights", esd_path, "Weight file (safetensors)")->required();
  esd->add_option("--layer", esd_layer, "Tensor name")->required();
  esd->add_option("--slice", esd_slice, "Conv2D kernel position")->capture_default_str();
  esd->add_option("--bins", esd_bins, "Histogram bins")->capture_default_str()->check(CLI::PositiveNumber);
  esd->add_flag("--log", esd_log, "Bin in log10(lambda)");
  esd->add_option("--model-id", esd_model, "Model id (default: file stem)");
  esd->add_option("-o,--out", esd_out, "Output prefix (default: <model>.<layer>)");
  add_common(esd, esd_flags);

  // compare
  CommonFlags cmp_flags;
  std::string cmp_base, cmp_var, cmp_out;
  auto* compare = app.add_subcommand("compare", "Per-layer deltas and scale-collapse check between two models");
  compare->add_option("baseline", cmp_base, "Baseline weight file")->required();
  compare->add_option("variant", cmp_var, "Variant weight file")->required();
  compare->add_option("-o,--out", cmp_out, "Output JSON path (default: <base>_vs_<variant>.compare.json)");
  add_common(compare, cmp_flags);

  // regress
  std::string reg_csv, reg_target = "top1_error", reg_series, reg_direction = "target-on-metric",
                       reg_out = ".";
  std::vector<std::string> reg_metrics, reg_exclude;
  bool reg_all = false;
  int reg_jobs = 0;
  auto* regress = app.add_subcommand("regress", "Regress model metrics against reported accuracy");
  regress->add_option("csv", reg_csv, "Model metrics CSV")->required();
  regress->add_option("--metric", reg_metrics, "Metric column (repeatable)");
  regress->add_flag("--all-metrics", reg_all, "Evaluate the four norm and alpha metrics");
  regress->add_option("--target", reg_target, "Dependent quantity")
      ->capture_default_str()
      ->check(CLI::IsMember({"top1_error", "top1_acc", "top5_error"}));
  regress->add_option("--series", reg_series, "Restrict to one series");
  regress->add_option("--direction", reg_direction, "Which variable is regressed on which")
      ->capture_default_str()
      ->check(CLI::IsMember({"target-on-metric", "metric-on-target"}));
  regress->add_option("--exclude-model", reg_exclude, "Model id to drop (repeatable)");
  regress->add_option("--out-dir", reg_out, "Output directory")->capture_default_str();
  regress->add_option("--jobs", reg_jobs, "Worker threads")->envname("SWA_JOBS")->check(CLI::NonNegativeNumber);

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  if (storage.empty()) storage.emplace_back("swa");
  for (auto& a : storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (analyze->parsed()) {
      const auto model_id = model_id_for(analyze_path, analyze_model);
      const auto config = make_config(analyze_flags, model_id);
      const auto loaded = load_and_analyze(analyze_path, config, jobs_of(analyze_flags));
      fs::create_directories(analyze_out);
      const fs::path dir(analyze_out);
      if (analyze_format != "csv") {
        write_file_atomic(dir / (model_id + ".report.json"),
                          analysis_report_json(loaded.result, config, loaded.sha256).dump(2) + "\n");
      }
      if (analyze_format != "json") {
        write_file_atomic(dir / (model_id + ".layers.csv"), layers_csv(loaded.result));
      }
      if (!append_to.empty()) {
        append_record(append_to, record_for(loaded.result, append_series.empty() ? "default" : append_series,
                                            append_top1, append_top5));
      }
      const auto& m = loaded.result.model;
      out << model_id << ": L=" << m.n_layers << " alpha_bar=" << format_double(m.alpha_bar)
          << " weighted_alpha=" << format_double(m.weighted_alpha) << "\n";
      return kExitOk;
    }

    if (esd->parsed()) {
      const auto model_id = model_id_for(esd_path, esd_model);
      const auto config = make_config(esd_flags, model_id);
      const auto store = load_container(esd_path);
      if (!store.tensors.count(esd_layer)) {
        throw Error(ErrorCode::UnknownLayer, "no tensor named '" + esd_layer + "'");
      }
      auto xc = config.extraction;
      xc.include_patterns.clear();
      xc.exclude_patterns.clear();
      xc.explicit_order.clear();
      auto single = store;
      std::erase_if(single.tensors, [&](const auto& kv) { return kv.first != esd_layer; });
      ExtractionResult extracted;
      try {
        extracted = extract_layer_matrices(single, xc);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoAnalyzableLayers) throw;
        throw Error(ErrorCode::UnknownLayer, "tensor '" + esd_layer + "' is not analyzable");
      }
      const auto it = std::find_if(extracted.matrices.begin(), extracted.matrices.end(),
                                   [&](const LayerMatrix& m) { return m.slice_index == esd_slice; });
      if (it == extracted.matrices.end()) {
        throw Error(ErrorCode::UnknownLayer, "tensor '" + esd_layer + "' has no slice " + std::to_string(esd_slice));
      }
      const auto spectrum = compute_esd(*it, config.spectral);
      auto fit_opts = config.fit;
      fit_opts.jobs = jobs_of(esd_flags);
      json fit = nullptr;
      try {
        fit = fit_json(fit_power_law(spectrum, fit_opts));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateTail && e.code() != ErrorCode::TooFewEigenvalues) throw;
      }
      const auto hist = esd_histogram(spectrum, esd_bins, esd_log);
      std::string csv = "bin_left,bin_right,count\n";
      for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        csv += format_double(hist.bin_edges[i]) + "," + format_double(hist.bin_edges[i + 1]) + "," +
               std::to_string(hist.counts[i]) + "\n";
      }
      const json sidecar = {{"model_id", model_id},
                            {"layer", esd_layer},
                            {"slice", esd_slice},
                            {"kind", layer_kind_name(it->kind)},
                            {"N", it->n_rows},
                            {"M", it->n_cols},
                            {"n_bins", esd_bins},
                            {"log_scaled", esd_log},
                            {"n_eigenvalues", spectrum.eigenvalues.size()},
                            {"n_dropped", spectrum.n_dropped},
                            {"fit", fit}};
      const std::string prefix = esd_out.empty() ? sanitize(model_id + "." + esd_layer) : esd_out;
      write_file_atomic(prefix + ".esd.csv", csv);
      write_file_atomic(prefix + ".esd.json", sidecar.dump(2) + "\n");
      out << prefix << ".esd.csv\n";
      return kExitOk;
    }

    if (compare->parsed()) {
      const auto base_id = model_id_for(cmp_base, "");
      const auto var_id = model_id_for(cmp_var, "");
      const auto base_cfg = make_config(cmp_flags, base_id);
      const auto var_cfg = make_config(cmp_flags, var_id);
      const int jobs = jobs_of(cmp_flags);
      const auto base = load_and_analyze(cmp_base, base_cfg, jobs);
      const auto var = load_and_analyze(cmp_var, var_cfg, jobs);
      const auto cmp = compare_models(base.result, var.result,
                                      scale_collapse_in_base(base_cfg.collapse, base_cfg.log_base));
      json j = comparison_json(cmp);
      j["baseline"] = {{"model_id", base_id}, {"input_sha256", base.sha256}};
      j["variant"] = {{"model_id", var_id}, {"input_sha256", var.sha256}};
      j["config"] = config_echo(base_cfg);
      const std::string path = cmp_out.empty() ? base_id + "_vs_" + var_id + ".compare.json" : cmp_out;
      write_file_atomic(path, j.dump(2) + "\n");
      out << path << ": " << cmp.deltas.size() << " matched layers, " << cmp.scale_collapse.flagged.size()
          << " flagged\n";
      for (const auto& f : cmp.scale_collapse.flagged) {
        out << "  scale collapse: " << f.layer_name << " slice " << f.slice_index
            << " delta_log_spectral=" << format_double(f.deviation) << "\n";
      }
      return kExitOk;
    }

    if (regress->parsed()) {
      auto records = read_records_csv(reg_csv);
      std::vector<std::string> metrics = reg_metrics;
      if (reg_all) {
        for (const auto& m : table_metric_names()) {
          if (std::find(metrics.begin(), metrics.end(), m) == metrics.end()) metrics.push_back(m);
        }
      }
      if (metrics.empty()) throw Error(ErrorCode::InvalidArgument, "pass --metric or --all-metrics");
      auto by_series = split_by_series(records);
      if (!reg_series.empty()) {
        const auto it = by_series.find(reg_series);
        if (it == by_series.end()) throw Error(ErrorCode::TooFewModels, "no records in series '" + reg_series + "'");
        by_series = {{it->first, it->second}};
      }
      if (by_series.empty()) throw Error(ErrorCode::TooFewModels, "CSV has no records");

      EvaluateOptions opts;
      opts.direction = parse_direction(reg_direction);
      opts.exclude_models = reg_exclude;
      const auto target = parse_target(reg_target);

      std::vector<std::pair<std::string, std::string>> jobs_list;
      for (const auto& [series, recs] : by_series)
        for (const auto& m : metrics) jobs_list.emplace_back(series, m);
      std::vector<RegressionResult> results(jobs_list.size());
      std::vector<std::exception_ptr> errors(jobs_list.size());
      const auto n = static_cast<std::ptrdiff_t>(jobs_list.size());
#pragma omp parallel for num_threads(reg_jobs > 0 ? reg_jobs : omp_get_max_threads())
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
          results[k] = evaluate_metric(by_series.at(jobs_list[k].first), jobs_list[k].second, target, opts);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }

      fs::create_directories(reg_out);
      json all = json::array();
      for (const auto& r : results) {
        all.push_back(regression_json(r));
        write_file_atomic(fs::path(reg_out) / sanitize(r.series + "." + r.metric_name + ".plot.csv"), plot_csv(r));
      }
      write_file_atomic(fs::path(reg_out) / "regression.json", all.dump(2) + "\n");

      out << std::left << std::setw(16) << "series" << std::setw(16) << "metric" << std::setw(5) << "n"
          << std::setw(12) << "RMSE" << std::setw(12) << "R2" << "Kendall-tau\n";
      for (const auto& r : results) {
        out << std::left << std::setw(16) << r.series << std::setw(16) << r.metric_name << std::setw(5) << r.n
            << std::fixed << std::setprecision(4) << std::setw(12) << r.rmse << std::setw(12) << r.r2
            << r.kendall_tau << "\n";
        out.unsetf(std::ios::fixed);
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    report_error(err, error_code_name(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    report_error(err, "Io", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace swa::cli
