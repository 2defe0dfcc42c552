#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "cd2/evaluation.hpp"

namespace cd2::evaluation {

namespace {

constexpr double kPsnrCap = 100.0;

std::vector<double> dmos_of(const MeasuredDataset& data) {
  std::vector<double> y;
  y.reserve(data.pairs.size());
  for (const auto& p : data.pairs) y.push_back(p.dmos);
  return y;
}

template <class Fn>
std::optional<double> defined(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateVariance) return std::nullopt;
    throw;
  }
}

// Shared by the score-based methods: raw-score correlations, affine RMSE.
MetricsReport evaluate_scores(std::string method, const MeasuredDataset& data, const std::vector<double>& scores) {
  MetricsReport r;
  r.method = std::move(method);
  r.rows = data.pairs.size();
  r.failed_rows = data.failures.size();
  if (data.pairs.empty()) throw Error(ErrorCode::EmptyDataset, "no pairs could be measured");
  const auto y = dmos_of(data);
  r.plcc = defined([&] { return plcc(scores, y); });
  r.srocc = defined([&] { return srocc(scores, y); });
  if (!r.plcc || !r.srocc) r.notes.push_back("correlation undefined: degenerate variance in scores or DMOS");
  const AffineFit fit = fit_affine(scores, y);
  r.predictions.reserve(scores.size());
  for (double s : scores) r.predictions.push_back(fit(s));
  r.rmse = rmse(r.predictions, y);
  std::ostringstream note;
  note << "RMSE after affine calibration dmos = " << fit.intercept << " + " << fit.slope << " * score";
  r.notes.push_back(note.str());
  return r;
}

void print_optional(std::ostream& out, const std::optional<double>& v) {
  if (v) {
    out << *v;
  } else {
    out << "undefined";
  }
}

}  // namespace

int resolve_threads(int requested) {
  int n = requested;
  if (n <= 0) {
    n = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CD2_THREADS")) {
      const int cap = std::atoi(env);
      if (cap > 0) n = n > 0 ? std::min(n, cap) : cap;
    }
  }
  return std::max(n, 1);
}

MeasuredDataset measure_pairs(const DatasetManifest& manifest, const ImageLoader& loader, const EvalConfig& cfg) {
  const std::size_t n = manifest.rows.size();
  std::vector<std::optional<PairMeasurement>> slots(n);
  std::vector<std::optional<RowIssue>> issues(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto& row = manifest.rows[i];
      try {
        const auto ref = loader(row.reference);
        const auto dist = loader(row.distorted);
        const auto rf = features::extract_features(ref, cfg.grid);
        const auto df = features::extract_features(dist, cfg.grid);
        PairMeasurement m;
        m.row = i;
        m.dmos = row.dmos;
        m.ref_id = row.ref_id;
        m.cd2a = scoring::cd2a_score(scoring::distortion_map(rf, df, cfg.eps), cfg.aggregation).value;
        m.distances = distances::distance_vector(rf, df, cfg.eps);
        m.psnr = psnr(ref, dist);
        slots[i] = std::move(m);
      } catch (const Error& e) {
        issues[i] = RowIssue{row.line, e.code(), e.what()};
      } catch (const std::exception& e) {
        issues[i] = RowIssue{row.line, ErrorCode::IoError, e.what()};
      }
    }
  };

  const int threads = std::min<int>(resolve_threads(cfg.threads), static_cast<int>(std::max<std::size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  MeasuredDataset data;
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i]) data.pairs.push_back(std::move(*slots[i]));
    if (issues[i]) data.failures.push_back(std::move(*issues[i]));
  }
  return data;
}

MetricsReport evaluate_cd2a(const MeasuredDataset& data) {
  std::vector<double> scores;
  for (const auto& p : data.pairs) scores.push_back(p.cd2a);
  return evaluate_scores("cd2a", data, scores);
}

MetricsReport evaluate_psnr(const MeasuredDataset& data) {
  std::vector<double> scores;
  for (const auto& p : data.pairs) scores.push_back(-std::min(p.psnr, kPsnrCap));
  auto r = evaluate_scores("psnr", data, scores);
  r.notes.push_back("score = -min(PSNR, 100 dB)");
  return r;
}

MetricsReport evaluate_cd2b(const MeasuredDataset& data, const EvalConfig& cfg) {
  if (data.pairs.empty()) throw Error(ErrorCode::EmptyDataset, "no pairs could be measured");
  std::vector<std::string> groups;
  for (const auto& p : data.pairs) groups.push_back(p.ref_id);
  const auto folds = kfold_split(groups, cfg.folds, cfg.seed, cfg.split);

  MetricsReport r;
  r.method = "cd2b";
  r.rows = data.pairs.size();
  r.failed_rows = data.failures.size();
  r.predictions.assign(data.pairs.size(), 0.0);

  double rmse_sum = 0.0;
  double plcc_sum = 0.0;
  double srocc_sum = 0.0;
  int plcc_n = 0;
  int srocc_n = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<distances::DistanceVector> x;
    std::vector<double> y;
    for (auto i : folds[f].train) {
      x.push_back(data.pairs[i].distances);
      y.push_back(data.pairs[i].dmos);
    }
    const auto model = boosting::train(x, y, cfg.train);

    std::vector<double> pred;
    std::vector<double> truth;
    for (auto i : folds[f].test) {
      const double p = boosting::predict(model, data.pairs[i].distances);
      r.predictions[i] = p;
      pred.push_back(p);
      truth.push_back(data.pairs[i].dmos);
    }
    FoldMetrics fm;
    fm.fold = static_cast<int>(f);
    fm.n = pred.size();
    fm.rmse = rmse(pred, truth);
    fm.plcc = defined([&] { return plcc(pred, truth); });
    fm.srocc = defined([&] { return srocc(pred, truth); });
    rmse_sum += fm.rmse;
    if (fm.plcc) plcc_sum += *fm.plcc, ++plcc_n;
    if (fm.srocc) srocc_sum += *fm.srocc, ++srocc_n;
    r.folds.push_back(fm);
  }
  r.rmse = rmse_sum / static_cast<double>(folds.size());
  if (plcc_n) r.plcc = plcc_sum / plcc_n;
  if (srocc_n) r.srocc = srocc_sum / srocc_n;
  if (plcc_n < static_cast<int>(folds.size()) || srocc_n < static_cast<int>(folds.size())) {
    r.notes.push_back("some folds had undefined correlations and were left out of the means");
  }
  r.notes.push_back(std::to_string(folds.size()) + "-fold CV, " +
                    (cfg.split == SplitMode::ByReference ? "grouped by reference image" : "row-wise") +
                    "; metrics are fold means");
  return r;
}

MetricsReport run_cd2a_eval(const DatasetManifest& manifest, const ImageLoader& loader, const EvalConfig& cfg) {
  return evaluate_cd2a(measure_pairs(manifest, loader, cfg));
}

MetricsReport run_cd2b_eval(const DatasetManifest& manifest, const ImageLoader& loader, const EvalConfig& cfg) {
  return evaluate_cd2b(measure_pairs(manifest, loader, cfg), cfg);
}

void write_report_text(const MetricsReport& report, std::ostream& out) {
  const auto old = out.flags();
  out << std::setprecision(6);
  out << "method " << report.method << ": rows=" << report.rows << " failed=" << report.failed_rows << '\n';
  out << "  RMSE  " << report.rmse << '\n';
  out << "  PLCC  ";
  print_optional(out, report.plcc);
  out << "\n  SROCC ";
  print_optional(out, report.srocc);
  out << '\n';
  for (const auto& f : report.folds) {
    out << "  fold " << f.fold << " n=" << f.n << " rmse=" << f.rmse << " plcc=";
    print_optional(out, f.plcc);
    out << " srocc=";
    print_optional(out, f.srocc);
    out << '\n';
  }
  for (const auto& n : report.notes) out << "  note: " << n << '\n';
  out.flags(old);
}

void write_reports_csv(std::span<const MetricsReport> reports, std::ostream& out) {
  const auto old = out.flags();
  out << std::setprecision(10);
  out << "method,rows,failed,rmse,plcc,srocc\n";
  for (const auto& r : reports) {
    out << r.method << ',' << r.rows << ',' << r.failed_rows << ',' << r.rmse << ',';
    if (r.plcc) out << *r.plcc;
    out << ',';
    if (r.srocc) out << *r.srocc;
    out << '\n';
  }
  out.flags(old);
}

void write_correlation_report(const CorrelationReport& report, std::ostream& out) {
  const auto old = out.flags();
  out << std::setprecision(4) << std::fixed;
  out << "images " << report.per_image.size() << " (skipped " << report.skipped << ")\n";
  out << "pearson  median " << report.pearson.median << " (+- " << report.pearson.stddev << ")\n";
  out << "spearman median " << report.spearman.median << " (+- " << report.spearman.stddev << ")\n";
  out << "iqr      median " << report.iqr.median << " (+- " << report.iqr.stddev << ")\n";
  out.flags(old);
}

}  // namespace cd2::evaluation
