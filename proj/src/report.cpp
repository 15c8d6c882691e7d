#include "roast/report.hpp"

#include "roast/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace roast {

namespace {

std::string fixed2(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  // avoid "-0.00"
  if (std::string(buf) == "-0.00") return "0.00";
  return buf;
}

Json metrics_json(const MetricVector& m) {
  Json j;
  const auto v = m.values();
  for (std::size_t k = 0; k < MetricVector::kCount; ++k) j[MetricVector::kNames[k]] = v[k];
  return j;
}

MetricVector metrics_from(const Json& j) {
  std::array<double, MetricVector::kCount> v{};
  for (std::size_t k = 0; k < MetricVector::kCount; ++k) v[k] = j.at(MetricVector::kNames[k]).get<double>();
  return MetricVector::from_values(v);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> optional_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::string render_csv(const std::vector<MethodSummary>& summaries) {
  std::ostringstream out;
  out << "method,acc_in,acc_shift,acc_adv,ece,auroc_x100,delta_avg,rank_avg,"
         "acc_in_std,acc_shift_std,acc_adv_std,ece_std,auroc_x100_std,delta_avg_std\n";
  for (const auto& s : summaries) {
    out << s.method << ',' << fixed2(s.mean.acc_in) << ',' << fixed2(s.mean.acc_shift) << ','
        << fixed2(s.mean.acc_adv) << ',' << fixed2(s.mean.ece) << ',' << fixed2(100.0 * s.mean.auroc) << ','
        << fixed2(s.delta_avg) << ',' << fixed2(s.rank_avg) << ',' << fixed2(s.stddev.acc_in) << ','
        << fixed2(s.stddev.acc_shift) << ',' << fixed2(s.stddev.acc_adv) << ',' << fixed2(s.stddev.ece) << ','
        << fixed2(100.0 * s.stddev.auroc) << ',' << fixed2(s.delta_avg_std) << '\n';
  }
  return out.str();
}

Json report_json(const std::vector<RunResult>& results) {
  const auto summaries = summarize(results);
  Json j;
  Json methods = Json::array();
  for (const auto& s : summaries) {
    Json m;
    m["method"] = s.method;
    m["runs"] = s.runs;
    m["diverged"] = s.diverged;
    m["mean"] = metrics_json(s.mean);
    m["std"] = metrics_json(s.stddev);
    m["delta_avg"] = finite_or_null(s.delta_avg);
    m["delta_avg_std"] = finite_or_null(s.delta_avg_std);
    m["rank_avg"] = finite_or_null(s.rank_avg);
    Json excluded = Json::array();
    for (std::size_t k = 0; k < MetricVector::kCount; ++k) {
      if (s.excluded[k]) excluded.push_back(MetricVector::kNames[k]);
    }
    m["excluded_terms"] = excluded;
    // per-dataset means over this method's runs
    Json per_split = Json::array();
    std::vector<std::string> names;
    for (const auto& r : results) {
      if (r.method != s.method || r.diverged) continue;
      for (const auto& sp : r.splits) {
        if (std::find(names.begin(), names.end(), sp.name) == names.end()) names.push_back(sp.name);
      }
    }
    for (const auto& name : names) {
      double acc = 0, ece = 0, auc = 0;
      std::size_t n_acc = 0, n_ece = 0, n_auc = 0;
      std::string tag;
      for (const auto& r : results) {
        if (r.method != s.method || r.diverged) continue;
        for (const auto& sp : r.splits) {
          if (sp.name != name) continue;
          tag = std::string(to_string(sp.tag));
          if (sp.accuracy) acc += *sp.accuracy, ++n_acc;
          if (sp.ece) ece += *sp.ece, ++n_ece;
          if (sp.auroc) auc += *sp.auroc, ++n_auc;
        }
      }
      Json e;
      e["split"] = name;
      e["tag"] = tag;
      e["accuracy"] = n_acc ? Json(acc / static_cast<double>(n_acc)) : Json(nullptr);
      e["ece"] = n_ece ? Json(ece / static_cast<double>(n_ece)) : Json(nullptr);
      e["auroc"] = n_auc ? Json(auc / static_cast<double>(n_auc)) : Json(nullptr);
      per_split.push_back(e);
    }
    m["splits"] = per_split;
    methods.push_back(m);
  }
  j["methods"] = methods;

  Json runs = Json::array();
  for (const auto& r : results) {
    Json rj;
    rj["method"] = r.method;
    rj["seed"] = r.seed;
    rj["diverged"] = r.diverged;
    if (r.diverged) rj["error"] = r.error;
    rj["metrics"] = metrics_json(r.metrics);
    Json splits = Json::array();
    for (const auto& sp : r.splits) {
      Json s;
      s["split"] = sp.name;
      s["tag"] = std::string(to_string(sp.tag));
      s["examples"] = sp.examples;
      s["accuracy"] = optional_json(sp.accuracy);
      s["ece"] = optional_json(sp.ece);
      s["auroc"] = optional_json(sp.auroc);
      splits.push_back(s);
    }
    rj["splits"] = splits;
    rj["train_log"] = r.log_path;
    runs.push_back(rj);
  }
  j["runs"] = runs;
  return j;
}

std::vector<RunResult> results_from_json(const Json& report) {
  std::vector<RunResult> out;
  try {
    for (const auto& rj : report.at("runs")) {
      RunResult r;
      r.method = rj.at("method").get<std::string>();
      r.seed = rj.at("seed").get<std::uint64_t>();
      r.diverged = rj.at("diverged").get<bool>();
      if (rj.contains("error")) r.error = rj["error"].get<std::string>();
      r.metrics = metrics_from(rj.at("metrics"));
      for (const auto& s : rj.at("splits")) {
        SplitScore sp;
        sp.name = s.at("split").get<std::string>();
        sp.tag = parse_split_tag(s.at("tag").get<std::string>());
        sp.examples = s.at("examples").get<std::size_t>();
        sp.accuracy = optional_from(s.at("accuracy"));
        sp.ece = optional_from(s.at("ece"));
        sp.auroc = optional_from(s.at("auroc"));
        r.splits.push_back(sp);
      }
      r.log_path = rj.at("train_log").get<std::string>();
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("report: ") + e.what());
  }
  if (out.empty()) throw ValidationError("report: no runs");
  return out;
}

void write_report(const std::vector<RunResult>& results, const std::filesystem::path& dir) {
  if (results.empty()) throw ValidationError("write_report: no results");
  write_text_file(dir / "report.csv", render_csv(summarize(results)));
  write_text_file(dir / "report.json", report_json(results).dump(2) + "\n");
}

std::string rerender_csv(const std::filesystem::path& report_json_path) {
  return render_csv(summarize(results_from_json(read_json_file(report_json_path))));
}

}  // namespace roast
