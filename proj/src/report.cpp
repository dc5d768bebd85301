// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#include "copest/report.hpp"

#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "copest/errors.hpp"

namespace copest::pipeline {

using json = nlohmann::json;

void RunConfig::validate() const {
  if (cutoff_hz < 0.0) throw ConfigError("run config: cutoff must be >= 0");
  if (filter_order < 1) throw ConfigError("run config: filter order must be >= 1");
  if (trim_seconds < 0.0) throw ConfigError("run config: trim must be >= 0");
  if (static_tolerance_n <= 0.0 || static_duration_s <= 0.0) {
    throw ConfigError("run config: static detection settings must be positive");
  }
  if (trials < 1) throw ConfigError("run config: trial count must be >= 1");
}

MetricStats stats(const std::vector<double>& values) {
  MetricStats out;
  out.count = static_cast<int>(values.size());
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

namespace {

MetricStats collect(const EstimationReport& r,
                    const std::function<std::optional<double>(const TrialReport&)>& f) {
  std::vector<double> values;
  for (const TrialReport& t : r.trials) {
    if (const auto v = f(t)) values.push_back(*v);
  }
  return stats(values);
}

}  // namespace

MetricStats rotation_stats(const EstimationReport& r, int i, int j) {
  return collect(r, [&](const TrialReport& t) -> std::optional<double> {
    if (!t.kinematics.succeeded) return std::nullopt;
    for (const PairRow& p : t.pairs) {
      if (p.frame_i == i && p.frame_j == j) return p.rotation_error_deg;
    }
    return std::nullopt;
  });
}

MetricStats position_abs_stats(const EstimationReport& r, int i, int j) {
  return collect(r, [&](const TrialReport& t) -> std::optional<double> {
    if (!t.kinematics.succeeded) return std::nullopt;
    for (const PairRow& p : t.pairs) {
      if (p.frame_i == i && p.frame_j == j) return p.position_error_m;
    }
    return std::nullopt;
  });
}

MetricStats position_pct_stats(const EstimationReport& r, int i, int j) {
  return collect(r, [&](const TrialReport& t) -> std::optional<double> {
    if (!t.kinematics.succeeded) return std::nullopt;
    for (const PairRow& p : t.pairs) {
      if (p.frame_i == i && p.frame_j == j) return p.position_error_pct;
    }
    return std::nullopt;
  });
}

MetricStats mass_abs_stats(const EstimationReport& r) {
  return collect(r, [](const TrialReport& t) -> std::optional<double> {
    if (!t.statics.succeeded) return std::nullopt;
    return t.mass_error_kg;
  });
}

MetricStats mass_pct_stats(const EstimationReport& r) {
  return collect(r, [](const TrialReport& t) -> std::optional<double> {
    if (!t.statics.succeeded) return std::nullopt;
    return t.mass_error_pct;
  });
}

MetricStats com_abs_stats(const EstimationReport& r) {
  return collect(r, [](const TrialReport& t) -> std::optional<double> {
    if (!t.statics.succeeded) return std::nullopt;
    return t.com_error_m;
  });
}

MetricStats com_pct_stats(const EstimationReport& r) {
  return collect(r, [](const TrialReport& t) -> std::optional<double> {
    if (!t.statics.succeeded) return std::nullopt;
    return t.com_error_pct;
  });
}

MetricStats moment_abs_stats(const EstimationReport& r, int axis) {
  return collect(r, [axis](const TrialReport& t) -> std::optional<double> {
    if (!t.inertia.succeeded) return std::nullopt;
    return t.moment_error_abs[axis];
  });
}

MetricStats moment_pct_stats(const EstimationReport& r, int axis) {
  return collect(r, [axis](const TrialReport& t) -> std::optional<double> {
    if (!t.inertia.succeeded) return std::nullopt;
    return t.moment_error_pct[axis];
  });
}

std::vector<std::pair<int, int>> report_pairs(const EstimationReport& r) {
  std::set<std::pair<int, int>> seen;
  std::vector<std::pair<int, int>> out;
  for (const TrialReport& t : r.trials) {
    for (const PairRow& p : t.pairs) {
      if (seen.insert({p.frame_i, p.frame_j}).second) {
        out.push_back({p.frame_i, p.frame_j});
      }
    }
  }
  return out;
}

namespace {

json vec3_json(const geom::Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

geom::Vec3 vec3_from(const json& j) {
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json status_json(const StageStatus& s) {
  return json{{"attempted", s.attempted},
              {"succeeded", s.succeeded},
              {"message", s.message}};
}

StageStatus status_from(const json& j) {
  StageStatus s;
  s.attempted = j.at("attempted").get<bool>();
  s.succeeded = j.at("succeeded").get<bool>();
  s.message = j.at("message").get<std::string>();
  return s;
}

json config_json(const RunConfig& c) {
  return json{{"cutoff_hz", c.cutoff_hz},
              {"filter_order", c.filter_order},
              {"trim_seconds", c.trim_seconds},
              {"static_tolerance_n", c.static_tolerance_n},
              {"static_duration_s", c.static_duration_s},
              {"static_twist_tolerance", c.static_twist_tolerance},
              {"loop_refinement", c.loop_refinement},
              {"psd_policy",
               c.psd_policy == RunConfig::PsdPolicy::kProject ? "project" : "discard"},
              {"seed", c.seed},
              {"trials", c.trials}};
}

RunConfig config_from(const json& j) {
  RunConfig c;
  c.cutoff_hz = j.at("cutoff_hz").get<double>();
  c.filter_order = j.at("filter_order").get<int>();
  c.trim_seconds = j.at("trim_seconds").get<double>();
  c.static_tolerance_n = j.at("static_tolerance_n").get<double>();
  c.static_duration_s = j.at("static_duration_s").get<double>();
  c.static_twist_tolerance = j.at("static_twist_tolerance").get<double>();
  c.loop_refinement = j.at("loop_refinement").get<bool>();
  c.psd_policy = j.at("psd_policy").get<std::string>() == "discard"
                     ? RunConfig::PsdPolicy::kDiscard
                     : RunConfig::PsdPolicy::kProject;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.trials = j.at("trials").get<int>();
  return c;
}

}  // namespace

std::string report_to_json(const EstimationReport& r) {
  json trials = json::array();
  for (const TrialReport& t : r.trials) {
    json pairs = json::array();
    for (const PairRow& p : t.pairs) {
      pairs.push_back(json{{"frame_i", p.frame_i},
                           {"frame_j", p.frame_j},
                           {"rotation_error_deg", p.rotation_error_deg},
                           {"position_error_m", p.position_error_m},
                           {"position_error_pct", p.position_error_pct}});
    }
    trials.push_back(json{
        {"trial", t.trial},
        {"seed", t.seed},
        {"kinematics", status_json(t.kinematics)},
        {"statics", status_json(t.statics)},
        {"inertia", status_json(t.inertia)},
        {"pairs", pairs},
        {"mass_estimate", t.mass_estimate},
        {"mass_error_kg", t.mass_error_kg},
        {"mass_error_pct", t.mass_error_pct},
        {"com_estimate", vec3_json(t.com_estimate)},
        {"com_error_m", t.com_error_m},
        {"com_error_pct", t.com_error_pct},
        {"moments_estimate", vec3_json(t.moments_estimate)},
        {"moment_error_abs", vec3_json(t.moment_error_abs)},
        {"moment_error_pct", vec3_json(t.moment_error_pct)},
        {"refine_initial_cost", t.refine_initial_cost},
        {"refine_final_cost", t.refine_final_cost},
        {"refine_iterations", t.refine_iterations},
        {"statics_residual", t.statics_residual},
        {"static_sample_count", t.static_sample_count},
        {"inertia_residual", t.inertia_residual},
        {"inertia_condition", t.inertia_condition},
        {"psd_projected", t.psd_projected}});
  }
  json j{{"scenario", r.scenario_name},
         {"protocol", r.protocol_name},
         {"noise", r.noise_name},
         {"config", config_json(r.config)},
         {"trials", trials}};
  return j.dump(2) + "\n";
}

EstimationReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report: not valid JSON: ") + e.what());
  }
  EstimationReport r;
  try {
    r.scenario_name = j.at("scenario").get<std::string>();
    r.protocol_name = j.at("protocol").get<std::string>();
    r.noise_name = j.at("noise").get<std::string>();
    r.config = config_from(j.at("config"));
    for (const json& tj : j.at("trials")) {
      TrialReport t;
      t.trial = tj.at("trial").get<int>();
      t.seed = tj.at("seed").get<std::uint64_t>();
      t.kinematics = status_from(tj.at("kinematics"));
      t.statics = status_from(tj.at("statics"));
      t.inertia = status_from(tj.at("inertia"));
      for (const json& pj : tj.at("pairs")) {
        PairRow p;
        p.frame_i = pj.at("frame_i").get<int>();
        p.frame_j = pj.at("frame_j").get<int>();
        p.rotation_error_deg = pj.at("rotation_error_deg").get<double>();
        p.position_error_m = pj.at("position_error_m").get<double>();
        p.position_error_pct = pj.at("position_error_pct").get<double>();
        t.pairs.push_back(p);
      }
      t.mass_estimate = tj.at("mass_estimate").get<double>();
      t.mass_error_kg = tj.at("mass_error_kg").get<double>();
      t.mass_error_pct = tj.at("mass_error_pct").get<double>();
      t.com_estimate = vec3_from(tj.at("com_estimate"));
      t.com_error_m = tj.at("com_error_m").get<double>();
      t.com_error_pct = tj.at("com_error_pct").get<double>();
      t.moments_estimate = vec3_from(tj.at("moments_estimate"));
      t.moment_error_abs = vec3_from(tj.at("moment_error_abs"));
      t.moment_error_pct = vec3_from(tj.at("moment_error_pct"));
      t.refine_initial_cost = tj.at("refine_initial_cost").get<double>();
      t.refine_final_cost = tj.at("refine_final_cost").get<double>();
      t.refine_iterations = tj.at("refine_iterations").get<int>();
      t.statics_residual = tj.at("statics_residual").get<double>();
      t.static_sample_count = tj.at("static_sample_count").get<int>();
      t.inertia_residual = tj.at("inertia_residual").get<double>();
      t.inertia_condition = tj.at("inertia_condition").get<double>();
      t.psd_projected = tj.at("psd_projected").get<bool>();
      r.trials.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report: missing fields: ") + e.what());
  }
  return r;
}

std::string render_human(const EstimationReport& r) {
  std::ostringstream out;
  char buf[160];

  out << "Scenario " << r.scenario_name << " | protocol " << r.protocol_name
      << " | noise " << r.noise_name << " | trials " << r.trials.size() << "\n";

  const auto pairs = report_pairs(r);
  if (!pairs.empty()) {
    out << "\nGrasp rotations — absolute error (deg)\n";
    out << "  pair        mean      std\n";
    for (const auto& [i, j] : pairs) {
      const MetricStats s = rotation_stats(r, i, j);
      std::snprintf(buf, sizeof buf, "  R_%d%d   %9.4f %9.4f\n", i, j, s.mean,
                    s.stddev);
      out << buf;
    }
    out << "\nGrasp positions — absolute (m) and percentage error\n";
    out << "  pair        mean      std    mean%     std%\n";
    for (const auto& [i, j] : pairs) {
      const MetricStats a = position_abs_stats(r, i, j);
      const MetricStats p = position_pct_stats(r, i, j);
      std::snprintf(buf, sizeof buf, "  p_%d%d   %9.4f %9.4f %7.2f%% %7.2f%%\n",
                    i, j, a.mean, a.stddev, p.mean, p.stddev);
      out << buf;
    }
  }

  const MetricStats mk = mass_abs_stats(r);
  if (mk.count > 0) {
    const MetricStats mp = mass_pct_stats(r);
    const MetricStats ca = com_abs_stats(r);
    const MetricStats cp = com_pct_stats(r);
    out << "\nMass and center of mass\n";
    std::snprintf(buf, sizeof buf,
                  "  mass   %9.4f kg  ±%8.4f   %7.2f%% ±%6.2f%%\n", mk.mean,
                  mk.stddev, mp.mean, mp.stddev);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "  p_1c   %9.4f m   ±%8.4f   %7.2f%% ±%6.2f%%\n", ca.mean,
                  ca.stddev, cp.mean, cp.stddev);
    out << buf;
  }

  const MetricStats i0 = moment_abs_stats(r, 0);
  if (i0.count > 0) {
    out << "\nPrincipal moments — absolute (kg m^2) and percentage error\n";
    const char* labels[3] = {"I_xx", "I_yy", "I_zz"};
    for (int axis = 0; axis < 3; ++axis) {
      const MetricStats a = moment_abs_stats(r, axis);
      const MetricStats p = moment_pct_stats(r, axis);
      std::snprintf(buf, sizeof buf, "  %s  %9.4f %9.4f %7.2f%% %7.2f%%\n",
                    labels[axis], a.mean, a.stddev, p.mean, p.stddev);
      out << buf;
    }
  }

  bool any_failure = false;
  for (const TrialReport& t : r.trials) {
    for (const StageStatus* s : {&t.kinematics, &t.statics, &t.inertia}) {
      if (s->attempted && !s->succeeded) {
        if (!any_failure) out << "\nStage failures\n";
        any_failure = true;
        out << "  trial " << t.trial << ": " << s->message << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace copest::pipeline
