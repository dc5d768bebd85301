// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "copest/pipeline.hpp"

namespace {

using namespace copest;

constexpr int kExitOk = 0;
constexpr int kExitStageFailure = 1;
constexpr int kExitBadInput = 2;

struct CommonOptions {
  std::string scenario = "a";
  std::string protocol = "standard";
  std::string noise = "none";
  std::uint64_t seed = 0;
  int trials = 1;
};

struct RunFlags {
  double cutoff_hz = -1.0;  // <0 = keep default
  int filter_order = -1;
  double trim_seconds = -1.0;
  double static_tolerance = -1.0;
  double static_duration = -1.0;
  double static_twist_tolerance = -1.0;
  bool no_refine = false;
  std::string psd_policy = "project";
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--cutoff-hz", flags.cutoff_hz,
                  "Butterworth cutoff (0 disables filtering)");
  cmd->add_option("--filter-order", flags.filter_order, "Butterworth order");
  cmd->add_option("--trim-s", flags.trim_seconds, "Edge trim per side (s)");
  cmd->add_option("--static-tolerance-n", flags.static_tolerance,
                  "Static window force tolerance (N)");
  cmd->add_option("--static-duration-s", flags.static_duration,
                  "Minimum static window duration (s)");
  cmd->add_option("--static-twist-tolerance", flags.static_twist_tolerance,
                  "Rest check on derived twist norms");
  cmd->add_flag("--no-refine", flags.no_refine, "Skip loop-closure refinement");
  cmd->add_option("--psd-policy", flags.psd_policy,
                  "Negative-eigenvalue policy: project|discard")
      ->check(CLI::IsMember({"project", "discard"}));
}

pipeline::RunConfig make_config(const RunFlags& flags,
                                const presets::NoiseProfile& profile,
                                std::uint64_t seed, int trials) {
  pipeline::RunConfig cfg;
  cfg.static_tolerance_n = profile.static_tolerance_n;
  cfg.static_twist_tolerance = profile.static_twist_tolerance;
  if (flags.cutoff_hz >= 0.0) cfg.cutoff_hz = flags.cutoff_hz;
  if (flags.filter_order > 0) cfg.filter_order = flags.filter_order;
  if (flags.trim_seconds >= 0.0) cfg.trim_seconds = flags.trim_seconds;
  if (flags.static_tolerance > 0.0) cfg.static_tolerance_n = flags.static_tolerance;
  if (flags.static_duration > 0.0) cfg.static_duration_s = flags.static_duration;
  if (flags.static_twist_tolerance > 0.0) {
    cfg.static_twist_tolerance = flags.static_twist_tolerance;
  }
  cfg.loop_refinement = !flags.no_refine;
  cfg.psd_policy = flags.psd_policy == "discard"
                       ? pipeline::RunConfig::PsdPolicy::kDiscard
                       : pipeline::RunConfig::PsdPolicy::kProject;
  cfg.seed = seed;
  cfg.trials = trials;
  return cfg;
}

presets::Phase parse_phase(const std::string& name) {
  if (name == "kin" || name == "kinematics") return presets::Phase::kKinematics;
  if (name == "statics") return presets::Phase::kStatics;
  if (name == "inertia") return presets::Phase::kInertia;
  throw ConfigError("unknown phase '" + name + "' (kin|statics|inertia)");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << text;
}

int emit_report(const pipeline::EstimationReport& report,
                const std::string& format, const std::string& out_path) {
  const std::string text = format == "json" ? pipeline::report_to_json(report)
                                            : pipeline::render_human(report);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }
  for (const auto& t : report.trials) {
    for (const pipeline::StageStatus* s : {&t.kinematics, &t.statics, &t.inertia}) {
      if (s->attempted && !s->succeeded) return kExitStageFailure;
    }
  }
  return kExitOk;
}

int cmd_simulate(const CommonOptions& common, const std::string& phase,
                 int trial, const std::string& out_path) {
  const presets::Scenario sc = presets::resolve_scenario(common.scenario);
  const presets::Protocol proto = presets::protocol(common.protocol);
  const presets::NoiseProfile profile = presets::resolve_noise(common.noise);

  const presets::Phase ph = parse_phase(phase);
  const std::uint64_t phase_id = ph == presets::Phase::kKinematics ? 0
                                 : ph == presets::Phase::kStatics  ? 1
                                                                   : 2;
  sim::ScenarioConfig cfg = presets::phase_scenario(
      sc, proto, ph, profile.noise,
      pipeline::derive_seed(common.seed, static_cast<std::uint64_t>(trial),
                            phase_id));
  const pipeline::Dataset ds = pipeline::from_simulation(sim::synthesize_dataset(cfg));
  pipeline::write_dataset(ds, out_path);
  std::cout << "wrote " << out_path << " (" << ds.timestamps.size()
            << " timesteps, " << ds.header.robot_count << " robots)\n";
  return kExitOk;
}

int cmd_preprocess(const std::string& in_path, const std::string& out_path,
                   const RunFlags& flags) {
  const pipeline::RunConfig cfg =
      make_config(flags, presets::NoiseProfile{}, 0, 1);
  const pipeline::Dataset pre = pipeline::preprocess(
      pipeline::read_dataset(in_path), cfg);
  pipeline::write_dataset(pre, out_path);
  std::cout << "wrote " << out_path << " (derived block: "
            << pre.derived->timestamps.size() << " timesteps)\n";
  return kExitOk;
}

int cmd_estimate(const std::string& stages_csv, const std::string& kin_path,
                 const std::string& statics_path, const std::string& inertia_path,
                 const RunFlags& flags, const std::string& noise,
                 const std::string& format, const std::string& out_path) {
  const presets::NoiseProfile profile = presets::resolve_noise(noise);
  const pipeline::RunConfig cfg = make_config(flags, profile, 0, 1);

  std::vector<std::string> stages;
  std::stringstream ss(stages_csv);
  std::string item;
  while (std::getline(ss, item, ',')) stages.push_back(item);
  auto wants = [&](const std::string& s) {
    return std::find(stages.begin(), stages.end(), s) != stages.end();
  };
  if (stages.empty() || !wants("kin")) {
    throw ConfigError("estimate: the kin stage is required (grasp graph feeds "
                      "the later stages)");
  }
  if (wants("inertia") && !wants("statics")) {
    throw ConfigError("estimate: inertia needs the statics stage (CoM)");
  }
  if (kin_path.empty()) throw ConfigError("estimate: --kin dataset required");
  if (wants("statics") && statics_path.empty()) {
    throw ConfigError("estimate: --statics dataset required");
  }
  if (wants("inertia") && inertia_path.empty()) {
    throw ConfigError("estimate: --inertia dataset required");
  }

  pipeline::EstimationReport report;
  report.scenario_name = "(datasets)";
  report.protocol_name = "(external)";
  report.noise_name = noise;
  report.config = cfg;
  pipeline::TrialReport trial;
  trial.trial = 0;

  auto load_pre = [&](const std::string& path) {
    pipeline::Dataset ds = pipeline::read_dataset(path);
    return ds.derived ? ds : pipeline::preprocess(ds, cfg);
  };

  std::optional<pipeline::KinStageResult> kinres;
  std::optional<pipeline::StaticsStageResult> stres;
  trial.kinematics.attempted = true;
  pipeline::Dataset kin_ds = load_pre(kin_path);
  try {
    kinres = pipeline::run_kinematics(kin_ds, cfg);
    trial.kinematics.succeeded = true;
    trial.refine_initial_cost = kinres->graph.initial_cost;
    trial.refine_final_cost = kinres->graph.final_cost;
    trial.refine_iterations = kinres->graph.refine_iterations;
  } catch (const std::exception& e) {
    trial.kinematics.message = e.what();
  }

  if (wants("statics")) {
    trial.statics.attempted = true;
    if (kinres) {
      try {
        const pipeline::Dataset ds = load_pre(statics_path);
        stres = pipeline::run_statics(ds, kinres->graph, cfg);
        trial.statics.succeeded = true;
        trial.mass_estimate = stres->mass.mass;
        trial.com_estimate = stres->com.p_sc;
        trial.static_sample_count = stres->sample_count;
        trial.statics_residual = stres->com.residual_norm;
      } catch (const std::exception& e) {
        trial.statics.message = e.what();
      }
    } else {
      trial.statics.message = "skipped (kinematics failed)";
    }
  }

  if (wants("inertia")) {
    trial.inertia.attempted = true;
    if (kinres && stres) {
      try {
        const pipeline::Dataset ds = load_pre(inertia_path);
        const pipeline::InertiaStageResult res =
            pipeline::run_inertia(ds, kinres->graph, stres->com.p_sc, cfg);
        trial.inertia.succeeded = true;
        trial.moments_estimate = res.principal.moments;
        trial.psd_projected = res.principal.psd_projected;
        trial.inertia_residual = res.estimate.residual_norm;
      } catch (const std::exception& e) {
        trial.inertia.message = e.what();
      }
    } else {
      trial.inertia.message = "skipped (upstream stage failed)";
    }
  }

  // error metrics against the kin dataset's ground truth, when present
  if (kin_ds.header.ground_truth && kinres) {
    const sim::PayloadModel payload = kin_ds.header.ground_truth->payload();
    for (int i = 0; i < payload.robot_count(); ++i) {
      const int j = (i + 1) % payload.robot_count();
      const geom::Transform truth =
          payload.grasp_transforms[i].inverse() * payload.grasp_transforms[j];
      const geom::Transform est = kinres->graph.pair(i + 1, j + 1);
      pipeline::PairRow row;
      row.frame_i = i + 1;
      row.frame_j = j + 1;
      row.rotation_error_deg =
          geom::rotation_error_deg(truth.rotation, est.rotation);
      row.position_error_m = (est.translation - truth.translation).norm();
      row.position_error_pct =
          100.0 * row.position_error_m / truth.translation.norm();
      trial.pairs.push_back(row);
    }
    if (stres) {
      trial.mass_error_kg = std::abs(stres->mass.mass - payload.mass);
      trial.mass_error_pct = 100.0 * trial.mass_error_kg / payload.mass;
      trial.com_error_m =
          (stres->com.p_sc - payload.com_frame.translation).norm();
      trial.com_error_pct =
          100.0 * trial.com_error_m / payload.com_frame.translation.norm();
    }
    if (trial.inertia.succeeded) {
      for (int axis = 0; axis < 3; ++axis) {
        trial.moment_error_abs[axis] = std::abs(
            trial.moments_estimate[axis] - payload.principal_inertia[axis]);
        trial.moment_error_pct[axis] = 100.0 * trial.moment_error_abs[axis] /
                                       payload.principal_inertia[axis];
      }
    }
  }

  report.trials.push_back(std::move(trial));
  return emit_report(report, format, out_path);
}

int cmd_pipeline(const CommonOptions& common, const RunFlags& flags,
                 const std::string& format, const std::string& out_path,
                 const std::string& workdir) {
  const presets::Scenario sc = presets::resolve_scenario(common.scenario);
  const presets::Protocol proto = presets::protocol(common.protocol);
  const presets::NoiseProfile profile = presets::resolve_noise(common.noise);
  const pipeline::RunConfig cfg =
      make_config(flags, profile, common.seed, common.trials);

  if (!workdir.empty()) {
    std::filesystem::create_directories(workdir);
    for (int t = 0; t < cfg.trials; ++t) {
      const pipeline::PhaseDatasets phases = pipeline::synthesize_trial(
          sc, proto, profile.noise, cfg.seed, t);
      const std::string base = workdir + "/" + sc.name + "_trial" +
                               std::to_string(t);
      pipeline::write_dataset(phases.kinematics, base + "_kin.jsonl");
      pipeline::write_dataset(phases.statics, base + "_statics.jsonl");
      pipeline::write_dataset(phases.inertia, base + "_inertia.jsonl");
    }
  }

  const pipeline::EstimationReport report = pipeline::run_full_pipeline(
      sc, proto, profile.noise, cfg, common.protocol, common.noise);
  return emit_report(report, format, out_path);
}

int cmd_report(const std::string& in_path, const std::string& format,
               const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw ConfigError("cannot open " + in_path);
  std::stringstream ss;
  ss << in.rdbuf();
  const pipeline::EstimationReport report = pipeline::report_from_json(ss.str());
  const std::string text = format == "json" ? pipeline::report_to_json(report)
                                            : pipeline::render_human(report);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }
  return kExitOk;
}

int cmd_dump(const std::string& kind, const std::string& name,
             const std::string& out_path) {
  std::string text;
  if (kind == "scenario") {
    text = presets::scenario_to_json(presets::resolve_scenario(name));
  } else {
    text = presets::noise_to_json(presets::resolve_noise(name));
  }
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }
  return kExitOk;
}

// One-time noise calibration against the standard protocol. Grasp-frame white
// noise feeds the twice-differenced angular acceleration, so the principal
// moments are the first metric to degrade (least-squares shrinkage); the
// profile is therefore sized by pushing the pose noise up until the worst
// per-axis moment error sits near half its cap, then verifying every other
// metric stays inside its cap as well.
int cmd_calibrate(std::uint64_t seed, int trials, const std::string& out_path) {
  presets::NoiseProfile profile = presets::noise_profile("calibrated");
  const presets::Protocol proto = presets::protocol("standard");

  struct Worst {
    double rotation = 0.0, position_pct = 0.0, mass_pct = 0.0, com_pct = 0.0,
           moment_pct = 0.0;
  };
  auto probe = [&](const sim::NoiseConfig& noise) {
    Worst w;
    for (const char* name : {"a", "d"}) {
      const presets::Scenario sc = presets::scenario(name);
      pipeline::RunConfig cfg;
      cfg.static_tolerance_n = profile.static_tolerance_n;
      cfg.static_twist_tolerance = profile.static_twist_tolerance;
      cfg.seed = seed;
      cfg.trials = trials;
      const pipeline::EstimationReport rep = pipeline::run_full_pipeline(
          sc, proto, noise, cfg, "standard", "calibrate");
      for (const auto& [i, j] : pipeline::report_pairs(rep)) {
        w.rotation = std::max(w.rotation, pipeline::rotation_stats(rep, i, j).mean);
        w.position_pct =
            std::max(w.position_pct, pipeline::position_pct_stats(rep, i, j).mean);
      }
      w.mass_pct = std::max(w.mass_pct, pipeline::mass_pct_stats(rep).mean);
      w.com_pct = std::max(w.com_pct, pipeline::com_pct_stats(rep).mean);
      for (int axis = 0; axis < 3; ++axis) {
        w.moment_pct =
            std::max(w.moment_pct, pipeline::moment_pct_stats(rep, axis).mean);
      }
    }
    return w;
  };

  double lo = 0.05, hi = 8.0;
  double scale = 1.0;
  for (int it = 0; it < 10; ++it) {
    scale = std::sqrt(lo * hi);
    sim::NoiseConfig trial_noise = profile.noise;
    trial_noise.pose_rotation_sigma *= scale;
    trial_noise.pose_position_sigma *= scale;
    const Worst w = probe(trial_noise);
    std::cout << "scale " << scale << " -> rot " << w.rotation << " deg, pos "
              << w.position_pct << "%, mass " << w.mass_pct << "%, com "
              << w.com_pct << "%, moments " << w.moment_pct << "%\n";
    const bool over = w.moment_pct > 6.0 || w.position_pct > 6.0 ||
                      w.com_pct > 5.0 || w.rotation > 4.0 || w.mass_pct > 2.0;
    const bool under = w.moment_pct < 3.0 && w.position_pct < 3.0;
    if (over) {
      hi = scale;
    } else if (under) {
      lo = scale;
    } else {
      break;
    }
  }
  profile.noise.pose_rotation_sigma *= scale;
  profile.noise.pose_position_sigma *= scale;
  profile.provenance =
      "calibrated with `copest calibrate` (seed " + std::to_string(seed) +
      ", " + std::to_string(trials) + " probe trials): pose noise scaled to " +
      std::to_string(scale) +
      " x base so the worst principal-moment and position error means sit "
      "near half their acceptance caps; with white grasp-frame noise the "
      "reference rotation-error magnitudes are unreachable without pushing "
      "the twice-differenced inertia regression far past its reference "
      "accuracy, so the kinematic errors land below the hardware values";
  write_text(out_path, presets::noise_to_json(profile));
  std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cooperative rigid-payload estimation: simulator, estimation "
               "pipeline, and reporting"};
  app.require_subcommand(1);

  CommonOptions common;
  RunFlags flags;
  std::string phase = "kin";
  int trial = 0;
  std::string in_path, out_path, workdir;
  std::string kin_path, statics_path, inertia_path;
  std::string stages = "kin,statics,inertia";
  std::string format = "human";
  std::string dump_kind = "scenario", dump_name = "a";
  int calib_trials = 2;

  auto add_common = [&](CLI::App* cmd, bool with_trials) {
    cmd->add_option("--scenario", common.scenario, "a|b|c|d or a scenario file");
    cmd->add_option("--protocol", common.protocol, "standard|validation");
    cmd->add_option("--noise-profile", common.noise,
                    "none|calibrated or a noise file");
    cmd->add_option("--seed", common.seed, "master seed");
    if (with_trials) cmd->add_option("--trials", common.trials, "trial count");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "synthesize one phase dataset");
  add_common(simulate, false);
  simulate->add_option("--phase", phase, "kin|statics|inertia");
  simulate->add_option("--trial", trial, "trial index for seed derivation");
  simulate->add_option("--out", out_path, "output dataset path")->required();

  CLI::App* preprocess = app.add_subcommand("preprocess",
                                            "filter, differentiate, trim");
  preprocess->add_option("--in", in_path, "raw dataset")->required();
  preprocess->add_option("--out", out_path, "preprocessed dataset")->required();
  add_run_flags(preprocess, flags);

  CLI::App* estimate = app.add_subcommand("estimate", "run estimation stages "
                                          "on dataset files");
  estimate->add_option("--stages", stages, "comma list: kin,statics,inertia");
  estimate->add_option("--kin", kin_path, "kinematics-phase dataset");
  estimate->add_option("--statics", statics_path, "statics-phase dataset");
  estimate->add_option("--inertia", inertia_path, "inertia-phase dataset");
  estimate->add_option("--noise-profile", common.noise,
                       "profile supplying static-detection settings");
  estimate->add_option("--format", format, "human|json");
  estimate->add_option("--report", out_path, "write the report here");
  add_run_flags(estimate, flags);

  CLI::App* pipeline_cmd = app.add_subcommand("pipeline",
                                              "simulate + estimate + report");
  add_common(pipeline_cmd, true);
  pipeline_cmd->add_option("--format", format, "human|json");
  pipeline_cmd->add_option("--report", out_path, "write the report here");
  pipeline_cmd->add_option("--workdir", workdir,
                           "persist per-trial datasets in this directory");
  add_run_flags(pipeline_cmd, flags);

  CLI::App* report_cmd = app.add_subcommand("report", "re-render a report");
  report_cmd->add_option("--in", in_path, "report JSON")->required();
  report_cmd->add_option("--format", format, "human|json");
  report_cmd->add_option("--out", out_path, "output path (stdout if omitted)");

  CLI::App* dump = app.add_subcommand("dump", "print a bundled config");
  dump->add_option("kind", dump_kind, "scenario|noise")
      ->check(CLI::IsMember({"scenario", "noise"}));
  dump->add_option("name", dump_name, "preset name or file");
  dump->add_option("--out", out_path, "output path (stdout if omitted)");

  CLI::App* calibrate = app.add_subcommand(
      "calibrate", "tune the calibrated noise profile (one-time, documented)");
  calibrate->add_option("--seed", common.seed, "seed");
  calibrate->add_option("--trials", calib_trials, "trials per probe");
  calibrate->add_option("--out", out_path, "profile output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(common, phase, trial, out_path);
    if (preprocess->parsed()) return cmd_preprocess(in_path, out_path, flags);
    if (estimate->parsed()) {
      return cmd_estimate(stages, kin_path, statics_path, inertia_path, flags,
                          common.noise, format, out_path);
    }
    if (pipeline_cmd->parsed()) {
      return cmd_pipeline(common, flags, format, out_path, workdir);
    }
    if (report_cmd->parsed()) return cmd_report(in_path, format, out_path);
    if (dump->parsed()) return cmd_dump(dump_kind, dump_name, out_path);
    if (calibrate->parsed()) {
      return cmd_calibrate(common.seed, calib_trials, out_path);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStageFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStageFailure;
  }
  return kExitOk;
}
