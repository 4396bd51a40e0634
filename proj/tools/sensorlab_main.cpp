// Command-line front end: expert demo generation, training, evaluation,
// render preview, the mutual-information probe, and the divergence-bound
// checker. Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "sensor/divergence.hpp"
#include "sensor/errors.hpp"
#include "sensor/expert.hpp"
#include "sensor/metrics.hpp"
#include "sensor/mine.hpp"
#include "sensor/trainer.hpp"

namespace {

using namespace sensor;

TrainConfig load_config(const std::string& path) {
  KeyValueConfig kv = path.empty() ? KeyValueConfig() : KeyValueConfig::from_file(path);
  return parse_train_config(kv);
}

std::vector<SensorState> parse_viewpoint_list(const std::string& csv) {
  std::vector<SensorState> out;
  std::istringstream is(csv);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (!tok.empty()) out.push_back(parse_viewpoint(tok));
  }
  if (out.empty()) throw ConfigError("no viewpoints given");
  return out;
}

int cmd_gen_expert(const std::string& config_path, const std::string& out, int episodes,
                   std::uint64_t seed) {
  TrainConfig cfg = load_config(config_path);
  auto demos = generate_expert_demos(cfg.env, episodes, seed);
  write_demos(out, demos);
  double mean_return = 0.0;
  for (const auto& d : demos) mean_return += d.true_return;
  mean_return /= static_cast<double>(demos.size());
  std::cout << "wrote " << demos.size() << " expert episodes to " << out
            << " (mean return " << format_metric(mean_return) << ", viewpoint "
            << viewpoint_name(cfg.env.expert_viewpoint) << ")\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& variant,
              const std::string& seed_str, const std::string& demos,
              const std::string& out_dir) {
  TrainConfig cfg = load_config(config_path);
  if (!variant.empty()) cfg.variant = variant_from_string(variant);
  if (!seed_str.empty()) cfg.seed = std::stoull(seed_str);
  if (!demos.empty()) cfg.demos_path = demos;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  cfg.run_name.clear();  // rebuild from (variant, seed)
  apply_variant(cfg);

  auto result = train(cfg);
  std::cout << "variant " << to_string(cfg.variant) << " seed " << cfg.seed << ": final eval "
            << format_metric(result.final_eval_mean) << " +- "
            << format_metric(result.final_eval_std) << ", final viewpoint "
            << viewpoint_name(result.final_viewpoint) << "\n"
            << "metrics: " << result.metrics_path << "\ncheckpoint: " << result.checkpoint_path
            << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint,
             const std::string& viewpoints_csv, int episodes, std::uint64_t seed,
             const std::string& out_prefix) {
  TrainConfig cfg = load_config(config_path);
  auto viewpoints = parse_viewpoint_list(viewpoints_csv);
  auto evals = evaluate_checkpoint(checkpoint, cfg, viewpoints, episodes, seed);

  std::ofstream returns(out_prefix + "_returns.csv", std::ios::trunc);
  returns << "viewpoint,mean_return,std_return\n";
  std::ofstream tracks(out_prefix + "_viewpoints.csv", std::ios::trunc);
  tracks << "viewpoint,episode,step,d,a,e\n";
  for (const auto& ve : evals) {
    const std::string name = viewpoint_name(ve.viewpoint);
    returns << name << ',' << format_metric(ve.stats.mean_return) << ','
            << format_metric(ve.stats.std_return) << "\n";
    for (std::size_t e = 0; e < ve.stats.episodes.size(); ++e) {
      const auto& ep = ve.stats.episodes[e];
      for (std::size_t s = 0; s < ep.viewpoints.size(); ++s) {
        tracks << name << ',' << e << ',' << s << ',' << format_metric(ep.viewpoints[s].d) << ','
               << format_metric(ep.viewpoints[s].a) << ',' << format_metric(ep.viewpoints[s].e)
               << "\n";
      }
    }
    std::cout << name << ": " << format_metric(ve.stats.mean_return) << " +- "
              << format_metric(ve.stats.std_return) << " (final viewpoint "
              << viewpoint_name(ve.stats.mean_final_viewpoint) << ")\n";
  }
  if (!returns || !tracks) throw FatalError("eval: failed writing CSV output");
  return 0;
}

int cmd_render_preview(double theta, double theta_dot, double d, double a, double e,
                       int resolution, const std::string& lookat, const std::string& out) {
  (void)theta_dot;  // part of the motor state, but the frame depends on theta only
  Lookat la;
  if (lookat == "pivot") {
    la = Lookat::pivot;
  } else if (lookat == "bob") {
    la = Lookat::bob;
  } else {
    throw ConfigError("--lookat must be pivot or bob");
  }
  SensorState c{d, a, e};
  if (!c.valid()) throw ConfigError("viewpoint outside sensor ranges");
  write_pgm(out, render(pendulum_scene(wrap_angle(theta), la), c, resolution));
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_probe_mi(const std::string& demos_path, const std::string& viewpoints_csv,
                 const std::string& out, std::uint64_t seed, int steps, int hidden, int batch,
                 const std::string& config_path) {
  TrainConfig cfg = load_config(config_path);
  auto demos = read_demos(demos_path);
  if (demos.empty()) throw FatalError("probe-mi: demo file holds no episodes");
  for (const auto& dd : demos) {
    if (dd.resolution != cfg.env.resolution) {
      throw ConfigError("probe-mi: demo resolution does not match env.resolution");
    }
  }
  // the demo set fixes the probe protocol: as many paired trajectories, of
  // the same length, as the expert provided
  const int count = static_cast<int>(demos.size());
  const int length = demos.front().length();

  auto viewpoints = parse_viewpoint_list(viewpoints_csv);
  MineConfig mc;
  mc.train_steps = steps;
  mc.hidden = hidden;
  mc.batch = batch;
  mc.seed = seed;
  auto sweep = mi_viewpoint_sweep(viewpoints, cfg.env.expert_viewpoint, cfg.env.resolution, count,
                                  length, mc);

  std::ofstream os(out, std::ios::trunc);
  if (!os) throw FatalError("probe-mi: cannot write " + out);
  os << "viewpoint,distance_to_expert,mi_nats\n";
  for (const auto& row : sweep.rows) {
    os << viewpoint_name(row.viewpoint) << ',' << format_metric(row.distance) << ','
       << format_metric(row.mi) << "\n";
    std::cout << viewpoint_name(row.viewpoint) << ": distance "
              << format_metric(row.distance) << ", MI " << format_metric(row.mi) << " nats\n";
  }
  os << "spearman_distance_mi," << format_metric(sweep.spearman_distance_mi) << ",\n";
  std::cout << "spearman(distance, MI) = " << format_metric(sweep.spearman_distance_mi) << "\n";
  return 0;
}

int cmd_check_bound(int instances, std::uint64_t seed, const std::string& out, int max_support) {
  Rng rng(seed);
  const auto js = jensen_shannon();
  std::ofstream os(out, std::ios::trunc);
  if (!os) throw FatalError("check-bound: cannot write " + out);
  os << "instance,nz,naz,lhs,rhs,holds";
  {
    Rng probe_rng(seed);
    auto first = check_proposition1(random_mirror_instance(probe_rng, 4), js);
    for (const auto& s : first.steps) {
      std::string col = s.name.substr(0, s.name.find(' '));
      os << ',' << col << "_ok";
    }
  }
  os << "\n";

  int violations = 0;
  double worst_gap = 0.0;
  Prop1Report worst;
  int worst_idx = -1;
  for (int i = 0; i < instances; ++i) {
    auto inst = random_mirror_instance(rng, 4);
    auto rep = check_proposition1(inst, js);
    os << i << ',' << inst.nz << ',' << inst.naz << ',' << format_metric(rep.lhs) << ','
       << format_metric(rep.rhs) << ',' << (rep.holds ? 1 : 0);
    for (const auto& s : rep.steps) os << ',' << (s.ok ? 1 : 0);
    os << "\n";
    if (!rep.holds) {
      ++violations;
      if (rep.lhs - rep.rhs > worst_gap) {
        worst_gap = rep.lhs - rep.rhs;
        worst = rep;
        worst_idx = i;
      }
    }
  }
  std::cout << instances << " instances: " << (instances - violations) << " hold, " << violations
            << " violate the bound\n";
  if (violations > 0) {
    std::cout << "largest violation (instance " << worst_idx << "): lhs "
              << format_metric(worst.lhs) << " > rhs " << format_metric(worst.rhs) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale active-sensoring imitation learning"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key = value config file (defaults apply if omitted)");

  auto* gen = app.add_subcommand("gen-expert", "roll scripted expert demos and write a demo file");
  std::string gen_out = "demos.snsr";
  int gen_episodes = 10;
  std::uint64_t gen_seed = 0;
  gen->add_option("--out", gen_out, "demo file path");
  gen->add_option("--episodes", gen_episodes, "episodes to record");
  gen->add_option("--seed", gen_seed, "first episode seed");

  auto* tr = app.add_subcommand("train", "run one training configuration");
  std::string tr_variant, tr_seed, tr_demos, tr_out_dir;
  tr->add_option("--variant", tr_variant, "sensor|vmail|vmail_as|bc|sensor_decoupled");
  tr->add_option("--seed", tr_seed, "run seed");
  tr->add_option("--demos", tr_demos, "expert demo file");
  tr->add_option("--out-dir", tr_out_dir, "metrics/checkpoint directory");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint from given initial viewpoints");
  std::string ev_checkpoint, ev_viewpoints, ev_out = "eval";
  int ev_episodes = 10;
  std::uint64_t ev_seed = 0;
  ev->add_option("--checkpoint", ev_checkpoint, "checkpoint path")->required();
  ev->add_option("--viewpoints", ev_viewpoints, "comma-separated d{D}a{A}e{E} names")->required();
  ev->add_option("--episodes", ev_episodes, "episodes per viewpoint");
  ev->add_option("--seed", ev_seed, "evaluation seed");
  ev->add_option("--out", ev_out, "output CSV prefix");

  auto* rp = app.add_subcommand("render-preview", "write one rendered frame as binary PGM");
  double rp_theta = 3.14159, rp_theta_dot = 0.0, rp_d = 3.0, rp_a = 90.0, rp_e = -45.0;
  int rp_res = 32;
  std::string rp_lookat = "pivot", rp_out = "preview.pgm";
  rp->add_option("--theta", rp_theta, "pendulum angle from upright, radians");
  rp->add_option("--theta-dot", rp_theta_dot, "angular velocity (does not affect the frame)");
  rp->add_option("--d", rp_d, "camera distance");
  rp->add_option("--a", rp_a, "azimuth, degrees");
  rp->add_option("--e", rp_e, "elevation, degrees");
  rp->add_option("--resolution", rp_res, "image side length");
  rp->add_option("--lookat", rp_lookat, "pivot|bob");
  rp->add_option("--out", rp_out, "output path");

  auto* mi = app.add_subcommand("probe-mi", "MINE probe between viewpoint-paired renders");
  std::string mi_demos = "demos.snsr", mi_viewpoints, mi_out = "mi.csv";
  std::uint64_t mi_seed = 0;
  int mi_steps = 600, mi_hidden = 32, mi_batch = 64;
  mi->add_option("--demos", mi_demos, "demo file fixing the probe protocol");
  mi->add_option("--viewpoints", mi_viewpoints, "comma-separated viewpoint names")->required();
  mi->add_option("--out", mi_out, "output CSV");
  mi->add_option("--seed", mi_seed, "probe seed");
  mi->add_option("--steps", mi_steps, "MINE training steps");
  mi->add_option("--hidden", mi_hidden, "statistic network width");
  mi->add_option("--batch", mi_batch, "MINE batch size");

  auto* cb = app.add_subcommand("check-bound", "latent divergence bound on random factored instances");
  int cb_instances = 1000, cb_support = 4;
  std::uint64_t cb_seed = 0;
  std::string cb_out = "bound_report.csv";
  cb->add_option("--instances", cb_instances, "random instances to test");
  cb->add_option("--seed", cb_seed, "instance seed");
  cb->add_option("--out", cb_out, "output CSV");
  cb->add_option("--max-support", cb_support, "max values per variable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_expert(config_path, gen_out, gen_episodes, gen_seed);
    if (tr->parsed()) return cmd_train(config_path, tr_variant, tr_seed, tr_demos, tr_out_dir);
    if (ev->parsed()) {
      return cmd_eval(config_path, ev_checkpoint, ev_viewpoints, ev_episodes, ev_seed, ev_out);
    }
    if (rp->parsed()) {
      return cmd_render_preview(rp_theta, rp_theta_dot, rp_d, rp_a, rp_e, rp_res, rp_lookat, rp_out);
    }
    if (mi->parsed()) {
      return cmd_probe_mi(mi_demos, mi_viewpoints, mi_out, mi_seed, mi_steps, mi_hidden, mi_batch,
                          config_path);
    }
    if (cb->parsed()) return cmd_check_bound(cb_instances, cb_seed, cb_out, cb_support);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const sensor::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
