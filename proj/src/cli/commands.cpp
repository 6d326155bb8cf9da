#include "naht/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "naht/error.hpp"
#include "naht/eval/harness.hpp"
#include "naht/poam/agent.hpp"
#include "naht/poam/trainer.hpp"
#include "naht/teams/registry.hpp"
#include "naht/teams/scripted.hpp"
#include "naht/teams/selfplay.hpp"

#ifndef NAHT_VERSION
#define NAHT_VERSION "dev"
#endif

namespace naht::cli {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <typename T>
void train_seed(const RunConfig& config, std::uint64_t seed, const std::filesystem::path& dir,
                std::ostream& log) {
  poam::Trainer<T> trainer(config.env.factory(), uncontrolled_set(config, "train"),
                           poam::TrainVariant::preset(config.variant), config.hyper, config.width,
                           config.embed_dim, seed);
  std::filesystem::create_directories(dir);
  std::filesystem::remove(dir / "metrics.csv");
  RunConfig echo = config;
  echo.seeds = {seed};
  write_text_atomic(dir / "config.json", run_config_to_json(echo) + "\n");
  const int iterations = config.iterations();
  log << "seed " << seed << ": " << iterations << " iterations of " << config.variant << "\n";
  const auto metrics = poam::train(trainer, iterations, dir / "metrics.csv", dir / "checkpoints",
                                   config.checkpoint_every);
  poam::save_nets(dir / "final.ckpt", *trainer.nets(), config.variant);
  if (!metrics.empty()) {
    log << "seed " << seed << ": final mean return " << num(metrics.back().mean_return) << "\n";
  }
}

struct LoadedPolicy {
  teams::PolicyHandle handle;
  std::string path;
};

bool check_fingerprint(const std::string& path, const std::string& expected, std::ostream& log) {
  const auto meta = poam::read_checkpoint_meta(path);
  if (meta.net.env_fingerprint == expected) return true;
  log << "checkpoint " << path << " was trained for " << meta.net.env_fingerprint
      << " but the configured environment is " << expected << "\n";
  return false;
}

std::string label_of(const std::string& path) {
  return std::filesystem::path(path).filename().string();
}

/// File names, or the paths as given when file names collide; repeats get a #k suffix.
std::vector<std::string> labels_of(const std::vector<std::string>& paths) {
  std::vector<std::string> out;
  std::set<std::string> names;
  bool clash = false;
  for (const auto& p : paths) clash = clash || !names.insert(label_of(p)).second;
  std::map<std::string, int> seen;
  for (const auto& p : paths) {
    std::string l = clash ? p : label_of(p);
    const int k = seen[l]++;
    out.push_back(k == 0 ? l : l + "#" + std::to_string(k));
  }
  return out;
}

template <typename T>
std::vector<eval::EdCurvePoint> ed_diag_for(const std::vector<std::string>& paths,
                                            const std::vector<teams::PolicyHandle>& uncontrolled,
                                            const env::EnvFactory& factory, int episodes,
                                            std::uint64_t seed) {
  std::vector<std::shared_ptr<poam::PoamNets<T>>> nets;
  std::vector<eval::LabelledNets<T>> labelled;
  const auto labels = labels_of(paths);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    nets.push_back(poam::load_nets<T>(paths[i]));
    labelled.push_back({labels[i], nets.back().get()});
  }
  const auto rollout = poam::network_handle<T>(nets.back(), label_of(paths.back()));
  return eval::within_episode_ed_diag<T>(labelled, rollout, uncontrolled, factory, episodes, seed);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

std::vector<LemmaRow> lemma_table() {
  std::vector<LemmaRow> rows;
  const auto add = [&](std::string q, double a, double b) {
    rows.push_back({std::move(q), a, b, std::fabs(a - b)});
  };
  const double third = 1.0 / 3.0;
  {
    const double probs[] = {third, third, third};
    add("static_win_prob_M3_p1/3", env::static_win_prob(3, third),
        env::brute_force_win_prob(probs));
  }
  {
    double worst = 0.0;
    double amin = 1.0, amax = 0.0, bmin = 1.0, bmax = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const double p = double(i) / 100.0;
      const double probs[] = {p, third, third};
      const double a = env::aht_win_prob(p);
      const double b = env::brute_force_win_prob(probs);
      worst = std::max(worst, std::fabs(a - b));
      amin = std::min(amin, a);
      amax = std::max(amax, a);
      bmin = std::min(bmin, b);
      bmax = std::max(bmax, b);
    }
    const double probs[] = {third, third, third};
    add("aht_win_prob_p1/3", env::aht_win_prob(third), env::brute_force_win_prob(probs));
    rows.push_back({"aht_win_prob_grid_max_abs_diff", 0.0, worst, worst});
    rows.push_back({"aht_win_prob_grid_spread", amax - amin, bmax - bmin,
                    std::fabs((amax - amin) - (bmax - bmin))});
  }
  {
    const double probs[] = {third, third, third};
    add("shared_naht_win_prob_p1/3", env::shared_naht_win_prob(third),
        env::brute_force_win_prob(probs));
    // grid of 3001 points contains 1/3 exactly at index 1000
    int best_a = 0, best_b = 0;
    double va = -1.0, vb = -1.0;
    for (int i = 0; i <= 3000; ++i) {
      const double p = double(i) / 3000.0;
      const double pr[] = {p, p, third};
      const double a = env::shared_naht_win_prob(p);
      const double b = env::brute_force_win_prob(pr);
      if (a > va + 1e-15) {
        va = a;
        best_a = i;
      }
      if (b > vb + 1e-15) {
        vb = b;
        best_b = i;
      }
    }
    add("shared_naht_argmax_p", double(best_a) / 3000.0, double(best_b) / 3000.0);
  }
  {
    const double probs[] = {0.0, 1.0, third};
    add("asym_naht_win_prob_p1", env::asym_naht_win_prob(1.0), env::brute_force_win_prob(probs));
  }
  return rows;
}

bool lemma_rows_pass(const std::vector<LemmaRow>& rows) {
  for (const auto& r : rows) {
    if (!(r.abs_diff < 1e-12)) return false;
    if (r.quantity == "aht_win_prob_grid_spread" && !(r.analytic < 1e-15 && r.brute_force < 1e-15)) {
      return false;
    }
  }
  return true;
}

void write_lemma_csv(std::ostream& out, const std::vector<LemmaRow>& rows) {
  out << "quantity,analytic,brute_force,abs_diff\n";
  for (const auto& r : rows) {
    out << r.quantity << "," << num(r.analytic) << "," << num(r.brute_force) << ","
        << num(r.abs_diff) << "\n";
  }
}

int cmd_lemmas(std::ostream& out) {
  const auto rows = lemma_table();
  write_lemma_csv(out, rows);
  return lemma_rows_pass(rows) ? kExitOk : kExitLemma;
}

int cmd_train(const RunConfig& config, std::ostream& log) {
  const std::filesystem::path root = config.output_dir;
  std::filesystem::create_directories(root);
  const std::string resolved = run_config_to_json(config);
  write_text_atomic(root / "config.json", resolved + "\n");
  nlohmann::ordered_json manifest;
  manifest["config_hash"] = hex(Rng::hash(resolved));
  manifest["code_version"] = NAHT_VERSION;
  manifest["start"] = utc_now();
  nlohmann::ordered_json outputs = nlohmann::ordered_json::array();
  int status = kExitOk;
  for (const auto seed : config.seeds) {
    const auto dir = root / ("seed_" + std::to_string(seed));
    try {
      if (config.float_bits == 64) {
        train_seed<double>(config, seed, dir, log);
      } else {
        train_seed<float>(config, seed, dir, log);
      }
      outputs.push_back({{"seed", seed},
                         {"dir", dir.string()},
                         {"metrics", (dir / "metrics.csv").string()},
                         {"checkpoint", (dir / "final.ckpt").string()}});
    } catch (const NonFiniteError& err) {
      std::filesystem::create_directories(dir);
      std::ofstream(dir / "divergence.txt") << err.what() << "\nwhere: " << err.where() << "\n";
      log << "seed " << seed << " diverged: " << err.what() << "\n";
      outputs.push_back({{"seed", seed}, {"dir", dir.string()}, {"diverged", true}});
      status = kExitDiverged;
    }
  }
  manifest["end"] = utc_now();
  manifest["outputs"] = outputs;
  write_text_atomic(root / "manifest.json", manifest.dump(2) + "\n");
  return status;
}

int cmd_eval(const RunConfig& config, const EvalRequest& req, std::ostream& log) {
  const auto factory = config.env.factory();
  const std::string fp = factory()->spec().fingerprint();
  if (req.checkpoints.empty()) throw ConfigError("eval needs --checkpoint");
  for (const auto& p : req.checkpoints) {
    if (!std::filesystem::exists(p)) throw ConfigError("checkpoint not found: " + p);
    if (!check_fingerprint(p, fp, log)) return kExitFingerprint;
  }
  std::vector<teams::PolicyHandle> handles;
  const auto labels = labels_of(req.checkpoints);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    handles.push_back(poam::load_network_policy(req.checkpoints[i], labels[i]));
  }
  const int episodes = req.episodes > 0 ? req.episodes : config.eval_episodes;
  const auto out_dir = req.out_dir.empty() ? std::filesystem::path(config.output_dir) : req.out_dir;
  const auto train = uncontrolled_set(config, "train");
  const auto holdout = uncontrolled_set(config, "holdout");
  bool ok = true;
  std::filesystem::path written;

  if (req.mode == "mn") {
    if (train.empty()) throw ConfigError("mn evaluation needs uncontrolled teams");
    const auto s = eval::mn_score(handles.front(), train, factory, episodes, req.seed);
    written = out_dir / "mn_score.csv";
    eval::write_mn_csv(written, s);
    ok = finite(s.summary.mean);
    log << "M-N score " << num(s.summary.mean) << " +- " << num(s.summary.ci95) << "\n";
  } else if (req.mode == "xp") {
    std::vector<teams::PolicyHandle> all = handles;
    all.insert(all.end(), train.begin(), train.end());
    all.insert(all.end(), holdout.begin(), holdout.end());
    const auto m = eval::crossplay_matrix(all, factory, episodes, req.seed);
    written = out_dir / "xp_matrix.csv";
    eval::write_xp_csv(written, m);
    ok = finite(m.self_mean()) && finite(m.cross_mean());
  } else if (req.mode == "ood") {
    if (holdout.empty()) throw ConfigError("ood evaluation needs holdout teams in the registry");
    const auto r = eval::ood_eval(handles.front(), train, holdout, factory, episodes, req.seed);
    written = out_dir / "ood.csv";
    eval::write_ood_csv(written, r);
    ok = finite(r.in_distribution.mean) && finite(r.out_of_distribution.mean);
  } else if (req.mode == "varyn") {
    if (train.empty()) throw ConfigError("varyn evaluation needs uncontrolled teams");
    const auto c = eval::varying_n_curve(handles.front(), train, factory, episodes, req.seed);
    written = out_dir / "varying_n.csv";
    eval::write_varyn_csv(written, c);
    for (const auto& p : c) ok = ok && finite(p.summary.mean);
  } else if (req.mode == "eddiag") {
    if (train.empty()) throw ConfigError("eddiag evaluation needs uncontrolled teams");
    const auto points =
        ed_diag_for<double>(req.checkpoints, train, factory, episodes, req.seed);
    written = out_dir / "ed_diag.csv";
    eval::write_ed_csv(written, points);
    for (const auto& p : points) ok = ok && finite(p.obs_mse) && finite(p.act_prob);
  } else {
    throw ConfigError("unknown eval mode: " + req.mode);
  }
  log << "wrote " << written.string() << "\n";
  return ok ? kExitOk : kExitDiverged;
}

int cmd_registry(const RunConfig& config, const std::string& action, std::ostream& log) {
  if (config.registry.empty()) throw ConfigError("registry command needs the 'registry' key");
  if (action == "list") {
    for (const auto& e : teams::read_manifest(config.registry)) {
      std::string tags;
      for (const auto& t : e.tags) tags += (tags.empty() ? "" : "|") + t;
      log << e.id << "," << teams::to_string(e.kind) << ","
          << (e.seed ? std::to_string(*e.seed) : std::string("-")) << "," << e.env << "," << tags
          << "\n";
    }
    return kExitOk;
  }
  if (action != "build") throw ConfigError("registry action must be list or build");
  const std::filesystem::path manifest = config.registry;
  const auto base = manifest.parent_path();
  const auto factory = config.env.factory();
  teams::Registry reg;
  if (config.selfplay.include_scripted) {
    if (config.env.name == "bitgame") {
      auto h = teams::bernoulli_policy(config.bernoulli_p);
      h.tags = {"train"};
      reg.add(h);
    } else {
      for (auto h : teams::scripted_pursuit_policies(config.env.pursuit, config.scripted_noise)) {
        h.tags = {"train"};
        reg.add(h);
      }
    }
  }
  teams::SelfplayConfig sp;
  sp.hyper = config.hyper;
  sp.width = config.width;
  RunConfig budget = config;
  budget.total_env_steps = config.selfplay.env_steps;
  sp.iterations = budget.iterations();
  sp.out_dir = base / "teammates";
  const auto build = [&](const std::vector<std::uint64_t>& seeds, const char* tag) {
    if (seeds.empty()) return true;
    const auto result = teams::train_selfplay_teammates(factory, "ippo", seeds, sp);
    for (auto h : result.teams) {
      h.tags = {tag};
      h.checkpoint_path =
          std::filesystem::relative(h.checkpoint_path, base.empty() ? "." : base).string();
      reg.add(h);
      log << "trained " << h.id << "\n";
    }
    for (const auto& f : result.failures) {
      log << "self-play seed " << f.seed << " aborted: " << f.reason << "\n";
    }
    return result.failures.empty();
  };
  const bool ok = build(config.selfplay.train_seeds, "train") &
                  build(config.selfplay.holdout_seeds, "holdout");
  reg.save(manifest);
  log << "wrote " << manifest.string() << " with " << reg.all().size() << " entries\n";
  return ok ? kExitOk : kExitDiverged;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"N-agent ad hoc teamwork experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir, mode;
  std::vector<std::string> checkpoints;
  std::optional<std::uint64_t> seed;
  int episodes = 0;
  std::string action;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--seed", seed, "single seed overriding the config");
    sub->add_option("--out", out_dir, "output directory overriding the config");
  };
  auto* train = app.add_subcommand("train", "train the configured variant for every seed");
  common(train);
  auto* ev = app.add_subcommand("eval", "evaluate checkpoints");
  common(ev);
  ev->add_option("--checkpoint", checkpoints, "checkpoint file(s)")->required()->delimiter(',');
  ev->add_option("--mode", mode, "mn, xp, ood, varyn or eddiag")
      ->required()
      ->check(CLI::IsMember({"mn", "xp", "ood", "varyn", "eddiag"}));
  ev->add_option("--episodes", episodes, "episodes per evaluation cell");
  auto* lemmas = app.add_subcommand("lemmas", "check bit-game closed forms");
  auto* registry = app.add_subcommand("registry", "list or build the teammate registry");
  common(registry);
  registry->add_option("action", action, "list or build")
      ->required()
      ->check(CLI::IsMember({"list", "build"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (lemmas->parsed()) return cmd_lemmas(std::cout);
    RunConfig config = load_run_config(config_path);
    apply_env_overrides(config, process_env());
    if (seed) config.seeds = {*seed};
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (train->parsed()) return cmd_train(config, std::cout);
    if (registry->parsed()) return cmd_registry(config, action, std::cout);
    EvalRequest req;
    req.mode = mode;
    req.checkpoints = checkpoints;
    req.out_dir = config.output_dir;
    req.seed = config.seeds.front();
    req.episodes = episodes;
    return cmd_eval(config, req, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NonFiniteError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace naht::cli
