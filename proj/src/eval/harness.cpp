#include "naht/eval/harness.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "naht/error.hpp"
#include "naht/poam/losses.hpp"
#include "naht/poam/seq_batch.hpp"
#include "naht/teams/sampling.hpp"

namespace naht::eval {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> returns_of(const env::EpisodeBatch& batch) {
  std::vector<double> out(batch.size());
  for (std::size_t e = 0; e < batch.size(); ++e) out[e] = env::episode_return(batch, e);
  return out;
}

int num_agents(const env::EnvFactory& factory) { return factory()->spec().num_agents; }

void check_episodes(int episodes) {
  if (episodes < 1) throw ConfigError("evaluation needs at least one episode");
}

std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << header << "\n";
  return out;
}

}  // namespace

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = long(values.size());
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
  if (values.size() > 1) {
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    var /= double(values.size() - 1);
    s.ci95 = 1.96 * std::sqrt(var) / std::sqrt(double(values.size()));
  }
  return s;
}

MnScore mn_score(const teams::PolicyHandle& controlled,
                 std::span<const teams::PolicyHandle> uncontrolled, const env::EnvFactory& factory,
                 int episodes, std::uint64_t seed, std::vector<int> ns) {
  check_episodes(episodes);
  const int m = num_agents(factory);
  if (ns.empty()) {
    for (int n = 1; n < m; ++n) ns.push_back(n);
  }
  MnScore out;
  out.episodes_per_n = episodes;
  const Rng root = Rng(seed).split("mn");
  for (int n : ns) {
    if (n < 1 || n >= m) throw ConfigError("M-N scores use 1 <= N <= M-1");
    const auto sampler = [&](std::size_t, Rng& rng) {
      return teams::sample_team_with_n(n, uncontrolled, controlled, m, rng);
    };
    const auto batch =
        env::run_episodes(factory, sampler, episodes, root.split(std::uint64_t(n)).next_u64());
    const auto r = returns_of(batch);
    for (int e = 0; e < episodes; ++e) {
      out.n.push_back(n);
      out.episode.push_back(e);
      out.returns.push_back(r[std::size_t(e)]);
    }
  }
  out.summary = summarize(out.returns);
  return out;
}

std::vector<double> selfplay_returns(const teams::PolicyHandle& team,
                                     const env::EnvFactory& factory, int episodes,
                                     std::uint64_t seed) {
  check_episodes(episodes);
  const int m = num_agents(factory);
  const auto spec = teams::make_team(team, nullptr, std::vector<std::uint8_t>(std::size_t(m), 1));
  return returns_of(env::run_episodes(factory, spec, episodes, Rng(seed).split("self").next_u64()));
}

double ScoreMatrix::self_mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) s += cells[i][i].mean;
  return cells.empty() ? 0.0 : s / double(cells.size());
}

double ScoreMatrix::cross_mean() const {
  double s = 0.0;
  long c = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (i == j || cells[i][j].count == 0) continue;
      s += cells[i][j].mean;
      ++c;
    }
  }
  return c == 0 ? 0.0 : s / double(c);
}

ScoreMatrix crossplay_matrix(std::span<const teams::PolicyHandle> teams,
                             const env::EnvFactory& factory, int episodes, std::uint64_t seed,
                             bool linear_pairings) {
  if (teams.size() < 2) throw ConfigError("cross-play needs at least two teams");
  const std::size_t k = teams.size();
  ScoreMatrix out;
  out.cells.assign(k, std::vector<Summary>(k));
  const Rng root = Rng(seed).split("xp");
  for (std::size_t i = 0; i < k; ++i) {
    out.labels.push_back(teams[i].id);
    const auto r = selfplay_returns(teams[i], factory, episodes,
                                    root.split(std::uint64_t(i * k + i)).next_u64());
    out.cells[i][i] = summarize(r);
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const bool ring = j == i + 1 || (i == 0 && j == k - 1);
      if (linear_pairings && !ring) continue;
      const teams::PolicyHandle other[] = {teams[j]};
      const auto s = mn_score(teams[i], other, factory, episodes,
                              root.split(std::uint64_t(i * k + j)).next_u64());
      out.cells[i][j] = s.summary;
      out.cells[j][i] = s.summary;
    }
  }
  return out;
}

template <typename T>
std::vector<EdCurvePoint> within_episode_ed_diag(
    std::span<const LabelledNets<T>> checkpoints, const teams::PolicyHandle& rollout,
    std::span<const teams::PolicyHandle> uncontrolled, const env::EnvFactory& factory,
    int episodes, std::uint64_t seed) {
  check_episodes(episodes);
  const int m = num_agents(factory);
  const teams::SamplingScheme scheme{teams::SamplingMode::kNahtUniform};
  const auto sampler = [&](std::size_t, Rng& rng) {
    return teams::sample_team(scheme, uncontrolled, rollout, m, rng);
  };
  const auto batch =
      env::run_episodes(factory, sampler, episodes, Rng(seed).split("eddiag").next_u64());
  std::vector<int> all(batch.size());
  std::iota(all.begin(), all.end(), 0);
  const auto refs = poam::select_rows(batch, all, poam::RowFilter::kControlled);
  const auto b = poam::build_seq_batch<T>(batch, refs);
  const int mates = b.num_mates();

  std::vector<EdCurvePoint> out;
  for (const auto& ck : checkpoints) {
    if (!ck.nets || !ck.nets->modeling()) {
      throw ConfigError("checkpoint " + ck.label + " has no encoder-decoder");
    }
    if (ck.nets->config().env_fingerprint != batch.spec().fingerprint()) {
      throw ConfigError("checkpoint " + ck.label + " was trained for " +
                        ck.nets->config().env_fingerprint + ", environment is " +
                        batch.spec().fingerprint());
    }
    const auto diag = poam::ed_diagnostics(*ck.nets, b);
    // [t][target] accumulators; target 0 controlled, 1 uncontrolled, 2 all
    std::vector<std::array<double, 3>> mse(std::size_t(b.steps)), prob(std::size_t(b.steps));
    std::vector<std::array<long, 3>> count(std::size_t(b.steps));
    for (int t = 0; t < b.steps; ++t) {
      mse[std::size_t(t)] = prob[std::size_t(t)] = {0.0, 0.0, 0.0};
      count[std::size_t(t)] = {0, 0, 0};
      for (int r = 0; r < b.rows; ++r) {
        const std::size_t i = b.index(t, r);
        if (!b.valid[i]) continue;
        for (int k = 0; k < mates; ++k) {
          const std::size_t j = i * std::size_t(mates) + std::size_t(k);
          const int target =
              b.mate_controlled[std::size_t(r) * std::size_t(mates) + std::size_t(k)] ? 0 : 1;
          for (int g : {target, 2}) {
            mse[std::size_t(t)][std::size_t(g)] += diag.obs_sq_error[j] / double(b.obs_dim);
            prob[std::size_t(t)][std::size_t(g)] += diag.act_prob[j];
            ++count[std::size_t(t)][std::size_t(g)];
          }
        }
      }
    }
    static const char* kTargets[] = {"controlled", "uncontrolled", "all"};
    for (int g = 0; g < 3; ++g) {
      for (int t = 0; t < b.steps; ++t) {
        const long c = count[std::size_t(t)][std::size_t(g)];
        if (c == 0) continue;
        out.push_back({ck.label, t, kTargets[g], mse[std::size_t(t)][std::size_t(g)] / double(c),
                       prob[std::size_t(t)][std::size_t(g)] / double(c), c});
      }
    }
  }
  return out;
}

template std::vector<EdCurvePoint> within_episode_ed_diag<float>(
    std::span<const LabelledNets<float>>, const teams::PolicyHandle&,
    std::span<const teams::PolicyHandle>, const env::EnvFactory&, int, std::uint64_t);
template std::vector<EdCurvePoint> within_episode_ed_diag<double>(
    std::span<const LabelledNets<double>>, const teams::PolicyHandle&,
    std::span<const teams::PolicyHandle>, const env::EnvFactory&, int, std::uint64_t);

OodReport ood_eval(const teams::PolicyHandle& controlled,
                   std::span<const teams::PolicyHandle> train,
                   std::span<const teams::PolicyHandle> holdout, const env::EnvFactory& factory,
                   int episodes, std::uint64_t seed, bool allow_overlap) {
  if (!allow_overlap) {
    std::set<std::string> ids;
    std::set<std::uint64_t> seeds;
    for (const auto& h : train) {
      ids.insert(h.id);
      if (h.seed) seeds.insert(*h.seed);
    }
    for (const auto& h : holdout) {
      if (ids.count(h.id) || (h.seed && seeds.count(*h.seed)) || h.has_tag("train")) {
        throw ConfigError("holdout team " + h.id + " overlaps the training set");
      }
    }
  }
  OodReport out;
  std::vector<double> in_returns, out_returns;
  const Rng root = Rng(seed).split("ood");
  std::uint64_t index = 0;
  const auto run = [&](std::span<const teams::PolicyHandle> set, const char* split,
                       std::vector<double>& pool) {
    for (const auto& h : set) {
      const teams::PolicyHandle one[] = {h};
      const auto s = mn_score(controlled, one, factory, episodes, root.split(index++).next_u64());
      out.rows.push_back({h.id, split, s.summary});
      pool.insert(pool.end(), s.returns.begin(), s.returns.end());
    }
  };
  run(train, "train", in_returns);
  run(holdout, "holdout", out_returns);
  out.in_distribution = summarize(in_returns);
  out.out_of_distribution = summarize(out_returns);
  return out;
}

std::vector<VaryingNPoint> varying_n_curve(const teams::PolicyHandle& controlled,
                                           std::span<const teams::PolicyHandle> uncontrolled,
                                           const env::EnvFactory& factory, int episodes,
                                           std::uint64_t seed) {
  check_episodes(episodes);
  const int m = num_agents(factory);
  std::vector<VaryingNPoint> out;
  const Rng root = Rng(seed).split("varyn");
  for (int n = 0; n <= m; ++n) {
    const auto sampler = [&](std::size_t, Rng& rng) {
      return teams::sample_team_with_n(n, uncontrolled, controlled, m, rng);
    };
    const auto batch =
        env::run_episodes(factory, sampler, episodes, root.split(std::uint64_t(n)).next_u64());
    out.push_back({n, summarize(returns_of(batch))});
  }
  return out;
}

void write_mn_csv(const std::filesystem::path& path, const MnScore& score) {
  auto out = open_csv(path, "N,episode,return");
  for (std::size_t i = 0; i < score.returns.size(); ++i) {
    out << score.n[i] << "," << score.episode[i] << "," << num(score.returns[i]) << "\n";
  }
}

void write_xp_csv(const std::filesystem::path& path, const ScoreMatrix& matrix) {
  auto out = open_csv(path, "row_team,col_team,mean,ci95,kind");
  for (std::size_t i = 0; i < matrix.cells.size(); ++i) {
    for (std::size_t j = 0; j < matrix.cells.size(); ++j) {
      const auto& c = matrix.cells[i][j];
      if (i != j && c.count == 0) continue;
      out << matrix.labels[i] << "," << matrix.labels[j] << "," << num(c.mean) << ","
          << num(c.ci95) << "," << (i == j ? "self" : "cross") << "\n";
    }
  }
}

void write_ed_csv(const std::filesystem::path& path, std::span<const EdCurvePoint> points) {
  auto out = open_csv(path, "checkpoint,t,target,obs_mse,act_prob");
  for (const auto& p : points) {
    out << p.checkpoint << "," << p.t << "," << p.target << "," << num(p.obs_mse) << ","
        << num(p.act_prob) << "\n";
  }
}

void write_ood_csv(const std::filesystem::path& path, const OodReport& report) {
  auto out = open_csv(path, "team_id,split,mean,ci95");
  for (const auto& r : report.rows) {
    out << r.team_id << "," << r.split << "," << num(r.summary.mean) << ","
        << num(r.summary.ci95) << "\n";
  }
}

void write_varyn_csv(const std::filesystem::path& path, std::span<const VaryingNPoint> points) {
  auto out = open_csv(path, "N,mean,ci95");
  for (const auto& p : points) {
    out << p.n << "," << num(p.summary.mean) << "," << num(p.summary.ci95) << "\n";
  }
}

}  // namespace naht::eval
