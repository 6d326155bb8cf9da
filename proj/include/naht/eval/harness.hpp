#ifndef NAHT_EVAL_HARNESS_HPP_
#define NAHT_EVAL_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "naht/env/env.hpp"
#include "naht/poam/nets.hpp"
#include "naht/teams/policy.hpp"

namespace naht::eval {

struct Summary {
  double mean = 0.0;
  double ci95 = 0.0;  // 1.96 * sample std / sqrt(count)
  long count = 0;
};
Summary summarize(std::span<const double> values);

struct MnScore {
  Summary summary;
  int episodes_per_n = 0;
  std::vector<int> n;  // one entry per raw return
  std::vector<int> episode;
  std::vector<double> returns;
};

/// Mean return over N in `ns` (default 1..M-1), E episodes each. Every
/// episode places the controlled policy in N uniformly chosen slots and one
/// team drawn uniformly from U in the rest.
MnScore mn_score(const teams::PolicyHandle& controlled,
                 std::span<const teams::PolicyHandle> uncontrolled, const env::EnvFactory& factory,
                 int episodes, std::uint64_t seed, std::vector<int> ns = {});

/// Returns of `episodes` runs with every slot filled by `team`.
std::vector<double> selfplay_returns(const teams::PolicyHandle& team,
                                     const env::EnvFactory& factory, int episodes,
                                     std::uint64_t seed);

struct ScoreMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<Summary>> cells;
  /// Mean of the diagonal and of the played off-diagonal cell means.
  double self_mean() const;
  double cross_mean() const;
};

/// Diagonal: each team intact. Off-diagonal (i, j): M-N score of team i with
/// team j as the only uncontrolled team; computed for i < j and mirrored.
/// With linear_pairings only the pairs (i, i+1 mod k) are played, and the
/// skipped cells keep count 0.
ScoreMatrix crossplay_matrix(std::span<const teams::PolicyHandle> teams,
                             const env::EnvFactory& factory, int episodes, std::uint64_t seed,
                             bool linear_pairings = false);

struct EdCurvePoint {
  std::string checkpoint;
  int t = 0;
  std::string target;  // controlled, uncontrolled or all
  double obs_mse = 0.0;
  double act_prob = 0.0;
  long count = 0;
};

template <typename T>
struct LabelledNets {
  std::string label;
  const poam::PoamNets<T>* nets = nullptr;
};

/// Plays `episodes` NAHT episodes with `rollout` as the controlled policy,
/// then scores every checkpoint's encoder-decoder on the controlled agents'
/// histories of those same episodes, per within-episode step.
template <typename T>
std::vector<EdCurvePoint> within_episode_ed_diag(
    std::span<const LabelledNets<T>> checkpoints, const teams::PolicyHandle& rollout,
    std::span<const teams::PolicyHandle> uncontrolled, const env::EnvFactory& factory,
    int episodes, std::uint64_t seed);

struct OodRow {
  std::string team_id;
  std::string split;  // train or holdout
  Summary summary;
};

struct OodReport {
  std::vector<OodRow> rows;
  Summary in_distribution;
  Summary out_of_distribution;
};

/// M-N scores against each train and holdout team. Overlap between the two
/// sets (shared id or seed, or a holdout team tagged train) is a
/// ConfigError unless allow_overlap is set.
OodReport ood_eval(const teams::PolicyHandle& controlled,
                   std::span<const teams::PolicyHandle> train,
                   std::span<const teams::PolicyHandle> holdout, const env::EnvFactory& factory,
                   int episodes, std::uint64_t seed, bool allow_overlap = false);

struct VaryingNPoint {
  int n = 0;
  Summary summary;
};

/// Mean return for every N in 0..M (N = 0: uncontrolled teams alone,
/// N = M: controlled self-play).
std::vector<VaryingNPoint> varying_n_curve(const teams::PolicyHandle& controlled,
                                           std::span<const teams::PolicyHandle> uncontrolled,
                                           const env::EnvFactory& factory, int episodes,
                                           std::uint64_t seed);

void write_mn_csv(const std::filesystem::path& path, const MnScore& score);
void write_xp_csv(const std::filesystem::path& path, const ScoreMatrix& matrix);
void write_ed_csv(const std::filesystem::path& path, std::span<const EdCurvePoint> points);
void write_ood_csv(const std::filesystem::path& path, const OodReport& report);
void write_varyn_csv(const std::filesystem::path& path, std::span<const VaryingNPoint> points);

}  // namespace naht::eval

#endif  // NAHT_EVAL_HARNESS_HPP_
