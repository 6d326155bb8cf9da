#include "naht/poam/seq_batch.hpp"

#include <algorithm>

#include "naht/error.hpp"

namespace naht::poam {

std::vector<RowRef> select_rows(const env::EpisodeBatch& batch, std::span<const int> episodes,
                                RowFilter filter) {
  std::vector<RowRef> out;
  const int m = batch.spec().num_agents;
  for (int e : episodes) {
    for (int i = 0; i < m; ++i) {
      const bool c = batch.controlled(std::size_t(e), i);
      if (filter == RowFilter::kAll || (filter == RowFilter::kControlled) == c) {
        out.push_back({e, i});
      }
    }
  }
  return out;
}

template <typename T>
SeqBatch<T> build_seq_batch(const env::EpisodeBatch& batch, std::span<const RowRef> refs) {
  const auto& spec = batch.spec();
  SeqBatch<T> b;
  b.rows = int(refs.size());
  b.num_agents = spec.num_agents;
  b.obs_dim = spec.obs_dim;
  b.num_actions = spec.num_actions;
  b.refs.assign(refs.begin(), refs.end());
  for (const auto& ref : refs) {
    if (ref.episode < 0 || std::size_t(ref.episode) >= batch.size() || ref.slot < 0 ||
        ref.slot >= spec.num_agents) {
      throw ArgumentError("row reference outside the episode batch");
    }
    b.steps = std::max(b.steps, batch.episode(std::size_t(ref.episode)).length);
  }
  const std::size_t n = b.size();
  const int mates = b.num_mates();
  b.obs = nn::Mat<T>::Zero(Eigen::Index(n), b.obs_dim);
  b.prev_action = nn::Mat<T>::Zero(Eigen::Index(n), b.num_actions);
  b.agent_id = nn::Mat<T>::Zero(Eigen::Index(n), b.num_agents);
  b.action.assign(n, 0);
  b.reward.assign(n, 0.0);
  b.valid.assign(n, 0);
  b.done.assign(n, 0);
  b.controlled.assign(std::size_t(b.rows), 0);
  b.mate_obs = nn::Mat<T>::Zero(Eigen::Index(n * std::size_t(mates)), b.obs_dim);
  b.mate_action.assign(n * std::size_t(mates), 0);
  b.mate_controlled.assign(std::size_t(b.rows) * std::size_t(mates), 0);

  for (int r = 0; r < b.rows; ++r) {
    const auto& ref = b.refs[std::size_t(r)];
    const std::size_t e = std::size_t(ref.episode);
    const auto& ep = batch.episode(e);
    b.controlled[std::size_t(r)] = ep.controlled[std::size_t(ref.slot)];
    const auto mate_slots = batch.teammate_slots(ref.slot);
    for (int k = 0; k < mates; ++k) {
      b.mate_controlled[std::size_t(r) * std::size_t(mates) + std::size_t(k)] =
          ep.controlled[std::size_t(mate_slots[std::size_t(k)])];
    }
    for (int t = 0; t < ep.length; ++t) {
      const std::size_t i = b.index(t, r);
      const auto o = batch.obs(e, t, ref.slot);
      for (int c = 0; c < b.obs_dim; ++c) b.obs(Eigen::Index(i), c) = T(o[std::size_t(c)]);
      if (t > 0) b.prev_action(Eigen::Index(i), batch.action(e, t - 1, ref.slot)) = T(1);
      b.agent_id(Eigen::Index(i), ref.slot) = T(1);
      b.action[i] = batch.action(e, t, ref.slot);
      b.reward[i] = batch.reward(e, t);
      b.valid[i] = 1;
      b.done[i] = ep.dones[std::size_t(t)];
      for (int k = 0; k < mates; ++k) {
        const int slot = mate_slots[std::size_t(k)];
        const std::size_t j = i * std::size_t(mates) + std::size_t(k);
        const auto mo = batch.obs(e, t, slot);
        for (int c = 0; c < b.obs_dim; ++c) b.mate_obs(Eigen::Index(j), c) = T(mo[std::size_t(c)]);
        b.mate_action[j] = batch.action(e, t, slot);
      }
    }
  }
  return b;
}

template SeqBatch<float> build_seq_batch<float>(const env::EpisodeBatch&, std::span<const RowRef>);
template SeqBatch<double> build_seq_batch<double>(const env::EpisodeBatch&,
                                                  std::span<const RowRef>);

}  // namespace naht::poam
