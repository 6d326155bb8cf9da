#ifndef NAHT_POAM_SEQ_BATCH_HPP_
#define NAHT_POAM_SEQ_BATCH_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "naht/env/env.hpp"
#include "naht/nn/tensor.hpp"

namespace naht::poam {

/// One agent's trajectory inside an episode batch.
struct RowRef {
  int episode = 0;
  int slot = 0;
};

enum class RowFilter { kAll, kControlled, kUncontrolled };

std::vector<RowRef> select_rows(const env::EpisodeBatch& batch, std::span<const int> episodes,
                                RowFilter filter);

/// Time-major training view of selected agent trajectories. Step (t, r) lives
/// at index t * rows + r; teammate targets of that step at
/// (t * rows + r) * (M - 1) + k with k the teammate's rank in ascending slot
/// order. Steps past an episode's end are zero-filled and marked invalid.
template <typename T>
struct SeqBatch {
  int steps = 0;
  int rows = 0;
  int num_agents = 0;
  int obs_dim = 0;
  int num_actions = 0;
  std::vector<RowRef> refs;

  nn::Mat<T> obs;
  nn::Mat<T> prev_action;  // one-hot of the row's own previous action
  nn::Mat<T> agent_id;     // one-hot slot index
  std::vector<int> action;
  std::vector<double> reward;
  std::vector<std::uint8_t> valid;
  std::vector<std::uint8_t> done;
  std::vector<std::uint8_t> controlled;  // per row

  nn::Mat<T> mate_obs;
  std::vector<int> mate_action;
  std::vector<std::uint8_t> mate_controlled;  // per (row, k)

  std::size_t index(int t, int r) const { return std::size_t(t) * std::size_t(rows) + std::size_t(r); }
  std::size_t size() const { return std::size_t(steps) * std::size_t(rows); }
  int num_mates() const { return num_agents - 1; }
  std::vector<std::uint8_t> controlled_row_mask() const { return controlled; }
  std::vector<std::uint8_t> all_rows_mask() const {
    return std::vector<std::uint8_t>(std::size_t(rows), 1);
  }
};

template <typename T>
SeqBatch<T> build_seq_batch(const env::EpisodeBatch& batch, std::span<const RowRef> refs);

/// Flat per-step storage for a whole episode batch, addressed by
/// (episode, t, slot) and gathered into SeqBatch order.
class StepTable {
 public:
  StepTable(const env::EpisodeBatch& batch)
      : steps_(batch.max_length()), agents_(batch.spec().num_agents) {}
  std::size_t at(int episode, int t, int slot) const {
    return (std::size_t(episode) * std::size_t(steps_) + std::size_t(t)) * std::size_t(agents_) +
           std::size_t(slot);
  }
  std::size_t size(std::size_t episodes) const {
    return episodes * std::size_t(steps_) * std::size_t(agents_);
  }

  template <typename V, typename T>
  std::vector<V> gather(const std::vector<V>& full, const SeqBatch<T>& b) const {
    std::vector<V> out(b.size(), V{});
    for (int t = 0; t < b.steps; ++t) {
      for (int r = 0; r < b.rows; ++r) {
        const auto& ref = b.refs[std::size_t(r)];
        if (t < steps_) out[b.index(t, r)] = full[at(ref.episode, t, ref.slot)];
      }
    }
    return out;
  }

  template <typename V, typename T>
  void scatter(std::vector<V>& full, const SeqBatch<T>& b, const std::vector<V>& values) const {
    for (int t = 0; t < b.steps; ++t) {
      for (int r = 0; r < b.rows; ++r) {
        const auto& ref = b.refs[std::size_t(r)];
        full[at(ref.episode, t, ref.slot)] = values[b.index(t, r)];
      }
    }
  }

  template <typename T>
  nn::Mat<T> gather_rows(const nn::Mat<T>& full, const SeqBatch<T>& b) const {
    nn::Mat<T> out = nn::Mat<T>::Zero(Eigen::Index(b.size()), full.cols());
    for (int t = 0; t < b.steps; ++t) {
      for (int r = 0; r < b.rows; ++r) {
        const auto& ref = b.refs[std::size_t(r)];
        out.row(Eigen::Index(b.index(t, r))) = full.row(Eigen::Index(at(ref.episode, t, ref.slot)));
      }
    }
    return out;
  }

  template <typename T>
  void scatter_rows(nn::Mat<T>& full, const SeqBatch<T>& b, const nn::Mat<T>& values) const {
    for (int t = 0; t < b.steps; ++t) {
      for (int r = 0; r < b.rows; ++r) {
        const auto& ref = b.refs[std::size_t(r)];
        full.row(Eigen::Index(at(ref.episode, t, ref.slot))) = values.row(Eigen::Index(b.index(t, r)));
      }
    }
  }

  int steps() const { return steps_; }

 private:
  int steps_;
  int agents_;
};

}  // namespace naht::poam

#endif  // NAHT_POAM_SEQ_BATCH_HPP_
