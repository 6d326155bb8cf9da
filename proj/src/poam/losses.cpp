#include "naht/poam/losses.hpp"

#include <algorithm>
#include <cmath>

#include "naht/error.hpp"
#include "naht/nn/categorical.hpp"

namespace naht::poam {

using nn::Mat;

double ed_step_loss(std::span<const double> predicted_obs, std::span<const double> target_obs,
                    std::span<const double> logits, std::span<const int> actions,
                    int num_actions) {
  if (predicted_obs.size() != target_obs.size()) {
    throw ArgumentError("predicted and target observation sizes differ");
  }
  if (logits.size() != actions.size() * std::size_t(num_actions)) {
    throw ArgumentError("one logit block per teammate action expected");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < target_obs.size(); ++i) {
    const double d = predicted_obs[i] - target_obs[i];
    loss += d * d;
  }
  for (std::size_t k = 0; k < actions.size(); ++k) {
    loss -= nn::categorical_log_prob<double>(
        logits.subspan(k * std::size_t(num_actions), std::size_t(num_actions)), actions[k]);
  }
  return loss;
}

std::vector<double> td_lambda_targets(std::span<const double> values,
                                      std::span<const double> rewards,
                                      std::span<const std::uint8_t> dones, double gamma,
                                      double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n + 1 || dones.size() != n) {
    throw ArgumentError("td_lambda_targets needs len+1 values and len dones");
  }
  std::vector<double> out(n, 0.0);
  double next_target = values[n];
  for (std::size_t i = n; i-- > 0;) {
    if (dones[i]) {
      out[i] = rewards[i];
    } else {
      out[i] = rewards[i] + gamma * ((1.0 - lambda) * values[i + 1] + lambda * next_target);
    }
    next_target = out[i];
  }
  return out;
}

double clipped_surrogate(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

double ppo_objective(std::span<const double> logp_new, std::span<const double> logp_old,
                     std::span<const double> advantages, std::span<const double> entropy,
                     double clip, double entropy_coef) {
  const std::size_t n = logp_new.size();
  if (n == 0 || logp_old.size() != n || advantages.size() != n ||
      (!entropy.empty() && entropy.size() != n)) {
    throw ArgumentError("ppo_objective inputs must be non-empty and equally sized");
  }
  double surrogate = 0.0;
  double ent = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    surrogate += clipped_surrogate(std::exp(logp_new[i] - logp_old[i]), advantages[i], clip);
    if (!entropy.empty()) ent += entropy[i];
  }
  return -surrogate / double(n) - entropy_coef * ent / double(n);
}

double masked_value_loss(std::span<const double> values, std::span<const double> targets,
                         std::span<const std::uint8_t> mask) {
  if (values.size() != targets.size() || mask.size() != values.size()) {
    throw ArgumentError("value loss inputs differ in size");
  }
  double sum = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!mask[i]) continue;
    const double d = values[i] - targets[i];
    sum += 0.5 * d * d;
    ++count;
  }
  if (count == 0) throw ArgumentError("value loss mask selects no steps");
  return sum / double(count);
}

void normalize_advantages(std::vector<double>& adv, std::span<const std::uint8_t> mask) {
  double sum = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < adv.size(); ++i) {
    if (mask[i]) {
      sum += adv[i];
      ++count;
    }
  }
  if (count == 0) return;
  const double mean = sum / double(count);
  double var = 0.0;
  for (std::size_t i = 0; i < adv.size(); ++i) {
    if (mask[i]) var += (adv[i] - mean) * (adv[i] - mean);
  }
  const double std = std::sqrt(var / double(count));
  const double scale = std > 1e-12 ? 1.0 / std : 1.0;
  for (std::size_t i = 0; i < adv.size(); ++i) {
    adv[i] = mask[i] ? (adv[i] - mean) * scale : 0.0;
  }
}

namespace {

template <typename T>
bool active(const SeqBatch<T>& b, std::span<const std::uint8_t> row_mask, int t, int r) {
  return b.valid[b.index(t, r)] && row_mask[std::size_t(r)];
}

template <typename T>
void check_mask(const SeqBatch<T>& b, std::span<const std::uint8_t> row_mask) {
  if (row_mask.size() != std::size_t(b.rows)) throw ArgumentError("row mask size mismatch");
}

template <typename T>
std::span<const T> row_span(const Mat<T>& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), std::size_t(m.cols())};
}

template <typename T>
void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteError(what, "loss evaluation");
}

}  // namespace

template <typename T>
Mat<T> encoder_inputs(const SeqBatch<T>& b) {
  Mat<T> x(Eigen::Index(b.size()), b.obs_dim + b.num_actions);
  x.leftCols(b.obs_dim) = b.obs;
  x.rightCols(b.num_actions) = b.prev_action;
  return x;
}

template <typename T>
Mat<T> compute_embeddings(const PoamNets<T>& nets, const SeqBatch<T>& b) {
  if (!nets.modeling()) throw ConfigError("embeddings requested from a network without modeling");
  return nets.encoder().forward(nets.store(), encoder_inputs(b), b.steps, b.rows, nullptr);
}

template <typename T>
Mat<T> policy_inputs(const PoamNets<T>& nets, const SeqBatch<T>& b, const Mat<T>* emb) {
  const int n = nets.modeling() ? nets.config().embed_dim : 0;
  Mat<T> x(Eigen::Index(b.size()), nets.policy_input_dim());
  x.leftCols(b.obs_dim) = b.obs;
  if (n > 0) {
    if (!emb || emb->rows() != x.rows() || emb->cols() != n) {
      throw ArgumentError("policy inputs need one embedding per step");
    }
    x.middleCols(b.obs_dim, n) = *emb;
  }
  x.rightCols(b.num_agents) = b.agent_id;
  return x;
}

template <typename T>
EdLoss ed_loss(PoamNets<T>& nets, const SeqBatch<T>& b, std::span<const std::uint8_t> row_mask,
               bool backprop) {
  check_mask(b, row_mask);
  if (!nets.modeling()) throw ConfigError("ed_loss on a network without modeling");
  auto& store = nets.store();
  const int n = nets.config().embed_dim;
  const int mates = b.num_mates();
  const int od = b.obs_dim;
  const int na = b.num_actions;

  typename nn::RecurrentNet<T>::Trace enc_trace;
  const Mat<T> emb = nets.encoder().forward(store, encoder_inputs(b), b.steps, b.rows,
                                            backprop ? &enc_trace : nullptr);

  std::vector<std::size_t> steps;
  for (int t = 0; t < b.steps; ++t) {
    for (int r = 0; r < b.rows; ++r) {
      if (active(b, row_mask, t, r)) steps.push_back(b.index(t, r));
    }
  }
  EdLoss out;
  out.count = long(steps.size());
  if (steps.empty()) return out;

  Mat<T> dec_in = Mat<T>::Zero(Eigen::Index(steps.size() * std::size_t(mates)), n + mates);
  for (std::size_t s = 0; s < steps.size(); ++s) {
    for (int k = 0; k < mates; ++k) {
      const Eigen::Index row = Eigen::Index(s * std::size_t(mates) + std::size_t(k));
      dec_in.row(row).head(n) = emb.row(Eigen::Index(steps[s]));
      dec_in(row, n + k) = T(1);
    }
  }
  typename nn::Mlp<T>::Trace obs_trace;
  typename nn::Mlp<T>::Trace act_trace;
  const Mat<T> pred = nets.obs_decoder().forward(store, dec_in, backprop ? &obs_trace : nullptr);
  const Mat<T> logits = nets.act_decoder().forward(store, dec_in, backprop ? &act_trace : nullptr);

  const double inv = 1.0 / double(steps.size());
  Mat<T> dpred(pred.rows(), pred.cols());
  Mat<T> dlogits(logits.rows(), logits.cols());
  double sq_sum = 0.0;
  double nll_sum = 0.0;
  std::vector<T> g(static_cast<std::size_t>(na));
  for (std::size_t s = 0; s < steps.size(); ++s) {
    for (int k = 0; k < mates; ++k) {
      const Eigen::Index row = Eigen::Index(s * std::size_t(mates) + std::size_t(k));
      const Eigen::Index target = Eigen::Index(steps[s] * std::size_t(mates) + std::size_t(k));
      for (int c = 0; c < od; ++c) {
        const double d = double(pred(row, c)) - double(b.mate_obs(target, c));
        sq_sum += d * d;
        dpred(row, c) = T(2.0 * d * inv);
      }
      const int a = b.mate_action[std::size_t(target)];
      nll_sum -= double(nn::categorical_log_prob<T>(row_span(logits, row), a));
      nn::categorical_log_prob_grad<T>(row_span(logits, row), a, g);
      for (int c = 0; c < na; ++c) dlogits(row, c) = T(-double(g[std::size_t(c)]) * inv);
    }
  }
  out.obs_mse = sq_sum * inv;
  out.act_nll = nll_sum * inv;
  out.loss = out.obs_mse + out.act_nll;
  check_finite<T>(out.loss, "ed_loss");
  if (!backprop) return out;

  Mat<T> d_in_obs;
  Mat<T> d_in_act;
  nets.obs_decoder().backward(store, obs_trace, dpred, &d_in_obs);
  nets.act_decoder().backward(store, act_trace, dlogits, &d_in_act);
  Mat<T> d_emb = Mat<T>::Zero(emb.rows(), emb.cols());
  for (std::size_t s = 0; s < steps.size(); ++s) {
    for (int k = 0; k < mates; ++k) {
      const Eigen::Index row = Eigen::Index(s * std::size_t(mates) + std::size_t(k));
      d_emb.row(Eigen::Index(steps[s])) += d_in_obs.row(row).head(n) + d_in_act.row(row).head(n);
    }
  }
  nets.encoder().backward(store, enc_trace, d_emb, nullptr);
  return out;
}

template <typename T>
EdDiagnostics<T> ed_diagnostics(const PoamNets<T>& nets, const SeqBatch<T>& b) {
  const int n = nets.config().embed_dim;
  const int mates = b.num_mates();
  const Mat<T> emb = compute_embeddings(nets, b);
  Mat<T> dec_in = Mat<T>::Zero(Eigen::Index(b.size() * std::size_t(mates)), n + mates);
  for (std::size_t s = 0; s < b.size(); ++s) {
    for (int k = 0; k < mates; ++k) {
      const Eigen::Index row = Eigen::Index(s * std::size_t(mates) + std::size_t(k));
      dec_in.row(row).head(n) = emb.row(Eigen::Index(s));
      dec_in(row, n + k) = T(1);
    }
  }
  const Mat<T> pred = nets.obs_decoder().forward(nets.store(), dec_in, nullptr);
  const Mat<T> logits = nets.act_decoder().forward(nets.store(), dec_in, nullptr);
  EdDiagnostics<T> out;
  out.obs_sq_error.assign(std::size_t(dec_in.rows()), 0.0);
  out.act_prob.assign(std::size_t(dec_in.rows()), 0.0);
  for (Eigen::Index row = 0; row < dec_in.rows(); ++row) {
    out.obs_sq_error[std::size_t(row)] =
        double((pred.row(row) - b.mate_obs.row(row)).squaredNorm());
    out.act_prob[std::size_t(row)] = std::exp(double(
        nn::categorical_log_prob<T>(row_span(logits, row), b.mate_action[std::size_t(row)])));
  }
  return out;
}

template <typename T>
PolicyOutputs evaluate_policy(const PoamNets<T>& nets, const SeqBatch<T>& b, const Mat<T>* emb,
                              bool with_value) {
  const Mat<T> x = policy_inputs(nets, b, emb);
  const Mat<T> logits = nets.actor().forward(nets.store(), x, b.steps, b.rows, nullptr);
  PolicyOutputs out;
  out.logp.assign(b.size(), 0.0);
  out.entropy.assign(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!b.valid[i]) continue;
    const auto row = row_span(logits, Eigen::Index(i));
    out.logp[i] = double(nn::categorical_log_prob<T>(row, b.action[i]));
    out.entropy[i] = double(nn::categorical_entropy<T>(row));
  }
  if (with_value) {
    const Mat<T> v = nets.critic().forward(nets.store(), x, b.steps, b.rows, nullptr);
    out.value.assign(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b.valid[i]) out.value[i] = double(v(Eigen::Index(i), 0));
    }
  }
  return out;
}

template <typename T>
ActorLoss actor_loss(PoamNets<T>& nets, const SeqBatch<T>& b, const Mat<T>* emb,
                     std::span<const double> advantages, std::span<const double> old_logp,
                     std::span<const std::uint8_t> row_mask, double clip, double entropy_coef,
                     bool backprop, Mat<T>* d_emb) {
  check_mask(b, row_mask);
  if (advantages.size() != b.size() || old_logp.size() != b.size()) {
    throw ArgumentError("advantages and old log-probs must cover every batch step");
  }
  auto& store = nets.store();
  const int na = b.num_actions;
  const Mat<T> x = policy_inputs(nets, b, emb);
  typename nn::RecurrentNet<T>::Trace trace;
  const Mat<T> logits =
      nets.actor().forward(store, x, b.steps, b.rows, backprop ? &trace : nullptr);

  long count = 0;
  for (int t = 0; t < b.steps; ++t) {
    for (int r = 0; r < b.rows; ++r) count += active(b, row_mask, t, r) ? 1 : 0;
  }
  ActorLoss out;
  out.count = count;
  if (count == 0) return out;
  const double inv = 1.0 / double(count);

  Mat<T> dlogits = Mat<T>::Zero(logits.rows(), logits.cols());
  std::vector<T> g(static_cast<std::size_t>(na));
  std::vector<double> p(static_cast<std::size_t>(na));
  double surrogate = 0.0;
  double entropy = 0.0;
  long clipped = 0;
  for (int t = 0; t < b.steps; ++t) {
    for (int r = 0; r < b.rows; ++r) {
      if (!active(b, row_mask, t, r)) continue;
      const std::size_t i = b.index(t, r);
      const auto row = row_span(logits, Eigen::Index(i));
      const double logp = double(nn::categorical_log_prob<T>(row, b.action[i]));
      const double ratio = std::exp(logp - old_logp[i]);
      const double a = advantages[i];
      surrogate += clipped_surrogate(ratio, a, clip);
      const double h = double(nn::categorical_entropy<T>(row));
      entropy += h;
      const bool inside = ratio >= 1.0 - clip && ratio <= 1.0 + clip;
      if (!inside) ++clipped;
      if (!backprop) continue;
      // d(-surrogate)/dlogp is -A rho unless the clipped branch is the active min.
      const bool unclipped_active = inside || ratio * a <= std::clamp(ratio, 1.0 - clip, 1.0 + clip) * a;
      const double dlogp = unclipped_active ? -a * ratio * inv : 0.0;
      nn::categorical_log_prob_grad<T>(row, b.action[i], g);
      const double lse = double(nn::log_sum_exp<T>(row));
      for (int c = 0; c < na; ++c) {
        const double lp = double(row[std::size_t(c)]) - lse;
        p[std::size_t(c)] = std::exp(lp);
        // dH/dlogit_c = -p_c (log p_c + H)
        const double dh = -p[std::size_t(c)] * (lp + h);
        dlogits(Eigen::Index(i), c) =
            T(dlogp * double(g[std::size_t(c)]) - entropy_coef * dh * inv);
      }
    }
  }
  out.entropy = entropy * inv;
  out.loss = -surrogate * inv - entropy_coef * out.entropy;
  out.clip_fraction = double(clipped) * inv;
  check_finite<T>(out.loss, "actor_loss");
  if (backprop) {
    Mat<T> dx;
    nets.actor().backward(store, trace, dlogits, d_emb ? &dx : nullptr);
    if (d_emb && nets.modeling()) {
      *d_emb += dx.middleCols(b.obs_dim, nets.config().embed_dim);
    }
  }
  return out;
}

template <typename T>
ValueLoss value_loss(PoamNets<T>& nets, const SeqBatch<T>& b, const Mat<T>* emb,
                     std::span<const double> targets, std::span<const std::uint8_t> row_mask,
                     bool backprop, Mat<T>* d_emb) {
  check_mask(b, row_mask);
  if (targets.size() != b.size()) throw ArgumentError("value targets must cover every batch step");
  long count = 0;
  for (int t = 0; t < b.steps; ++t) {
    for (int r = 0; r < b.rows; ++r) count += active(b, row_mask, t, r) ? 1 : 0;
  }
  if (count == 0) throw ArgumentError("value loss mask selects no steps");
  auto& store = nets.store();
  const Mat<T> x = policy_inputs(nets, b, emb);
  typename nn::RecurrentNet<T>::Trace trace;
  const Mat<T> v = nets.critic().forward(store, x, b.steps, b.rows, backprop ? &trace : nullptr);
  const double inv = 1.0 / double(count);
  Mat<T> dv = Mat<T>::Zero(v.rows(), 1);
  double sum = 0.0;
  for (int t = 0; t < b.steps; ++t) {
    for (int r = 0; r < b.rows; ++r) {
      if (!active(b, row_mask, t, r)) continue;
      const std::size_t i = b.index(t, r);
      const double d = double(v(Eigen::Index(i), 0)) - targets[i];
      sum += 0.5 * d * d;
      dv(Eigen::Index(i), 0) = T(d * inv);
    }
  }
  ValueLoss out{sum * inv, count};
  check_finite<T>(out.loss, "value_loss");
  if (backprop) {
    Mat<T> dx;
    nets.critic().backward(store, trace, dv, d_emb ? &dx : nullptr);
    if (d_emb && nets.modeling()) {
      *d_emb += dx.middleCols(b.obs_dim, nets.config().embed_dim);
    }
  }
  return out;
}

#define NAHT_INSTANTIATE_LOSSES(T)                                                            \
  template Mat<T> encoder_inputs<T>(const SeqBatch<T>&);                                      \
  template Mat<T> compute_embeddings<T>(const PoamNets<T>&, const SeqBatch<T>&);              \
  template Mat<T> policy_inputs<T>(const PoamNets<T>&, const SeqBatch<T>&, const Mat<T>*);    \
  template EdLoss ed_loss<T>(PoamNets<T>&, const SeqBatch<T>&, std::span<const std::uint8_t>, \
                             bool);                                                           \
  template EdDiagnostics<T> ed_diagnostics<T>(const PoamNets<T>&, const SeqBatch<T>&);        \
  template PolicyOutputs evaluate_policy<T>(const PoamNets<T>&, const SeqBatch<T>&,           \
                                            const Mat<T>*, bool);                             \
  template ActorLoss actor_loss<T>(PoamNets<T>&, const SeqBatch<T>&, const Mat<T>*,           \
                                   std::span<const double>, std::span<const double>,          \
                                   std::span<const std::uint8_t>, double, double, bool,       \
                                   Mat<T>*);                                                  \
  template ValueLoss value_loss<T>(PoamNets<T>&, const SeqBatch<T>&, const Mat<T>*,           \
                                   std::span<const double>, std::span<const std::uint8_t>,    \
                                   bool, Mat<T>*);

NAHT_INSTANTIATE_LOSSES(float)
NAHT_INSTANTIATE_LOSSES(double)

}  // namespace naht::poam
