#include "naht/poam/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "naht/error.hpp"
#include "naht/nn/adam.hpp"
#include "naht/poam/agent.hpp"
#include "naht/poam/losses.hpp"
#include "naht/poam/seq_batch.hpp"

namespace naht::poam {

TrainVariant TrainVariant::preset(const std::string& name) {
  TrainVariant v;
  v.name = name;
  if (name == "poam") return v;
  if (name == "ippo-naht") {
    v.use_agent_modeling = false;
    return v;
  }
  if (name == "poam-aht") {
    v.sampling = teams::SamplingMode::kAhtFixedN1;
    return v;
  }
  if (name == "poam-no-ucd") {
    v.critic_uses_uncontrolled_data = false;
    return v;
  }
  if (name == "ippo-selfplay") {
    v.use_agent_modeling = false;
    v.sampling = teams::SamplingMode::kSelfplayFull;
    return v;
  }
  throw ConfigError("unknown variant: " + name);
}

void PpoHyper::validate() const {
  if (buffer_episodes <= 0 || epochs <= 0 || minibatches <= 0 || ed_epochs <= 0 ||
      ed_minibatches <= 0) {
    throw ConfigError("episode, epoch and minibatch counts must be positive");
  }
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("clip must lie in (0, 1)");
  if (!(entropy_coef >= 0.0) || !(gamma > 0.0 && gamma <= 1.0) ||
      !(lambda >= 0.0 && lambda <= 1.0) || !(lr > 0.0) || !(ed_lr > 0.0) ||
      !(max_grad_norm > 0.0)) {
    throw ConfigError("invalid PPO hyperparameter");
  }
  if (minibatches > buffer_episodes || ed_minibatches > buffer_episodes) {
    throw ConfigError("more minibatches than buffered episodes");
  }
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("NA"); }

void shuffle(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[std::size_t(rng.below(i))]);
  }
}

std::vector<std::vector<int>> chunks(const std::vector<int>& v, int parts) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(parts));
  const std::size_t n = v.size();
  for (int p = 0; p < parts; ++p) {
    const std::size_t lo = n * std::size_t(p) / std::size_t(parts);
    const std::size_t hi = n * std::size_t(p + 1) / std::size_t(parts);
    out[std::size_t(p)].assign(v.begin() + long(lo), v.begin() + long(hi));
  }
  return out;
}


template <typename T>
double clip_groups(nn::ParamStore<T>& store, double max_norm,
                   const std::vector<std::string>& groups) {
  double sq = 0.0;
  for (const auto& g : groups) {
    const double n = store.clip_grad_norm(max_norm, g);
    sq += n * n;
  }
  return std::sqrt(sq);
}

std::string describe(const std::vector<int>& episodes) {
  std::string s;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(episodes[i]);
  }
  return s;
}

}  // namespace

std::string metrics_csv_header() {
  return "iteration,env_steps,mean_return,ed_obs_mse,ed_act_nll,value_loss,actor_loss,entropy";
}

std::string metrics_csv_row(const IterationMetrics& m) {
  return std::to_string(m.iteration) + "," + std::to_string(m.env_steps) + "," +
         fmt(m.mean_return) + "," + fmt(m.ed_obs_mse) + "," + fmt(m.ed_act_nll) + "," +
         fmt(m.value_loss) + "," + fmt(m.actor_loss) + "," + fmt(m.entropy);
}

template <typename T>
Trainer<T>::Trainer(env::EnvFactory factory, std::vector<teams::PolicyHandle> uncontrolled,
                    TrainVariant variant, PpoHyper hyper, int width, int embed_dim,
                    std::uint64_t seed)
    : factory_(std::move(factory)),
      uncontrolled_(std::move(uncontrolled)),
      variant_(std::move(variant)),
      hyper_(hyper),
      seed_(seed) {
  hyper_.validate();
  spec_ = factory_()->spec();
  spec_.validate();
  if (uncontrolled_.empty() && variant_.sampling != teams::SamplingMode::kSelfplayFull) {
    throw ConfigError("ad hoc training needs at least one uncontrolled team");
  }
  NetConfig nc;
  nc.num_agents = spec_.num_agents;
  nc.obs_dim = spec_.obs_dim;
  nc.num_actions = spec_.num_actions;
  nc.width = width;
  nc.embed_dim = embed_dim;
  nc.agent_modeling = variant_.use_agent_modeling;
  nc.env_fingerprint = spec_.fingerprint();
  nets_ = std::make_shared<PoamNets<T>>(nc, seed);
  policy_ = network_handle<T>(nets_, variant_.name);
}

template <typename T>
teams::PolicyHandle Trainer<T>::snapshot(const std::string& id, bool greedy) const {
  return network_handle<T>(std::make_shared<const PoamNets<T>>(*nets_), id, greedy);
}

template <typename T>
env::EpisodeBatch Trainer<T>::collect() {
  const teams::SamplingScheme scheme{variant_.sampling};
  const int m = spec_.num_agents;
  const auto sampler = [&](std::size_t, Rng& rng) {
    return teams::sample_team(scheme, uncontrolled_, policy_, m, rng);
  };
  const std::uint64_t seed = Rng(seed_).split("rollout", std::uint64_t(iteration_)).next_u64();
  return env::run_episodes(factory_, sampler, hyper_.buffer_episodes, seed, hyper_.gamma);
}

template <typename T>
IterationMetrics Trainer<T>::iterate() {
  return update(collect());
}

template <typename T>
BufferStats Trainer<T>::buffer_stats(const env::EpisodeBatch& batch) const {
  const StepTable table(batch);
  std::vector<int> all(batch.size());
  std::iota(all.begin(), all.end(), 0);
  const auto refs = select_rows(batch, all, RowFilter::kAll);
  const SeqBatch<T> fb = build_seq_batch<T>(batch, refs);
  nn::Mat<T> emb;
  if (nets_->modeling()) emb = compute_embeddings(*nets_, fb);
  const PolicyOutputs out = evaluate_policy(*nets_, fb, nets_->modeling() ? &emb : nullptr, true);

  std::vector<double> targets(fb.size(), 0.0);
  std::vector<double> adv(fb.size(), 0.0);
  std::vector<std::uint8_t> mask(fb.size(), 0);
  for (int r = 0; r < fb.rows; ++r) {
    const int len = batch.episode(std::size_t(fb.refs[std::size_t(r)].episode)).length;
    std::vector<double> v(std::size_t(len) + 1, 0.0);
    std::vector<double> rew(static_cast<std::size_t>(len));
    std::vector<std::uint8_t> done(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t) {
      const std::size_t i = fb.index(t, r);
      v[std::size_t(t)] = out.value[i];
      rew[std::size_t(t)] = fb.reward[i];
      done[std::size_t(t)] = fb.done[i];
    }
    const auto tgt = td_lambda_targets(v, rew, done, hyper_.gamma, hyper_.lambda);
    for (int t = 0; t < len; ++t) {
      const std::size_t i = fb.index(t, r);
      targets[i] = tgt[std::size_t(t)];
      adv[i] = tgt[std::size_t(t)] - out.value[i];
      mask[i] = fb.controlled[std::size_t(r)];
    }
  }
  normalize_advantages(adv, mask);

  BufferStats s;
  const std::size_t full = table.size(batch.size());
  s.values.assign(full, 0.0);
  s.targets.assign(full, 0.0);
  s.advantages.assign(full, 0.0);
  s.old_logp.assign(full, 0.0);
  s.controlled_valid.assign(full, 0);
  table.scatter(s.values, fb, out.value);
  table.scatter(s.targets, fb, targets);
  table.scatter(s.advantages, fb, adv);
  table.scatter(s.old_logp, fb, out.logp);
  table.scatter(s.controlled_valid, fb, mask);
  return s;
}

template <typename T>
IterationMetrics Trainer<T>::update(const env::EpisodeBatch& batch) {
  auto& nets = *nets_;
  auto& store = nets.store();
  const StepTable table(batch);
  IterationMetrics m;
  m.iteration = iteration_ + 1;
  for (std::size_t e = 0; e < batch.size(); ++e) m.mean_return += env::episode_return(batch, e);
  m.mean_return /= double(std::max<std::size_t>(batch.size(), 1));

  std::vector<int> episodes(batch.size());
  std::iota(episodes.begin(), episodes.end(), 0);
  const std::vector<std::string> ed_groups = {kEncoderGroup, kObsDecoderGroup, kActDecoderGroup};

  const auto fail = [&](const NonFiniteError& err, const char* phase,
                        const std::vector<int>& mb) {
    throw NonFiniteError(std::string(err.what()) + " in " + phase + " at iteration " +
                             std::to_string(m.iteration) + ", minibatch episodes [" +
                             describe(mb) + "]",
                         err.where());
  };

  if (nets.modeling()) {
    Rng rng = Rng(seed_).split("ed", std::uint64_t(iteration_));
    double mse = 0.0, nll = 0.0, gnorm = 0.0;
    int updates = 0;
    for (int epoch = 0; epoch < hyper_.ed_epochs; ++epoch) {
      std::vector<int> order = episodes;
      shuffle(order, rng);
      for (const auto& mb : chunks(order, hyper_.ed_minibatches)) {
        const auto refs = select_rows(batch, mb, RowFilter::kControlled);
        const auto b = build_seq_batch<T>(batch, refs);
        try {
          store.zero_grad();
          const EdLoss ed = ed_loss(nets, b, b.all_rows_mask(), true);
          gnorm += clip_groups(store, hyper_.max_grad_norm, ed_groups);
          nn::adam_step(store, nn::AdamConfig{hyper_.ed_lr}, ed_groups);
          mse += ed.obs_mse;
          nll += ed.act_nll;
          ++updates;
        } catch (const NonFiniteError& err) {
          fail(err, "encoder-decoder update", mb);
        }
      }
    }
    m.ed_obs_mse = mse / updates;
    m.ed_act_nll = nll / updates;
    m.ed_grad_norm = gnorm / updates;
  }

  const BufferStats stats = buffer_stats(batch);
  const bool joint = hyper_.embedding_rl_grad && nets.modeling();
  std::vector<std::string> rl_groups = {kActorGroup, kCriticGroup};
  Rng rng = Rng(seed_).split("ppo", std::uint64_t(iteration_));
  int updates = 0;
  for (int epoch = 0; epoch < hyper_.epochs; ++epoch) {
    std::vector<int> order = episodes;
    shuffle(order, rng);
    for (const auto& mb : chunks(order, hyper_.minibatches)) {
      const auto ab = build_seq_batch<T>(batch, select_rows(batch, mb, RowFilter::kControlled));
      const auto cb = build_seq_batch<T>(
          batch, select_rows(batch, mb,
                             variant_.critic_uses_uncontrolled_data ? RowFilter::kAll
                                                                    : RowFilter::kControlled));
      const auto adv = table.gather(stats.advantages, ab);
      const auto old = table.gather(stats.old_logp, ab);
      const auto tgt = table.gather(stats.targets, cb);
      try {
        store.zero_grad();
        nn::Mat<T> a_emb, c_emb, a_demb, c_demb;
        typename nn::RecurrentNet<T>::Trace a_trace, c_trace;
        if (nets.modeling()) {
          a_emb = nets.encoder().forward(store, encoder_inputs(ab), ab.steps, ab.rows,
                                         joint ? &a_trace : nullptr);
          c_emb = nets.encoder().forward(store, encoder_inputs(cb), cb.steps, cb.rows,
                                         joint ? &c_trace : nullptr);
          a_demb = nn::Mat<T>::Zero(a_emb.rows(), a_emb.cols());
          c_demb = nn::Mat<T>::Zero(c_emb.rows(), c_emb.cols());
        }
        const nn::Mat<T>* ae = nets.modeling() ? &a_emb : nullptr;
        const nn::Mat<T>* ce = nets.modeling() ? &c_emb : nullptr;
        const ActorLoss al = actor_loss(nets, ab, ae, adv, old, ab.all_rows_mask(), hyper_.clip,
                                        hyper_.entropy_coef, true, joint ? &a_demb : nullptr);
        const ValueLoss vl = value_loss(nets, cb, ce, tgt, cb.all_rows_mask(), true,
                                        joint ? &c_demb : nullptr);
        if (joint) {
          nets.encoder().backward(store, a_trace, a_demb, nullptr);
          nets.encoder().backward(store, c_trace, c_demb, nullptr);
        }
        m.actor_grad_norm += store.clip_grad_norm(hyper_.max_grad_norm, kActorGroup);
        m.critic_grad_norm += store.clip_grad_norm(hyper_.max_grad_norm, kCriticGroup);
        auto groups = rl_groups;
        if (joint) {
          store.clip_grad_norm(hyper_.max_grad_norm, kEncoderGroup);
          groups.push_back(kEncoderGroup);
        }
        nn::adam_step(store, nn::AdamConfig{hyper_.lr}, groups);
        m.actor_loss += al.loss;
        m.entropy += al.entropy;
        m.value_loss += vl.loss;
        ++updates;
      } catch (const NonFiniteError& err) {
        fail(err, "actor-critic update", mb);
      }
    }
  }
  m.actor_loss /= updates;
  m.entropy /= updates;
  m.value_loss /= updates;
  m.actor_grad_norm /= updates;
  m.critic_grad_norm /= updates;

  ++iteration_;
  env_steps_ += batch.total_steps();
  m.env_steps = env_steps_;
  return m;
}

template <typename T>
std::vector<IterationMetrics> train(Trainer<T>& trainer, int iterations,
                                    const std::filesystem::path& metrics_csv,
                                    const std::filesystem::path& checkpoint_dir,
                                    int checkpoint_every) {
  std::vector<IterationMetrics> out;
  std::ofstream csv;
  if (!metrics_csv.empty()) {
    const bool fresh = !std::filesystem::exists(metrics_csv) ||
                       std::filesystem::file_size(metrics_csv) == 0;
    csv.open(metrics_csv, std::ios::app);
    if (!csv) throw ConfigError("cannot open metrics file " + metrics_csv.string());
    if (fresh) csv << metrics_csv_header() << "\n";
  }
  if (!checkpoint_dir.empty()) std::filesystem::create_directories(checkpoint_dir);
  for (int i = 0; i < iterations; ++i) {
    out.push_back(trainer.iterate());
    if (csv.is_open()) csv << metrics_csv_row(out.back()) << "\n" << std::flush;
    const bool last = i + 1 == iterations;
    if (!checkpoint_dir.empty() &&
        (last || (checkpoint_every > 0 && trainer.iteration() % checkpoint_every == 0))) {
      char name[32];
      std::snprintf(name, sizeof(name), "iter_%06d.ckpt", trainer.iteration());
      save_nets(checkpoint_dir / name, *trainer.nets(), trainer.variant().name);
    }
  }
  return out;
}

template class Trainer<float>;
template class Trainer<double>;
template std::vector<IterationMetrics> train<float>(Trainer<float>&, int,
                                                    const std::filesystem::path&,
                                                    const std::filesystem::path&, int);
template std::vector<IterationMetrics> train<double>(Trainer<double>&, int,
                                                     const std::filesystem::path&,
                                                     const std::filesystem::path&, int);

}  // namespace naht::poam
