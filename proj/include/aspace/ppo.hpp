#pragma once

// Proximal policy optimization with generalized advantage estimation.
//
// Policy: a = tanh(u), u ~ N(mu(obs), diag(exp(log_std))^2), with mu from a
// tanh MLP and a state-independent log-std clamped to [-5, 2]. The buffer
// stores u, so the squash correction is a constant of the parameters and
// log-probabilities can be rescored exactly.

#include <atomic>
#include <functional>
#include <thread>

#include <json.hpp>

#include "aspace/mlp.hpp"
#include "aspace/tasks.hpp"

namespace aspace {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct PPOConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  int epochs = 10;
  int minibatch = 512;
  double lr = 3e-4;
  double ent_coef = 0.0;
  double vf_coef = 0.5;
  double max_grad_norm = 0.5;
  long total_steps = 200000;  // policy steps summed over environments
  int n_envs = 16;
  int n_steps = 128;  // per environment per iteration
  std::vector<int> hidden{64, 64};
  double init_log_std = -0.5;
  double obs_clip = 10.0;
  int workers = 1;  // rollout threads
  bool normalize_reward = true;  // divide rewards by the running std of the discounted return

  void validate() const {
    if (!(gamma >= 0 && gamma <= 1) || !(gae_lambda >= 0 && gae_lambda <= 1)) {
      throw std::invalid_argument("gamma and gae_lambda must be in [0, 1]");
    }
    if (!(clip > 0)) throw std::invalid_argument("clip must be > 0");
    if (epochs < 1 || minibatch < 1 || n_envs < 1 || n_steps < 1 || workers < 1) {
      throw std::invalid_argument("epochs, minibatch, n_envs, n_steps, workers must be >= 1");
    }
    if (!(lr >= 0)) throw std::invalid_argument("lr must be >= 0");
    if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
    if (hidden.empty()) throw std::invalid_argument("at least one hidden layer required");
  }
};

inline PPOConfig ppo_from_json(const nlohmann::json& j, PPOConfig c = {}) {
  c.gamma = j.value("gamma", c.gamma);
  c.gae_lambda = j.value("gae_lambda", c.gae_lambda);
  c.clip = j.value("clip", c.clip);
  c.epochs = j.value("epochs", c.epochs);
  c.minibatch = j.value("minibatch", c.minibatch);
  c.lr = j.value("lr", c.lr);
  c.ent_coef = j.value("ent_coef", c.ent_coef);
  c.vf_coef = j.value("vf_coef", c.vf_coef);
  c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
  c.total_steps = j.value("total_steps", c.total_steps);
  c.n_envs = j.value("n_envs", c.n_envs);
  c.n_steps = j.value("n_steps", c.n_steps);
  c.hidden = j.value("hidden", c.hidden);
  c.init_log_std = j.value("init_log_std", c.init_log_std);
  c.obs_clip = j.value("obs_clip", c.obs_clip);
  c.workers = j.value("workers", c.workers);
  c.normalize_reward = j.value("normalize_reward", c.normalize_reward);
  c.validate();
  return c;
}

inline nlohmann::json to_json(const PPOConfig& c) {
  return {{"gamma", c.gamma},       {"gae_lambda", c.gae_lambda},
          {"clip", c.clip},         {"epochs", c.epochs},
          {"minibatch", c.minibatch}, {"lr", c.lr},
          {"ent_coef", c.ent_coef}, {"vf_coef", c.vf_coef},
          {"max_grad_norm", c.max_grad_norm}, {"total_steps", c.total_steps},
          {"n_envs", c.n_envs},     {"n_steps", c.n_steps},
          {"hidden", c.hidden},     {"init_log_std", c.init_log_std},
          {"obs_clip", c.obs_clip}, {"workers", c.workers},
          {"normalize_reward", c.normalize_reward}};
}

// ---------------------------------------------------------------------------
// GAE
// ---------------------------------------------------------------------------

struct Advantages {
  Vec adv;
  Vec ret;
};

/// `values` has one more entry than `rewards`: values[T] bootstraps the
/// last step. dones[t] cuts the recursion after step t.
inline Advantages gae(const Vec& rewards, const Vec& values, const std::vector<bool>& dones,
                      double gamma, double lambda) {
  const auto T = rewards.size();
  if (values.size() != T + 1 || static_cast<Eigen::Index>(dones.size()) != T) {
    throw DimensionError("gae: need T rewards, T dones, T + 1 values");
  }
  Advantages out{Vec(T), Vec(T)};
  double next = 0.0;
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * values[t + 1] * live - values[t];
    next = delta + gamma * lambda * live * next;
    out.adv[t] = next;
  }
  out.ret = out.adv + values.head(T);
  return out;
}

/// Zero mean, unit (population) standard deviation.
inline Vec normalize_advantages(const Vec& a) {
  const double m = a.mean();
  const double sd = std::sqrt((a.array() - m).square().mean());
  return (a.array() - m) / (sd + 1e-12);
}

// ---------------------------------------------------------------------------
// Observation normalizer
// ---------------------------------------------------------------------------

struct Normalizer {
  Vec mean, var;
  double count = 0.0;
  double clip = 10.0;

  static Normalizer make(int dim, double clip = 10.0) {
    return Normalizer{Vec::Zero(dim), Vec::Ones(dim), 0.0, clip};
  }

  /// Parallel-variance merge of a batch (columns are samples).
  void update(const Mat& batch) {
    if (batch.cols() == 0) return;
    const double n = static_cast<double>(batch.cols());
    const Vec bm = batch.rowwise().mean();
    const Vec bv = (batch.colwise() - bm).array().square().rowwise().mean();
    const double total = count + n;
    const Vec delta = bm - mean;
    const Vec m2 = var * count + bv * n + delta.cwiseProduct(delta) * count * n / total;
    mean += delta * n / total;
    var = m2 / total;
    count = total;
  }

  Mat apply(const Mat& x) const {
    Mat out = (x.colwise() - mean).array().colwise() / (var.array() + 1e-8).sqrt();
    return out.cwiseMax(-clip).cwiseMin(clip);
  }
};

/// Running variance of the per-environment discounted return. Rewards are
/// divided by its standard deviation so the critic's targets stay O(1)
/// whatever the reward weights.
struct ReturnScaler {
  double mean = 0.0, var = 1.0, count = 0.0;

  double scale() const { return count > 0 ? 1.0 / std::sqrt(var + 1e-8) : 1.0; }

  void update(const std::vector<double>& xs) {
    if (xs.empty()) return;
    const double n = static_cast<double>(xs.size());
    double bm = 0.0;
    for (double x : xs) bm += x;
    bm /= n;
    double bv = 0.0;
    for (double x : xs) bv += (x - bm) * (x - bm);
    bv /= n;
    const double total = count + n;
    const double delta = bm - mean;
    var = (var * count + bv * n + delta * delta * count * n / total) / total;
    mean += delta * n / total;
    count = total;
  }
};

// ---------------------------------------------------------------------------
// Policy
// ---------------------------------------------------------------------------

struct PolicyParams {
  Mlp pi;
  Vec log_std;
  Mlp vf;

  int num_params() const {
    return pi.num_params() + static_cast<int>(log_std.size()) + vf.num_params();
  }
  Vec flatten() const {
    Vec out(num_params());
    int o = pi.flatten_into(out, 0);
    out.segment(o, log_std.size()) = log_std;
    o += static_cast<int>(log_std.size());
    vf.flatten_into(out, o);
    return out;
  }
  void assign(const Vec& v) {
    int o = pi.assign_from(v, 0);
    log_std = v.segment(o, log_std.size());
    o += static_cast<int>(log_std.size());
    vf.assign_from(v, o);
  }
  PolicyParams zeros_like() const {
    return PolicyParams{pi.zeros_like(), Vec::Zero(log_std.size()), vf.zeros_like()};
  }
};

inline double clamped_log_std(double s) { return std::clamp(s, kLogStdMin, kLogStdMax); }

/// log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)).
inline double squash_log_det(double u) {
  const double x = -2.0 * u;
  const double softplus = x > 30.0 ? x : std::log1p(std::exp(x));
  return 2.0 * (std::log(2.0) - u - softplus);
}

/// log pi(a) for a = tanh(u) under N(mu, exp(log_std)^2).
inline double squashed_log_prob(const Vec& u, const Vec& mu, const Vec& log_std) {
  double lp = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const double ls = clamped_log_std(log_std[j]);
    const double z = (u[j] - mu[j]) * std::exp(-ls);
    lp += -0.5 * z * z - ls - 0.5 * std::log(2.0 * kPi);
    lp -= squash_log_det(u[j]);
  }
  return lp;
}

struct Sample {
  Vec u, a;
  double log_prob = 0.0;
  double value = 0.0;
};

struct Policy {
  PolicyParams params;
  Normalizer norm;

  template <class Rng>
  static Policy make(int obs_dim, int act_dim, const PPOConfig& cfg, Rng& rng) {
    Policy p;
    p.params.pi = Mlp::make(obs_dim, cfg.hidden, act_dim, rng, 0.01);
    p.params.log_std = Vec::Constant(act_dim, cfg.init_log_std);
    p.params.vf = Mlp::make(obs_dim, cfg.hidden, 1, rng, 1.0);
    p.norm = Normalizer::make(obs_dim, cfg.obs_clip);
    return p;
  }

  int obs_dim() const { return params.pi.in_dim(); }
  int act_dim() const { return params.pi.out_dim(); }

  Vec normalized(const Vec& obs) const { return norm.apply(obs); }

  /// Deterministic action tanh(mu).
  Vec act(const Vec& obs) const {
    return params.pi.forward(normalized(obs)).col(0).array().tanh();
  }

  double value(const Vec& obs) const { return params.vf.forward(normalized(obs))(0, 0); }

  template <class Rng>
  Sample sample(const Vec& obs, Rng& rng) const {
    const Vec x = normalized(obs);
    const Vec mu = params.pi.forward(x).col(0);
    std::normal_distribution<double> n01(0.0, 1.0);
    Sample s;
    s.u.resize(mu.size());
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      s.u[j] = mu[j] + std::exp(clamped_log_std(params.log_std[j])) * n01(rng);
    }
    s.a = s.u.array().tanh();
    s.log_prob = squashed_log_prob(s.u, mu, params.log_std);
    s.value = params.vf.forward(x)(0, 0);
    return s;
  }

  double log_prob(const Vec& obs, const Vec& u) const {
    const Vec mu = params.pi.forward(normalized(obs)).col(0);
    return squashed_log_prob(u, mu, params.log_std);
  }
};

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

struct Batch {
  Mat obs;  // normalized, obs_dim x B
  Mat u;    // pre-squash actions, act_dim x B
  Vec old_log_prob, adv, ret;

  Eigen::Index size() const { return obs.cols(); }
};

class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LossInfo {
  double loss = 0, policy = 0, value = 0, entropy = 0;
  double approx_kl = 0, clip_fraction = 0;
};

/// d(-min(r A, clip(r) A))/dr for one sample.
inline double surrogate_grad_ratio(double ratio, double adv, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return ratio * adv <= clipped * adv ? -adv : 0.0;
}

/// Clipped surrogate + value MSE - entropy bonus, with gradients.
inline LossInfo ppo_loss(const PolicyParams& p, const Batch& b, const PPOConfig& cfg,
                         PolicyParams* grad) {
  const Eigen::Index B = b.size();
  if (B == 0) throw std::invalid_argument("ppo_loss: empty batch");
  const int m = p.pi.out_dim();
  Mlp::Cache pc, vc;
  const Mat mu = p.pi.forward(b.obs, &pc);
  const Mat v = p.vf.forward(b.obs, &vc);

  Vec ls(m), inv_sigma(m);
  for (int j = 0; j < m; ++j) {
    ls[j] = clamped_log_std(p.log_std[j]);
    inv_sigma[j] = std::exp(-ls[j]);
  }
  const Mat z = (b.u - mu).array().colwise() * inv_sigma.array();
  Vec log_prob(B);
  const double log_norm = ls.sum() + 0.5 * m * std::log(2.0 * kPi);
  for (Eigen::Index i = 0; i < B; ++i) {
    double corr = 0.0;
    for (int j = 0; j < m; ++j) corr += squash_log_det(b.u(j, i));
    log_prob[i] = -0.5 * z.col(i).squaredNorm() - log_norm - corr;
  }

  LossInfo info;
  Mat d_mu = Mat::Zero(m, B);
  Vec d_ls = Vec::Zero(m);
  double pol = 0.0, kl = 0.0;
  long clipped = 0;
  for (Eigen::Index i = 0; i < B; ++i) {
    const double ratio = std::exp(log_prob[i] - b.old_log_prob[i]);
    const double a = b.adv[i];
    const double c = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    pol += -std::min(ratio * a, c * a);
    clipped += std::abs(ratio - 1.0) > cfg.clip;
    kl += b.old_log_prob[i] - log_prob[i];
    const double d_lp = surrogate_grad_ratio(ratio, a, cfg.clip) * ratio / static_cast<double>(B);
    d_mu.col(i) = d_lp * z.col(i).cwiseProduct(inv_sigma);
    d_ls += d_lp * (z.col(i).array().square() - 1.0).matrix();
  }
  info.policy = pol / static_cast<double>(B);
  info.approx_kl = kl / static_cast<double>(B);
  info.clip_fraction = static_cast<double>(clipped) / static_cast<double>(B);
  info.entropy = ls.sum() + 0.5 * m * std::log(2.0 * kPi * std::exp(1.0));
  const Vec err = v.row(0).transpose() - b.ret;
  info.value = err.squaredNorm() / static_cast<double>(B);
  info.loss = info.policy + cfg.vf_coef * info.value - cfg.ent_coef * info.entropy;
  if (!std::isfinite(info.loss)) throw NonFiniteLoss("ppo_loss: non-finite loss");

  if (grad) {
    *grad = p.zeros_like();
    p.pi.backward(pc, d_mu, grad->pi);
    for (int j = 0; j < m; ++j) {
      const bool free = p.log_std[j] > kLogStdMin && p.log_std[j] < kLogStdMax;
      grad->log_std[j] = free ? d_ls[j] - cfg.ent_coef : 0.0;
    }
    const Mat d_v = (2.0 * cfg.vf_coef / static_cast<double>(B)) * err.transpose();
    p.vf.backward(vc, d_v, grad->vf);
  }
  return info;
}

/// Rescales the actor (pi, log_std) and critic gradients independently so
/// each has norm <= max_norm; a large value loss cannot drown the actor.
inline void clip_gradients(PolicyParams& g, double max_norm) {
  if (!(max_norm > 0)) return;
  PolicyParams actor = g;
  actor.vf = g.vf.zeros_like();
  const double an = actor.flatten().norm();
  if (an > max_norm) {
    const double s = max_norm / an;
    for (auto& w : g.pi.W) w *= s;
    for (auto& b : g.pi.b) b *= s;
    g.log_std *= s;
  }
  Vec vf(g.vf.num_params());
  g.vf.flatten_into(vf, 0);
  const double vn = vf.norm();
  if (vn > max_norm) {
    const double s = max_norm / vn;
    for (auto& w : g.vf.W) w *= s;
    for (auto& b : g.vf.b) b *= s;
  }
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct Adam {
  double lr = 3e-4, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Vec m, v;
  long t = 0;

  /// In-place step; returns the applied update.
  Vec step(Vec& params, const Vec& grad) {
    if (m.size() != params.size()) {
      m = Vec::Zero(params.size());
      v = Vec::Zero(params.size());
    }
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    const Vec upd = -lr * (m / c1).array() / ((v / c2).array().sqrt() + eps);
    params += upd;
    return upd;
  }
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

struct CurvePoint {
  int iteration = 0;
  long env_steps = 0;
  double mean_er = 0.0;     // mean undiscounted return of episodes finished this iteration
  double success = 0.0;     // fraction of those episodes ending inside eps
  double distance = 0.0;    // mean final distance of those episodes
  int episodes = 0;
  double policy_loss = 0, value_loss = 0, approx_kl = 0;
};

struct TrainResult {
  Policy last;
  Policy best;
  double best_er = -std::numeric_limits<double>::infinity();
  std::vector<CurvePoint> curve;
};

using EnvFactory = std::function<TaskEnv(int env_index)>;

/// PPO over `cfg.n_envs` environments. Rollouts run on `cfg.workers`
/// threads with one RNG stream per environment, so results do not depend
/// on the thread count. Env needs obs_dim(), act_dim(), reset(seed),
/// step(a) -> EnvStep, distance() and success_radius().
template <class Env>
TrainResult train_envs(const std::function<Env(int)>& make_env, const PPOConfig& cfg,
                       std::uint64_t seed,
                       const std::function<void(const CurvePoint&)>& progress = {}) {
  cfg.validate();
  std::vector<Env> envs;
  for (int i = 0; i < cfg.n_envs; ++i) envs.push_back(make_env(i));
  const int obs_dim = envs.front().obs_dim();
  const int act_dim = envs.front().act_dim();

  std::mt19937_64 init_rng(mix_seed(seed, 0xA11CE));
  TrainResult res;
  Policy policy = Policy::make(obs_dim, act_dim, cfg, init_rng);
  Adam adam;
  adam.lr = cfg.lr;
  std::mt19937_64 shuffle_rng(mix_seed(seed, 0x5EED));

  struct EnvSlot {
    std::mt19937_64 rng;
    Vec obs;
    long episode = 0;
    double ret = 0.0;
    double disc_ret = 0.0;  // discounted return feeding the reward scaler
  };
  std::vector<EnvSlot> slots(cfg.n_envs);
  for (int i = 0; i < cfg.n_envs; ++i) {
    slots[i].rng.seed(mix_seed(seed, 0xAC7, i));
    slots[i].obs = envs[i].reset(mix_seed(seed, i, 0));
  }

  ReturnScaler ret_scaler;
  const int T = cfg.n_steps;
  const long per_iter = static_cast<long>(T) * cfg.n_envs;
  const int iterations = static_cast<int>(std::max(1L, cfg.total_steps / per_iter));
  long env_steps = 0;

  for (int it = 0; it < iterations; ++it) {
    // per-env buffers
    std::vector<Mat> obs_raw(cfg.n_envs, Mat(obs_dim, T));
    std::vector<Mat> obs_n(cfg.n_envs, Mat(obs_dim, T));
    std::vector<Mat> us(cfg.n_envs, Mat(act_dim, T));
    std::vector<Vec> logp(cfg.n_envs, Vec(T)), rew(cfg.n_envs, Vec(T)), val(cfg.n_envs, Vec(T + 1));
    std::vector<std::vector<bool>> done(cfg.n_envs, std::vector<bool>(T));
    std::vector<std::vector<std::pair<double, double>>> finished(cfg.n_envs);  // (return, distance)
    std::vector<std::exception_ptr> errors(cfg.n_envs);
    std::vector<std::vector<double>> disc(cfg.n_envs);
    const double rscale = cfg.normalize_reward ? ret_scaler.scale() : 1.0;

    auto collect = [&](int i) {
      try {
        EnvSlot& s = slots[i];
        Env& env = envs[i];
        for (int t = 0; t < T; ++t) {
          const Sample smp = policy.sample(s.obs, s.rng);
          obs_raw[i].col(t) = s.obs;
          obs_n[i].col(t) = policy.normalized(s.obs);
          us[i].col(t) = smp.u;
          logp[i][t] = smp.log_prob;
          val[i][t] = smp.value;
          const EnvStep st = env.step(smp.a);
          double r = st.reward * rscale;
          s.ret += st.reward;
          s.disc_ret = cfg.gamma * s.disc_ret + st.reward;
          disc[i].push_back(s.disc_ret);
          if (st.done) {
            // time limit: bootstrap from the final observation
            r += cfg.gamma * policy.value(st.obs);
            finished[i].emplace_back(s.ret, env.distance());
            s.ret = 0.0;
            s.disc_ret = 0.0;
            ++s.episode;
            s.obs = env.reset(mix_seed(seed, i, static_cast<std::uint64_t>(s.episode)));
          } else {
            s.obs = st.obs;
          }
          rew[i][t] = r;
          done[i][t] = st.done;
        }
        val[i][T] = policy.value(s.obs);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    };

    if (cfg.workers <= 1) {
      for (int i = 0; i < cfg.n_envs; ++i) collect(i);
    } else {
      std::atomic<int> next{0};
      std::vector<std::thread> pool;
      for (int w = 0; w < std::min(cfg.workers, cfg.n_envs); ++w) {
        pool.emplace_back([&] {
          for (int i = next++; i < cfg.n_envs; i = next++) collect(i);
        });
      }
      for (auto& th : pool) th.join();
    }
    for (int i = 0; i < cfg.n_envs; ++i) {
      if (errors[i]) {
        try {
          std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
          throw std::runtime_error("environment " + std::to_string(i) + ", iteration " +
                                   std::to_string(it) + ": " + e.what());
        }
      }
    }
    env_steps += per_iter;

    // assemble the batch
    const Eigen::Index N = per_iter;
    Batch all{Mat(obs_dim, N), Mat(act_dim, N), Vec(N), Vec(N), Vec(N)};
    Mat raw(obs_dim, N);
    for (int i = 0; i < cfg.n_envs; ++i) {
      const Advantages a = gae(rew[i], val[i], done[i], cfg.gamma, cfg.gae_lambda);
      const Eigen::Index o = static_cast<Eigen::Index>(i) * T;
      all.obs.middleCols(o, T) = obs_n[i];
      all.u.middleCols(o, T) = us[i];
      all.old_log_prob.segment(o, T) = logp[i];
      all.adv.segment(o, T) = a.adv;
      all.ret.segment(o, T) = a.ret;
      raw.middleCols(o, T) = obs_raw[i];
    }

    LossInfo last_info;
    std::vector<Eigen::Index> idx(N);
    std::iota(idx.begin(), idx.end(), 0);
    const Eigen::Index mb = std::min<Eigen::Index>(cfg.minibatch, N);
    for (int ep = 0; ep < cfg.epochs; ++ep) {
      const Vec adv_n = normalize_advantages(all.adv);
      std::shuffle(idx.begin(), idx.end(), shuffle_rng);
      for (Eigen::Index start = 0; start + mb <= N; start += mb) {
        Batch b{Mat(obs_dim, mb), Mat(act_dim, mb), Vec(mb), Vec(mb), Vec(mb)};
        for (Eigen::Index k = 0; k < mb; ++k) {
          const Eigen::Index s = idx[start + k];
          b.obs.col(k) = all.obs.col(s);
          b.u.col(k) = all.u.col(s);
          b.old_log_prob[k] = all.old_log_prob[s];
          b.adv[k] = adv_n[s];
          b.ret[k] = all.ret[s];
        }
        PolicyParams g;
        last_info = ppo_loss(policy.params, b, cfg, &g);
        clip_gradients(g, cfg.max_grad_norm);
        const Vec gv = g.flatten();
        Vec pv = policy.params.flatten();
        adam.step(pv, gv);
        policy.params.assign(pv);
      }
    }
    policy.norm.update(raw);
    if (cfg.normalize_reward) {
      std::vector<double> all_disc;
      for (const auto& d : disc) all_disc.insert(all_disc.end(), d.begin(), d.end());
      ret_scaler.update(all_disc);
    }

    CurvePoint cp;
    cp.iteration = it;
    cp.env_steps = env_steps;
    double sum = 0.0, succ = 0.0, dist = 0.0;
    const double eps = envs.front().success_radius();
    for (const auto& f : finished) {
      for (const auto& [r, d] : f) {
        sum += r;
        succ += d < eps;
        dist += d;
        ++cp.episodes;
      }
    }
    cp.mean_er = cp.episodes ? sum / cp.episodes : std::numeric_limits<double>::quiet_NaN();
    cp.success = cp.episodes ? succ / cp.episodes : 0.0;
    cp.distance = cp.episodes ? dist / cp.episodes : std::numeric_limits<double>::quiet_NaN();
    cp.policy_loss = last_info.policy;
    cp.value_loss = last_info.value;
    cp.approx_kl = last_info.approx_kl;
    res.curve.push_back(cp);
    if (cp.episodes > 0 && cp.mean_er > res.best_er) {
      res.best_er = cp.mean_er;
      res.best = policy;
    }
    if (progress) progress(cp);
  }
  res.last = policy;
  if (!std::isfinite(res.best_er)) res.best = policy;
  return res;
}

inline TrainResult train(const EnvFactory& make_env, const PPOConfig& cfg, std::uint64_t seed,
                         const std::function<void(const CurvePoint&)>& progress = {}) {
  return train_envs<TaskEnv>(make_env, cfg, seed, progress);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline constexpr const char* kCheckpointFormat = "aspace.checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Policy policy;
  std::string kind;   // action space name
  std::string task;
  std::string robot;  // name or path it was loaded from
  std::uint64_t seed = 0;
  long env_steps = 0;
  double mean_er = 0.0;
  nlohmann::json extra = nlohmann::json::object();
};

inline nlohmann::json to_json(const Checkpoint& c) {
  const auto& p = c.policy;
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"kind", c.kind},
          {"task", c.task},
          {"robot", c.robot},
          {"seed", c.seed},
          {"env_steps", c.env_steps},
          {"mean_er", c.mean_er},
          {"widths", p.params.pi.hidden()},
          {"obs_dim", p.obs_dim()},
          {"act_dim", p.act_dim()},
          {"pi", to_json(p.params.pi)},
          {"log_std", detail::vec_json(p.params.log_std)},
          {"vf", to_json(p.params.vf)},
          {"normalizer",
           {{"mean", detail::vec_json(p.norm.mean)},
            {"var", detail::vec_json(p.norm.var)},
            {"count", p.norm.count},
            {"clip", p.norm.clip}}},
          {"extra", c.extra}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != kCheckpointFormat) {
    throw std::invalid_argument("not a checkpoint file");
  }
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw std::invalid_argument("unsupported checkpoint version");
  }
  Checkpoint c;
  c.kind = j.at("kind");
  c.task = j.at("task");
  c.robot = j.at("robot");
  c.seed = j.value("seed", std::uint64_t{0});
  c.env_steps = j.value("env_steps", 0L);
  c.mean_er = j.value("mean_er", 0.0);
  c.extra = j.value("extra", nlohmann::json::object());
  c.policy.params.pi = mlp_from_json(j.at("pi"));
  c.policy.params.log_std = detail::json_vec(j.at("log_std"));
  c.policy.params.vf = mlp_from_json(j.at("vf"));
  const auto& n = j.at("normalizer");
  c.policy.norm.mean = detail::json_vec(n.at("mean"));
  c.policy.norm.var = detail::json_vec(n.at("var"));
  c.policy.norm.count = n.at("count");
  c.policy.norm.clip = n.value("clip", 10.0);
  const int obs = c.policy.obs_dim(), act = c.policy.act_dim();
  if (c.policy.params.log_std.size() != act || c.policy.norm.mean.size() != obs ||
      c.policy.params.vf.in_dim() != obs || c.policy.params.vf.out_dim() != 1) {
    throw std::invalid_argument("checkpoint dimensions inconsistent");
  }
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(c).dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_json_file(path));
}

}  // namespace aspace
