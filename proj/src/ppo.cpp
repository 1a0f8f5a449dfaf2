#include "anasizer/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "anasizer/checkpoint.hpp"
#include "anasizer/reward.hpp"

namespace anasizer {

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid training config: " + what); };
    if (episodes < 0) fail("episodes must be positive");
    if (max_steps < 0) fail("max_steps must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must lie in (0, 1]");
    if (!(lambda > 0.0 && lambda <= 1.0)) fail("lambda must lie in (0, 1]");
    if (!(clip > 0.0 && clip < 1.0)) fail("clip must lie in (0, 1)");
    if (epochs <= 0) fail("epochs must be positive");
    if (minibatch <= 0) fail("minibatch must be positive");
    if (rollout_episodes <= 0) fail("rollout_episodes must be positive");
    if (eval_interval <= 0) fail("eval_interval must be positive");
    if (eval_goals < 0) fail("eval_goals must be non-negative");
    if (workers <= 0) fail("workers must be positive");
    if (!(lr > 0.0)) fail("lr must be positive");
    if (entropy_coef < 0.0 || value_coef < 0.0) fail("loss coefficients must be non-negative");
}

nlohmann::json to_json(const TrainConfig& c) {
    nlohmann::json j{{"episodes", c.episodes},
                     {"max_steps", c.max_steps},
                     {"gamma", c.gamma},
                     {"lambda", c.lambda},
                     {"clip", c.clip},
                     {"epochs", c.epochs},
                     {"minibatch", c.minibatch},
                     {"entropy_coef", c.entropy_coef},
                     {"entropy_decay", c.entropy_decay},
                     {"value_coef", c.value_coef},
                     {"lr", c.lr},
                     {"max_grad_norm", c.max_grad_norm},
                     {"seed", c.seed},
                     {"rollout_episodes", c.rollout_episodes},
                     {"eval_interval", c.eval_interval},
                     {"eval_goals", c.eval_goals},
                     {"workers", c.workers}};
    j["fidelity"] = c.fidelity ? nlohmann::json(std::string(to_string(*c.fidelity))) : nlohmann::json(nullptr);
    return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
    if (!j.is_object()) throw std::invalid_argument("training config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (key == "episodes") c.episodes = v.get<int>();
        else if (key == "max_steps") c.max_steps = v.get<int>();
        else if (key == "gamma") c.gamma = v.get<double>();
        else if (key == "lambda") c.lambda = v.get<double>();
        else if (key == "clip") c.clip = v.get<double>();
        else if (key == "epochs") c.epochs = v.get<int>();
        else if (key == "minibatch") c.minibatch = v.get<int>();
        else if (key == "entropy_coef") c.entropy_coef = v.get<double>();
        else if (key == "entropy_decay") c.entropy_decay = v.get<bool>();
        else if (key == "value_coef") c.value_coef = v.get<double>();
        else if (key == "lr") c.lr = v.get<double>();
        else if (key == "max_grad_norm") c.max_grad_norm = v.get<double>();
        else if (key == "seed") c.seed = v.get<std::uint64_t>();
        else if (key == "rollout_episodes") c.rollout_episodes = v.get<int>();
        else if (key == "eval_interval") c.eval_interval = v.get<int>();
        else if (key == "eval_goals") c.eval_goals = v.get<int>();
        else if (key == "workers") c.workers = v.get<int>();
        else if (key == "fidelity") {
            if (v.is_null()) c.fidelity.reset();
            else c.fidelity = parse_fidelity(v.get<std::string>());
        } else
            throw std::invalid_argument("unknown training config key '" + key + "'");
    }
    return c;
}

int default_episodes(const Benchmark& b) {
    if (b.name == "opamp2") return 35000;
    if (b.name == "rfpa") return 3500;
    return 5000;
}

Fidelity default_training_fidelity(const Benchmark& b) {
    return std::holds_alternative<RfPaConstants>(b.model.constants) ? Fidelity::Coarse : Fidelity::Fine;
}

CircuitEnv make_training_env(std::shared_ptr<const Benchmark> bench, const TrainConfig& cfg) {
    const Fidelity f = cfg.fidelity.value_or(default_training_fidelity(*bench));
    return CircuitEnv(bench, f, mix_seed(cfg.seed, "coarse-noise"), cfg.max_steps);
}

// ---------------------------------------------------------------------------

namespace {

RolloutEpisode run_episode(const Agent& agent, const CircuitEnv& env, const SpecVector& goal, std::uint64_t seed) {
    Rng rng(seed);
    RolloutEpisode ep;
    ep.goal = goal;
    EnvState s = env.reset(goal);
    while (!s.done) {
        RolloutStep st;
        st.obs = agent.observe(s);
        const ActionMatrix am = sample_action(agent.policy_probs(st.obs), rng);
        st.action = am.action;
        st.log_prob = am.log_prob;
        st.value = agent.value_estimate(st.obs);
        StepResult r = env.step(s, am.action);
        st.reward = r.reward;
        st.done = r.done;
        st.next_specs = r.state.intermediate;
        st.next_params = r.state.graph.parameters();
        ep.episode_return += r.reward;
        if (!env.has_objective() && r.reward == kGoalReward) ep.success = true;
        ep.steps.push_back(std::move(st));
        s = std::move(r.state);
    }
    return ep;
}

}  // namespace

std::vector<RolloutEpisode> collect_rollouts(const Agent& agent, const CircuitEnv& env, int n_episodes, Rng& rng,
                                             int workers) {
    agent.check_benchmark(env.benchmark());
    std::vector<SpecVector> goals;
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < n_episodes; ++i) {
        goals.push_back(env.sample_goal(rng));
        seeds.push_back(rng.derive_seed());
    }
    std::vector<RolloutEpisode> out(static_cast<std::size_t>(n_episodes));
    auto work = [&](int first, int stride) {
        for (int i = first; i < n_episodes; i += stride)
            out[static_cast<std::size_t>(i)] = run_episode(agent, env, goals[static_cast<std::size_t>(i)],
                                                           seeds[static_cast<std::size_t>(i)]);
    };
    if (workers <= 1 || n_episodes <= 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    }
    return out;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, const std::vector<bool>& dones,
                      double bootstrap, double gamma, double lambda) {
    const std::size_t n = rewards.size();
    if (n == 0) throw std::invalid_argument("compute_gae: empty trajectory");
    if (values.size() != n || dones.size() != n) throw std::invalid_argument("compute_gae: length mismatch");
    GaeResult g;
    g.advantages.assign(n, 0.0);
    g.targets.assign(n, 0.0);
    double acc = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const double next_v = t + 1 < n ? values[t + 1] : bootstrap;
        const double live = dones[t] ? 0.0 : 1.0;
        const double delta = rewards[t] + gamma * next_v * live - values[t];
        acc = delta + gamma * lambda * live * acc;
        g.advantages[t] = acc;
        g.targets[t] = acc + values[t];
    }
    return g;
}

GaeResult compute_gae(const RolloutEpisode& ep, double gamma, double lambda) {
    std::vector<double> r, v;
    std::vector<bool> d;
    for (const auto& s : ep.steps) {
        r.push_back(s.reward);
        v.push_back(s.value);
        d.push_back(s.done);
    }
    return compute_gae(r, v, d, 0.0, gamma, lambda);
}

void normalize_advantages(std::vector<double>& a) {
    if (a.empty()) return;
    const double n = static_cast<double>(a.size());
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double var = 0.0;
    for (double x : a) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / n);
    for (double& x : a) x = sd > 0.0 ? (x - mean) / sd : 0.0;
}

double clipped_surrogate(double ratio, double advantage, double clip) {
    return std::min(ratio * advantage, std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage);
}

PpoLoss ppo_loss(const Agent& agent, std::span<const ad::Tensor> policy_params,
                 std::span<const ad::Tensor> value_params, std::span<const Sample> batch, double clip,
                 double value_coef, double entropy_coef) {
    if (batch.empty()) throw std::invalid_argument("ppo_loss: empty batch");
    std::vector<ad::Tensor> surr, vl, ent;
    surr.reserve(batch.size());
    for (const Sample& s : batch) {
        const ad::Tensor logits = agent.policy().forward(*s.obs, policy_params);
        const ad::Tensor logp_all = ad::row_log_softmax(logits);
        std::vector<int> cols(s.action->size());
        std::transform(s.action->begin(), s.action->end(), cols.begin(), step_to_column);
        const ad::Tensor logp = ad::sum(ad::pick(logp_all, cols));
        const ad::Tensor ratio = ad::exp(ad::add_scalar(logp, -s.old_log_prob));
        const ad::Tensor unclipped = ad::scale(ratio, s.advantage);
        const ad::Tensor clipped = ad::scale(ad::clamp(ratio, 1.0 - clip, 1.0 + clip), s.advantage);
        surr.push_back(ad::minimum(unclipped, clipped));
        ent.push_back(ad::scale(ad::sum(ad::mul(ad::exp(logp_all), logp_all)), -1.0));

        const ad::Tensor v = agent.value().forward(*s.obs, value_params);
        const ad::Tensor diff = ad::add_scalar(v, -s.target);
        vl.push_back(ad::mul(diff, diff));
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    PpoLoss out;
    out.policy = ad::scale(ad::sum(ad::concat_rows(surr)), -inv);
    out.value = ad::scale(ad::sum(ad::concat_rows(vl)), inv);
    out.entropy = ad::scale(ad::sum(ad::concat_rows(ent)), inv);
    out.total = ad::add(ad::add(out.policy, ad::scale(out.value, value_coef)), ad::scale(out.entropy, -entropy_coef));
    return out;
}

UpdateStats ppo_update(Agent& agent, std::span<const Sample> batch, const TrainConfig& cfg, double entropy_coef,
                       Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("ppo_update: empty batch");
    UpdateStats stats;
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t mb = static_cast<std::size_t>(cfg.minibatch);
    std::vector<Matrix*> refs = agent.parameter_refs();
    std::vector<Matrix> grads(refs.size());
    agent.optimizer().set_lr(cfg.lr);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        for (std::size_t start = 0; start < order.size(); start += mb) {
            std::vector<Sample> part;
            for (std::size_t k = start; k < std::min(order.size(), start + mb); ++k) part.push_back(batch[order[k]]);
            const auto pp = agent.policy().bind(true);
            const auto vp = agent.value().bind(true);
            PpoLoss loss = ppo_loss(agent, pp, vp, part, cfg.clip, cfg.value_coef, entropy_coef);
            const double total = loss.total.item();
            if (!std::isfinite(total)) {
                std::ostringstream os;
                os << "non-finite PPO loss at epoch " << epoch << ", minibatch starting " << start
                   << ": policy=" << loss.policy.item() << " value=" << loss.value.item()
                   << " entropy=" << loss.entropy.item() << " (adam step " << agent.optimizer().steps() << ")";
                throw NonFiniteLoss(os.str());
            }
            ad::backward(loss.total);

            // Policy and value are separate networks; each gets its own norm clip.
            std::size_t k = 0;
            for (const auto* set : {&pp, &vp}) {
                const std::size_t first = k;
                double sq = 0.0;
                for (const auto& t : *set) {
                    grads[k] = t.grad().size() ? t.grad() : Matrix::Zero(t.value().rows(), t.value().cols());
                    sq += grads[k].squaredNorm();
                    ++k;
                }
                const double norm = std::sqrt(sq);
                if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm)
                    for (std::size_t i = first; i < k; ++i) grads[i] *= cfg.max_grad_norm / norm;
            }
            agent.optimizer().step(refs, grads);

            stats.policy_loss += loss.policy.item();
            stats.value_loss += loss.value.item();
            stats.entropy += loss.entropy.item();
            ++stats.minibatches;
        }
    }
    agent.refresh();
    if (stats.minibatches > 0) {
        stats.policy_loss /= stats.minibatches;
        stats.value_loss /= stats.minibatches;
        stats.entropy /= stats.minibatches;
    }
    return stats;
}

std::string curves_csv(std::span<const CurvePoint> curve) {
    std::ostringstream os;
    os.precision(17);
    os << "episode,mean_reward,mean_length,deploy_accuracy\n";
    for (const auto& p : curve)
        os << p.episode << ',' << p.mean_reward << ',' << p.mean_length << ',' << p.deploy_accuracy << '\n';
    return os.str();
}

TrainResult train(Agent& agent, const CircuitEnv& env, const TrainConfig& cfg, const CurveCallback& on_point,
                  const BatchCallback& on_batch) {
    cfg.validate();
    agent.check_benchmark(env.benchmark());
    const int total = cfg.episodes > 0 ? cfg.episodes : default_episodes(env.benchmark());

    Rng goal_rng = Rng::stream(cfg.seed, "goals");
    Rng batch_rng = Rng::stream(cfg.seed, "minibatch");
    Rng eval_rng = Rng::stream(cfg.seed, "eval-goals");
    std::vector<SpecVector> eval_goals;
    for (int i = 0; i < cfg.eval_goals; ++i) eval_goals.push_back(env.sample_goal(eval_rng));

    TrainResult result;
    int done_episodes = 0;
    int next_eval = cfg.eval_interval;
    double reward_sum = 0.0, length_sum = 0.0;
    int window = 0;

    while (done_episodes < total) {
        const int n = std::min(cfg.rollout_episodes, total - done_episodes);
        const auto episodes = collect_rollouts(agent, env, n, goal_rng, cfg.workers);
        if (on_batch) on_batch(episodes);

        std::vector<Sample> batch;
        std::vector<double> adv;
        for (const auto& ep : episodes) {
            const GaeResult g = compute_gae(ep, cfg.gamma, cfg.lambda);
            for (std::size_t t = 0; t < ep.steps.size(); ++t) {
                const auto& st = ep.steps[t];
                batch.push_back({&st.obs, &st.action, st.log_prob, 0.0, g.targets[t]});
                adv.push_back(g.advantages[t]);
            }
            reward_sum += ep.episode_return;
            length_sum += static_cast<double>(ep.steps.size());
            ++window;
        }
        normalize_advantages(adv);
        for (std::size_t i = 0; i < batch.size(); ++i) batch[i].advantage = adv[i];

        const double progress = static_cast<double>(done_episodes) / total;
        const double c_e = cfg.entropy_decay ? cfg.entropy_coef * (1.0 - progress) : cfg.entropy_coef;
        ppo_update(agent, batch, cfg, c_e, batch_rng);
        done_episodes += n;

        if (done_episodes >= next_eval || done_episodes == total) {
            CurvePoint p;
            p.episode = done_episodes;
            p.mean_reward = window > 0 ? reward_sum / window : 0.0;
            p.mean_length = window > 0 ? length_sum / window : 0.0;
            if (!eval_goals.empty()) p.deploy_accuracy = measure_accuracy(agent, env, eval_goals).accuracy;
            result.curve.push_back(p);
            if (p.deploy_accuracy > result.best_accuracy) {
                result.best_accuracy = p.deploy_accuracy;
                result.best_episode = p.episode;
                result.best_checkpoint = checkpoint_to_json(agent);
            }
            if (on_point) on_point(p);
            reward_sum = length_sum = 0.0;
            window = 0;
            while (next_eval <= done_episodes) next_eval += cfg.eval_interval;
        }
    }
    return result;
}

}  // namespace anasizer
