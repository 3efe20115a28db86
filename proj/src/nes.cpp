#include "seforge/nes.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <memory>
#include <cmath>
#include <numeric>

#include "seforge/error.hpp"
#include "seforge/worker_pool.hpp"

namespace seforge {

std::string_view to_string(ScoreTransform t) {
  switch (t) {
    case ScoreTransform::BetterAverage:
      return "better_average";
    case ScoreTransform::RankLinear:
      return "rank_linear";
    case ScoreTransform::Raw:
      return "raw";
  }
  return "?";
}

ScoreTransform parse_score_transform(std::string_view name) {
  if (name == "better_average" || name == "better avg." || name == "better_avg") return ScoreTransform::BetterAverage;
  if (name == "rank_linear" || name == "rank") return ScoreTransform::RankLinear;
  if (name == "raw" || name == "linear") return ScoreTransform::Raw;
  throw ConfigError("unknown score transformation '" + std::string(name) + "'");
}

void NesConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("nes: step size must be > 0");
  if (!(sigma > 0.0)) throw ConfigError("nes: std. dev. must be > 0");
  if (population_size < 2) throw ConfigError("nes: population size must be >= 2");
  if (mirrored && population_size % 2 != 0) throw ConfigError("nes: mirrored sampling needs an even population");
  if (solved_streak == 0) throw ConfigError("nes: solved_streak must be >= 1");
}

NesConfig cartpole_nes_config() {
  NesConfig cfg;
  cfg.alpha = 0.148;
  cfg.sigma = 0.0124;
  return cfg;
}

NesConfig acrobot_nes_config() {
  NesConfig cfg;
  cfg.alpha = 0.727;
  cfg.sigma = 0.0114;
  return cfg;
}

std::vector<FlatParams> sample_noises(const NesConfig& cfg, std::size_t dim, Rng& rng) {
  cfg.validate();
  const std::size_t n = cfg.population_size;
  const std::size_t independent = cfg.mirrored ? n / 2 : n;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<FlatParams> noises;
  noises.reserve(n);
  for (std::size_t i = 0; i < independent; ++i) {
    FlatParams e(dim);
    for (double& v : e.values) v = normal(rng);
    noises.push_back(std::move(e));
  }
  if (cfg.mirrored) {
    for (std::size_t i = 0; i < independent; ++i) {
      FlatParams e(dim);
      for (std::size_t j = 0; j < dim; ++j) e[j] = -noises[i][j];
      noises.push_back(std::move(e));
    }
  }
  return noises;
}

std::vector<double> transform_scores(std::span<const double> raw, ScoreTransform transform) {
  const std::size_t n = raw.size();
  if (n < 2) throw ShapeError("transform_scores: need at least two scores");
  std::vector<double> out(n, 0.0);
  switch (transform) {
    case ScoreTransform::BetterAverage: {
      const double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / static_cast<double>(n);
      const double max = *std::max_element(raw.begin(), raw.end());
      if (!(max > mean)) return out;
      for (std::size_t i = 0; i < n; ++i) {
        if (raw[i] > mean) out[i] = std::min(1.0, (raw[i] - mean) / (max - mean));
      }
      return out;
    }
    case ScoreTransform::RankLinear: {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
      for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && raw[order[j + 1]] == raw[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) / static_cast<double>(n - 1);
        for (std::size_t k = i; k <= j; ++k) out[order[k]] = rank;
        i = j + 1;
      }
      return out;
    }
    case ScoreTransform::Raw: {
      const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
      if (!(*hi > *lo)) return out;
      for (std::size_t i = 0; i < n; ++i) out[i] = (raw[i] - *lo) / (*hi - *lo);
      return out;
    }
  }
  return out;
}

FlatParams update_se(const FlatParams& psi, std::span<const FlatParams> noises, std::span<const double> weights,
                     const NesConfig& cfg) {
  if (noises.size() != weights.size()) throw ShapeError("update_se: one weight per noise vector required");
  if (noises.empty()) return psi;
  const double scale = cfg.alpha / (static_cast<double>(noises.size()) * cfg.sigma);
  std::vector<double> step(psi.size(), 0.0);
  for (std::size_t i = 0; i < noises.size(); ++i) {
    if (noises[i].size() != psi.size()) throw ShapeError("update_se: noise length differs from psi");
    if (weights[i] == 0.0) continue;
    for (std::size_t j = 0; j < psi.size(); ++j) step[j] += weights[i] * noises[i][j];
  }
  FlatParams out = psi;
  for (std::size_t j = 0; j < psi.size(); ++j) out[j] += scale * step[j];
  return out;
}

nlohmann::json to_json(const GenerationReport& r) {
  nlohmann::json j = {{"generation", r.generation},     {"scores", r.scores},
                      {"transformed", r.transformed},   {"update_norm", r.update_norm},
                      {"failed_members", r.failed_members}, {"wall_ms", r.wall_ms}};
  j["mean_eval"] = r.mean_eval ? nlohmann::json(*r.mean_eval) : nlohmann::json(nullptr);
  return j;
}

std::uint64_t member_seed(std::uint64_t run_seed, std::size_t generation, std::size_t member) {
  return derive_seed(run_seed, {0x6e6573ULL, generation, member});
}

NesResult run_nes(const NesConfig& cfg, SyntheticEnvSpec initial, const MemberEvaluator& evaluate,
                  const NesRunOptions& options) {
  cfg.validate();
  initial.validate();
  const std::size_t n = cfg.population_size;

  NesResult result;
  SyntheticEnvSpec mean = std::move(initial);
  mean.meta.run_seed = options.run_seed;
  std::optional<double> best_eval;
  result.best = mean;
  std::size_t streak = 0;

  for (std::size_t gen = 0; gen < cfg.outer_loops; ++gen) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng noise_rng = make_rng(options.run_seed, {0x6e6f697365ULL, gen});
    const std::vector<FlatParams> noises = sample_noises(cfg, mean.params.size(), noise_rng);

    std::vector<double> scores(n, 0.0);
    const auto errors = parallel_for(n, cfg.workers, [&](std::size_t i) {
      SyntheticEnvSpec member = mean;
      member.params = perturb(mean.params, noises[i], cfg.sigma);
      scores[i] = evaluate(member, MemberContext{gen, i, member_seed(options.run_seed, gen, i), false});
      if (!std::isfinite(scores[i])) throw NumericalError("member score is not finite");
    });

    GenerationReport report;
    report.generation = gen;
    double worst = 0.0;
    bool any_ok = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (errors[i]) {
        report.failed_members.push_back(i);
      } else {
        worst = any_ok ? std::min(worst, scores[i]) : scores[i];
        any_ok = true;
      }
    }
    if (!any_ok) std::rethrow_exception(errors.front());
    for (std::size_t i : report.failed_members) scores[i] = worst;

    report.scores = scores;
    report.transformed = transform_scores(scores, cfg.transform);
    // The update weighs the perturbations actually applied (sigma * z), so a
    // generation moves psi on the scale of sigma rather than of z.
    std::vector<FlatParams> applied;
    applied.reserve(n);
    for (const FlatParams& z : noises) {
      FlatParams e(z.size());
      for (std::size_t j = 0; j < z.size(); ++j) e[j] = cfg.sigma * z[j];
      applied.push_back(std::move(e));
    }
    FlatParams next = update_se(mean.params, applied, report.transformed, cfg);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < next.size(); ++j) norm2 += (next[j] - mean.params[j]) * (next[j] - mean.params[j]);
    report.update_norm = std::sqrt(norm2);
    mean.params = std::move(next);
    mean.meta.nes_iteration = static_cast<std::int64_t>(gen);

    if (cfg.evaluate_mean) {
      double score = -std::numeric_limits<double>::infinity();
      try {
        score = evaluate(mean, MemberContext{gen, n, member_seed(options.run_seed, gen, n), true});
      } catch (const Error&) {
        // an SE that breaks training counts as unsolved
      }
      report.mean_eval = score;
      mean.meta.eval_score = score;
      if (!best_eval || score >= *best_eval) {
        best_eval = score;
        result.best = mean;
      }
      streak = score >= mean.task.solved_reward ? streak + 1 : 0;
    } else {
      result.best = mean;
    }

    report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (options.on_generation) options.on_generation(report, mean);
    const bool stop_requested = options.should_stop && options.should_stop(report, mean);
    result.generations.push_back(std::move(report));
    if (streak >= cfg.solved_streak || stop_requested) {
      result.stopped_early = true;
      break;
    }
  }
  result.final_mean = mean;
  return result;
}

AgentConfig AgentConfigSource::draw(Rng& rng) const { return hp_variation ? sampler.sample(base, rng) : base; }

MemberEvaluator make_train_evaluate(AgentConfigSource source, TrainOptions train, std::size_t n_test) {
  return [source = std::move(source), train = std::move(train), n_test](const SyntheticEnvSpec& spec,
                                                                        const MemberContext& ctx) {
    Rng rng(ctx.seed);
    // The unperturbed mean is always scored with the fixed base config.
    const AgentConfig cfg = ctx.is_mean ? source.base : source.draw(rng);
    auto agent = make_agent(cfg, spec.task, rng());
    SyntheticEnv env(std::make_shared<const SyntheticEnvSpec>(spec));
    train_agent(*agent, env, train, rng);
    return evaluate_agent(*agent, spec.task, n_test, rng).mean;
  };
}

}  // namespace seforge
