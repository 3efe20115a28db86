#include <doctest.h>

#include <cmath>
#include <set>

#include "seforge/error.hpp"
#include "seforge/nes.hpp"

using namespace seforge;

namespace {

NesConfig micro_config(std::size_t population, std::size_t generations) {
  NesConfig cfg;
  cfg.alpha = 0.5;
  cfg.sigma = 0.05;
  cfg.population_size = population;
  cfg.outer_loops = generations;
  cfg.evaluate_mean = false;
  return cfg;
}

SyntheticEnvSpec tiny_se(std::uint64_t seed) {
  Rng rng(seed);
  return make_synthetic_env(cartpole_task(), {3}, Activation::Tanh, rng);
}

double norm(const FlatParams& a, const FlatParams& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("mirrored noises are exact negations") {
  NesConfig cfg;
  cfg.population_size = 4;
  Rng rng(1);
  const auto noises = sample_noises(cfg, 6, rng);
  REQUIRE(noises.size() == 4);
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(noises[2][j] == -noises[0][j]);
    CHECK(noises[3][j] == -noises[1][j]);
    CHECK((noises[0][j] + noises[2][j]) + (noises[1][j] + noises[3][j]) == 0.0);
  }
}

TEST_CASE("noise coordinates are standard normal") {
  NesConfig cfg;
  cfg.population_size = 10000;
  cfg.mirrored = false;
  Rng rng(2);
  const auto noises = sample_noises(cfg, 3, rng);
  for (std::size_t j = 0; j < 3; ++j) {
    double sum = 0.0, sq = 0.0;
    for (const auto& z : noises) {
      sum += z[j];
      sq += z[j] * z[j];
    }
    const double mean = sum / 10000.0;
    const double var = sq / 10000.0 - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.05);
  }
}

TEST_CASE("odd mirrored populations are rejected") {
  NesConfig cfg;
  cfg.population_size = 5;
  Rng rng(3);
  CHECK_THROWS_AS(sample_noises(cfg, 2, rng), ConfigError);
  cfg.mirrored = false;
  CHECK(sample_noises(cfg, 2, rng).size() == 5);
  cfg.sigma = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("better-average transform") {
  CHECK(transform_scores(std::vector<double>{3, 1}, ScoreTransform::BetterAverage) == std::vector<double>{1, 0});
  CHECK(transform_scores(std::vector<double>{5, 5, 5}, ScoreTransform::BetterAverage) == std::vector<double>{0, 0, 0});
  CHECK(transform_scores(std::vector<double>{0, 2, 4}, ScoreTransform::BetterAverage) == std::vector<double>{0, 0, 1});
  // mean 3, max 6: (4 - 3) / 3
  const auto t = transform_scores(std::vector<double>{2, 4, 0, 6}, ScoreTransform::BetterAverage);
  CHECK(t[0] == 0.0);
  CHECK(t[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(t[3] == 1.0);
  CHECK_THROWS_AS(transform_scores(std::vector<double>{1}, ScoreTransform::BetterAverage), ShapeError);
}

TEST_CASE("rank and raw transforms") {
  CHECK(transform_scores(std::vector<double>{3, 1, 2}, ScoreTransform::RankLinear) == std::vector<double>{1, 0, 0.5});
  CHECK(transform_scores(std::vector<double>{1, 1, 2}, ScoreTransform::RankLinear) ==
        std::vector<double>{0.25, 0.25, 1});
  CHECK(transform_scores(std::vector<double>{0, 2, 4}, ScoreTransform::Raw) == std::vector<double>{0, 0.5, 1});
  CHECK(transform_scores(std::vector<double>{7, 7}, ScoreTransform::Raw) == std::vector<double>{0, 0});
}

TEST_CASE("transformed scores stay in [0, 1]") {
  Rng rng(4);
  std::normal_distribution<double> normal(0.0, 50.0);
  for (ScoreTransform t : {ScoreTransform::BetterAverage, ScoreTransform::RankLinear, ScoreTransform::Raw}) {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> raw(16);
      for (double& v : raw) v = normal(rng);
      for (double v : transform_scores(raw, t)) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("transform names") {
  CHECK(parse_score_transform("better_average") == ScoreTransform::BetterAverage);
  CHECK(parse_score_transform(to_string(ScoreTransform::RankLinear)) == ScoreTransform::RankLinear);
  CHECK(parse_score_transform("raw") == ScoreTransform::Raw);
  CHECK_THROWS_AS(parse_score_transform("softmax"), ConfigError);
}

TEST_CASE("update_se hand example and null update") {
  NesConfig cfg;
  cfg.alpha = 1.0;
  cfg.sigma = 0.1;
  const FlatParams psi(std::vector<double>{1.0, -2.0, 0.5});
  const FlatParams e(std::vector<double>{0.25, -0.5, 2.0});
  FlatParams neg(3);
  for (std::size_t j = 0; j < 3; ++j) neg[j] = -e[j];
  const std::vector<FlatParams> noises{e, neg};

  const FlatParams moved = update_se(psi, noises, std::vector<double>{1.0, 0.0}, cfg);
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(moved[j] - (psi[j] + 5.0 * e[j])) < 1e-12);

  const FlatParams same = update_se(psi, noises, std::vector<double>{0.0, 0.0}, cfg);
  CHECK(same.values == psi.values);

  // Equal raw scores on a mirrored pair transform to zero weights.
  const auto w = transform_scores(std::vector<double>{42.0, 42.0}, cfg.transform);
  CHECK(update_se(psi, noises, w, cfg).values == psi.values);

  CHECK_THROWS_AS(update_se(psi, noises, std::vector<double>{1.0}, cfg), ShapeError);
}

TEST_CASE("update magnitude obeys the triangle bound") {
  NesConfig cfg;
  cfg.alpha = 0.7;
  cfg.sigma = 0.03;
  cfg.population_size = 8;
  Rng rng(5);
  const auto noises = sample_noises(cfg, 10, rng);
  const FlatParams psi(10);
  const std::vector<double> w{0.1, 0.9, 0.0, 1.0, 0.3, 0.0, 0.5, 0.2};
  const FlatParams next = update_se(psi, noises, w, cfg);
  double bound = 0.0;
  for (std::size_t i = 0; i < 8; ++i) bound += w[i] * norm(noises[i], psi);
  bound *= cfg.alpha / (8.0 * cfg.sigma);
  CHECK(norm(next, psi) <= bound + 1e-12);
}

TEST_CASE("member seeds are distinct and stable") {
  std::set<std::uint64_t> seen;
  for (std::size_t g = 0; g < 10; ++g) {
    for (std::size_t m = 0; m <= 16; ++m) seen.insert(member_seed(9, g, m));
  }
  CHECK(seen.size() == 170);
  CHECK(member_seed(9, 3, 4) == member_seed(9, 3, 4));
  CHECK(member_seed(9, 3, 4) != member_seed(10, 3, 4));
}

TEST_CASE("equal member scores leave psi fixed") {
  const SyntheticEnvSpec start = tiny_se(6);
  const auto flat = [](const SyntheticEnvSpec&, const MemberContext&) { return 17.0; };
  const NesResult result = run_nes(micro_config(4, 3), start, flat, NesRunOptions{1, {}, {}});
  CHECK(result.generations.size() == 3);
  CHECK(result.final_mean.params.values == start.params.values);
  for (const auto& g : result.generations) CHECK(g.update_norm == 0.0);
}

TEST_CASE("a failing member gets the population minimum") {
  const auto evaluate = [](const SyntheticEnvSpec&, const MemberContext& ctx) -> double {
    if (ctx.member == 1) throw NumericalError("diverged");
    return 10.0 + static_cast<double>(ctx.member);
  };
  const NesResult result = run_nes(micro_config(4, 1), tiny_se(7), evaluate, NesRunOptions{2, {}, {}});
  const auto& g = result.generations.front();
  CHECK(g.failed_members == std::vector<std::size_t>{1});
  CHECK(g.scores == std::vector<double>{10.0, 10.0, 12.0, 13.0});
}

TEST_CASE("a generation where every member fails is an error") {
  const auto evaluate = [](const SyntheticEnvSpec&, const MemberContext&) -> double {
    throw NumericalError("diverged");
  };
  CHECK_THROWS_AS(run_nes(micro_config(2, 1), tiny_se(8), evaluate, NesRunOptions{}), NumericalError);
}

TEST_CASE("run_nes moves psi along the applied perturbation of the winner") {
  NesConfig cfg = micro_config(2, 1);
  std::vector<FlatParams> members(2);
  const auto evaluate = [&](const SyntheticEnvSpec& se, const MemberContext& ctx) {
    members[ctx.member] = se.params;
    return ctx.member == 0 ? 3.0 : 1.0;
  };
  const SyntheticEnvSpec start = tiny_se(9);
  const NesResult result = run_nes(cfg, start, evaluate, NesRunOptions{3, {}, {}});
  const double scale = cfg.alpha / (2.0 * cfg.sigma);
  for (std::size_t j = 0; j < start.params.size(); ++j) {
    const double eps1 = members[0][j] - start.params[j];
    CHECK(members[1][j] - start.params[j] == doctest::Approx(-eps1).epsilon(1e-12));
    CHECK(std::abs(result.final_mean.params[j] - (start.params[j] + scale * eps1)) < 1e-12);
  }
}

TEST_CASE("mean evaluation drives best selection and early stopping") {
  NesConfig cfg = micro_config(2, 10);
  cfg.evaluate_mean = true;
  cfg.solved_streak = 2;
  const std::vector<double> mean_scores{50, 120, 196, 170, 199, 200, 10};
  const auto evaluate = [&](const SyntheticEnvSpec&, const MemberContext& ctx) {
    if (ctx.is_mean) return mean_scores.at(ctx.generation);
    return ctx.member == 0 ? 2.0 : 1.0;
  };
  std::vector<std::int64_t> logged;
  NesRunOptions options{4, [&](const GenerationReport& r, const SyntheticEnvSpec& mean) {
                          logged.push_back(mean.meta.nes_iteration);
                          CHECK(r.mean_eval.has_value());
                        },
                        {}};
  const NesResult result = run_nes(cfg, tiny_se(10), evaluate, options);
  CHECK(result.stopped_early);
  CHECK(result.generations.size() == 6);
  CHECK(logged == std::vector<std::int64_t>{0, 1, 2, 3, 4, 5});
  CHECK(result.best.meta.nes_iteration == 5);
  CHECK(result.best.meta.eval_score == 200.0);
  CHECK(result.best.meta.run_seed == 4);
}

TEST_CASE("serial and parallel runs are bit-identical") {
  // Scores depend on the member's parameters and its own random stream only.
  const auto evaluate = [](const SyntheticEnvSpec& se, const MemberContext& ctx) {
    Rng rng(ctx.seed);
    double s = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (double v : se.params.values) s += std::sin(v);
    return s;
  };
  NesConfig serial = micro_config(8, 4);
  serial.evaluate_mean = true;
  NesConfig parallel = serial;
  parallel.workers = 4;
  const NesResult a = run_nes(serial, tiny_se(11), evaluate, NesRunOptions{12, {}, {}});
  const NesResult b = run_nes(parallel, tiny_se(11), evaluate, NesRunOptions{12, {}, {}});
  CHECK(a.final_mean.params.values == b.final_mean.params.values);
  CHECK(a.best.params.values == b.best.params.values);
  for (std::size_t g = 0; g < 4; ++g) CHECK(a.generations[g].scores == b.generations[g].scores);
}

TEST_CASE("train-and-evaluate member scores are reproducible") {
  AgentConfig agent = default_agent_config();
  agent.hidden_layers = 1;
  agent.hidden_size = 8;
  agent.batch_size = 16;
  agent.initial_episodes = 1;
  TrainOptions train;
  train.max_episodes = 3;
  const MemberEvaluator evaluate = make_train_evaluate(AgentConfigSource{agent, false, {}}, train, 2);
  const SyntheticEnvSpec se = tiny_se(13);
  const MemberContext ctx{0, 1, member_seed(5, 0, 1), false};
  const double first = evaluate(se, ctx);
  CHECK(first == evaluate(se, ctx));
  CHECK(first >= 2.0);
  CHECK(first <= 200.0);
}
