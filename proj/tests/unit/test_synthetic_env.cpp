#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "seforge/error.hpp"
#include "seforge/synthetic_env.hpp"
#include "seforge/verify.hpp"

using namespace seforge;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "seforge_unit";
  fs::create_directories(dir);
  return dir / name;
}

SyntheticEnvSpec small_se(std::uint64_t seed, Activation a = Activation::LeakyReLU) {
  Rng rng(seed);
  return make_synthetic_env(cartpole_task(), {16}, a, rng);
}

}  // namespace

TEST_CASE("synthetic architecture dims") {
  const auto arch = synthetic_architecture(acrobot_task(), {167}, Activation::PReLU);
  CHECK(arch.input_dim == 6 + 3);
  CHECK(arch.output_dim == 6 + 1);
  CHECK(arch.hidden_sizes == std::vector<std::size_t>{167});
}

TEST_CASE("se_step equals the naive forward of state ++ one_hot(action)") {
  const SyntheticEnvSpec se = small_se(4);
  const std::vector<double> s{0.01, -0.02, 0.03, 0.04};
  for (std::size_t a = 0; a < 2; ++a) {
    std::vector<double> input = s;
    input.push_back(a == 0 ? 1.0 : 0.0);
    input.push_back(a == 1 ? 1.0 : 0.0);
    const auto expected = verify::naive_forward(se.arch, se.params.values, input);
    const SeOutput out = se_step(se, s, a);
    REQUIRE(out.next_state.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(out.next_state[i] - expected[i]) < 1e-12);
    CHECK(std::abs(out.reward - expected[4]) < 1e-12);
  }
  CHECK_THROWS_AS(se_step(se, s, 2), ShapeError);
  CHECK_THROWS_AS(se_step(se, std::vector<double>{0.0, 0.0}, 0), ShapeError);
}

TEST_CASE("batched se_step agrees with single steps") {
  const SyntheticEnvSpec se = small_se(5);
  Rng rng(1);
  std::vector<std::vector<double>> states;
  std::vector<std::size_t> actions;
  for (int i = 0; i < 6; ++i) {
    states.push_back(sample_initial_observation(se.task, rng));
    actions.push_back(static_cast<std::size_t>(i % 2));
  }
  const Matrix out = se_step_batch(se, rows_to_matrix(states), actions);
  for (int i = 0; i < 6; ++i) {
    const SeOutput o = se_step(se, states[i], actions[i]);
    for (int k = 0; k < 4; ++k) CHECK(out(i, k) == doctest::Approx(o.next_state[k]).epsilon(1e-12));
    CHECK(out(i, 4) == doctest::Approx(o.reward).epsilon(1e-12));
  }
}

TEST_CASE("synthetic episodes have fixed length and end by time limit") {
  auto spec = std::make_shared<const SyntheticEnvSpec>(small_se(6));
  SyntheticEnv env(spec);
  Rng rng(2);
  env.reset(rng);
  std::size_t steps = 0;
  StepResult r;
  do {
    r = env.step(steps % 2);
    ++steps;
  } while (!r.done);
  CHECK(steps == 200);
  CHECK(r.done_cause == DoneCause::TimeLimit);
  CHECK_THROWS_AS(env.step(0), StateError);
}

TEST_CASE("se_episode rolls out the requested number of non-terminal transitions") {
  const SyntheticEnvSpec se = small_se(7);
  Rng rng(3);
  const auto episode = se_episode(se, [](std::span<const double>) { return std::size_t{1}; }, 50, rng);
  REQUIRE(episode.size() == 50);
  for (std::size_t i = 0; i + 1 < episode.size(); ++i) {
    CHECK_FALSE(episode[i].terminal);
    CHECK(episode[i].next_state == episode[i + 1].state);
  }
}

TEST_CASE("zero-parameter SE is a constant map") {
  SyntheticEnvSpec se = small_se(8);
  std::fill(se.params.values.begin(), se.params.values.end(), 0.0);
  const SeOutput o = se_step(se, std::vector<double>{1, 2, 3, 4}, 1);
  for (double v : o.next_state) CHECK(v == 0.0);
  CHECK(o.reward == 0.0);
}

TEST_CASE("non-finite outputs and parameters raise NumericalError") {
  SyntheticEnvSpec se = small_se(9);
  // a huge output bias overflows the next state to inf
  const ParamLayout layout(se.arch);
  se.params[layout.layer(1).bias_offset] = std::numeric_limits<double>::max();
  se.params[layout.layer(1).weight_offset] = std::numeric_limits<double>::max();
  SyntheticEnv env(std::make_shared<const SyntheticEnvSpec>(se));
  Rng rng(1);
  env.reset(rng);
  bool threw = false;
  for (int i = 0; i < 5 && !threw; ++i) {
    try {
      env.step(0);
    } catch (const NumericalError&) {
      threw = true;
    }
  }
  CHECK(threw);

  SyntheticEnvSpec bad = small_se(9);
  bad.params[0] = std::nan("");
  CHECK_THROWS_AS(bad.validate(), NumericalError);
}

TEST_CASE("checkpoint round trip is bit exact") {
  SyntheticEnvSpec se = small_se(10, Activation::PReLU);
  se.meta.nes_iteration = 12;
  se.meta.eval_score = 196.5;
  se.meta.run_seed = 77;
  const fs::path p = temp_path("roundtrip.json");
  save_se(se, p);
  const SyntheticEnvSpec back = load_se(p);
  CHECK(back.task == se.task);
  CHECK(back.arch == se.arch);
  CHECK(back.params == se.params);
  CHECK(back.meta == se.meta);
  const std::vector<double> s{0.1, 0.2, -0.1, 0.0};
  CHECK(se_step(back, s, 1).next_state == se_step(se, s, 1).next_state);
}

TEST_CASE("checkpoint errors") {
  const SyntheticEnvSpec se = small_se(11);
  const fs::path p = temp_path("good.json");
  save_se(se, p);
  CHECK_THROWS_AS(load_se(p, acrobot_task()), CheckpointError);
  CHECK_NOTHROW(load_se(p, cartpole_task()));

  std::ifstream in(p);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const fs::path truncated = temp_path("truncated.json");
  std::ofstream(truncated) << text.substr(0, text.size() / 2);
  CHECK_THROWS_AS(load_se(truncated), CheckpointError);

  const fs::path garbage = temp_path("garbage.json");
  std::ofstream(garbage) << "{\"schema_version\": 1, \"task\": 5}";
  CHECK_THROWS_AS(load_se(garbage), CheckpointError);

  const fs::path future = temp_path("future.json");
  std::string bumped = text;
  bumped.replace(bumped.find("\"schema_version\": 1"), 19, "\"schema_version\": 99");
  std::ofstream(future) << bumped;
  CHECK_THROWS_AS(load_se(future), CheckpointError);

  CHECK_THROWS_AS(load_se(temp_path("missing.json")), CheckpointError);
}
