#include <chrono>
#include <cmath>
#include <cstring>
#include <fmt/format.h>

#include "seforge/error.hpp"
#include "seforge/nes.hpp"
#include "seforge/training.hpp"
#include "seforge/verify.hpp"

namespace seforge::verify {

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

CheckResult check_physics_oracle(const std::filesystem::path& dir, double tol) {
  Timer timer;
  CheckResult res{"physics oracle", true, {}, 0.0};
  double worst = 0.0;
  std::size_t files = 0, steps = 0;
  try {
    for (int i = 0; i < 10; ++i) {
      for (const bool acro : {false, true}) {
        const auto path = dir / fmt::format("{}_script_{}.csv", acro ? "acrobot" : "cartpole", i);
        const auto rows = read_trajectory(path, acro ? 6 : 4);
        const auto cmp = acro ? compare_acrobot(rows) : compare_cartpole(rows);
        worst = std::max(worst, cmp.max_abs_deviation);
        steps += cmp.steps;
        ++files;
        if (!cmp.ok(tol)) {
          res.passed = false;
          res.detail += fmt::format("{}: dev {:.3e}, reward mismatches {}, done mismatches {}; ", path.filename().string(),
                                    cmp.max_abs_deviation, cmp.reward_mismatches, cmp.done_mismatches);
        }
      }
    }
  } catch (const std::exception& e) {
    res.passed = false;
    res.detail += e.what();
  }
  res.seconds = timer.seconds();
  res.detail += fmt::format("{} files, {} steps, max abs dev {:.3e}", files, steps, worst);
  if (res.seconds >= 1.0) {
    res.passed = false;
    res.detail += " (over 1 s budget)";
  }
  return res;
}

CheckResult check_gradients(std::uint64_t seed, std::size_t architectures, double tol) {
  Timer timer;
  CheckResult res{"gradient check", true, {}, 0.0};
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> dim(1, 6), width(1, 12), depth(1, 3);
  const Activation acts[] = {Activation::Tanh, Activation::ReLU, Activation::LeakyReLU, Activation::PReLU};
  double worst = 0.0;
  for (std::size_t k = 0; k < architectures; ++k) {
    MlpArchitecture arch;
    arch.input_dim = dim(rng);
    arch.output_dim = dim(rng);
    arch.hidden_sizes.assign(depth(rng), 0);
    for (auto& h : arch.hidden_sizes) h = width(rng);
    arch.activation = acts[k % 4];
    const auto g = check_mlp_gradient(arch, rng, 1000);
    worst = std::max(worst, g.max_relative_error);
    if (g.max_relative_error >= tol) {
      res.passed = false;
      res.detail += fmt::format("arch {} ({}): rel err {:.3e}; ", k, to_string(arch.activation), g.max_relative_error);
    }
  }
  res.seconds = timer.seconds();
  res.detail += fmt::format("{} architectures, max rel err {:.3e}", architectures, worst);
  if (res.seconds >= 10.0) {
    res.passed = false;
    res.detail += " (over 10 s budget)";
  }
  return res;
}

CheckResult check_nes_math() {
  Timer timer;
  CheckResult res{"NES math", true, {}, 0.0};
  auto fail = [&](const std::string& what) {
    res.passed = false;
    res.detail += what + "; ";
  };

  const auto ba = ScoreTransform::BetterAverage;
  if (!bit_equal(transform_scores(std::vector{3.0, 1.0}, ba), {1.0, 0.0})) fail("transform [3,1]");
  if (!bit_equal(transform_scores(std::vector{5.0, 5.0, 5.0}, ba), {0.0, 0.0, 0.0})) fail("transform [5,5,5]");
  if (!bit_equal(transform_scores(std::vector{0.0, 2.0, 4.0}, ba), {0.0, 0.0, 1.0})) fail("transform [0,2,4]");

  NesConfig cfg;
  cfg.population_size = 2;
  cfg.sigma = 0.1;
  cfg.alpha = 1.0;
  const FlatParams psi(std::vector<double>{0.5, -1.0, 2.0});
  const FlatParams e(std::vector<double>{0.3, -0.7, 1.1});
  FlatParams neg_e(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) neg_e[i] = -e[i];
  {
    const std::vector<FlatParams> noises{e, neg_e};
    const auto out = update_se(psi, noises, std::vector{1.0, 0.0}, cfg);
    for (std::size_t i = 0; i < psi.size(); ++i)
      if (std::abs(out[i] - (psi[i] + 5.0 * e[i])) >= 1e-12) fail("update psi + 5e");
    if (update_se(psi, noises, std::vector{0.0, 0.0}, cfg) != psi) fail("null update");
  }

  {
    NesConfig mc;
    mc.population_size = 4;
    Rng rng(7);
    const auto noises = sample_noises(mc, 64, rng);
    for (std::size_t j = 0; j < 64; ++j) {
      if (noises[2][j] != -noises[0][j] || noises[3][j] != -noises[1][j]) {
        fail("mirrored antisymmetry");
        break;
      }
      if ((noises[0][j] + noises[2][j]) + (noises[1][j] + noises[3][j]) != 0.0) {
        fail("mirrored sum");
        break;
      }
    }
  }

  // One generation with a stub evaluator: member 0 scores 3, member 1 scores 1.
  try {
    NesConfig rc;
    rc.population_size = 2;
    rc.outer_loops = 1;
    rc.alpha = 0.5;
    rc.sigma = 0.05;
    rc.evaluate_mean = false;
    Rng rng(11);
    SyntheticEnvSpec se = make_synthetic_env(cartpole_task(), {4}, Activation::Tanh, rng);
    FlatParams member0;
    const MemberEvaluator stub = [&](const SyntheticEnvSpec& s, const MemberContext& ctx) {
      if (ctx.member == 0) member0 = s.params;
      return ctx.member == 0 ? 3.0 : 1.0;
    };
    const auto result = run_nes(rc, se, stub, NesRunOptions{5, {}, {}});
    double worst = 0.0;
    for (std::size_t j = 0; j < se.params.size(); ++j) {
      const double eps1 = member0[j] - se.params[j];
      const double expected = se.params[j] + rc.alpha / (2.0 * rc.sigma) * eps1;
      worst = std::max(worst, std::abs(result.final_mean.params[j] - expected));
    }
    if (worst >= 1e-12) fail(fmt::format("stub run_nes step off by {:.3e}", worst));
  } catch (const std::exception& ex) {
    fail(std::string("stub run_nes threw: ") + ex.what());
  }

  res.seconds = timer.seconds();
  if (res.detail.empty()) res.detail = "all examples exact";
  if (res.seconds >= 1.0) {
    res.passed = false;
    res.detail += " (over 1 s budget)";
  }
  return res;
}

CheckResult check_stop_heuristics() {
  Timer timer;
  CheckResult res{"stop heuristics", true, {}, 0.0};
  auto expect = [&](bool got, bool want, const char* what) {
    if (got != want) {
      res.passed = false;
      res.detail += fmt::format("{}: got {}; ", what, got);
    }
  };
  auto windows = [](double previous, double recent) {
    StopHeuristicState st;
    st.returns.assign(10, previous);
    st.returns.insert(st.returns.end(), 10, recent);
    return st;
  };

  expect(se_stop_check(windows(100.0, 100.0)), true, "constant 100");
  expect(se_stop_check(windows(100.0, 101.0)), true, "101 vs 100");
  expect(se_stop_check(windows(100.0, 110.0)), false, "110 vs 100");
  expect(se_stop_check(windows(0.0, 0.0)), true, "all zero");
  expect(se_stop_check(windows(0.0, 1e-9)), true, "zero guard, tiny recent");
  expect(se_stop_check(windows(0.0, 5.0)), false, "zero guard, nonzero recent");
  expect(se_stop_check(windows(-100.0, -101.0)), true, "negative 101 vs 100");
  {
    StopHeuristicState st;
    st.returns.assign(19, 100.0);
    expect(se_stop_check(st), false, "19 returns");
  }
  {
    // only the two most recent windows count
    StopHeuristicState st = windows(100.0, 100.0);
    st.returns.insert(st.returns.begin(), 10, 1.0);
    expect(se_stop_check(st), true, "older history ignored");
  }

  const TaskSpec cp = cartpole_task();
  const TaskSpec ac = acrobot_task();
  expect(real_stop_check(std::vector(10, 200.0), cp), true, "cartpole ten 200");
  expect(real_stop_check(std::vector(10, 194.0), cp), false, "cartpole ten 194");
  expect(real_stop_check(std::vector(10, 195.0), cp), true, "cartpole ten 195");
  expect(real_stop_check(std::vector(9, 200.0), cp), false, "cartpole nine 200");
  expect(real_stop_check(std::vector(10, -95.0), ac), true, "acrobot mean -95");
  {
    std::vector<double> r(5, -500.0);
    r.insert(r.end(), 10, -95.0);
    expect(real_stop_check(r, ac), true, "acrobot last ten only");
  }

  res.seconds = timer.seconds();
  if (res.detail.empty()) res.detail = "15 cases";
  return res;
}

std::vector<CheckResult> run_quick_checks(const std::filesystem::path& fixture_dir) {
  return {check_physics_oracle(fixture_dir), check_gradients(20240601), check_nes_math(), check_stop_heuristics()};
}

}  // namespace seforge::verify
