#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "seforge/error.hpp"
#include "seforge/histogram.hpp"

using namespace seforge;

namespace {

// W1 as the integral of |Q_a(u) - Q_b(u)| over u in (0, 1), quantile form.
double quantile_w1(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::set<double> cuts{0.0, 1.0};
  for (std::size_t i = 1; i < a.size(); ++i) cuts.insert(double(i) / double(a.size()));
  for (std::size_t j = 1; j < b.size(); ++j) cuts.insert(double(j) / double(b.size()));
  const std::vector<double> u(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < u.size(); ++k) {
    const double mid = 0.5 * (u[k] + u[k + 1]);
    const double qa = a[std::min(a.size() - 1, static_cast<std::size_t>(mid * double(a.size())))];
    const double qb = b[std::min(b.size() - 1, static_cast<std::size_t>(mid * double(b.size())))];
    total += std::abs(qa - qb) * (u[k + 1] - u[k]);
  }
  return total;
}

std::size_t total(const std::vector<std::size_t>& c) { return std::accumulate(c.begin(), c.end(), std::size_t{0}); }

}  // namespace

TEST_CASE("degenerate range widens to one unit") {
  const std::vector<double> ones(40, 1.0);
  const Histogram h = bin_pooled(ones, ones, ones);
  CHECK(h.bins() == kHistogramBins);
  CHECK(h.edges.front() == 0.5);
  CHECK(h.edges.back() == 1.5);
  CHECK(occupied_bins(h.real_test) == 1);
  CHECK(occupied_bins(h.se_train) == 1);
  CHECK(total(h.se_replayed) == 40);
}

TEST_CASE("pooled bins cover every sample") {
  const std::vector<double> a{0.0, 0.1, 0.2, 10.0};
  const std::vector<double> b{-5.0, 3.0};
  const std::vector<double> c{7.5};
  const Histogram h = bin_pooled(a, b, c, 3);
  CHECK(h.edges == std::vector<double>{-5.0, 0.0, 5.0, 10.0});
  CHECK(h.se_train == std::vector<std::size_t>{0, 3, 1});
  CHECK(h.real_test == std::vector<std::size_t>{1, 1, 0});
  CHECK(h.se_replayed == std::vector<std::size_t>{0, 0, 1});
  CHECK(occupied_bins(h.se_train) == 2);
  CHECK_THROWS_AS(bin_pooled(a, b, c, 0), ShapeError);
}

TEST_CASE("empty sample sets still bin") {
  const Histogram h = bin_pooled({}, {}, {}, 4);
  CHECK(h.edges.front() == 0.0);
  CHECK(h.edges.back() == 1.0);
  CHECK(occupied_bins(h.se_train) == 0);
}

TEST_CASE("Wasserstein-1 hand cases") {
  CHECK(wasserstein1({0.0}, {3.0}) == 3.0);
  CHECK(wasserstein1({0.0, 1.0}, {0.0, 1.0}) == 0.0);
  CHECK(wasserstein1({0.0}, {0.0, 1.0}) == doctest::Approx(0.5));
  CHECK(wasserstein1({1.0, 2.0, 3.0}, {2.0, 3.0, 4.0}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(wasserstein1({}, {1.0}), ShapeError);
}

TEST_CASE("Wasserstein-1 matches the quantile oracle") {
  Rng rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> size(1, 60);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> a(size(rng)), b(size(rng));
    for (double& v : a) v = normal(rng);
    for (double& v : b) v = 0.5 + 2.0 * normal(rng);
    CHECK(wasserstein1(a, b) == doctest::Approx(quantile_w1(a, b)).epsilon(1e-12));
    CHECK(wasserstein1(a, b) == doctest::Approx(wasserstein1(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("dimension names") {
  CHECK(dimension_names(cartpole_task()) == std::vector<std::string>{"x", "x_dot", "theta", "theta_dot", "reward"});
  CHECK(dimension_names(acrobot_task()).size() == 7);
}

TEST_CASE("replayed samples pair one-to-one with real test samples") {
  Rng rng(2);
  auto se = std::make_shared<const SyntheticEnvSpec>(make_synthetic_env(cartpole_task(), {6}, Activation::Tanh, rng));
  HistogramOptions options;
  options.agent.hidden_layers = 1;
  options.agent.hidden_size = 8;
  options.agent.batch_size = 16;
  options.agent.initial_episodes = 1;
  options.n_agents = 2;
  options.n_test = 2;
  options.train.max_episodes = 3;
  options.seed = 5;
  const HistogramCollection c = collect_transition_samples(se, options);
  const TransitionSamples& s = c.samples;
  REQUIRE(s.dims() == 5);
  CHECK(c.test_means.size() == 2);
  CHECK(s.tuple_count_real() > 0);
  CHECK(s.tuple_count_replayed() == s.tuple_count_real());
  CHECK(s.se_train.front().size() == 2 * 3 * 200);
  for (std::size_t d = 0; d < 5; ++d) {
    CHECK(s.real_test[d].size() == s.tuple_count_real());
    CHECK(s.se_replayed[d].size() == s.tuple_count_real());
  }
  // Every real CartPole step pays exactly +1.
  for (double r : s.real_test.back()) CHECK(r == 1.0);

  options.workers = 2;
  const HistogramCollection again = collect_transition_samples(se, options);
  CHECK(again.samples.se_replayed == s.se_replayed);
  CHECK(again.test_means == c.test_means);
}

TEST_CASE("histogram files") {
  const auto dir = std::filesystem::temp_directory_path() / "seforge_hist_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const Histogram h = bin_pooled(std::vector<double>{0.0, 1.0}, std::vector<double>{0.5}, std::vector<double>{1.0}, 2);
  write_histogram_csv(dir / "h.csv", h);
  write_histogram_svg(dir / "h.svg", h, "x");
  std::ifstream csv(dir / "h.csv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines >= 3);
  std::ifstream svg(dir / "h.svg");
  std::getline(svg, line);
  CHECK(line.find("<svg") != std::string::npos);
  std::filesystem::remove_all(dir);
}
