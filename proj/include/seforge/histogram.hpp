#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "seforge/agent_config.hpp"
#include "seforge/synthetic_env.hpp"
#include "seforge/training.hpp"

namespace seforge {

/// Next-state/reward samples per dimension (obs dims first, reward last) for
/// the three sources compared in the SE behaviour analysis.
struct TransitionSamples {
  std::vector<std::vector<double>> se_train;     // agent training on the SE
  std::vector<std::vector<double>> real_test;    // agent tested on the real task
  std::vector<std::vector<double>> se_replayed;  // SE fed the real (s, a) pairs

  std::size_t dims() const { return se_train.size(); }
  std::size_t tuple_count_real() const { return real_test.empty() ? 0 : real_test.front().size(); }
  std::size_t tuple_count_replayed() const { return se_replayed.empty() ? 0 : se_replayed.front().size(); }
};

struct HistogramOptions {
  AgentConfig agent = default_agent_config();
  std::size_t n_agents = 10;
  std::size_t n_test = kTestEpisodes;
  TrainOptions train;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct HistogramCollection {
  TransitionSamples samples;
  std::vector<double> test_means;  // one per agent
};

HistogramCollection collect_transition_samples(const std::shared_ptr<const SyntheticEnvSpec>& se,
                                               const HistogramOptions& options);

inline constexpr std::size_t kHistogramBins = 50;

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> se_train;
  std::vector<std::size_t> real_test;
  std::vector<std::size_t> se_replayed;

  std::size_t bins() const { return se_train.size(); }
};

/// Uniform bins over the pooled range of the three sample sets. A degenerate
/// range v..v becomes [v - 0.5, v + 0.5].
Histogram bin_pooled(std::span<const double> se_train, std::span<const double> real_test,
                     std::span<const double> se_replayed, std::size_t bins = kHistogramBins);

std::size_t occupied_bins(std::span<const std::size_t> counts);

/// 1-Wasserstein distance between two empirical distributions.
double wasserstein1(std::vector<double> a, std::vector<double> b);

/// Dimension labels for a task: state names followed by "reward".
std::vector<std::string> dimension_names(const TaskSpec& task);

void write_histogram_csv(const std::filesystem::path& path, const Histogram& h);
void write_histogram_svg(const std::filesystem::path& path, const Histogram& h, const std::string& title);

}  // namespace seforge
