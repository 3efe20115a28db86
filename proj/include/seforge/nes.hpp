#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "seforge/agent_config.hpp"
#include "seforge/hp_sampler.hpp"
#include "seforge/synthetic_env.hpp"
#include "seforge/training.hpp"

namespace seforge {

enum class ScoreTransform {
  BetterAverage,  // members above the population mean, scaled to (0, 1]
  RankLinear,     // rank / (n - 1), ties share their mean rank
  Raw,            // min-max scaling of the raw scores
};

std::string_view to_string(ScoreTransform t);
ScoreTransform parse_score_transform(std::string_view name);

struct NesConfig {
  double alpha = 1.0;   // step size
  double sigma = 0.05;  // perturbation std. dev.
  std::size_t population_size = 16;
  std::size_t outer_loops = 200;
  bool mirrored = true;
  ScoreTransform transform = ScoreTransform::BetterAverage;
  /// Consecutive generations in which the mean SE must solve the task before stopping.
  std::size_t solved_streak = 3;
  /// Evaluate the unperturbed mean after every generation (drives early stopping and best-SE selection).
  bool evaluate_mean = true;
  std::size_t workers = 1;

  void validate() const;
};

NesConfig cartpole_nes_config();
NesConfig acrobot_nes_config();

/// Standard-normal directions; with mirroring the second half negates the first.
std::vector<FlatParams> sample_noises(const NesConfig& cfg, std::size_t dim, Rng& rng);

std::vector<double> transform_scores(std::span<const double> raw, ScoreTransform transform);

/// psi + alpha / (n_p * sigma) * sum_i weights_i * noises_i, where noises_i are the
/// perturbations applied to psi (run_nes passes sigma * z_i).
FlatParams update_se(const FlatParams& psi, std::span<const FlatParams> noises, std::span<const double> weights,
                     const NesConfig& cfg);

struct GenerationReport {
  std::size_t generation = 0;
  std::vector<double> scores;
  std::vector<double> transformed;
  std::vector<std::size_t> failed_members;
  double update_norm = 0.0;
  std::optional<double> mean_eval;
  double wall_ms = 0.0;
};

nlohmann::json to_json(const GenerationReport& r);

struct MemberContext {
  std::size_t generation = 0;
  /// Population index, or population_size for the unperturbed mean.
  std::size_t member = 0;
  std::uint64_t seed = 0;
  bool is_mean = false;
};

/// Score of one SE (higher is better). May throw; a throwing member is
/// recorded as failed and receives the population's minimum score.
using MemberEvaluator = std::function<double(const SyntheticEnvSpec&, const MemberContext&)>;

/// Per-member seed: a pure function of (run_seed, generation, member).
std::uint64_t member_seed(std::uint64_t run_seed, std::size_t generation, std::size_t member);

struct NesRunOptions {
  std::uint64_t run_seed = 0;
  std::function<void(const GenerationReport&, const SyntheticEnvSpec& mean)> on_generation;
  /// Checked after on_generation; returning true ends the run early.
  std::function<bool(const GenerationReport&, const SyntheticEnvSpec& mean)> should_stop;
};

struct NesResult {
  /// Mean SE with the highest mean evaluation (the final mean when none was evaluated).
  SyntheticEnvSpec best;
  SyntheticEnvSpec final_mean;
  std::vector<GenerationReport> generations;
  bool stopped_early = false;
};

NesResult run_nes(const NesConfig& cfg, SyntheticEnvSpec initial, const MemberEvaluator& evaluate,
                  const NesRunOptions& options);

/// Where the inner-loop agent configuration comes from.
struct AgentConfigSource {
  AgentConfig base;
  bool hp_variation = false;
  HpSampler sampler;

  AgentConfig draw(Rng& rng) const;
};

/// Trains a fresh agent on the SE and scores it on the real task: the default member evaluator.
MemberEvaluator make_train_evaluate(AgentConfigSource source, TrainOptions train, std::size_t n_test = kTestEpisodes);

}  // namespace seforge
