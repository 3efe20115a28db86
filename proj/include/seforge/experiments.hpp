#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seforge/agent_config.hpp"
#include "seforge/hp_sampler.hpp"
#include "seforge/synthetic_env.hpp"
#include "seforge/training.hpp"

namespace seforge {

inline constexpr int kEvalsCsvSchemaVersion = 1;

/// One trained-and-tested agent.
struct EvalRecord {
  std::string se_id;  // "real" for agents trained on the real task
  AgentConfig hps;
  std::uint64_t seed = 0;
  std::vector<double> returns;
  double mean_return = 0.0;
  double std_return = 0.0;
  std::size_t episodes_used = 0;
  std::size_t env_steps_used = 0;
  std::size_t eval_steps_used = 0;
  StopCause stop_cause = StopCause::MaxEpisodes;
};

struct NamedSe {
  std::string id;
  std::shared_ptr<const SyntheticEnvSpec> spec;
};

struct SuiteOptions {
  AgentConfig base = default_agent_config();
  /// Draw learning rate, batch size and network shape per agent.
  bool vary_hps = true;
  HpSampler sampler;
  std::size_t n_agents = 10;
  std::size_t n_test = kTestEpisodes;
  TrainOptions train;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// Trains one agent on `se` (or on the real task when se is null) and tests it
/// on the real task. The record is a pure function of (se, task, options.base,
/// options.vary_hps, seed).
EvalRecord run_eval_record(const std::shared_ptr<const SyntheticEnvSpec>& se, const std::string& se_id,
                           const TaskSpec& task, const SuiteOptions& options, std::uint64_t seed,
                           const TransitionObserver& on_train = {}, const TransitionObserver& on_test = {});

/// n_agents agents per SE; records ordered by (SE, agent).
std::vector<EvalRecord> suite_robustness(std::span<const NamedSe> ses, const SuiteOptions& options);

/// suite_robustness with the agent kind replaced.
std::vector<EvalRecord> suite_transfer(std::span<const NamedSe> ses, AgentKind target, SuiteOptions options);

/// n agents trained directly on the real task.
std::vector<EvalRecord> suite_baseline(const TaskSpec& task, std::size_t n, const SuiteOptions& options);

struct SuiteSummary {
  std::size_t records = 0;
  std::size_t returns = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double mean_episodes = 0.0;
  double mean_steps = 0.0;
  double mean_eval_steps = 0.0;
  /// Fraction of records whose mean return reaches the solved reward.
  double solved_fraction = 0.0;
};

SuiteSummary summarize(std::span<const EvalRecord> records, const TaskSpec& task);
nlohmann::json to_json(const SuiteSummary& s);

std::string evals_csv_header();
void write_evals_csv(const std::filesystem::path& path, std::span<const EvalRecord> records);
void write_summary_json(const std::filesystem::path& path, const SuiteSummary& summary,
                        const nlohmann::json& extra = nlohmann::json::object());

/// Loads every *.json checkpoint in `dir` (sorted by filename), at most `limit`.
std::vector<NamedSe> load_se_directory(const std::filesystem::path& dir, const TaskSpec& task, std::size_t limit);

}  // namespace seforge
