#include "seforge/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "seforge/error.hpp"
#include "seforge/worker_pool.hpp"

namespace seforge {

namespace {

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

std::vector<EvalRecord> run_records(std::size_t n, const SuiteOptions& options,
                                    const std::function<EvalRecord(std::size_t)>& make) {
  std::vector<EvalRecord> records(n);
  const auto errors = parallel_for(n, options.workers, [&](std::size_t i) { records[i] = make(i); });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return records;
}

}  // namespace

EvalRecord run_eval_record(const std::shared_ptr<const SyntheticEnvSpec>& se, const std::string& se_id,
                           const TaskSpec& task, const SuiteOptions& options, std::uint64_t seed,
                           const TransitionObserver& on_train, const TransitionObserver& on_test) {
  Rng rng(seed);
  EvalRecord rec;
  rec.se_id = se_id;
  rec.seed = seed;
  rec.hps = options.vary_hps ? options.sampler.sample(options.base, rng) : options.base;
  auto agent = make_agent(rec.hps, task, rng());

  TrainOptions train = options.train;
  train.on_transition = on_train;
  std::unique_ptr<Environment> env;
  if (se) {
    env = std::make_unique<SyntheticEnv>(se);
  } else {
    env = make_real_env(task);
  }
  const TrainReport report = train_agent(*agent, *env, train, rng);
  rec.episodes_used = report.episodes_used;
  rec.env_steps_used = report.env_steps_used;
  rec.eval_steps_used = report.eval_steps_used;
  rec.stop_cause = report.stop_cause;

  auto real = make_real_env(task);
  const EvalResult eval = evaluate_agent(*agent, *real, options.n_test, rng, on_test);
  rec.returns = eval.returns;
  rec.mean_return = eval.mean;
  rec.std_return = std_of(eval.returns);
  return rec;
}

std::vector<EvalRecord> suite_robustness(std::span<const NamedSe> ses, const SuiteOptions& options) {
  if (ses.empty()) throw ConfigError("robustness suite needs at least one SE");
  const TaskSpec task = ses.front().spec->task;
  for (const auto& se : ses) {
    if (!(se.spec->task == task)) throw ConfigError("SE " + se.id + " proxies a different task");
  }
  return run_records(ses.size() * options.n_agents, options, [&](std::size_t i) {
    const std::size_t s = i / options.n_agents;
    const std::size_t a = i % options.n_agents;
    return run_eval_record(ses[s].spec, ses[s].id, task, options, derive_seed(options.seed, {s, a}));
  });
}

std::vector<EvalRecord> suite_transfer(std::span<const NamedSe> ses, AgentKind target, SuiteOptions options) {
  options.base.kind = target;
  return suite_robustness(ses, options);
}

std::vector<EvalRecord> suite_baseline(const TaskSpec& task, std::size_t n, const SuiteOptions& options) {
  return run_records(n, options, [&](std::size_t i) {
    return run_eval_record(nullptr, "real", task, options, derive_seed(options.seed, {0x7265616cULL, i}));
  });
}

SuiteSummary summarize(std::span<const EvalRecord> records, const TaskSpec& task) {
  SuiteSummary s;
  s.records = records.size();
  std::vector<double> all;
  double episodes = 0.0;
  double steps = 0.0;
  double eval_steps = 0.0;
  std::size_t solved = 0;
  for (const auto& r : records) {
    all.insert(all.end(), r.returns.begin(), r.returns.end());
    episodes += static_cast<double>(r.episodes_used);
    steps += static_cast<double>(r.env_steps_used);
    eval_steps += static_cast<double>(r.eval_steps_used);
    if (r.mean_return >= task.solved_reward) ++solved;
  }
  s.returns = all.size();
  s.mean_return = mean_of(all);
  s.std_return = std_of(all);
  if (!records.empty()) {
    const auto n = static_cast<double>(records.size());
    s.mean_episodes = episodes / n;
    s.mean_steps = steps / n;
    s.mean_eval_steps = eval_steps / n;
    s.solved_fraction = static_cast<double>(solved) / n;
  }
  return s;
}

nlohmann::json to_json(const SuiteSummary& s) {
  return {{"records", s.records},
          {"returns", s.returns},
          {"mean_return", s.mean_return},
          {"std_return", s.std_return},
          {"mean_episodes", s.mean_episodes},
          {"mean_steps", s.mean_steps},
          {"mean_eval_steps", s.mean_eval_steps},
          {"solved_fraction", s.solved_fraction}};
}

std::string evals_csv_header() {
  return "se_id,agent_kind,lr,batch,hidden,layers,mean_return,std_return,episodes,steps,eval_steps";
}

void write_evals_csv(const std::filesystem::path& path, std::span<const EvalRecord> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "# seforge evals v" << kEvalsCsvSchemaVersion << "\n" << evals_csv_header() << "\n";
  for (const auto& r : records) {
    out << r.se_id << ',' << to_string(r.hps.kind) << ',' << r.hps.learning_rate << ',' << r.hps.batch_size << ','
        << r.hps.hidden_size << ',' << r.hps.hidden_layers << ',' << r.mean_return << ',' << r.std_return << ','
        << r.episodes_used << ',' << r.env_steps_used << ',' << r.eval_steps_used << "\n";
  }

  // Raw per-episode test returns for distribution plots.
  auto returns_path = path;
  returns_path.replace_filename(path.stem().string() + "_returns.csv");
  std::ofstream ret(returns_path);
  if (!ret) throw Error("cannot write " + returns_path.string());
  ret.precision(17);
  ret << "# seforge returns v" << kEvalsCsvSchemaVersion << "\nse_id,record,test_episode,return\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t e = 0; e < records[i].returns.size(); ++e) {
      ret << records[i].se_id << ',' << i << ',' << e << ',' << records[i].returns[e] << "\n";
    }
  }
}

void write_summary_json(const std::filesystem::path& path, const SuiteSummary& summary, const nlohmann::json& extra) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  nlohmann::json j = extra;
  j["schema_version"] = kEvalsCsvSchemaVersion;
  j["summary"] = to_json(summary);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<NamedSe> load_se_directory(const std::filesystem::path& dir, const TaskSpec& task, std::size_t limit) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<NamedSe> out;
  for (const auto& f : files) {
    if (out.size() >= limit) break;
    out.push_back({f.stem().string(), std::make_shared<const SyntheticEnvSpec>(load_se(f, task))});
  }
  return out;
}

}  // namespace seforge
