#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "seforge/error.hpp"
#include "seforge/verify.hpp"

namespace seforge::verify {

namespace {

std::vector<std::string> split_csv(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double max_dev(double acc, std::span<const double> a, std::span<const double> b) {
  for (std::size_t i = 0; i < a.size(); ++i) acc = std::max(acc, std::abs(a[i] - b[i]));
  return acc;
}

}  // namespace

std::vector<FixtureRow> read_trajectory(const std::filesystem::path& path, std::size_t obs_dim) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open fixture " + path.string());
  std::string line;
  std::getline(in, line);
  const std::size_t header_cols = split_csv(line).size();
  if (header_cols < obs_dim + 4) throw Error("fixture header too short: " + path.string());

  std::vector<FixtureRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header_cols) throw Error("fixture row width mismatch in " + path.string());
    FixtureRow r;
    r.step = std::stol(cells[0]);
    r.action = std::stol(cells[1]);
    for (std::size_t i = 0; i < obs_dim; ++i) r.obs.push_back(std::stod(cells[2 + i]));
    r.reward = std::stod(cells[2 + obs_dim]);
    r.done = std::stol(cells[3 + obs_dim]) != 0;
    for (std::size_t i = 4 + obs_dim; i < cells.size(); ++i) r.raw_state.push_back(std::stod(cells[i]));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error("empty fixture " + path.string());
  return rows;
}

TrajectoryComparison compare_cartpole(const std::vector<FixtureRow>& rows) {
  TrajectoryComparison cmp;
  cartpole::State s{rows[0].obs[0], rows[0].obs[1], rows[0].obs[2], rows[0].obs[3]};
  bool terminated = false;
  for (std::size_t t = 1; t < rows.size(); ++t) {
    const auto a = static_cast<std::size_t>(rows[t].action);
    const StepResult sr = step_cartpole(s, a);
    s = cartpole::dynamics(s, a);
    cmp.max_abs_deviation = max_dev(cmp.max_abs_deviation, s, rows[t].obs);
    if (sr.done != rows[t].done) ++cmp.done_mismatches;
    if (!terminated && sr.reward != rows[t].reward) ++cmp.reward_mismatches;
    terminated = terminated || rows[t].done;
    ++cmp.steps;
  }
  return cmp;
}

TrajectoryComparison compare_acrobot(const std::vector<FixtureRow>& rows) {
  TrajectoryComparison cmp;
  const auto& r0 = rows[0].raw_state;
  if (r0.size() != 4) throw Error("acrobot fixture lacks raw state columns");
  acrobot::State s{r0[0], r0[1], r0[2], r0[3]};
  for (std::size_t t = 1; t < rows.size(); ++t) {
    const auto a = static_cast<std::size_t>(rows[t].action);
    const StepResult sr = step_acrobot(s, a);
    s = acrobot::dynamics(s, a);
    cmp.max_abs_deviation = max_dev(cmp.max_abs_deviation, s, rows[t].raw_state);
    cmp.max_abs_deviation = max_dev(cmp.max_abs_deviation, sr.next_obs, rows[t].obs);
    if (sr.done != rows[t].done) ++cmp.done_mismatches;
    if (sr.reward != rows[t].reward) ++cmp.reward_mismatches;
    ++cmp.steps;
  }
  return cmp;
}

std::filesystem::path default_fixture_dir() {
  if (const char* env = std::getenv("SEFORGE_FIXTURE_DIR")) return env;
  return SEFORGE_FIXTURE_DIR;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("SEFORGE_DATA_DIR")) return env;
  return SEFORGE_DATA_DIR;
}

}  // namespace seforge::verify
