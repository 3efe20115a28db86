#include "seforge/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "seforge/error.hpp"
#include "seforge/worker_pool.hpp"

namespace seforge {

namespace {

void append(std::vector<std::vector<double>>& dims, std::span<const double> next_state, double reward) {
  for (std::size_t d = 0; d < next_state.size(); ++d) dims[d].push_back(next_state[d]);
  dims.back().push_back(reward);
}

}  // namespace

HistogramCollection collect_transition_samples(const std::shared_ptr<const SyntheticEnvSpec>& se,
                                               const HistogramOptions& options) {
  const TaskSpec& task = se->task;
  const std::size_t dims = task.obs_dim + 1;
  std::vector<TransitionSamples> per_agent(options.n_agents);
  std::vector<double> means(options.n_agents, 0.0);

  const auto errors = parallel_for(options.n_agents, options.workers, [&](std::size_t i) {
    TransitionSamples& out = per_agent[i];
    out.se_train.assign(dims, {});
    out.real_test.assign(dims, {});
    out.se_replayed.assign(dims, {});

    Rng rng(derive_seed(options.seed, {0x68697374ULL, i}));
    auto agent = make_agent(options.agent, task, rng());
    SyntheticEnv env(se);
    TrainOptions train = options.train;
    train.on_transition = [&](const Transition& t) { append(out.se_train, t.next_state, t.reward); };
    train_agent(*agent, env, train, rng);

    auto real = make_real_env(task);
    const EvalResult eval = evaluate_agent(*agent, *real, options.n_test, rng, [&](const Transition& t) {
      append(out.real_test, t.next_state, t.reward);
      const SeOutput replay = se_step(*se, t.state, t.action);
      append(out.se_replayed, replay.next_state, replay.reward);
    });
    means[i] = eval.mean;
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  HistogramCollection result;
  result.test_means = means;
  TransitionSamples& all = result.samples;
  all.se_train.assign(dims, {});
  all.real_test.assign(dims, {});
  all.se_replayed.assign(dims, {});
  for (const auto& part : per_agent) {
    for (std::size_t d = 0; d < dims; ++d) {
      all.se_train[d].insert(all.se_train[d].end(), part.se_train[d].begin(), part.se_train[d].end());
      all.real_test[d].insert(all.real_test[d].end(), part.real_test[d].begin(), part.real_test[d].end());
      all.se_replayed[d].insert(all.se_replayed[d].end(), part.se_replayed[d].begin(), part.se_replayed[d].end());
    }
  }
  return result;
}

Histogram bin_pooled(std::span<const double> se_train, std::span<const double> real_test,
                     std::span<const double> se_replayed, std::size_t bins) {
  if (bins == 0) throw ShapeError("histogram needs at least one bin");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (auto set : {se_train, real_test, se_replayed}) {
    for (double v : set) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  } else if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }

  Histogram h;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges.back() = hi;
  auto count = [&](std::span<const double> set) {
    std::vector<std::size_t> c(bins, 0);
    for (double v : set) {
      auto b = static_cast<std::size_t>((v - lo) / width);
      c[std::min(b, bins - 1)]++;
    }
    return c;
  };
  h.se_train = count(se_train);
  h.real_test = count(real_test);
  h.se_replayed = count(se_replayed);
  return h;
}

std::size_t occupied_bins(std::span<const std::size_t> counts) {
  return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
}

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ShapeError("wasserstein1 of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integrate |F_a - F_b| over the merged support.
  std::vector<double> xs;
  xs.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(xs));
  double dist = 0.0;
  std::size_t ia = 0;
  std::size_t ib = 0;
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    while (ia < a.size() && a[ia] <= xs[k]) ++ia;
    while (ib < b.size() && b[ib] <= xs[k]) ++ib;
    dist += std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb) * (xs[k + 1] - xs[k]);
  }
  return dist;
}

std::vector<std::string> dimension_names(const TaskSpec& task) {
  std::vector<std::string> names;
  switch (task.kind) {
    case TaskKind::CartPole:
      names = {"x", "x_dot", "theta", "theta_dot"};
      break;
    case TaskKind::Acrobot:
      names = {"cos_theta1", "sin_theta1", "cos_theta2", "sin_theta2", "dtheta1", "dtheta2"};
      break;
    case TaskKind::Custom:
      for (std::size_t d = 0; d < task.obs_dim; ++d) names.push_back("s" + std::to_string(d));
      break;
  }
  names.push_back("reward");
  return names;
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& h) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "bin_left,bin_right,count_blue,count_orange,count_green\n";
  for (std::size_t i = 0; i < h.bins(); ++i) {
    out << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.se_train[i] << ',' << h.real_test[i] << ','
        << h.se_replayed[i] << "\n";
  }
}

void write_histogram_svg(const std::filesystem::path& path, const Histogram& h, const std::string& title) {
  constexpr double kWidth = 600.0;
  constexpr double kHeight = 300.0;
  constexpr double kMargin = 30.0;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());

  // Each series is normalized to its own total so differently sized sets overlay.
  auto density = [](const std::vector<std::size_t>& c) {
    double total = 0.0;
    for (auto v : c) total += static_cast<double>(v);
    std::vector<double> d(c.size(), 0.0);
    if (total > 0.0) {
      for (std::size_t i = 0; i < c.size(); ++i) d[i] = static_cast<double>(c[i]) / total;
    }
    return d;
  };
  const auto blue = density(h.se_train);
  const auto orange = density(h.real_test);
  const auto green = density(h.se_replayed);
  double peak = 1e-12;
  for (const auto* s : {&blue, &orange, &green}) peak = std::max(peak, *std::max_element(s->begin(), s->end()));

  const double plot_w = kWidth - 2 * kMargin;
  const double plot_h = kHeight - 2 * kMargin;
  const double bar_w = plot_w / static_cast<double>(h.bins());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kMargin << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  auto series = [&](const std::vector<double>& d, const char* color) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] <= 0.0) continue;
      const double bh = d[i] / peak * plot_h;
      out << "<rect x=\"" << kMargin + bar_w * static_cast<double>(i) << "\" y=\"" << kMargin + plot_h - bh
          << "\" width=\"" << bar_w << "\" height=\"" << bh << "\" fill=\"" << color << "\" fill-opacity=\"0.45\"/>\n";
    }
  };
  series(blue, "#1f77b4");
  series(orange, "#ff7f0e");
  series(green, "#2ca02c");
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin + plot_h << "\" x2=\"" << kMargin + plot_w << "\" y2=\""
      << kMargin + plot_h << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << kMargin << "\" y=\"" << kHeight - 8 << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << h.edges.front() << "</text>\n"
      << "<text x=\"" << kMargin + plot_w - 60 << "\" y=\"" << kHeight - 8
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << h.edges.back() << "</text>\n"
      << "</svg>\n";
}

}  // namespace seforge
