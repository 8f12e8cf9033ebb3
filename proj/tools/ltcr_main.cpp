#include <omp.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "ltcr/config.hpp"
#include "ltcr/errors.hpp"
#include "ltcr/harness.hpp"
#include "ltcr/kernels.hpp"
#include "ltcr/linear.hpp"
#include "oracles.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRunFailure = 2;
constexpr int kExitVerifyFailure = 3;

int cmd_run(const std::string& config_path) {
  ltcr::ExperimentConfig config;
  try {
    config = ltcr::load_config_file(config_path);
  } catch (const ltcr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    const std::string dir = ltcr::run_experiment(config);
    std::cout << "run complete: " << dir << "\n";
  } catch (const std::exception& e) {
    std::cerr << "run failure: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitOk;
}

int cmd_summarize(const std::vector<std::string>& dirs, double threshold) {
  std::vector<ltcr::LoadedRun> runs;
  try {
    for (const std::string& d : dirs) {
      runs.push_back(ltcr::load_run(d));
      if (threshold > 0.0) runs.back().threshold = threshold;
    }
  } catch (const std::exception& e) {
    std::cerr << "summarize failure: " << e.what() << "\n";
    return kExitRunFailure;
  }
  bool baseline = false;
  for (const auto& r : runs)
    if (r.condition == "baseline") baseline = true;
  std::cout << ltcr::format_summary(ltcr::summarize_runs(runs), baseline);
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& dirs, std::string out_dir) {
  try {
    std::vector<ltcr::LoadedRun> runs;
    for (const std::string& d : dirs) runs.push_back(ltcr::load_run(d));
    if (out_dir.empty())
      out_dir = (dirs.size() == 1 ? dirs[0] : std::string(".")) + "/report";
    ltcr::render_report(runs, out_dir);
    std::cout << "report written to " << out_dir << "\n";
  } catch (const std::exception& e) {
    std::cerr << "report failure: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitOk;
}

bool verify_projection() {
  using namespace ltcr;
  Rng rng(0xF00D);
  for (int trial = 0; trial < 10000; ++trial) {
    const int k = 2 + rng.uniform_int(60);
    const double v_min = rng.uniform(-30.0, 10.0);
    const SupportGrid grid = make_support(v_min, v_min + rng.uniform(0.5, 60.0), k);
    std::vector<double> dist(k);
    double sum = 0.0;
    for (double& v : dist) {
      v = rng.uniform();
      sum += v;
    }
    for (double& v : dist) v /= sum;
    const double reward = rng.uniform(-40.0, 40.0);
    const double discount = rng.uniform(0.0, 1.0);
    const bool terminal = rng.uniform() < 0.2;

    const auto got = project(grid, reward, discount, dist, terminal);
    const auto want = oracle::project_reference(grid, reward, discount, dist, terminal);
    double mass = 0.0;
    for (int i = 0; i < k; ++i) {
      if (std::abs(got[i] - want[i]) >= 1e-9) return false;
      mass += got[i];
    }
    if (std::abs(mass - 1.0) >= 1e-9) return false;
  }
  return true;
}

bool verify_gradients() {
  using namespace ltcr;
  Rng rng(0xBEEF);
  MlpShape shape;
  shape.input_dim = 4;
  shape.hidden = {8};
  shape.action_count = 2;
  shape.atom_count = 5;

  // Bellman-projected loss.
  {
    Mlp online(shape, rng.next_u64());
    const Mlp target(shape, rng.next_u64());
    const SupportGrid grid = make_support(-2.0, 2.0, 5);
    ReplayBuffer replay(64);
    for (int i = 0; i < 8; ++i) {
      Transition t;
      t.state.resize(4);
      t.next_state.resize(4);
      for (double& v : t.state) v = rng.uniform(-1, 1);
      for (double& v : t.next_state) v = rng.uniform(-1, 1);
      t.action = rng.uniform_int(2);
      t.reward = rng.uniform(-1, 1);
      t.terminal = i % 5 == 0;
      replay.push(std::move(t));
    }
    std::vector<std::size_t> batch{0, 1, 2, 3, 4, 5, 6, 7};
    BatchWorkspace ws;
    GradBuffer grad;
    grad.resize_like(online);
    c51_batch_gradients_ref(online, target, grid, 0.99, replay, batch, ws, grad);
    auto loss = [&](const Mlp& m) {
      BatchWorkspace tmp;
      GradBuffer unused;
      unused.resize_like(m);
      return c51_batch_gradients_ref(m, target, grid, 0.99, replay, batch, tmp, unused);
    };
    const auto check = oracle::finite_difference_check(online, grad, loss, 100, 7);
    if (check.max_rel_error >= 1e-4) return false;
  }

  // Distillation loss.
  {
    Mlp student(shape, rng.next_u64());
    std::vector<std::vector<double>> states(6), targets(6);
    std::vector<DistillItem> items(6);
    for (int i = 0; i < 6; ++i) {
      states[i].resize(4);
      for (double& v : states[i]) v = rng.uniform(-1, 1);
      targets[i].resize(5);
      double sum = 0.0;
      for (double& v : targets[i]) {
        v = rng.uniform(0.05, 1.0);
        sum += v;
      }
      for (double& v : targets[i]) v /= sum;
      items[i] = {states[i], rng.uniform_int(2), targets[i]};
    }
    BatchWorkspace ws;
    GradBuffer grad;
    grad.resize_like(student);
    distill_batch_gradients_ref(student, items, ws, grad);
    auto loss = [&](const Mlp& m) {
      double total = 0.0;
      for (const DistillItem& item : items) {
        const auto dists = forward_dists(m, item.state);
        total += kl_divergence(item.target, dists[item.action]);
      }
      return total / items.size();
    };
    const auto check = oracle::finite_difference_check(student, grad, loss, 100, 8);
    if (check.max_rel_error >= 1e-4) return false;
  }
  return true;
}

bool verify_linear() {
  using namespace ltcr;
  Rng rng(0xCAFE);
  for (const auto& [d, k] : {std::pair{2, 3}, std::pair{5, 7}}) {
    const LinearModel teacher = LinearModel::random(k, d, rng.next_u64());
    const LinearModel student = LinearModel::zeros(k, d);
    const FeatureMap features = FeatureMap::random(d + 3, d, rng.next_u64());
    const auto result = distill_flow(student, teacher, features, 0.5, 60000);
    if (max_prediction_tv(result.student, teacher, features) >= 1e-4) return false;
  }
  return true;
}

int cmd_verify() {
  struct Check {
    const char* name;
    bool (*fn)();
  };
  const Check checks[] = {
      {"projection vs high-precision oracle (10000 cases)", verify_projection},
      {"analytic gradients vs finite differences", verify_gradients},
      {"linear distillation prediction convergence", verify_linear},
  };
  bool all_ok = true;
  for (const Check& c : checks) {
    const bool ok = c.fn();
    std::cout << (ok ? "PASS" : "FAIL") << "  " << c.name << "\n";
    all_ok = all_ok && ok;
  }
  return all_ok ? kExitOk : kExitVerifyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("LTCR_THREADS"); threads && *threads) {
    const int n = std::atoi(threads);
    if (n > 0) omp_set_num_threads(n);
  }

  CLI::App app{"Peer-teaching categorical DQN experiments"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("config", config_path, "JSON config file")->required();

  std::vector<std::string> summarize_dirs;
  double threshold = 0.0;
  CLI::App* summarize =
      app.add_subcommand("summarize", "Summarize finished run directories");
  summarize->add_option("dirs", summarize_dirs, "run directories")->required();
  summarize->add_option("--threshold", threshold,
                        "override the frames-to-threshold target");

  std::vector<std::string> report_dirs;
  std::string report_out;
  CLI::App* report = app.add_subcommand("report", "Render figures and tables");
  report->add_option("dirs", report_dirs, "run directories")->required();
  report->add_option("--out", report_out, "output directory for the report");

  CLI::App* verify = app.add_subcommand(
      "verify", "Run the projection/gradient/linear oracle suites");
  (void)verify;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  if (run->parsed()) return cmd_run(config_path);
  if (summarize->parsed()) return cmd_summarize(summarize_dirs, threshold);
  if (report->parsed()) return cmd_report(report_dirs, report_out);
  return cmd_verify();
}
