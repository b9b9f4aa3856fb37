// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "dal/acquisition.hpp"
#include "dal/analysis.hpp"
#include "dal/cli.hpp"
#include "dal/config.hpp"
#include "dal/harness.hpp"
#include "oracles.hpp"

using namespace dal;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

MlpSpec make_spec(std::size_t in, std::vector<std::size_t> hidden, std::size_t out) {
  MlpSpec s;
  s.input_dim = in;
  s.hidden_widths = std::move(hidden);
  s.output_dim = out;
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome gradients() {
  const auto start = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t in = 1 + rng.uniform_index(5);
    const std::size_t out = 2 + rng.uniform_index(3);
    std::vector<std::size_t> hidden(rng.uniform_index(4));
    for (auto& w : hidden) w = 1 + rng.uniform_index(6);
    const MlpSpec spec = make_spec(in, hidden, out);
    // Random biases keep pre-activations off the ReLU kink at exactly zero.
    MlpParams p = init_params(spec, rng);
    for (auto& layer : p.layers)
      for (Eigen::Index c = 0; c < layer.bias.size(); ++c) layer.bias(c) = 0.1 * rng.normal();
    const auto rows = static_cast<Eigen::Index>(1 + rng.uniform_index(8));
    const Matrix x = oracle::normal_matrix(rows, static_cast<Eigen::Index>(in), rng);
    std::vector<ClassId> y(static_cast<std::size_t>(rows));
    for (auto& l : y) l = static_cast<ClassId>(rng.uniform_index(out));
    worst = std::max(worst, oracle::max_gradient_error(p, spec, x, y));
  }
  const double secs = seconds_since(start);
  return {worst < 1e-4 && secs < 30.0, fmt::format("max relative error {:.2e} over 20 networks, {:.1f}s", worst, secs)};
}

Outcome adam() {
  const MlpSpec spec = make_spec(1, {}, 2);
  MlpParams q = MlpParams::zeros(spec);
  q.layers[0].weights << 1.0, 2.0;
  MlpGradients h = MlpParams::zeros(spec);
  h.layers[0].weights << 0.7, 0.7;
  AdamState st(q);
  double theta = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    m = 0.9 * m + 0.1 * 0.7;
    v = 0.999 * v + 0.001 * 0.49;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    theta -= 0.001 * mh / (std::sqrt(vh) + 1e-8);
    adam_step(q, h, st);
  }
  const double err = std::abs(q.layers[0].weights(0, 0) - theta);

  Rng rng(7);
  MlpParams z = init_params(make_spec(3, {4}, 2), rng);
  const MlpParams before = z;
  AdamState sz(z);
  const MlpGradients zero = MlpParams::zeros(make_spec(3, {4}, 2));
  for (int i = 0; i < 5; ++i) adam_step(z, zero, sz);
  const bool fixed = z == before;
  return {err < 1e-12 && fixed, fmt::format("two-step error {:.1e}, zero gradient {}", err, fixed ? "fixed" : "moved")};
}

Outcome k_center() {
  const auto start = Clock::now();
  Rng rng(303);
  int ok = 0;
  double worst_ratio = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<Eigen::Index>(3 + rng.uniform_index(10));
    const std::size_t k = 1 + rng.uniform_index(3);
    const Matrix pts = oracle::normal_matrix(n, 2, rng);
    std::vector<Index> centers{rng.uniform_index(static_cast<std::size_t>(n))};
    const auto more = greedy_k_center(pts, centers, k - 1);
    centers.insert(centers.end(), more.begin(), more.end());
    const double greedy = covering_radius(pts, centers);
    const double optimal = oracle::optimal_k_center_radius(pts, k);
    if (greedy <= 2.0 * optimal + 1e-12) ++ok;
    if (optimal > 0.0) worst_ratio = std::max(worst_ratio, greedy / optimal);
  }
  const double secs = seconds_since(start);
  return {ok == 200 && secs < 60.0,
          fmt::format("{}/200 within 2x optimal, worst ratio {:.3f}, {:.1f}s", ok, worst_ratio, secs)};
}

Outcome deepfool_linear() {
  Rng rng(404);
  int ok = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto dim = static_cast<Eigen::Index>(2 + rng.uniform_index(6));
    Eigen::VectorXd w(dim), x(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      w(i) = rng.normal();
      x(i) = rng.normal();
    }
    const double b = rng.normal();
    auto [spec, params] = oracle::linear_binary_model(w, b);
    const auto r = deepfool_min_perturbation(params, spec, std::span<const double>(x.data(), static_cast<std::size_t>(dim)),
                                             DeepFoolSettings{50, 0.0});
    const double margin = oracle::linear_margin(w, b, x);
    const double rel = std::abs(r.norm - margin) / margin;
    worst = std::max(worst, rel);
    if (rel <= 0.01) ++ok;
  }
  return {ok == 100, fmt::format("{}/100 within 1%, worst relative error {:.2e}", ok, worst)};
}

Outcome egl() {
  TaskModel m;
  m.spec = make_spec(5, {8, 6}, 4);
  Rng rng(505);
  m.params = init_params(m.spec, rng);
  const Matrix x = oracle::normal_matrix(50, 5, rng);
  const auto scores = score_egl(m, x);
  double worst = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double brute = oracle::brute_force_egl(m, x.row(r));
    worst = std::max(worst, std::abs(scores[static_cast<std::size_t>(r)] - brute) / std::max(1.0, brute));
  }
  return {worst <= 1e-12, fmt::format("50 examples, max relative difference {:.1e}", worst)};
}

Outcome density() {
  const auto start = Clock::now();
  const ExperimentConfig cfg = parse_config(density_preset());
  const auto rows = run_density_experiment(cfg, prepare_data(cfg));
  std::map<std::string, std::vector<std::vector<double>>> props;  // strategy -> trial -> cluster
  for (const auto& r : rows) {
    auto& trials = props[r.strategy];
    if (trials.size() < r.trial) trials.resize(r.trial, std::vector<double>(3, 0.0));
    trials[r.trial - 1][r.cluster] = r.proportion;
  }
  const auto& dal = props["dal"];
  const auto& coreset = props["coreset"];
  const std::vector<double> target{0.7, 0.2, 0.1};
  std::vector<double> mean(3, 0.0);
  for (const auto& t : dal)
    for (std::size_t c = 0; c < 3; ++c) mean[c] += t[c] / static_cast<double>(dal.size());
  bool close = dal.size() == 10;
  for (std::size_t c = 0; c < 3; ++c) close = close && std::abs(mean[c] - target[c]) <= 0.08;
  int sparse_wins = 0;
  for (std::size_t t = 0; t < std::min(dal.size(), coreset.size()); ++t)
    if (coreset[t][2] > dal[t][2]) ++sparse_wins;
  const double secs = seconds_since(start);
  return {close && sparse_wins >= 8 && secs < 600.0,
          fmt::format("DAL mean [{:.3f}, {:.3f}, {:.3f}], core-set sparsest > DAL on {}/10 seeds, {:.0f}s", mean[0],
                      mean[1], mean[2], sparse_wins, secs)};
}

struct TenClass {
  std::map<std::string, double> final_mean;
  std::vector<double> egl_first_max;  // per trial
  double seconds = 0.0;
};

TenClass run_ten_class() {
  const auto start = Clock::now();
  const ExperimentConfig cfg = parse_config(ten_class_preset());
  const PreparedData data = prepare_data(cfg);
  const ExperimentResult r = run_experiment(cfg, data);
  TenClass out;
  const std::size_t final_size = cfg.initial_size + cfg.iterations * cfg.budget;
  for (const auto& a : r.aggregates)
    if (a.labeled_size == final_size) out.final_mean[a.strategy] = a.mean;
  for (const auto& t : r.trials) {
    if (t.strategy != Strategy::kEgl || t.batches.empty()) continue;
    const auto h = query_class_histogram(t.batches.front(), data.pool);
    out.egl_first_max.push_back(*std::max_element(h.begin(), h.end()));
  }
  out.seconds = seconds_since(start);
  return out;
}

Outcome better_than_random(const TenClass& run) {
  const double random = run.final_mean.at("random");
  bool ok = run.seconds < 900.0;
  std::string detail = fmt::format("random {:.3f}", random);
  for (const char* s : {"uncertainty-entropy", "dbal-entropy", "dfal", "dal"}) {
    const double m = run.final_mean.at(s);
    ok = ok && m >= random;
    detail += fmt::format(", {} {:.3f}", s, m);
  }
  return {ok, detail + fmt::format(", {:.0f}s", run.seconds)};
}

Outcome egl_bias(const TenClass& run) {
  const auto biased = std::count_if(run.egl_first_max.begin(), run.egl_first_max.end(), [](double f) { return f > 0.2; });
  std::string fractions;
  for (double f : run.egl_first_max) fractions += fmt::format("{}{:.2f}", fractions.empty() ? "" : " ", f);
  return {run.egl_first_max.size() == 10 && biased >= 8,
          fmt::format("max class fraction > 0.2 in {}/10 trials ({})", biased, fractions)};
}

Outcome ranking() {
  const ExperimentConfig cfg = parse_config(ten_class_preset(), {{"strategies", "uncertainty-entropy, dbal-entropy, dal"},
                                                                 {"repetitions", "5"},
                                                                 {"initial_size", "180"},
                                                                 {"task_hidden", "128, 64"},
                                                                 {"disc_hidden", "256, 256, 256"},
                                                                 {"disc_max_epochs", "300"}});
  const auto cmp = run_rank_comparison(cfg, prepare_data(cfg));
  double ent_dbal = 0.0, ent_dal = 0.0;
  for (const auto& c : cmp) {
    ent_dbal += c.spearman_matrix[0][1] / static_cast<double>(cmp.size());
    ent_dal += c.spearman_matrix[0][2] / static_cast<double>(cmp.size());
  }
  return {cmp.size() == 5 && ent_dbal > ent_dal && std::abs(ent_dal) < 0.3,
          fmt::format("mean Spearman(entropy, DBAL) {:.3f}, (entropy, DAL) {:.3f} over 5 seeds", ent_dbal, ent_dal)};
}

Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "dal_acceptance_det";
  std::filesystem::remove_all(dir);
  write_fixtures(dir);
  std::ostringstream out, err;
  for (const char* run : {"a", "b"}) {
    const std::string cfg = (dir / "blobs.cfg").string();
    const std::string dst = (dir / run).string();
    const char* argv[] = {"dal_bench", "run", "--config", cfg.c_str(), "--out", dst.c_str()};
    if (run_cli(6, argv, out, err) != kExitOk) return {false, "run failed: " + err.str()};
  }
  int files = 0;
  bool same = true;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "a")) {
    if (entry.path().extension() != ".csv") continue;
    ++files;
    same = same && slurp(entry.path()) == slurp(dir / "b" / entry.path().filename());
  }
  std::filesystem::remove_all(dir);
  return {same && files >= 4, fmt::format("{} CSV files compared, {}", files, same ? "identical" : "different")};
}

Outcome h_divergence() {
  const auto start = Clock::now();
  constexpr std::size_t kLabeled = 100, kTotal = 1100;
  bool separated_ok = true;
  double separated_worst = 0.0, iid_mean = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    DiscriminatorConfig dc;
    dc.seed = seed;
    dc.max_epochs = 30;

    Matrix sep(kTotal, 2);
    std::vector<Index> l, u;
    for (std::size_t r = 0; r < kTotal; ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      sep(row, 0) = rng.normal() + (r < kLabeled ? -10.0 : 10.0);
      sep(row, 1) = rng.normal();
      (r < kLabeled ? l : u).push_back(r);
    }
    const Pool split(l, u);
    const double v = estimate_h_divergence(train_discriminator(sep, split, dc), sep, split).value;
    separated_worst = std::max(separated_worst, std::abs(v - 2.0));
    separated_ok = separated_ok && std::abs(v - 2.0) <= 1e-9;

    const Matrix iid = oracle::normal_matrix(kTotal, 2, rng);
    const Pool pool = draw_initial_batch(Pool::all_unlabeled(kTotal), kLabeled, seed);
    iid_mean += estimate_h_divergence(train_discriminator(iid, pool, dc), iid, pool).value / 10.0;
  }
  return {separated_ok && iid_mean < 0.3,
          fmt::format("separated max |d - 2| {:.1e}, i.i.d. 1:10 mean {:.3f} over 10 seeds, {:.0f}s", separated_worst,
                      iid_mean, seconds_since(start))};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, gradients);
  report(2, adam);
  report(3, k_center);
  report(4, deepfool_linear);
  report(5, egl);
  report(6, density);
  TenClass ten;
  std::string ten_error;
  try {
    ten = run_ten_class();
  } catch (const std::exception& e) {
    ten_error = e.what();
  }
  report(7, [&] { return ten_error.empty() ? better_than_random(ten) : Outcome{false, "error: " + ten_error}; });
  report(8, [&] { return ten_error.empty() ? egl_bias(ten) : Outcome{false, "error: " + ten_error}; });
  report(9, ranking);
  report(10, determinism);
  report(11, h_divergence);
  return failures == 0 ? 0 : 1;
}
