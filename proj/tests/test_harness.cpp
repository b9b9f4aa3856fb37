#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dal/config.hpp"
#include "dal/error.hpp"
#include "dal/harness.hpp"

using namespace dal;

namespace {

constexpr std::string_view kBlobs = R"(
dataset = mixture
mixture_weights = 0.5, 0.5
mixture_means = 0 0; 5 0
mixture_samples = 300
strategies = random
initial_size = 20
budget = 10
iterations = 3
mini_queries = 5
repetitions = 10
seed = 4
task_hidden = 16, 8
task_epochs = 20
mc_passes = 5
disc_hidden = 32, 32
disc_max_epochs = 20
)";

ExperimentConfig blobs(std::vector<ConfigOverride> overrides = {}) { return parse_config(kBlobs, overrides); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

std::filesystem::path scratch(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("prepare_data: disjoint seeded split covering the source") {
  const ExperimentConfig cfg = blobs();
  const PreparedData d = prepare_data(cfg);
  CHECK(d.test.size() == 60);
  CHECK(d.pool.size() == 240);
  std::set<Index> all(d.pool_source_rows.begin(), d.pool_source_rows.end());
  for (Index t : d.test_source_rows) CHECK(all.insert(t).second);
  CHECK(all.size() == 300);
  CHECK(prepare_data(cfg).pool_source_rows == d.pool_source_rows);

  ExperimentConfig too_big = cfg;
  too_big.iterations = 100;
  CHECK_THROWS_AS(prepare_data(too_big), ConfigError);
}

TEST_CASE("oracle: labels, counts and refuses repeats") {
  Dataset d;
  d.features = Matrix::Zero(3, 1);
  d.labels = {2, 0, 1};
  d.class_count = 3;
  Oracle o(d);
  CHECK(oracle_label(o, 0) == 2);
  CHECK(o.label(2) == 1);
  CHECK(o.calls() == 2);
  CHECK_THROWS_AS(o.label(0), ContractViolation);
  CHECK_THROWS_AS(o.label(3), ContractViolation);
}

TEST_CASE("run_trial: zero iterations gives one curve point") {
  const ExperimentConfig cfg = blobs({{"iterations", "0"}});
  const PreparedData d = prepare_data(cfg);
  const TrialRecord r = run_trial(cfg, d, Strategy::kRandom, 1);
  REQUIRE(r.curve.size() == 1);
  CHECK(r.curve[0].labeled_size == 20);
  CHECK(r.oracle_calls == 20);
  CHECK(r.batches.empty());
}

TEST_CASE("run_trial: shared initial batch, disjoint batches, oracle accounting") {
  const ExperimentConfig cfg = blobs();
  ExperimentConfig keep = cfg;
  keep.keep_scores = true;
  const PreparedData d = prepare_data(cfg);
  std::vector<Index> first_initial;
  for (Strategy s : {Strategy::kRandom, Strategy::kUncertaintyEntropy, Strategy::kCoreset, Strategy::kDal}) {
    CAPTURE(to_string(s));
    const TrialRecord r = run_trial(keep, d, s, 2);
    if (first_initial.empty()) first_initial = r.initial_batch;
    CHECK(r.initial_batch == first_initial);
    CHECK(r.oracle_calls == cfg.initial_size + cfg.iterations * cfg.budget);
    std::set<Index> seen(r.initial_batch.begin(), r.initial_batch.end());
    for (const auto& b : r.batches) {
      CHECK(b.size() == cfg.budget);
      for (Index i : b) CHECK(seen.insert(i).second);
    }
    REQUIRE(r.curve.size() == cfg.iterations + 1);
    for (std::size_t i = 1; i < r.curve.size(); ++i) CHECK(r.curve[i].labeled_size > r.curve[i - 1].labeled_size);
    CHECK(r.final_labeled().size() == seen.size());
    if (s == Strategy::kUncertaintyEntropy) {
      CHECK(r.scores.size() == cfg.iterations);
      CHECK(r.score_rows.size() == cfg.iterations);
      CHECK(r.scores[0].size() == r.score_rows[0].size());
    }
  }
}

TEST_CASE("run_experiment: one repetition has zero spread, equal seeds agree") {
  const ExperimentConfig one = blobs({{"repetitions", "1"}});
  const ExperimentResult r = run_experiment(one);
  REQUIRE(r.aggregates.size() == one.iterations + 1);
  for (std::size_t i = 0; i < r.aggregates.size(); ++i) {
    CHECK(r.aggregates[i].stddev == 0.0);
    CHECK(r.aggregates[i].mean == r.trials[0].curve[i].test_accuracy);
  }

  // The same strategy listed twice runs identical trials.
  const ExperimentConfig twice = blobs({{"repetitions", "1"}, {"strategies", "random, random"}});
  const ExperimentResult t = run_experiment(twice);
  REQUIRE(t.trials.size() == 2);
  CHECK(t.trials[0].curve[2].test_accuracy == t.trials[1].curve[2].test_accuracy);
  for (const auto& a : t.aggregates) CHECK(a.stddev == 0.0);
}

TEST_CASE("run_experiment: random on separable blobs improves on average") {
  const ExperimentResult r = run_experiment(blobs());
  REQUIRE(r.aggregates.size() == 4);
  for (std::size_t i = 1; i < r.aggregates.size(); ++i)
    CHECK(r.aggregates[i].mean >= r.aggregates[i - 1].mean - 1e-12);
}

TEST_CASE("run_experiment: outputs, headers and parallel determinism") {
  const auto dir_a = scratch("dal_harness_a");
  const auto dir_b = scratch("dal_harness_b");
  ExperimentConfig cfg = blobs({{"strategies", "random, uncertainty-entropy, coreset, dal"}, {"repetitions", "2"}});
  cfg.output_dir = dir_a;
  run_experiment(cfg);
  cfg.output_dir = dir_b;
  cfg.parallel_trials = 3;
  run_experiment(cfg);

  CHECK(first_line(dir_a / "curves.csv") == "strategy,trial,labeled_size,test_accuracy");
  CHECK(first_line(dir_a / "queries.csv") == "strategy,trial,iteration,dataset_index");
  CHECK(first_line(dir_a / "curves_agg.csv") == "strategy,labeled_size,mean,std,trials");
  CHECK(first_line(dir_a / "class_hist.csv") == "strategy,trial,iteration,class,fraction");
  for (const char* f : {"curves.csv", "queries.csv", "curves_agg.csv", "class_hist.csv"})
    CHECK(slurp(dir_a / f) == slurp(dir_b / f));

  // The config echo round-trips.
  const ExperimentConfig echoed = parse_config(slurp(dir_a / "config_echo.txt"));
  CHECK(echo_config(echoed) == slurp(dir_a / "config_echo.txt"));

  // queries.csv holds 4 strategies x 2 trials x 3 iterations x 10 rows.
  const std::string q = slurp(dir_a / "queries.csv");
  CHECK(std::count(q.begin(), q.end(), '\n') == 1 + 4 * 2 * 3 * 10);
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("run_experiment: unwritable output directory names the path") {
  const auto file = std::filesystem::temp_directory_path() / "dal_harness_not_a_dir";
  std::ofstream(file) << "x";
  ExperimentConfig cfg = blobs({{"repetitions", "1"}, {"iterations", "0"}});
  cfg.output_dir = file / "sub";
  try {
    run_experiment(cfg);
    FAIL("expected an I/O error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("dal_harness_not_a_dir") != std::string::npos);
  }
  std::filesystem::remove(file);
}

TEST_CASE("rank comparison and density experiment outputs") {
  const auto dir = scratch("dal_harness_rank");
  ExperimentConfig cfg = blobs({{"strategies", "uncertainty-entropy, dbal-entropy, coreset, dal"}, {"repetitions", "2"}});
  cfg.output_dir = dir;
  const PreparedData d = prepare_data(cfg);
  const auto cmp = run_rank_comparison(cfg, d);
  REQUIRE(cmp.size() == 2);
  CHECK(cmp[0].snapshots.size() == 3);  // core-set does not rank
  CHECK(cmp[0].spearman_matrix[0][0] == 1.0);
  CHECK(cmp[0].spearman_matrix[0][1] == cmp[0].spearman_matrix[1][0]);
  REQUIRE(cmp[0].divergence.has_value());
  CHECK(cmp[0].divergence->labeled_count == cfg.initial_size);
  write_rank_outputs(cfg, cmp);
  CHECK(first_line(dir / "ranking_pairs.csv") == "trial,strategy_a,strategy_b,example_id,rank_a,rank_b");
  CHECK(first_line(dir / "spearman.csv") == "trial,strategy_a,strategy_b,spearman");
  CHECK(first_line(dir / "divergence.csv") == "trial,threshold,labeled,unlabeled,divergence");

  ExperimentConfig dens = blobs({{"strategies", "dal, coreset"}, {"repetitions", "2"}, {"iterations", "1"}});
  dens.output_dir = dir;
  const auto rows = run_density_experiment(dens, prepare_data(dens));
  CHECK(rows.size() == 2 * 2 * 2);
  double total = 0.0;
  for (const auto& r : rows)
    if (r.strategy == "dal" && r.trial == 1) total += r.proportion;
  CHECK(total == doctest::Approx(1.0));
  write_density_outputs(dens, rows);
  CHECK(first_line(dir / "cluster_props.csv") == "strategy,trial,cluster,proportion");
  std::filesystem::remove_all(dir);
}

TEST_CASE("blob fixture, four strategies x 10 trials, within the time budget") {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentResult r = run_experiment(blobs({{"strategies", "random, uncertainty-entropy, coreset, dal"}}));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(r.trials.size() == 40);
  CHECK(seconds < 300.0);
}

TEST_CASE("run_parallel: every job runs once and errors propagate") {
  std::vector<int> hits(50, 0);
  run_parallel(50, 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(run_parallel(5, 2, [](std::size_t i) {
                    if (i == 3) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}
