#include "dal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "dal/config.hpp"
#include "dal/error.hpp"

namespace dal {

void ExperimentConfig::validate() const {
  const auto fail = [](const char* key, const std::string& msg) {
    throw ConfigError(key, 0, std::string("config: key '") + key + "': " + msg);
  };
  if (strategies.empty()) fail("strategies", "no strategies given");
  if (initial_size < 5) fail("initial_size", "must be at least 5 (validation carve)");
  if (budget < 1) fail("budget", "must be at least 1");
  if (repetitions < 1) fail("repetitions", "must be at least 1");
  if (mini_queries < 1 || mini_queries > budget) fail("mini_queries", "must be in [1, budget]");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail("test_fraction", "must be in (0, 1)");
  if (task_hidden.empty()) fail("task_hidden", "need at least one hidden layer");
}

// ---------------------------------------------------------------------------

PreparedData prepare_data(const ExperimentConfig& config) {
  config.validate();
  Dataset source;
  if (config.source == DatasetSource::kMixture) {
    source = synth_gaussian_mixture(config.mixture);
  } else {
    source = load_idx_dataset(config.idx_images, config.idx_labels);
  }
  source.validate();

  const std::size_t n = source.size();
  auto test_count = static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(n)));
  test_count = std::clamp<std::size_t>(test_count, 1, n > 1 ? n - 1 : 1);
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(derive_seed(config.seed, "test-split"));
  rng.shuffle(std::span<Index>(order));

  PreparedData out;
  out.test_source_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_count));
  out.pool_source_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(test_count), order.end());
  std::sort(out.test_source_rows.begin(), out.test_source_rows.end());
  std::sort(out.pool_source_rows.begin(), out.pool_source_rows.end());
  out.pool = source.subset(out.pool_source_rows);
  out.test = source.subset(out.test_source_rows);

  const std::size_t needed = config.initial_size + config.iterations * config.budget;
  if (needed > out.pool.size()) {
    throw ConfigError("budget", 0,
                      fmt::format("config: initial_size + iterations * budget = {} exceeds pool size {}",
                                  needed, out.pool.size()));
  }
  return out;
}

Oracle::Oracle(const Dataset& dataset) : dataset_(&dataset), revealed_(dataset.size(), 0) {}

ClassId Oracle::label(Index i) {
  DAL_REQUIRE(i < dataset_->size(), "oracle: index " + std::to_string(i) + " out of range");
  DAL_REQUIRE(!revealed_[i], "oracle: index " + std::to_string(i) + " is already labeled");
  revealed_[i] = 1;
  ++calls_;
  return dataset_->labels[i];
}

std::vector<Index> TrialRecord::final_labeled() const {
  std::vector<Index> all = initial_batch;
  for (const auto& b : batches) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  return all;
}

std::uint64_t trial_seed(const ExperimentConfig& config, std::size_t trial) {
  return config.seed + static_cast<std::uint64_t>(trial);
}

namespace {

MlpSpec task_spec(const ExperimentConfig& config, const Dataset& pool) {
  MlpSpec spec;
  spec.input_dim = pool.dim();
  spec.hidden_widths = config.task_hidden;
  spec.output_dim = pool.class_count;
  spec.dropout_rate = config.task_dropout;
  return spec;
}

std::uint64_t query_seed(std::uint64_t trial_seed, Strategy s, std::size_t iteration) {
  return derive_seed(trial_seed, std::string("query:") + std::string(to_string(s)), iteration);
}

Pool initial_pool(const ExperimentConfig& config, const PreparedData& data, std::uint64_t ts) {
  return draw_initial_batch(Pool::all_unlabeled(data.pool.size()), config.initial_size,
                            derive_seed(ts, "initial-batch"));
}

TaskModel train_round_model(const ExperimentConfig& config, const PreparedData& data,
                            const Pool& pool, std::uint64_t ts, std::size_t iteration) {
  return train_task_model(data.pool, pool.labeled(), task_spec(config, data.pool), config.task_train,
                          derive_seed(ts, "task-model", iteration));
}

}  // namespace

TrialRecord run_trial(const ExperimentConfig& config, const PreparedData& data, Strategy strategy,
                      std::size_t trial) {
  TrialRecord rec;
  rec.strategy = strategy;
  rec.trial = trial;
  rec.trial_seed = trial_seed(config, trial);
  const std::string name(to_string(strategy));

  Pool pool = initial_pool(config, data, rec.trial_seed);
  rec.initial_batch = pool.labeled();
  Oracle oracle(data.pool);
  for (Index i : rec.initial_batch) oracle_label(oracle, i);

  for (std::size_t it = 0;; ++it) {
    const TaskModel model = train_round_model(config, data, pool, rec.trial_seed, it);
    const double acc = evaluate_accuracy(model.params, model.spec, data.test.features, data.test.labels);
    rec.curve.push_back({name, trial, pool.labeled().size(), acc});
    if (it == config.iterations) break;

    QueryPlan plan;
    plan.budget = config.budget;
    plan.mini_queries = config.mini_queries;
    plan.strategy = strategy;
    plan.seed = query_seed(rec.trial_seed, strategy, it);
    QueryResult q = select(model, pool, data.pool, plan, config.acquisition);
    DAL_REQUIRE(q.indices.size() == config.budget, "strategy returned the wrong batch size");
    for (Index i : q.indices) oracle_label(oracle, i);
    if (config.keep_scores && q.scores) {
      rec.scores.push_back(std::move(*q.scores));
      rec.score_rows.push_back(pool.unlabeled());
    }
    pool.label(q.indices);
    pool.check_invariants();
    rec.batches.push_back(std::move(q.indices));
  }
  rec.oracle_calls = oracle.calls();
  return rec;
}

void run_parallel(std::size_t job_count, std::size_t workers,
                  const std::function<void(std::size_t)>& job) {
  workers = std::max<std::size_t>(1, std::min(workers, job_count));
  std::vector<std::exception_ptr> errors(job_count);
  if (workers == 1) {
    for (std::size_t i = 0; i < job_count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < job_count; i = next++) {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const PreparedData& data) {
  config.validate();
  const std::size_t reps = config.repetitions;
  ExperimentResult result;
  result.trials.resize(config.strategies.size() * reps);
  run_parallel(result.trials.size(), config.parallel_trials, [&](std::size_t job) {
    result.trials[job] = run_trial(config, data, config.strategies[job / reps], job % reps + 1);
  });
  std::vector<LearningCurvePoint> points;
  for (const auto& t : result.trials) points.insert(points.end(), t.curve.begin(), t.curve.end());
  result.aggregates = aggregate_curves(points);
  if (!config.output_dir.empty()) write_experiment_outputs(config, data, result);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, prepare_data(config));
}

// ---------------------------------------------------------------------------
// Output

namespace {

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, std::string_view header) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw IoError(path.string(), "cannot open file for writing");
    out_ << header << '\n';
  }

  template <class... Args>
  void row(fmt::format_string<Args...> f, Args&&... args) {
    out_ << fmt::format(f, std::forward<Args>(args)...) << '\n';
  }

  ~CsvFile() = default;

  void close() {
    out_.close();
    if (!out_) throw IoError(path_.string(), "write failed");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create output directory (" + ec.message() + ")");
}

}  // namespace

void write_experiment_outputs(const ExperimentConfig& config, const PreparedData& data,
                              const ExperimentResult& result) {
  const auto& dir = config.output_dir;
  ensure_dir(dir);

  CsvFile curves(dir / "curves.csv", "strategy,trial,labeled_size,test_accuracy");
  for (const auto& t : result.trials)
    for (const auto& p : t.curve) curves.row("{},{},{},{}", p.strategy, p.trial, p.labeled_size, p.test_accuracy);
  curves.close();

  CsvFile queries(dir / "queries.csv", "strategy,trial,iteration,dataset_index");
  for (const auto& t : result.trials)
    for (std::size_t it = 0; it < t.batches.size(); ++it)
      for (Index i : t.batches[it])
        queries.row("{},{},{},{}", to_string(t.strategy), t.trial, it + 1, data.pool_source_rows[i]);
  queries.close();

  CsvFile agg(dir / "curves_agg.csv", "strategy,labeled_size,mean,std,trials");
  for (const auto& a : result.aggregates) agg.row("{},{},{},{},{}", a.strategy, a.labeled_size, a.mean, a.stddev, a.count);
  agg.close();

  CsvFile hist(dir / "class_hist.csv", "strategy,trial,iteration,class,fraction");
  for (const auto& t : result.trials) {
    for (std::size_t it = 0; it < t.batches.size(); ++it) {
      const auto h = query_class_histogram(t.batches[it], data.pool);
      for (std::size_t c = 0; c < h.size(); ++c) hist.row("{},{},{},{},{}", to_string(t.strategy), t.trial, it + 1, c, h[c]);
    }
  }
  hist.close();

  std::ofstream echo(dir / "config_echo.txt", std::ios::trunc);
  if (!echo) throw IoError((dir / "config_echo.txt").string(), "cannot open file for writing");
  echo << echo_config(config);
  if (!echo) throw IoError((dir / "config_echo.txt").string(), "write failed");
}

// ---------------------------------------------------------------------------

std::vector<RankComparison> run_rank_comparison(const ExperimentConfig& config,
                                                const PreparedData& data) {
  config.validate();
  std::vector<Strategy> ranked;
  for (Strategy s : config.strategies)
    if (produces_ranking(s)) ranked.push_back(s);
  DAL_REQUIRE(!ranked.empty(), "rank comparison: no score-based strategy configured");

  std::vector<RankComparison> out(config.repetitions);
  run_parallel(out.size(), config.parallel_trials, [&](std::size_t job) {
    const std::size_t trial = job + 1;
    const std::uint64_t ts = trial_seed(config, trial);
    const Pool pool = initial_pool(config, data, ts);
    const TaskModel model = train_round_model(config, data, pool, ts, 0);
    const auto& u = pool.unlabeled();
    std::vector<Index> ids;
    ids.reserve(u.size());
    for (Index i : u) ids.push_back(data.pool_source_rows[i]);

    RankComparison cmp;
    cmp.trial = trial;
    for (Strategy s : ranked) {
      const std::uint64_t seed = query_seed(ts, s, 0);
      ScoreVector scores;
      if (s == Strategy::kDal) {
        const Matrix embeddings = embed(model, data.pool.features);
        DiscriminatorConfig dc = config.acquisition.discriminator;
        dc.seed = derive_seed(seed, "dal-mini-query", 0);
        const Discriminator disc = train_discriminator(embeddings, pool, dc);
        scores = probability_unlabeled(disc, embeddings, u);
        DivergenceEstimate est = estimate_h_divergence(disc, embeddings, pool);
        cmp.divergence = est;
      } else {
        scores = compute_scores(s, model, pool, data.pool, config.acquisition, seed);
      }
      cmp.snapshots.push_back(rank_scores(std::string(to_string(s)), scores, ids));
    }
    const std::size_t m = cmp.snapshots.size();
    cmp.spearman_matrix.assign(m, std::vector<double>(m, 1.0));
    if (u.size() >= 2) {
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
          cmp.spearman_matrix[a][b] = cmp.spearman_matrix[b][a] =
              spearman(cmp.snapshots[a].ranks, cmp.snapshots[b].ranks);
    }
    out[job] = std::move(cmp);
  });
  return out;
}

void write_rank_outputs(const ExperimentConfig& config, const std::vector<RankComparison>& result) {
  const auto& dir = config.output_dir;
  ensure_dir(dir);
  CsvFile pairs(dir / "ranking_pairs.csv", "trial,strategy_a,strategy_b,example_id,rank_a,rank_b");
  CsvFile rho(dir / "spearman.csv", "trial,strategy_a,strategy_b,spearman");
  CsvFile div(dir / "divergence.csv", "trial,threshold,labeled,unlabeled,divergence");
  for (const auto& cmp : result) {
    const std::size_t m = cmp.snapshots.size();
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        const auto& sa = cmp.snapshots[a];
        const auto& sb = cmp.snapshots[b];
        rho.row("{},{},{},{}", cmp.trial, sa.strategy, sb.strategy, cmp.spearman_matrix[a][b]);
        if (b <= a) continue;
        for (const auto& r : export_ranking_pairs(sa, sb))
          pairs.row("{},{},{},{},{},{}", cmp.trial, sa.strategy, sb.strategy, r.example_id, r.rank_a, r.rank_b);
      }
    }
    if (cmp.divergence) {
      const auto& d = *cmp.divergence;
      div.row("{},{},{},{},{}", cmp.trial, d.threshold, d.labeled_count, d.unlabeled_count, d.value);
    }
  }
  pairs.close();
  rho.close();
  div.close();
}

// ---------------------------------------------------------------------------

std::vector<ClusterProportionRow> run_density_experiment(const ExperimentConfig& config,
                                                         const PreparedData& data) {
  config.validate();
  DAL_REQUIRE(data.pool.cluster_ids.has_value(), "density experiment needs a mixture dataset");
  const std::size_t reps = config.repetitions;
  std::vector<std::vector<double>> props(config.strategies.size() * reps);
  run_parallel(props.size(), config.parallel_trials, [&](std::size_t job) {
    const TrialRecord rec = run_trial(config, data, config.strategies[job / reps], job % reps + 1);
    props[job] = cluster_proportions(rec.final_labeled(), data.pool);
  });
  std::vector<ClusterProportionRow> rows;
  for (std::size_t job = 0; job < props.size(); ++job)
    for (std::size_t c = 0; c < props[job].size(); ++c)
      rows.push_back({std::string(to_string(config.strategies[job / reps])), job % reps + 1, c, props[job][c]});
  return rows;
}

void write_density_outputs(const ExperimentConfig& config, const std::vector<ClusterProportionRow>& rows) {
  ensure_dir(config.output_dir);
  CsvFile out(config.output_dir / "cluster_props.csv", "strategy,trial,cluster,proportion");
  for (const auto& r : rows) out.row("{},{},{},{}", r.strategy, r.trial, r.cluster, r.proportion);
  out.close();
}

}  // namespace dal
