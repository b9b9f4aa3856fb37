#include "dal/cli.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dal/config.hpp"
#include "dal/error.hpp"
#include "dal/harness.hpp"

namespace dal {

namespace {

constexpr std::string_view kDensityPreset = R"(# DAL vs core-set on a 3-cluster mixture (pool 3000)
dataset = mixture
mixture_weights = 0.7, 0.2, 0.1
mixture_means = 0 0; 8 0; 0 8
mixture_samples = 3750
test_fraction = 0.2
strategies = dal, coreset
initial_size = 60
budget = 60
iterations = 5
mini_queries = 10
repetitions = 10
seed = 1
task_hidden = 32, 16
task_epochs = 30
disc_hidden = 64, 64, 64
disc_max_epochs = 30
)";

constexpr std::string_view kBlobsConfig = R"(# small 3-class mixture exercising every strategy
dataset = mixture
mixture_weights = 0.4, 0.35, 0.25
mixture_means = 0 0; 4 0; 0 4
mixture_samples = 500
strategies = random, uncertainty-entropy, uncertainty-varratio, dbal-entropy, dbal-varratio, dfal, egl, coreset, dal
initial_size = 20
budget = 10
iterations = 2
mini_queries = 5
repetitions = 2
seed = 7
task_hidden = 16, 8
task_epochs = 10
mc_passes = 5
disc_hidden = 32, 32
disc_max_epochs = 20
deepfool_max_iter = 20
)";

constexpr std::string_view kIdxBlobsConfig = R"(# the IDX fixture through the same protocol
dataset = idx
idx_images = fixture_images.idx
idx_labels = fixture_labels.idx
strategies = random, uncertainty-entropy, coreset, dal
initial_size = 20
budget = 10
iterations = 2
mini_queries = 5
repetitions = 2
seed = 11
task_hidden = 16, 8
task_epochs = 10
disc_hidden = 32, 32
disc_max_epochs = 20
)";

// Ten unit-variance classes in 10 dimensions, class c centred on 2.2 e_c.
std::string make_ten_class_config() {
  std::string means;
  for (int c = 0; c < 10; ++c) {
    if (c) means += "; ";
    for (int d = 0; d < 10; ++d) means += fmt::format("{}{}", d ? " " : "", c == d ? 4.0 : 0.0);
  }
  return fmt::format(R"(# 10-class mixture, pool 2000
dataset = mixture
mixture_weights = 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1
mixture_means = {}
mixture_samples = 2500
test_fraction = 0.2
strategies = random, uncertainty-entropy, dbal-entropy, dfal, egl, dal
initial_size = 50
budget = 25
iterations = 8
mini_queries = 10
repetitions = 10
seed = 3
task_hidden = 32, 16
task_epochs = 1500
mc_passes = 10
disc_hidden = 64, 64, 64
disc_max_epochs = 30
)",
                     means);
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open file for writing");
  out << text;
  if (!out) throw IoError(path.string(), "write failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", 0, "cannot read config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Invocation {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::size_t parallel_trials = 0;  // 0: keep the config value
};

ExperimentConfig load_config(const Invocation& inv, std::string_view fallback) {
  std::string text;
  if (!inv.config_path.empty()) {
    text = read_text(inv.config_path);
  } else if (!fallback.empty()) {
    text = std::string(fallback);
  } else {
    throw ConfigError("config", 0, "--config is required");
  }
  std::vector<ConfigOverride> overrides;
  for (const auto& s : inv.overrides) overrides.push_back(parse_override(s));
  if (!inv.out_dir.empty()) overrides.emplace_back("output_dir", inv.out_dir);
  if (inv.parallel_trials != 0) overrides.emplace_back("parallel_trials", std::to_string(inv.parallel_trials));
  ExperimentConfig cfg = parse_config(text, overrides);

  // IDX paths are relative to the config file.
  if (!inv.config_path.empty()) {
    const auto base = std::filesystem::path(inv.config_path).parent_path();
    if (cfg.idx_images.is_relative()) cfg.idx_images = base / cfg.idx_images;
    if (cfg.idx_labels.is_relative()) cfg.idx_labels = base / cfg.idx_labels;
  }
  if (cfg.output_dir.empty()) throw ConfigError("output_dir", 0, "no output directory (use --out)");
  return cfg;
}

void write_echo(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  write_text(cfg.output_dir / "config_echo.txt", echo_config(cfg));
}

void add_common(CLI::App* cmd, Invocation& inv, bool config_required) {
  auto* opt = cmd->add_option("--config", inv.config_path, "experiment config file");
  if (config_required) opt->required();
  cmd->add_option("--out", inv.out_dir, "output directory (overrides output_dir)");
  cmd->add_option("--set", inv.overrides, "override a config key, key=value (repeatable)");
  cmd->add_option("--parallel-trials", inv.parallel_trials, "concurrent trials")->check(CLI::PositiveNumber);
}

}  // namespace

std::string_view density_preset() { return kDensityPreset; }

std::string ten_class_preset() { return make_ten_class_config(); }

void write_fixtures(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory (" + ec.message() + ")");

  // 8x8 images, ten classes; class c lights up pixels 6c .. 6c + 5.
  MixtureSpec spec;
  spec.sample_count = 400;
  spec.seed = 20240601;
  for (std::size_t c = 0; c < 10; ++c) {
    spec.weights.push_back(0.1);
    std::vector<double> mean(64, 0.0);
    for (std::size_t p = 6 * c; p < 6 * c + 6; ++p) mean[p] = 4.0;
    spec.means.push_back(std::move(mean));
  }
  const Dataset images = synth_gaussian_mixture(spec);
  const std::uint32_t dims[] = {8, 8};
  write_file_bytes(dir / "fixture_images.idx", encode_idx_images(images.features, dims));
  write_file_bytes(dir / "fixture_labels.idx", encode_idx_labels(images.labels));

  write_text(dir / "blobs.cfg", kBlobsConfig);
  write_text(dir / "idx_blobs.cfg", kIdxBlobsConfig);
  write_text(dir / "density.cfg", kDensityPreset);
  write_text(dir / "ten_class.cfg", ten_class_preset());
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active learning benchmark over pool-based strategies", "dal_bench"};
  app.require_subcommand(1);

  Invocation inv;
  auto* run = app.add_subcommand("run", "run the full experiment and write learning curves");
  add_common(run, inv, true);
  auto* rank = app.add_subcommand("rank-compare", "rank the first-iteration pool with every score-based strategy");
  add_common(rank, inv, true);
  auto* demo = app.add_subcommand("synth-demo", "labeled-set cluster proportions of DAL vs core-set");
  add_common(demo, inv, false);
  std::string fixture_dir;
  auto* fixtures = app.add_subcommand("fixtures", "write IDX and mixture fixtures");
  fixtures->add_option("--out", fixture_dir, "destination directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "dal_bench: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    if (*fixtures) {
      write_fixtures(fixture_dir);
      out << "fixtures written to " << fixture_dir << '\n';
    } else if (*run) {
      const ExperimentConfig cfg = load_config(inv, {});
      const ExperimentResult result = run_experiment(cfg);
      out << "wrote " << result.trials.size() << " trials to " << cfg.output_dir.string() << '\n';
    } else if (*rank) {
      const ExperimentConfig cfg = load_config(inv, {});
      const auto cmp = run_rank_comparison(cfg, prepare_data(cfg));
      write_rank_outputs(cfg, cmp);
      write_echo(cfg);
      out << "wrote rankings for " << cmp.size() << " trials to " << cfg.output_dir.string() << '\n';
    } else if (*demo) {
      const ExperimentConfig cfg = load_config(inv, kDensityPreset);
      const auto rows = run_density_experiment(cfg, prepare_data(cfg));
      write_density_outputs(cfg, rows);
      write_echo(cfg);
      out << "wrote cluster proportions to " << cfg.output_dir.string() << '\n';
    }
  } catch (const ConfigError& e) {
    err << "dal_bench: configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "dal_bench: error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitOk;
}

}  // namespace dal
