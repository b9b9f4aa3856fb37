#include "dal/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dal/error.hpp"

namespace dal {

namespace {

struct KeySpec {
  std::string_view name;
  std::string_view default_value;
  bool required;
  std::string_view help;
};

// Order here is the order of the config echo.
const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table{
      {"dataset", "", true, "data source: mixture | idx"},
      {"idx_images", "", false, "IDX image file (dataset = idx)"},
      {"idx_labels", "", false, "IDX label file (dataset = idx)"},
      {"mixture_weights", "", false, "component weights, summing to 1 (dataset = mixture)"},
      {"mixture_means", "", false, "component means, `;` between components"},
      {"mixture_variances", "", false, "diagonal variances per component (default 1)"},
      {"mixture_classes", "", false, "class id per component (default: component index)"},
      {"mixture_samples", "", false, "number of samples drawn (dataset = mixture)"},
      {"test_fraction", "0.2", false, "held-out test fraction carved before pooling"},
      {"strategies", "", true, "comma-separated strategy names"},
      {"initial_size", "", true, "size of the initial random labeled batch"},
      {"budget", "", true, "examples queried per iteration (K)"},
      {"iterations", "", true, "number of query iterations"},
      {"mini_queries", "10", false, "DAL mini-queries per query (n)"},
      {"repetitions", "10", false, "trials per strategy (R)"},
      {"seed", "0", false, "base seed; trial t uses seed + t"},
      {"task_hidden", "128, 64", false, "task model hidden widths"},
      {"task_dropout", "0.25", false, "task model dropout rate"},
      {"task_epochs", "50", false, "task model epochs per iteration"},
      {"batch_size", "32", false, "mini-batch size for all training"},
      {"learning_rate", "0.001", false, "Adam learning rate for all training"},
      {"mc_passes", "20", false, "MC-dropout forward passes (T)"},
      {"disc_threshold", "0.98", false, "discriminator train-accuracy stop threshold"},
      {"disc_hidden", "256, 256, 256", false, "discriminator hidden widths"},
      {"disc_max_epochs", "300", false, "discriminator epoch cap"},
      {"deepfool_max_iter", "50", false, "DeepFool iteration cap"},
      {"deepfool_overshoot", "0.02", false, "DeepFool overshoot"},
      {"output_dir", "", false, "directory for CSV outputs"},
      {"parallel_trials", "1", false, "concurrent trials"},
  };
  return table;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

struct Entry {
  std::string value;
  std::size_t line;  // 0 = command-line override
};

class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  [[noreturn]] void fail(std::string_view key, const std::string& msg) const {
    const auto it = entries_.find(std::string(key));
    const std::size_t line = it == entries_.end() ? 0 : it->second.line;
    const std::string where = it == entries_.end() ? std::string("config")
                              : line == 0          ? std::string("override")
                                                   : "line " + std::to_string(line);
    throw ConfigError(std::string(key), line, where + ": key '" + std::string(key) + "': " + msg);
  }

  bool has(std::string_view key) const { return entries_.count(std::string(key)) > 0; }

  std::string_view raw(std::string_view key) const {
    const auto it = entries_.find(std::string(key));
    if (it == entries_.end()) fail(key, "missing required key");
    return it->second.value;
  }

  std::string str(std::string_view key) const { return std::string(raw(key)); }

  template <class T>
  T number(std::string_view key, std::string_view text) const {
    T value{};
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty())
      fail(key, "expected " + std::string(std::is_integral_v<T> ? "an integer" : "a number") +
                    ", got '" + std::string(text) + "'");
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(value)) fail(key, "value must be finite");
    }
    return value;
  }

  std::size_t count(std::string_view key) const { return number<std::size_t>(key, raw(key)); }
  std::uint64_t u64(std::string_view key) const { return number<std::uint64_t>(key, raw(key)); }
  double real(std::string_view key) const { return number<double>(key, raw(key)); }

  std::vector<std::size_t> count_list(std::string_view key) const {
    std::vector<std::size_t> out;
    for (auto part : split(raw(key), ',')) out.push_back(number<std::size_t>(key, part));
    return out;
  }

  std::vector<double> real_list(std::string_view key, std::string_view text) const {
    std::vector<double> out;
    std::string normalized(text);
    std::replace(normalized.begin(), normalized.end(), ',', ' ');
    std::istringstream in(normalized);
    std::string token;
    while (in >> token) out.push_back(number<double>(key, token));
    if (out.empty()) fail(key, "empty list");
    return out;
  }

  std::vector<std::vector<double>> real_rows(std::string_view key) const {
    std::vector<std::vector<double>> rows;
    for (auto part : split(raw(key), ';')) rows.push_back(real_list(key, part));
    return rows;
  }

  void check(bool ok, std::string_view key, const std::string& msg) const {
    if (!ok) fail(key, msg);
  }

 private:
  std::map<std::string, Entry> entries_;
};

const KeySpec* find_key(std::string_view name) {
  for (const auto& k : key_table())
    if (k.name == name) return &k;
  return nullptr;
}

std::string join_counts(const std::vector<std::size_t>& v) { return fmt::format("{}", fmt::join(v, ", ")); }

std::string join_reals(const std::vector<double>& v) { return fmt::format("{}", fmt::join(v, ", ")); }

std::string join_rows(const std::vector<std::vector<double>>& rows) {
  std::vector<std::string> parts;
  for (const auto& r : rows) parts.push_back(join_reals(r));
  return fmt::format("{}", fmt::join(parts, "; "));
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& k : key_table()) out.push_back({k.name, k.default_value, k.help});
    return out;
  }();
  return keys;
}

ConfigOverride parse_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || trim(assignment.substr(0, eq)).empty())
    throw ConfigError(std::string(assignment), 0,
                      "override: expected key=value, got '" + std::string(assignment) + "'");
  return {std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1)))};
}

ExperimentConfig parse_config(std::string_view text, const std::vector<ConfigOverride>& overrides) {
  std::map<std::string, Entry> entries;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? text.size() - start : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(std::string(line), line_no,
                        "line " + std::to_string(line_no) + ": expected key = value, got '" + std::string(line) + "'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (find_key(key) == nullptr)
      throw ConfigError(key, line_no, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (entries.count(key))
      throw ConfigError(key, line_no, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    entries[key] = {value, line_no};
  }
  for (const auto& [key, value] : overrides) {
    if (find_key(key) == nullptr) throw ConfigError(key, 0, "override: unknown key '" + key + "'");
    entries[key] = {value, 0};
  }
  for (const auto& k : key_table()) {
    const auto it = entries.find(std::string(k.name));
    if (it != entries.end() && it->second.value.empty() && (k.required || !k.default_value.empty())) {
      Reader(entries).fail(k.name, "empty value");
    }
    if (it == entries.end() && !k.default_value.empty()) entries[std::string(k.name)] = {std::string(k.default_value), 0};
  }

  const Reader in(std::move(entries));
  ExperimentConfig cfg;

  const std::string source = in.str("dataset");
  if (source == "mixture") {
    cfg.source = DatasetSource::kMixture;
    cfg.mixture.weights = in.real_list("mixture_weights", in.raw("mixture_weights"));
    cfg.mixture.means = in.real_rows("mixture_means");
    if (in.has("mixture_variances") && !in.raw("mixture_variances").empty())
      cfg.mixture.variances = in.real_rows("mixture_variances");
    if (in.has("mixture_classes") && !in.raw("mixture_classes").empty()) {
      for (std::size_t c : in.count_list("mixture_classes")) {
        in.check(c <= 255, "mixture_classes", "class ids must be below 256");
        cfg.mixture.class_ids.push_back(static_cast<ClassId>(c));
      }
    }
    cfg.mixture.sample_count = in.count("mixture_samples");
    try {
      cfg.mixture.validate();
    } catch (const ContractViolation& e) {
      in.fail("mixture_weights", e.what());
    }
  } else if (source == "idx") {
    cfg.source = DatasetSource::kIdx;
    cfg.idx_images = in.str("idx_images");
    cfg.idx_labels = in.str("idx_labels");
    in.check(!cfg.idx_images.empty(), "idx_images", "missing required key");
    in.check(!cfg.idx_labels.empty(), "idx_labels", "missing required key");
  } else {
    in.fail("dataset", "expected 'mixture' or 'idx', got '" + source + "'");
  }

  cfg.test_fraction = in.real("test_fraction");
  in.check(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0, "test_fraction", "must be in (0, 1)");

  for (auto name : split(in.raw("strategies"), ',')) {
    try {
      cfg.strategies.push_back(parse_strategy(name));
    } catch (const ConfigError& e) {
      in.fail("strategies", e.what());
    }
  }

  cfg.initial_size = in.count("initial_size");
  in.check(cfg.initial_size >= 5, "initial_size", "must be at least 5 (validation carve)");
  cfg.budget = in.count("budget");
  in.check(cfg.budget >= 1, "budget", "must be at least 1");
  cfg.iterations = in.count("iterations");
  cfg.mini_queries = in.count("mini_queries");
  in.check(cfg.mini_queries >= 1 && cfg.mini_queries <= cfg.budget, "mini_queries",
           "must be in [1, budget]");
  cfg.repetitions = in.count("repetitions");
  in.check(cfg.repetitions >= 1, "repetitions", "must be at least 1");
  cfg.seed = in.u64("seed");
  cfg.mixture.seed = derive_seed(cfg.seed, "dataset");

  cfg.task_hidden = in.count_list("task_hidden");
  in.check(std::all_of(cfg.task_hidden.begin(), cfg.task_hidden.end(), [](std::size_t w) { return w >= 1; }),
           "task_hidden", "widths must be at least 1");
  cfg.task_dropout = in.real("task_dropout");
  in.check(cfg.task_dropout >= 0.0 && cfg.task_dropout < 1.0, "task_dropout", "must be in [0, 1)");
  cfg.task_train.max_epochs = in.count("task_epochs");
  cfg.task_train.batch_size = in.count("batch_size");
  in.check(cfg.task_train.batch_size >= 1, "batch_size", "must be at least 1");
  cfg.task_train.learning_rate = in.real("learning_rate");
  in.check(cfg.task_train.learning_rate > 0.0, "learning_rate", "must be positive");

  auto& acq = cfg.acquisition;
  acq.mc_passes = in.count("mc_passes");
  in.check(acq.mc_passes >= 1, "mc_passes", "must be at least 1");
  acq.discriminator.stop_threshold = in.real("disc_threshold");
  in.check(acq.discriminator.stop_threshold > 0.0 && acq.discriminator.stop_threshold <= 1.0,
           "disc_threshold", "must be in (0, 1]");
  acq.discriminator.hidden_widths = in.count_list("disc_hidden");
  in.check(std::all_of(acq.discriminator.hidden_widths.begin(), acq.discriminator.hidden_widths.end(),
                       [](std::size_t w) { return w >= 1; }),
           "disc_hidden", "widths must be at least 1");
  acq.discriminator.max_epochs = in.count("disc_max_epochs");
  acq.discriminator.batch_size = cfg.task_train.batch_size;
  acq.discriminator.learning_rate = cfg.task_train.learning_rate;
  acq.deepfool.max_iter = in.count("deepfool_max_iter");
  acq.deepfool.overshoot = in.real("deepfool_overshoot");
  in.check(acq.deepfool.overshoot >= 0.0, "deepfool_overshoot", "must be nonnegative");

  if (in.has("output_dir")) cfg.output_dir = in.str("output_dir");
  cfg.parallel_trials = in.count("parallel_trials");
  in.check(cfg.parallel_trials >= 1, "parallel_trials", "must be at least 1");

  if (cfg.source == DatasetSource::kMixture) {
    const auto test_count = static_cast<std::size_t>(
        std::llround(cfg.test_fraction * static_cast<double>(cfg.mixture.sample_count)));
    const std::size_t pool = cfg.mixture.sample_count - test_count;
    in.check(cfg.initial_size + cfg.iterations * cfg.budget <= pool, "budget",
             fmt::format("initial_size + iterations * budget = {} exceeds pool size {}",
                         cfg.initial_size + cfg.iterations * cfg.budget, pool));
  }
  return cfg;
}

std::string echo_config(const ExperimentConfig& c) {
  std::map<std::string_view, std::string> v;
  if (c.source == DatasetSource::kMixture) {
    v["dataset"] = "mixture";
    v["mixture_weights"] = join_reals(c.mixture.weights);
    v["mixture_means"] = join_rows(c.mixture.means);
    if (!c.mixture.variances.empty()) v["mixture_variances"] = join_rows(c.mixture.variances);
    if (!c.mixture.class_ids.empty()) v["mixture_classes"] = fmt::format("{}", fmt::join(c.mixture.class_ids, ", "));
    v["mixture_samples"] = std::to_string(c.mixture.sample_count);
  } else {
    v["dataset"] = "idx";
    v["idx_images"] = c.idx_images.string();
    v["idx_labels"] = c.idx_labels.string();
  }
  v["test_fraction"] = fmt::format("{}", c.test_fraction);
  std::vector<std::string_view> names;
  for (Strategy s : c.strategies) names.push_back(to_string(s));
  v["strategies"] = fmt::format("{}", fmt::join(names, ", "));
  v["initial_size"] = std::to_string(c.initial_size);
  v["budget"] = std::to_string(c.budget);
  v["iterations"] = std::to_string(c.iterations);
  v["mini_queries"] = std::to_string(c.mini_queries);
  v["repetitions"] = std::to_string(c.repetitions);
  v["seed"] = std::to_string(c.seed);
  v["task_hidden"] = join_counts(c.task_hidden);
  v["task_dropout"] = fmt::format("{}", c.task_dropout);
  v["task_epochs"] = std::to_string(c.task_train.max_epochs);
  v["batch_size"] = std::to_string(c.task_train.batch_size);
  v["learning_rate"] = fmt::format("{}", c.task_train.learning_rate);
  v["mc_passes"] = std::to_string(c.acquisition.mc_passes);
  v["disc_threshold"] = fmt::format("{}", c.acquisition.discriminator.stop_threshold);
  v["disc_hidden"] = join_counts(c.acquisition.discriminator.hidden_widths);
  v["disc_max_epochs"] = std::to_string(c.acquisition.discriminator.max_epochs);
  v["deepfool_max_iter"] = std::to_string(c.acquisition.deepfool.max_iter);
  v["deepfool_overshoot"] = fmt::format("{}", c.acquisition.deepfool.overshoot);
  if (!c.output_dir.empty()) v["output_dir"] = c.output_dir.string();
  v["parallel_trials"] = std::to_string(c.parallel_trials);

  std::string out =
      "# resolved experiment configuration\n"
      "# preprocessing: mixture features min-max scaled per column to [0, 1]; IDX pixels scaled by 1/255\n"
      "# rng: mt19937_64; trial t uses seed + t; every other stream is a splitmix64 derivation of (seed, tag, index)\n";
  for (const auto& k : key_table()) {
    const auto it = v.find(k.name);
    if (it == v.end()) continue;
    out += fmt::format("{} = {}\n", k.name, it->second);
  }
  return out;
}

}  // namespace dal
