#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace dal {

/// Exit statuses of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

/// Entry point behind `dal_bench`. Subcommands: run, rank-compare,
/// synth-demo, fixtures. Errors become one diagnostic line on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Config used by `synth-demo` when no --config is given: three clusters
/// weighted 0.7 / 0.2 / 0.1, DAL against core-set.
std::string_view density_preset();

/// Ten-class Gaussian mixture in 10 dimensions, 2000-point pool, comparing
/// random against every score-based strategy.
std::string ten_class_preset();

/// Writes fixture_images.idx, fixture_labels.idx and the blobs, idx_blobs,
/// density and ten_class configs into `dir`.
void write_fixtures(const std::filesystem::path& dir);

}  // namespace dal
