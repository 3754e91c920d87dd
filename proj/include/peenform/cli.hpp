#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "peenform/io.hpp"

namespace peenform::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

/// One file a command produces, fully rendered before anything is written.
struct OutputFile {
  std::filesystem::path name;  // relative to the output directory
  std::string content;
};

struct GridDims {
  int n1 = 41;
  int n2 = 41;
};

/// Parses "MxN" (both at least 2).
GridDims parse_grid(const std::string& text);

/// Uniformly spaced samples 0, L/(n-1), ..., L.
std::vector<double> axis_samples(double length, int n);

std::vector<OutputFile> cmd_calibrate(const std::filesystem::path& measurements,
                                      const std::filesystem::path& coupon, const io::ReadOptions& opt);

std::vector<OutputFile> cmd_forward(const io::Recipe& recipe, GridDims grid);

std::vector<OutputFile> cmd_inverse(const io::Recipe& recipe, const io::ConstraintsDocument& constraints,
                                    GridDims grid);

std::vector<OutputFile> cmd_montecarlo(const io::Recipe& recipe, const io::UncertaintyDocument& uncertainty,
                                       int workers);

std::vector<OutputFile> cmd_convergence(const io::Recipe& recipe, int n_min, int n_max);

std::vector<OutputFile> cmd_anova(const std::filesystem::path& table, double level);

std::vector<OutputFile> cmd_temperature(const io::Recipe& recipe, GridDims grid);

/// Writes every file to a temporary sibling, then renames them all into
/// place. Creates `dir` if needed.
void write_outputs(const std::filesystem::path& dir, const std::vector<OutputFile>& files);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace peenform::cli
