#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "skilltree/cli/config.hpp"

namespace skilltree::cli {

/// Where each stage reads and writes, with defaults under out_dir.
struct StagePaths {
  std::filesystem::path out_dir;
  std::filesystem::path data;
  std::filesystem::path skills;
  std::filesystem::path policy;
  std::filesystem::path tree;       ///< distilled with data cleaning
  std::filesystem::path tree_nodc;  ///< distilled without cleaning
};

StagePaths stage_paths(const Config& c);

/// Each stage validates the config, does its work, writes its outputs and a
/// manifest_<command>.json under out_dir, and logs a short summary to `log`.
void gen_data(const Config& c, std::ostream& log);
void train_skills_stage(const Config& c, std::ostream& log);
void train_rl_stage(const Config& c, std::ostream& log);
void distill_stage(const Config& c, std::ostream& log);
/// actor: soft | hard | random. Returns ACS.
double eval_stage(const Config& c, const std::string& actor, std::ostream& log);
void explain_stage(const Config& c, std::ostream& log);

/// Full command line. Exit codes: 0 ok, 1 config or validation error,
/// 2 I/O or checkpoint error, 3 numeric fault.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace skilltree::cli
