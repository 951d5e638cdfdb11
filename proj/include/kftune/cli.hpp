#pragma once

#include "kftune/config.hpp"
#include "kftune/harness.hpp"
#include "kftune/tpbo.hpp"

#include <string>
#include <vector>

namespace kftune {

inline constexpr const char* kToolVersion = "0.1.0";

/// CLI entry point. Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
int run_cli(int argc, const char* const* argv);

/// Layer the named preset onto a config.
void apply_preset(FlatConfig& cfg, const std::string& preset);

/// Build the Monte-Carlo experiment from a flat config.
ExperimentConfig experiment_from_config(const FlatConfig& cfg);

/// Search box: explicit tuning.bounds_* keys, else the parameterization default.
BoxBounds bounds_from_config(const FlatConfig& cfg, const ExperimentConfig& experiment);

struct ReplayResult {
    std::vector<double> nis;
    double j;
};

/// Run the EKF over a recorded `t,z1..z4,u1,u2` CSV and score the NIS series.
ReplayResult replay_measurements(const std::string& csv_path, const ExperimentConfig& cfg,
                                 const Eigen::Vector3d& assumed_q);

int cmd_tune(const FlatConfig& cfg, const std::string& out_dir);
int cmd_validate(const FlatConfig& cfg, const std::string& best_path, const std::string& out_dir);
int cmd_lqr(const FlatConfig& cfg, const std::string& out_dir);
int cmd_replay(const FlatConfig& cfg, const std::string& csv_path, const std::string& out_dir);

}  // namespace kftune
