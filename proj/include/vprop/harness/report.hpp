#pragma once

#include <string>
#include <vector>

namespace vprop {

/// Writes plot-ready CSV for a run directory and returns the paths written.
///
/// Single run (run_dir/manifest.json): series.csv with columns
///   iter, return_mean, return_se, v_disagree_max, v_disagree_mean, q_diag
/// copied verbatim from train_log.csv.
///
/// Multi-seed (run_dir/seed_*/manifest.json): series.csv with columns
///   iter, return_seed<s>..., return_mean, return_se,
///   disagree_seed<s>..., disagree_mean, disagree_se
/// where mean/se are taken across seeds at each logged iteration.
std::vector<std::string> report(const std::string& run_dir);

}  // namespace vprop
