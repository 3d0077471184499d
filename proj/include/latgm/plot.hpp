#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "latgm/evaluate.hpp"

namespace latgm::plot {

inline constexpr const char* kRankPanel = "rank_vs_lambda.svg";
inline constexpr const char* kPowerFdrPanel = "power_vs_fdr.svg";
inline constexpr const char* kRankMatchedPanel = "rank_matched.svg";

// Mean rank of X L_hat against lambda (log axis), one polyline per mu.
std::string rank_panel(const std::vector<Aggregate>& aggregates);
// Power against FDR, one polyline per mu; mu = inf in black.
std::string power_fdr_panel(const std::vector<Aggregate>& aggregates);
// Rank-matched finite-mu cells as red dots over the mu = inf curve.
std::string rank_matched_panel(const std::vector<Aggregate>& aggregates, double h, double tol);

void write_panels(const std::filesystem::path& dir, const std::vector<Aggregate>& aggregates, double h, double tol);

}  // namespace latgm::plot
