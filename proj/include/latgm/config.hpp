#pragma once

namespace latgm {

// Every numeric tolerance used by the library lives here.
struct Tolerances {
    // Numeric rank: count of singular values > rank_rel * max(sigma_max, 1).
    double rank_rel = 1e-8;
    // min_norm_solution refuses X whose smallest singular value is below
    // full_rank_rel * sigma_max.
    double full_rank_rel = 1e-10;
    // sym_eig / solve_spd symmetry precondition, relative to max(1, max|A_ij|).
    double symmetry_rel = 1e-10;
    // theta_decomposition: K must equal S* + L* to this (relative) accuracy.
    double decomposition_rel = 1e-10;
    // Absolute entry threshold for support read-out.
    double support_threshold = 1e-6;
    // One-sided / cyclic Jacobi stopping rule and sweep cap.
    double jacobi_eps = 1e-15;
    int jacobi_max_sweeps = 80;
};

inline constexpr Tolerances kTolerances{};

}  // namespace latgm
