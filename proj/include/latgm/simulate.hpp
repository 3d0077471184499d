#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <utility>
#include <vector>

#include "latgm/matrix.hpp"

namespace latgm {

using Edge = std::pair<std::size_t, std::size_t>;  // first < second
using EdgeSet = std::set<Edge>;

// Erdos-Renyi support, uniform magnitudes with random signs, diagonal set by
// strict diagonal dominance. Defaults give mean degree ~1.74 at p_full = 30.
struct GeneratorConfig {
    std::size_t p_full = 30;
    std::size_t h = 3;
    double edge_probability = 0.06;
    double weight_low = 0.2;
    double weight_high = 0.5;
    double diag_boost = 0.5;
    std::uint64_t seed = 0;

    void validate() const;  // throws ContractError
};

struct GroundTruth {
    DenseMatrix full_precision;
    std::vector<std::size_t> observed_idx;
    std::vector<std::size_t> hidden_idx;
    DenseMatrix sparse_part;   // S* = K_OO
    DenseMatrix lowrank_part;  // L* = -K_OH K_HH^{-1} K_HO
    EdgeSet true_edges;        // observed-index pairs with S*_ij != 0

    std::size_t p() const noexcept { return observed_idx.size(); }
    std::size_t h() const noexcept { return hidden_idx.size(); }
};

struct Partition {
    std::vector<std::size_t> observed_idx;
    std::vector<std::size_t> hidden_idx;
};

struct Decomposition {
    DenseMatrix sparse;
    DenseMatrix lowrank;
};

DenseMatrix generate_full_precision(const GeneratorConfig& cfg);

// Hides a uniformly random h-subset of the vertices with degree >= 1.
// Throws InfeasibleHidingError when fewer than h such vertices exist.
Partition select_hidden(const DenseMatrix& k_full, std::size_t h, std::uint64_t seed);

Decomposition marginal_decomposition(const DenseMatrix& k_full, const std::vector<std::size_t>& observed_idx,
                                     const std::vector<std::size_t>& hidden_idx);

// n draws from N(0, sigma) as rows, via the Cholesky factor.
DenseMatrix sample_gaussian(const DenseMatrix& sigma, std::size_t n, std::uint64_t seed);

// X^T X / n; the mean is known to be zero.
DenseMatrix empirical_covariance(const DenseMatrix& x);

EdgeSet offdiag_support(const DenseMatrix& a);

// Streams used by one simulation seed.
enum class SeedStream : std::uint64_t { graph = 0, hiding = 1, sample = 2 };

GroundTruth make_ground_truth(const GeneratorConfig& cfg);

struct Simulation {
    GroundTruth truth;
    DenseMatrix x;  // n x p, hidden columns removed
};

// Full model on p_full variables, n full draws, hidden columns dropped.
Simulation simulate(const GeneratorConfig& cfg, std::size_t n);

void write_ground_truth(const std::filesystem::path& dir, const GroundTruth& truth);

}  // namespace latgm
