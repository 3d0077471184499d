#include "latgm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "latgm/error.hpp"
#include "latgm/io.hpp"
#include "latgm/kernels.hpp"
#include "latgm/linalg.hpp"
#include "latgm/rng.hpp"

namespace latgm {

void GeneratorConfig::validate() const {
    if (p_full < 2) throw ContractError("p_full must be at least 2");
    if (h >= p_full) throw ContractError("h must be smaller than p_full");
    if (!(edge_probability > 0.0 && edge_probability < 1.0)) throw ContractError("edge_probability must lie in (0, 1)");
    if (!(weight_low > 0.0) || !(weight_high >= weight_low)) {
        throw ContractError("weights must satisfy 0 < weight_low <= weight_high");
    }
    if (!(diag_boost > 0.0)) throw ContractError("diag_boost must be positive");
}

DenseMatrix generate_full_precision(const GeneratorConfig& cfg) {
    cfg.validate();
    const std::size_t p = cfg.p_full;
    CounterRng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::graph)));
    DenseMatrix k(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            const bool edge = rng.uniform() < cfg.edge_probability;
            const double magnitude = cfg.weight_low + (cfg.weight_high - cfg.weight_low) * rng.uniform();
            const double sign = (rng.next_u64() >> 63) ? -1.0 : 1.0;
            if (edge) {
                k(i, j) = sign * magnitude;
                k(j, i) = sign * magnitude;
            }
        }
    }
    for (std::size_t i = 0; i < p; ++i) {
        double off = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (j != i) off += std::fabs(k(i, j));
        }
        k(i, i) = off + cfg.diag_boost;
    }
    return k;
}

Partition select_hidden(const DenseMatrix& k_full, std::size_t h, std::uint64_t seed) {
    if (!k_full.is_square()) throw DimensionError("select_hidden: matrix is not square");
    const std::size_t p = k_full.rows();
    std::vector<std::size_t> connected;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            if (j != i && k_full(i, j) != 0.0) {
                connected.push_back(i);
                break;
            }
        }
    }
    if (connected.size() < h) {
        throw InfeasibleHidingError("cannot hide " + std::to_string(h) + " variables: only " +
                                    std::to_string(connected.size()) + " connected vertices");
    }
    // Partial Fisher-Yates: the first h slots end up a uniform h-subset.
    CounterRng rng(seed);
    for (std::size_t i = 0; i < h; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(connected.size() - i));
        std::swap(connected[i], connected[j]);
    }
    Partition part;
    part.hidden_idx.assign(connected.begin(), connected.begin() + static_cast<std::ptrdiff_t>(h));
    std::sort(part.hidden_idx.begin(), part.hidden_idx.end());
    for (std::size_t i = 0; i < p; ++i) {
        if (!std::binary_search(part.hidden_idx.begin(), part.hidden_idx.end(), i)) part.observed_idx.push_back(i);
    }
    return part;
}

Decomposition marginal_decomposition(const DenseMatrix& k_full, const std::vector<std::size_t>& observed_idx,
                                     const std::vector<std::size_t>& hidden_idx) {
    if (!k_full.is_square() || observed_idx.size() + hidden_idx.size() != k_full.rows()) {
        throw DimensionError("marginal_decomposition: index lists do not partition the matrix");
    }
    if (observed_idx.empty()) throw DimensionError("marginal_decomposition: no observed variables");
    DenseMatrix s = k_full.block(observed_idx, observed_idx);
    const std::size_t p = observed_idx.size();
    if (hidden_idx.empty()) return {std::move(s), DenseMatrix(p, p)};

    const DenseMatrix k_ho = k_full.block(hidden_idx, observed_idx);
    const DenseMatrix k_hh = k_full.block(hidden_idx, hidden_idx);
    const DenseMatrix w = solve_spd(k_hh, k_ho);  // K_HH^{-1} K_HO
    DenseMatrix l = matmul_tn(k_ho, w);           // K_OH K_HH^{-1} K_HO
    l = symmetrize(l);
    l *= -1.0;
    return {std::move(s), std::move(l)};
}

DenseMatrix sample_gaussian(const DenseMatrix& sigma, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw DimensionError("sample_gaussian: n must be positive");
    const DenseMatrix chol = cholesky(sigma);
    const std::size_t p = sigma.rows();
    CounterRng rng(seed);
    DenseMatrix x(n, p);
    std::vector<double> z(p);
    for (std::size_t r = 0; r < n; ++r) {
        for (auto& v : z) v = rng.normal();
        auto row = x.row(r);
        for (std::size_t i = 0; i < p; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k <= i; ++k) acc += chol(i, k) * z[k];
            row[i] = acc;
        }
    }
    return x;
}

DenseMatrix empirical_covariance(const DenseMatrix& x) {
    DenseMatrix c = matmul_tn(x, x);
    c *= 1.0 / static_cast<double>(x.rows());
    return symmetrize(c);
}

EdgeSet offdiag_support(const DenseMatrix& a) {
    EdgeSet e;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = i + 1; j < a.cols(); ++j) {
            if (a(i, j) != 0.0) e.emplace(i, j);
        }
    }
    return e;
}

GroundTruth make_ground_truth(const GeneratorConfig& cfg) {
    DenseMatrix k = generate_full_precision(cfg);
    auto part = select_hidden(k, cfg.h, derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::hiding)));
    auto dec = marginal_decomposition(k, part.observed_idx, part.hidden_idx);
    EdgeSet edges = offdiag_support(dec.sparse);
    return GroundTruth{std::move(k),          std::move(part.observed_idx), std::move(part.hidden_idx),
                       std::move(dec.sparse), std::move(dec.lowrank),       std::move(edges)};
}

Simulation simulate(const GeneratorConfig& cfg, std::size_t n) {
    GroundTruth truth = make_ground_truth(cfg);
    const std::size_t pf = truth.full_precision.rows();
    const DenseMatrix sigma = symmetrize(solve_spd(truth.full_precision, DenseMatrix::identity(pf)));
    const DenseMatrix full = sample_gaussian(sigma, n, derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::sample)));
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    DenseMatrix x = full.block(rows, truth.observed_idx);
    return {std::move(truth), std::move(x)};
}

void write_ground_truth(const std::filesystem::path& dir, const GroundTruth& truth) {
    io::write_matrix_csv(dir / "full_precision.csv", truth.full_precision);
    io::write_index_list(dir / "observed_idx.txt", truth.observed_idx);
    io::write_index_list(dir / "hidden_idx.txt", truth.hidden_idx);
    io::write_matrix_csv(dir / "S_star.csv", truth.sparse_part);
    io::write_matrix_csv(dir / "L_star.csv", truth.lowrank_part);
}

}  // namespace latgm
