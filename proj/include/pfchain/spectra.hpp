#pragma once

// Spectral gaps, subset expansions and the Cheeger sandwich.

#include "pfchain/chains.hpp"
#include "pfchain/numeric.hpp"

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pfchain {

enum class GapMethod { Dense, Iterative };

struct GapOptions {
  double tol = 1e-10;
  std::size_t max_iterations = 1'000'000;  // matrix-vector products
  std::size_t dense_limit = 1024;
  std::size_t krylov_dim = 120;
};

struct GapResult {
  double gap = 0;                    // 1 - |lambda_2|
  std::complex<double> lambda2{0};   // second eigenvalue by modulus
  GapMethod method = GapMethod::Dense;
  double residual = 0;               // ||P x - lambda x|| / ||x||
  std::size_t iterations = 0;

  double relaxation_time() const { return 1.0 / gap; }
  // t_mix >= t_rel ln 4; reported, never computed directly
  double mixing_time_lower() const;
};

GapResult spectral_gap(const StochasticChain& chain, const GapOptions& opts = {});

// All eigenvalues of a small chain, by a dense solve (real parts sorted descending
// for reversible chains, unsorted otherwise).
std::vector<std::complex<double>> dense_spectrum(const StochasticChain& chain);

// Eigenvalues of B^T P_bath B where B has orthonormal columns uniform on each
// sector; these are the nonzero eigenvalues of the nonlocal chain, computed
// without the lumping rule. Sorted descending.
std::vector<double> sector_compression_spectrum(const StochasticChain& nonlocal);

struct Expansion {
  double value = 0;
  std::optional<Rational> exact;
  std::size_t size = 0;
};

// Stationary-weighted probability flow out of the subset, per unit of subset weight.
Expansion subset_expansion(const StochasticChain& chain, std::span<const std::uint64_t> subset,
                           bool exact = true);

// Basis indices (states or sectors) whose sector label starts with the stem.
std::vector<std::uint64_t> cone_members(const StochasticChain& chain, const SectorId& stem);

struct CheegerReport {
  double gap = 0;
  Rational min_expansion;      // over cones and branches, flow normalization
  std::size_t argmin_depth = 0;
  double upper = 0;            // 2 Phi
  double lower_witness = 0;    // Phi^2 / 2
  bool upper_holds = false;
  bool lower_proven = false;   // candidate known to be minimal (N = 2)
  bool lower_holds = false;
  std::optional<Rational> edge_expansion;  // N = 2: tree-edge count per state
};

CheegerReport cheeger_check(const StochasticChain& chain, const GapResult& gap);
CheegerReport cheeger_check(const StochasticChain& chain, const GapOptions& opts = {});

// leak(t) = P(outside R at time t) for a start drawn from the stationary law
// restricted to R, t = 0..t_max, in exact arithmetic.
std::vector<Rational> escape_curve_exact(const StochasticChain& chain, std::span<const std::uint64_t> subset,
                                         std::size_t t_max);

}  // namespace pfchain
