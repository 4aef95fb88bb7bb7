#pragma once

// Exact sector dimensions, cone volumes and expansions, and the
// Temperley-Lieb zero-mode counts. Exact values are big integers or
// rationals; floats appear only in asymptotic formulas.

#include "pfchain/numeric.hpp"
#include "pfchain/walks.hpp"

#include <cstddef>
#include <vector>

namespace pfchain {

double spectral_radius(int alphabet);  // 2 sqrt(N-1) / N
double walk_velocity(int alphabet);    // 1 - 2/N

// Dimensions |K_d^(l)| for every l <= max_length, filled by the recurrence
//   K_d^l = K_{d-1}^{l-1} + (N-1) K_{d+1}^{l-1},  K_0^l = N K_1^{l-1}.
class DimensionTable {
 public:
  DimensionTable(int alphabet, std::size_t max_length);

  int alphabet() const { return alphabet_; }
  std::size_t max_length() const { return rows_.size() - 1; }
  // zero when the depth is out of range or has the wrong parity
  const BigInt& operator()(std::size_t length, std::size_t depth) const;

 private:
  int alphabet_;
  std::vector<std::vector<BigInt>> rows_;
  BigInt zero_;
};

class SectorCensus {
 public:
  SectorCensus(int alphabet, std::size_t length, std::vector<BigInt> dims);

  int alphabet() const { return alphabet_; }
  std::size_t length() const { return length_; }
  bool valid_depth(std::size_t d) const { return d <= length_ && d % 2 == length_ % 2; }
  // indexed by depth; zero at wrong parity
  const std::vector<BigInt>& dims() const { return dims_; }
  const BigInt& dim(std::size_t d) const { return dims_.at(d); }
  BigInt multiplicity(std::size_t d) const;
  BigInt total_states() const;  // sum of multiplicity * dim
  const BigInt& largest() const { return dims_[length_ % 2]; }

 private:
  int alphabet_;
  std::size_t length_;
  std::vector<BigInt> dims_;
};

BigInt sector_count(int alphabet, std::size_t length);
SectorCensus sector_dims(int alphabet, std::size_t length);

// Independent closed forms, evaluated in rational arithmetic.
Rational k0_closed_form(int alphabet, std::size_t length);
Rational kd_closed_form(int alphabet, std::size_t length, std::size_t depth);

// L^{-3/2} (N rho)^L
double k0_shape(int alphabet, std::size_t length);

struct K0Fit {
  double constant = 0;       // |K_0| ~ constant * shape
  double log_rms = 0;        // rms residual of the log fit
  std::size_t min_length = 0, max_length = 0;
};

// One-parameter log least-squares fit over even lengths in [min_length, max_length].
K0Fit fit_k0_constant(int alphabet, std::size_t min_length = 40, std::size_t max_length = 80);
double k0_asymptotic(int alphabet, std::size_t length);

// Gaussian biased-walk approximation of |K_d^(L)|; the log form avoids overflow.
double kd_asymptotic_log(int alphabet, std::size_t length, std::size_t depth);
double kd_asymptotic(int alphabet, std::size_t length, std::size_t depth);

enum class ConeRegime { Slow, Fast, Crossover };

struct ConeStats {
  std::size_t depth = 0;
  BigInt volume;
  Rational expansion;  // boundary flow per state under the nonlocal chain
  double asymptotic_volume = 0;
  double asymptotic_expansion = 0;
  ConeRegime regime = ConeRegime::Crossover;  // asymptotics are not trusted in the crossover window
};

// Cone hanging below a fixed depth-(d-1) vertex: its N-1 depth-d children and
// all their descendants. For odd L, d = 1 selects one full branch of the tree
// (a depth-1 sector and its descendants).
// Stem of the canonical cone of depth d: the first d-1 letters of 1212...,
// or "1" for the d = 1 branch.
SectorId cone_stem(int alphabet, std::size_t depth);
ConeStats cone_stats(int alphabet, std::size_t length, std::size_t depth);
ConeStats cone_stats(const DimensionTable& table, std::size_t length, std::size_t depth);

// Two-letter alphabet: expansion of the charge cut S_Q counted in tree edges
// per state, |dS_Q| / |S_Q| with S_Q = {depth >= Q} on one side of the line.
BigInt n2_boundary_alternating(std::size_t length, std::size_t q);
BigInt n2_cut_size(std::size_t length, std::size_t q);
Rational n2_cut_expansion(std::size_t length, std::size_t q);
// Minimal cut: S_1 for odd L, S_2 for even L.
Rational n2_min_expansion(std::size_t length);
double n2_min_expansion_asymptotic(std::size_t length);  // sqrt(2 / (pi L))

BigInt tl_zero_modes(int alphabet, std::size_t length);
double tl_zero_modes_closed_form(int alphabet, std::size_t length);

enum class Impurities { One, Two };
BigInt tl_impurity_degeneracy(int alphabet, std::size_t length, Impurities which);
double tl_memory_bound(int alphabet);

}  // namespace pfchain
