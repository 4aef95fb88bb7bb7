#pragma once

// Markov generators of the boundary-driven pair-flip dynamics.
//
// Full-space chains are stored as a product of symmetric factors applied in
// time order (row convention p -> p P): the boundary resample, then the gate
// layers, then (nonlocal) the average over each sector. Nothing N^L x N^L is
// ever materialized unless asked for.

#include "pfchain/numeric.hpp"
#include "pfchain/walks.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace pfchain {

enum class GateKind { PairFlip, TemperleyLieb };
enum class ChainKind { Local, Nonlocal, Lumped, Custom };
// Standard: bath, pairs (2i,2i+1), pairs (2i-1,2i) with 1-based sites.
enum class LayerOrder { Standard, Reversed };

inline constexpr std::uint64_t kDefaultStateCap = 1ull << 20;

// Transition weights of one gate on an equal pair (a,a) -> (c,c).
struct GateWeights {
  Rational stay;  // c == a
  Rational move;  // each c != a
};
GateWeights gate_weights(GateKind kind, int alphabet);

template <class S>
struct CsrMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint64_t> col;
  std::vector<S> val;

  std::size_t nnz() const { return val.size(); }
  void push_row(std::vector<std::pair<std::uint64_t, S>>& entries);
};

// Map from full-state index to the position of its sector in enumerate_sectors order.
struct SectorPartition {
  int alphabet = 0;
  std::size_t length = 0;
  std::vector<SectorId> sectors;
  std::vector<std::uint32_t> sector_of;
  std::vector<std::uint64_t> member_offsets;  // CSR over sectors
  std::vector<std::uint64_t> members;

  std::size_t size_of(std::size_t k) const { return member_offsets[k + 1] - member_offsets[k]; }
  std::size_t index_of(const SectorId& k) const;
};

SectorPartition partition_states(int alphabet, std::size_t length, std::uint64_t cap = kDefaultStateCap);

struct Factor {
  enum class Type { Bath, Gate, SectorAverage } type;
  std::size_t site = 0;  // first (0-based) site of a gate
};

class StochasticChain {
 public:
  int alphabet() const { return alphabet_; }
  std::size_t length() const { return length_; }
  ChainKind kind() const { return kind_; }
  GateKind gate() const { return gate_; }
  LayerOrder order() const { return order_; }
  std::size_t dimension() const { return dimension_; }
  bool factored() const { return !factors_.empty(); }
  bool has_exact() const { return factored() || exact_.has_value(); }
  // symmetric under the stationary similarity transform
  bool reversible() const { return reversible_; }

  const std::vector<Factor>& factors() const { return factors_; }
  const SectorPartition* partition() const { return partition_.get(); }
  // basis of a lumped chain
  const std::vector<SectorId>& sectors() const { return sectors_; }
  // integer stationary weights of a lumped chain (sector sizes)
  const std::vector<BigInt>& weights() const { return weights_; }

  std::vector<double> stationary() const;
  Rational stationary_exact(std::size_t i) const;

  // out = p P
  void apply_left(std::span<const double> p, std::span<double> out) const;
  // out = P x
  void apply_right(std::span<const double> x, std::span<double> out) const;
  std::vector<Rational> apply_left_exact(const std::vector<Rational>& p) const;

  std::vector<std::pair<std::uint64_t, double>> row(std::uint64_t i) const;
  std::vector<std::pair<std::uint64_t, Rational>> row_exact(std::uint64_t i) const;

  CsrMatrix<double> to_csr() const;
  CsrMatrix<Rational> to_csr_exact() const;

  // row col value lines, 0-based indices
  void write_coordinates(std::ostream& os, bool exact) const;

  static StochasticChain from_matrix(CsrMatrix<double> m, std::optional<std::vector<double>> stationary = {});

  friend StochasticChain build_full_local(int, std::size_t, GateKind, LayerOrder, std::uint64_t);
  friend StochasticChain build_full_nonlocal(int, std::size_t, std::uint64_t);
  friend StochasticChain build_lumped(int, std::size_t, bool, std::uint64_t);

 private:
  template <class S>
  void apply_factor(const Factor& f, std::span<const S> in, std::span<S> out, const S& stay,
                    const S& move) const;
  template <class S>
  std::vector<std::pair<std::uint64_t, S>> propagate(std::vector<std::pair<std::uint64_t, S>> v) const;

 public:
  // sparse p -> p P through the factors, exact for Rational
  std::vector<std::pair<std::uint64_t, Rational>> propagate_exact(
      std::vector<std::pair<std::uint64_t, Rational>> v) const;

 private:

  int alphabet_ = 0;
  std::size_t length_ = 0;
  ChainKind kind_ = ChainKind::Custom;
  GateKind gate_ = GateKind::PairFlip;
  LayerOrder order_ = LayerOrder::Standard;
  std::size_t dimension_ = 0;
  bool reversible_ = false;

  std::vector<Factor> factors_;
  std::shared_ptr<const SectorPartition> partition_;

  std::vector<SectorId> sectors_;
  std::vector<BigInt> weights_;
  BigInt weight_total_;

  std::optional<CsrMatrix<double>> explicit_;
  std::optional<CsrMatrix<Rational>> exact_;
  std::vector<double> custom_stationary_;
};

StochasticChain build_full_local(int alphabet, std::size_t length, GateKind gate = GateKind::PairFlip,
                                 LayerOrder order = LayerOrder::Standard,
                                 std::uint64_t cap = kDefaultStateCap);
StochasticChain build_full_nonlocal(int alphabet, std::size_t length, std::uint64_t cap = kDefaultStateCap);
// exact=true also keeps the rational matrix (needed for exact identities).
StochasticChain build_lumped(int alphabet, std::size_t length, bool exact = false,
                             std::uint64_t cap = kDefaultSectorCap);

// Tarjan-free check: forward and backward reachability from state 0.
bool strongly_connected(const StochasticChain& chain);

struct LumpingCheck {
  bool holds = false;
  std::size_t sectors = 0;
  std::size_t mismatches = 0;
};
// Exact rational check of U P = Q U, where U maps states to sectors with
// uniform weight inside each sector, P is the nonlocal chain and Q the lumped
// one. (The chain is not strongly lumpable: P E != E Q in general, since the
// boundary move depends on the prefix, not only on the sector.)
LumpingCheck check_lumping(const StochasticChain& nonlocal, const StochasticChain& lumped);

}  // namespace pfchain
