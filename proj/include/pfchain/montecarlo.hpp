#pragma once

// Trajectory simulation of the brickwork dynamics with a resampled boundary.
//
// Each trajectory owns a Philox4x32-10 stream keyed by the master seed and
// indexed by the trajectory number, so results do not depend on the thread
// count. Observables are accumulated as exact integers per trajectory group.

#include "pfchain/chains.hpp"
#include "pfchain/numeric.hpp"
#include "pfchain/walks.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pfchain {

struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter generate(Counter ctr, Key key);
};

class StreamRng {
 public:
  StreamRng() = default;
  StreamRng(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  // unbiased integer in [0, n), n >= 1
  std::uint32_t below(std::uint32_t n);
  double uniform01();

 private:
  Philox4x32::Key key_{};
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buf_{};
  int pos_ = 4;
};

enum class InitialKind { MaxCharge, Explicit, UniformCone, Uniform };

struct InitialState {
  InitialKind kind = InitialKind::MaxCharge;
  std::optional<SpinString> state;  // Explicit
  std::size_t cone_depth = 2;       // UniformCone
};

struct Observables {
  std::vector<Symbol> charges{1};
  bool depth = true;
  std::optional<std::size_t> cone_escape;  // cone depth d
  std::vector<std::size_t> match_sites;    // 0-based sites
};

struct SimConfig {
  int alphabet = 3;
  std::size_t length = 8;
  GateKind gate = GateKind::PairFlip;
  LayerOrder order = LayerOrder::Standard;
  std::uint64_t trajectories = 10000;
  std::uint64_t t_max = 1000;
  std::uint64_t seed = 1;
  double gamma = 0.1;
  Observables observables;
  InitialState initial;
  unsigned threads = 1;
  std::size_t bootstrap_resamples = 1000;
  std::size_t bootstrap_groups = 256;
  std::uint64_t dense_until = 256;  // record every step up to here, then geometrically
  double grid_growth = 1.005;
  bool per_trajectory_passage = false;
  double extend_factor = 1.5;  // estimate_tQ runs to this multiple of the crossing time

  void validate() const;
};

struct SeriesColumn {
  std::string name;
  std::vector<double> mean;
  std::vector<double> std_error;  // sample std / sqrt(n)
};

struct FirstPassage {
  std::string estimator;  // "ensemble_mean" or "per_trajectory_mean"
  double gamma = 0;
  bool censored = true;
  double t = 0;           // crossing time (grid point) or mean first passage
  double ci_lo = 0, ci_hi = 0;
  std::size_t resamples = 0;
  std::uint64_t horizon = 0;  // last simulated step
};

struct EnsembleSeries {
  std::vector<std::uint64_t> times;
  std::vector<SeriesColumn> columns;
  std::optional<FirstPassage> first_passage;
  std::optional<FirstPassage> per_trajectory;
  std::uint64_t trajectories = 0;

  const SeriesColumn& column(const std::string& name) const;
};

// One full time step in place: boundary resample, then the two gate layers.
void step(std::span<Digit> state, int alphabet, GateKind gate, LayerOrder order, StreamRng& rng);
SpinString step(const SpinString& s, GateKind gate, StreamRng& rng, LayerOrder order = LayerOrder::Standard);

// Recording grid: every step to dense_until, then multiplicative growth, always ending at t_max.
std::vector<std::uint64_t> recording_grid(std::uint64_t t_max, std::uint64_t dense_until, double growth);

SpinString max_charge_state(int alphabet, std::size_t length, Symbol a);

EnsembleSeries run_ensemble(const SimConfig& cfg);
// Ensemble-mean first passage of the first charge observable below gamma,
// stopping early once the crossing is bracketed.
FirstPassage estimate_tQ(const SimConfig& cfg);

struct EscapeEstimate {
  std::size_t depth = 0;
  Rational expansion;
  std::vector<std::uint64_t> times;
  std::vector<double> outside, outside_err;  // P(outside the cone at t)
  std::vector<double> left, left_err;        // P(left the cone by t)
  std::vector<double> bound;                 // t * expansion
  bool within_bound = true;                  // left <= bound + 4 sigma at every t
};

EscapeEstimate cone_escape_probability(const SimConfig& cfg, std::size_t depth,
                                       std::vector<std::uint64_t> t_samples);

// Empirical one-step law from a fixed start against the exact row of a local chain.
struct OneStepLaw {
  std::uint64_t start = 0;
  double chi2 = 0;
  std::size_t dof = 0;
  double p_value = 1;
  double max_abs_z = 0;         // largest per-cell multinomial z-score
  std::uint64_t unexpected = 0;  // samples landing where the exact row is zero
};
OneStepLaw one_step_law(const StochasticChain& local, std::uint64_t start, std::uint64_t samples, std::uint64_t seed);

// Uniform sample from the cone (sector drawn by weight, then a conditioned walk).
class ConeSampler {
 public:
  ConeSampler(int alphabet, std::size_t length, std::size_t depth);
  std::vector<Digit> sample(StreamRng& rng) const;
  const SectorId& stem() const { return stem_; }

 private:
  std::size_t pick(std::span<const double> w, StreamRng& rng) const;
  int alphabet_;
  std::size_t length_;
  SectorId stem_;
  std::vector<std::size_t> depths_;
  std::vector<double> depth_weights_;
  std::vector<std::vector<double>> walks_;  // walks_[m][dist], scaled per row
};

}  // namespace pfchain
