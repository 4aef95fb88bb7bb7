#pragma once

// Closed-form evaluators for the gap, entropy and charge-relaxation bounds.
// Every evaluator reports a validity flag instead of extrapolating outside
// the regime where the bound was proved.

#include "pfchain/numeric.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pfchain {

struct Bound {
  std::string name;
  bool valid = false;
  std::string note;  // why invalid, or which branch was used
  double value = 0;
  std::vector<std::pair<std::string, double>> params;
  std::vector<std::pair<std::string, double>> meta;
  std::optional<Rational> exact;

  double get(const std::string& key) const;  // params or meta
};

// Largest sector fraction |K_max| / N^L. Proved for even L.
Bound gap_upper_bound(int alphabet, std::size_t length);

// Entropy-growth time lower bound C sqrt(L) exp(L lambda), with C = gamma / (2 F_{d_gamma}).
Bound entropy_time_lower_bound(int alphabet, std::size_t length, double gamma);

enum class ChargeConstant { Proof, Headline };
// Charge-relaxation time lower bound D sqrt(L) exp(L (2 gamma - v)^2 / 2).
// gamma == 0 returns the bottleneck limit 1 / Phi of the smallest cone cut.
Bound charge_time_lower_bound(int alphabet, std::size_t length, double gamma,
                             ChargeConstant form = ChargeConstant::Proof);

// Upper envelope for the average entanglement entropy of states started in a cone.
Bound entropy_bound_curve(int alphabet, std::size_t length, double depth, double t, bool bipartite = false);

// Two-letter nonlocal gap window (1/(pi L), sqrt(8/(pi L))).
Bound n2_gap_window(std::size_t length);

// F_d prefactor of the escape rate from cone C_d, d given as a fraction of L.
double cone_rate_prefactor(int alphabet, double depth_fraction);

}  // namespace pfchain
