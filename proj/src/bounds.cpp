#include "pfchain/bounds.hpp"

#include "pfchain/census.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pfchain {

double Bound::get(const std::string& key) const {
  for (const auto& [k, v] : params)
    if (k == key) return v;
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw std::out_of_range("bound has no field " + key);
}

namespace {
Bound invalid(Bound b, std::string why) {
  b.valid = false;
  b.note = std::move(why);
  b.value = std::nan("");
  return b;
}
}  // namespace

double cone_rate_prefactor(int alphabet, double depth_fraction) {
  const double n = alphabet, v = walk_velocity(alphabet);
  return 4 * (n - 1) / (std::sqrt(2 * std::numbers::pi) * n * n) * std::exp((depth_fraction - v) * (1 - v));
}

Bound gap_upper_bound(int alphabet, std::size_t length) {
  Bound b;
  b.name = "gap_upper";
  b.params = {{"N", alphabet}, {"L", static_cast<double>(length)}};
  if (alphabet < 3) return invalid(b, "requires N >= 3");
  if (length < 2) return invalid(b, "requires L >= 2");
  if (length % 2 == 1) return invalid(b, "proved for even L only");
  auto census = sector_dims(alphabet, length);
  b.exact = ratio(census.largest(), ipow(alphabet, length));
  b.value = b.exact->get_d();
  b.valid = true;
  b.meta = {{"rho", spectral_radius(alphabet)},
            {"shape", std::pow(static_cast<double>(length), -1.5) * std::pow(spectral_radius(alphabet), static_cast<double>(length))}};
  return b;
}

Bound entropy_time_lower_bound(int alphabet, std::size_t length, double gamma) {
  Bound b;
  b.name = "entropy_time_lower";
  b.params = {{"N", alphabet}, {"L", static_cast<double>(length)}, {"gamma", gamma}};
  if (alphabet < 3) return invalid(b, "requires N >= 3");
  const double n = alphabet, v = walk_velocity(alphabet), l = static_cast<double>(length);
  const double ratio_logs = std::log(n) / std::log(n - 1);
  const double gamma_star = 2 * (1 - v / ratio_logs);
  const double lambda = 0.5 * std::pow((1 - gamma / 2) * ratio_logs - v, 2);
  const double d_gamma = l * (1 - gamma / 2) * ratio_logs;
  const double f = cone_rate_prefactor(alphabet, d_gamma / l);
  const double c = gamma / (2 * f);
  b.meta = {{"gamma_star", gamma_star}, {"lambda", lambda}, {"d_gamma", d_gamma}, {"C", c}};
  if (!(gamma > gamma_star && gamma < 1))
    return invalid(b, gamma_star >= 1 ? "vacuous: gamma_star >= 1 for this N" : "requires gamma_star < gamma < 1");
  b.valid = true;
  b.value = c * std::sqrt(l) * std::exp(l * lambda);
  return b;
}

Bound charge_time_lower_bound(int alphabet, std::size_t length, double gamma, ChargeConstant form) {
  Bound b;
  b.name = "charge_time_lower";
  b.params = {{"N", alphabet}, {"L", static_cast<double>(length)}, {"gamma", gamma}};
  if (alphabet < 3) return invalid(b, "requires N >= 3");
  if (length < 2) return invalid(b, "requires L >= 2");
  const double n = alphabet, v = walk_velocity(alphabet), l = static_cast<double>(length);
  if (gamma == 0) {
    // bottleneck limit: inverse expansion of the smallest cone cut
    const std::size_t d = length % 2 == 0 ? 2 : 1;
    auto cs = cone_stats(alphabet, length, d);
    b.exact = Rational(1) / cs.expansion;
    b.value = b.exact->get_d();
    b.valid = true;
    b.note = d == 2 ? "gamma -> 0 limit, 1/Phi(C_2)" : "gamma -> 0 limit, 1/Phi(branch)";
    return b;
  }
  if (!(gamma > 0 && gamma <= v / 2)) return invalid(b, "requires 0 < gamma <= v_N / 2");
  const double eta = 2 * gamma;
  const double s2p = std::sqrt(2 * std::numbers::pi);
  double d;
  if (form == ChargeConstant::Proof)
    d = n * n * s2p / (2 * (1 + eta) * (n - 1)) * std::exp(-(eta - v) * (1 - v));
  else
    d = 2 * (1 + eta) * (n - 1) / (n * n * s2p) * std::exp(-(eta - v) * (1 - v));
  b.meta = {{"D", d}, {"eta", eta}, {"base", std::exp(0.5 * (eta - v) * (eta - v))}};
  b.valid = true;
  if (gamma == v / 2) b.note = "boundary of validity";
  b.value = d * std::sqrt(l) * std::exp(l * (eta - v) * (eta - v) / 2);
  return b;
}

Bound entropy_bound_curve(int alphabet, std::size_t length, double depth, double t, bool bipartite) {
  Bound b;
  b.name = bipartite ? "entropy_curve_bipartite" : "entropy_curve";
  b.params = {{"N", alphabet}, {"L", static_cast<double>(length)}, {"d", depth}, {"t", t}};
  if (alphabet < 3) return invalid(b, "requires N >= 3");
  if (t < 0 || depth < 0) return invalid(b, "requires t >= 0 and d >= 0");
  const double n = alphabet, v = walk_velocity(alphabet), l = static_cast<double>(length);
  const double c = 1 / std::numbers::e + 2 * std::log(n - 1) - std::log(n);
  const double x = depth / l;
  const double f = cone_rate_prefactor(alphabet, x);
  const double leak = (bipartite ? 2.0 : 1.0) * t * f / std::sqrt(l) * std::exp(-l * (x - v) * (x - v) / 2);
  b.meta = {{"F_d", f}, {"c", c}, {"plateau", l * std::log(n) * (1 - x * std::log(n - 1) / std::log(n))}};
  b.value = l * std::log(n) * (1 - x * std::log(n - 1) / std::log(n) + leak) + c;
  if (!(depth < v * l)) return invalid(b, "requires d < v_N L");
  if (v * l - depth < std::sqrt(l)) return invalid(b, "d within sqrt(L) of v_N L; the bound needs v_N L - d of order L");
  b.valid = true;
  return b;
}

Bound n2_gap_window(std::size_t length) {
  Bound b;
  b.name = "n2_gap_window";
  b.params = {{"L", static_cast<double>(length)}};
  if (length < 2) return invalid(b, "requires L >= 2");
  const double l = static_cast<double>(length);
  const double lo = 1 / (std::numbers::pi * l), hi = std::sqrt(8 / (std::numbers::pi * l));
  b.meta = {{"lower", lo}, {"upper", hi}};
  b.value = hi;
  b.valid = true;
  return b;
}

}  // namespace pfchain
