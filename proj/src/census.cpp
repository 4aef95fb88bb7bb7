#include "pfchain/census.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace pfchain {

double spectral_radius(int alphabet) {
  check_alphabet(alphabet);
  return 2.0 * std::sqrt(alphabet - 1.0) / alphabet;
}

double walk_velocity(int alphabet) {
  check_alphabet(alphabet);
  return 1.0 - 2.0 / alphabet;
}

DimensionTable::DimensionTable(int alphabet, std::size_t max_length) : alphabet_(alphabet) {
  check_alphabet(alphabet);
  rows_.resize(max_length + 1);
  rows_[0] = {BigInt(1)};
  const unsigned long branch = static_cast<unsigned long>(alphabet - 1);
  for (std::size_t l = 1; l <= max_length; ++l) {
    auto& row = rows_[l];
    const auto& prev = rows_[l - 1];
    row.assign(l + 1, BigInt(0));
    auto at = [&](std::size_t d) -> BigInt { return d < prev.size() ? prev[d] : BigInt(0); };
    for (std::size_t d = l % 2; d <= l; d += 2) {
      if (d == 0)
        row[0] = at(1) * alphabet;
      else
        row[d] = at(d - 1) + at(d + 1) * branch;
    }
  }
}

const BigInt& DimensionTable::operator()(std::size_t length, std::size_t depth) const {
  if (length >= rows_.size())
    throw std::out_of_range("DimensionTable: length beyond table");
  const auto& row = rows_[length];
  return depth < row.size() ? row[depth] : zero_;
}

SectorCensus::SectorCensus(int alphabet, std::size_t length, std::vector<BigInt> dims)
    : alphabet_(alphabet), length_(length), dims_(std::move(dims)) {
  if (dims_.size() != length + 1) throw std::invalid_argument("SectorCensus: dims size mismatch");
}

BigInt SectorCensus::multiplicity(std::size_t d) const {
  if (!valid_depth(d)) return 0;
  if (d == 0) return 1;
  return BigInt(alphabet_) * ipow(alphabet_ - 1, d - 1);
}

BigInt SectorCensus::total_states() const {
  BigInt t = 0;
  for (std::size_t d = length_ % 2; d <= length_; d += 2) t += multiplicity(d) * dims_[d];
  return t;
}

BigInt sector_count(int alphabet, std::size_t length) {
  check_alphabet(alphabet);
  if (alphabet == 2) return BigInt(static_cast<unsigned long>(length + 1));
  // ((N-1)^{L+1} - 1)/(N-2)
  BigInt num = ipow(alphabet - 1, length + 1) - 1;
  return num / (alphabet - 2);
}

SectorCensus sector_dims(int alphabet, std::size_t length) {
  check_alphabet(alphabet);
  if (length < 1) throw std::invalid_argument("length must be >= 1");
  std::vector<BigInt> dims(length + 1, BigInt(0));
  if (alphabet == 2) {
    // the tree is a line; dims are binomials
    for (std::size_t d = length % 2; d <= length; d += 2) dims[d] = binomial(length, (length + d) / 2);
    return SectorCensus(alphabet, length, std::move(dims));
  }
  DimensionTable t(alphabet, length);
  for (std::size_t d = 0; d <= length; ++d) dims[d] = t(length, d);
  return SectorCensus(alphabet, length, std::move(dims));
}

Rational k0_closed_form(int alphabet, std::size_t length) {
  check_alphabet(alphabet);
  if (length % 2 == 1) return Rational(0);
  // N^L (1 + 1/2 sum_{n=1}^{L/2} N^{1-2n} C(1/2, n) (-1)^n (4(N-1))^n)
  const Rational four_b = Rational(4 * (alphabet - 1));
  Rational sum = 0;
  Rational nn(1);
  Rational gpow(1);
  for (std::size_t n = 1; n <= length / 2; ++n) {
    gpow *= four_b;
    Rational term = half_binomial(1, n) * gpow;
    Rational npow(ipow(alphabet, 2 * n - 1));
    term /= npow;
    if (n % 2 == 1) term = -term;
    sum += term;
  }
  Rational r = (Rational(1) + sum / 2) * Rational(ipow(alphabet, length));
  r.canonicalize();
  return r;
}

Rational kd_closed_form(int alphabet, std::size_t length, std::size_t depth) {
  check_alphabet(alphabet);
  if (depth > length || depth % 2 != length % 2) return Rational(0);
  if (depth == 0) return k0_closed_form(alphabet, length);
  // 2^d sum_n sum_k K_0^{(L+d-2n)} (-1)^{k+n} C(d,k) C(k/2,n) gamma^{2(n-d)}, gamma^2 = 4(N-1)
  const std::size_t top = (length + depth) / 2;
  const Rational g2(4 * (alphabet - 1));
  std::vector<Rational> k0(top + 1);
  for (std::size_t n = 0; n <= top; ++n) k0[n] = k0_closed_form(alphabet, length + depth - 2 * n);
  Rational total = 0;
  for (std::size_t n = 0; n <= top; ++n) {
    Rational inner = 0;
    for (std::size_t k = 0; k <= depth; ++k) {
      Rational c = Rational(binomial(depth, k)) * half_binomial(static_cast<long>(k), n);
      if (c == 0) continue;
      if ((k + n) % 2 == 1) c = -c;
      inner += c;
    }
    if (inner == 0) continue;
    Rational gp(1);
    long e = static_cast<long>(n) - static_cast<long>(depth);
    for (long i = 0; i < std::labs(e); ++i) gp *= g2;
    if (e < 0) gp = Rational(1) / gp;
    total += k0[n] * inner * gp;
  }
  total *= Rational(ipow(2, depth));
  total.canonicalize();
  return total;
}

double k0_shape(int alphabet, std::size_t length) {
  double l = static_cast<double>(length);
  return std::exp(-1.5 * std::log(l) + l * std::log(alphabet * spectral_radius(alphabet)));
}

K0Fit fit_k0_constant(int alphabet, std::size_t min_length, std::size_t max_length) {
  if (alphabet < 3) throw std::invalid_argument("k0 fit needs N >= 3");
  if (min_length < 2 || max_length < min_length) throw std::invalid_argument("bad fit window");
  DimensionTable t(alphabet, max_length);
  const double lognr = std::log(alphabet * spectral_radius(alphabet));
  std::vector<double> r;
  for (std::size_t l = min_length + (min_length % 2); l <= max_length; l += 2) {
    double ld = static_cast<double>(l);
    r.push_back(log_of(t(l, 0)) + 1.5 * std::log(ld) - ld * lognr);
  }
  if (r.empty()) throw std::invalid_argument("empty fit window");
  double mean = 0;
  for (double x : r) mean += x;
  mean /= static_cast<double>(r.size());
  double ss = 0;
  for (double x : r) ss += (x - mean) * (x - mean);
  return K0Fit{std::exp(mean), std::sqrt(ss / static_cast<double>(r.size())), min_length, max_length};
}

double k0_asymptotic(int alphabet, std::size_t length) {
  static std::mutex mu;
  static std::map<int, double> cache;
  double c;
  {
    std::lock_guard lock(mu);
    auto it = cache.find(alphabet);
    if (it == cache.end()) it = cache.emplace(alphabet, fit_k0_constant(alphabet).constant).first;
    c = it->second;
  }
  return c * k0_shape(alphabet, length);
}

double kd_asymptotic_log(int alphabet, std::size_t length, std::size_t depth) {
  if (alphabet < 3) throw std::invalid_argument("kd asymptotic needs N >= 3");
  if (depth > length || depth % 2 != length % 2) throw std::invalid_argument("depth parity/range");
  const double n = alphabet, l = static_cast<double>(length), d = static_cast<double>(depth);
  const double v = walk_velocity(alphabet);
  return std::log(2.0 * (n - 1) / (n * std::sqrt(2 * std::numbers::pi * l))) + l * std::log(n) -
         (d - v * l) * (d - v * l) / (2 * l) - d * std::log(n - 1);
}

double kd_asymptotic(int alphabet, std::size_t length, std::size_t depth) {
  return std::exp(kd_asymptotic_log(alphabet, length, depth));
}

SectorId cone_stem(int alphabet, std::size_t depth) {
  if (depth == 0) throw std::invalid_argument("cone depth must be >= 1");
  if (depth == 1) return SectorId(alphabet, {1});
  std::vector<Symbol> s(depth - 1);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i % 2 == 0 ? 1 : 2;
  return SectorId(alphabet, s);
}

ConeStats cone_stats(const DimensionTable& table, std::size_t length, std::size_t depth) {
  const int n = table.alphabet();
  if (length < 2 || length > table.max_length()) throw std::invalid_argument("cone_stats: bad length");
  const bool branch = depth == 1;
  if (depth < 1 || depth > length || depth % 2 != length % 2 || (depth == 1 && length % 2 == 0))
    throw std::invalid_argument("cone depth must satisfy 1 <= d <= L, d = L mod 2");
  ConeStats cs;
  cs.depth = depth;
  const unsigned long b = static_cast<unsigned long>(n - 1);
  BigInt vol = 0;
  for (std::size_t c = 0; depth + 2 * c <= length; ++c) {
    // a branch owns one top sector, a cone owns N-1 of them
    BigInt mult = branch ? ipow(b, 2 * c) : ipow(b, 2 * c + 1);
    vol += table(length, depth + 2 * c) * mult;
  }
  cs.volume = vol;
  Rational flow = Rational(table(length - 1, depth - 1)) * Rational(n - 1, n);
  cs.expansion = flow / Rational(vol);
  cs.expansion.canonicalize();

  if (n >= 3) {
    const double v = walk_velocity(n), l = static_cast<double>(length), d = static_cast<double>(depth);
    const double x = d - v * l;
    const double nn = n;
    const double s2pl = std::sqrt(2 * std::numbers::pi * l);
    if (std::abs(x) < std::sqrt(l))
      cs.regime = ConeRegime::Crossover;
    else
      cs.regime = x > 0 ? ConeRegime::Fast : ConeRegime::Slow;
    double logpre = (2 - d) * std::log(nn - 1) + (l - 1) * std::log(nn) - std::log(s2pl);
    double bracket_vol = x > 0 ? std::exp(-x * x / (2 * l)) / (d / l - v) : s2pl;
    cs.asymptotic_volume = std::exp(logpre) * bracket_vol;
    double pre = 2 * (nn - 1) * std::exp((d / l - v) * (1 - v)) / (nn * nn);
    double bracket_phi = x > 0 ? (d / l - v) : std::exp(-x * x / (2 * l)) / s2pl;
    cs.asymptotic_expansion = pre * bracket_phi;
  } else {
    cs.regime = ConeRegime::Crossover;
    cs.asymptotic_volume = std::nan("");
    cs.asymptotic_expansion = std::nan("");
  }
  return cs;
}

ConeStats cone_stats(int alphabet, std::size_t length, std::size_t depth) {
  DimensionTable t(alphabet, length);
  return cone_stats(t, length, depth);
}

BigInt n2_boundary_alternating(std::size_t length, std::size_t q) {
  if (q < 1 || q > length || q % 2 != length % 2) throw std::invalid_argument("n2 cut index parity/range");
  BigInt s = 0;
  for (std::size_t qq = q; qq <= length; qq += 2) {
    BigInt k = binomial(length, (length + qq) / 2);
    if (((qq - q) / 2) % 2 == 0) s += k; else s -= k;
  }
  return s;
}

BigInt n2_cut_size(std::size_t length, std::size_t q) {
  if (q < 1 || q > length || q % 2 != length % 2) throw std::invalid_argument("n2 cut index parity/range");
  BigInt s = 0;
  for (std::size_t qq = q; qq <= length; qq += 2) s += binomial(length, (length + qq) / 2);
  return s;
}

Rational n2_cut_expansion(std::size_t length, std::size_t q) {
  return ratio(n2_boundary_alternating(length, q), n2_cut_size(length, q));
}

Rational n2_min_expansion(std::size_t length) {
  if (length < 1) throw std::invalid_argument("length must be >= 1");
  if (length % 2 == 1) {
    // ((L+1)/(L 2^L)) C(L, (L+1)/2)
    Rational r(BigInt(static_cast<unsigned long>(length + 1)) * binomial(length, (length + 1) / 2),
               BigInt(static_cast<unsigned long>(length)) * ipow(2, length));
    r.canonicalize();
    return r;
  }
  if (length < 2) throw std::invalid_argument("even length must be >= 2");
  return n2_cut_expansion(length, 2);
}

double n2_min_expansion_asymptotic(std::size_t length) {
  return std::sqrt(2.0 / (std::numbers::pi * static_cast<double>(length)));
}

BigInt tl_zero_modes(int alphabet, std::size_t length) {
  check_alphabet(alphabet);
  BigInt prev = 1, cur = alphabet;  // Omega_0, Omega_1
  if (length == 0) return prev;
  for (std::size_t l = 2; l <= length; ++l) {
    BigInt next = cur * alphabet - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double tl_zero_modes_closed_form(int alphabet, std::size_t length) {
  check_alphabet(alphabet);
  if (alphabet < 3) throw std::invalid_argument("closed form needs N >= 3 (sqrt(N^2-4) vanishes at N=2)");
  // ((N+s)^{L+1} - (N-s)^{L+1}) / (2^{L+1} s), s = sqrt(N^2 - 4)
  const long double n = alphabet;
  const long double s = std::sqrt(n * n - 4.0L);
  const long double e = static_cast<long double>(length + 1);
  const long double hi = std::pow((n + s) / 2.0L, e);
  const long double lo = std::pow((n - s) / 2.0L, e);
  return static_cast<double>((hi - lo) / s);
}

BigInt tl_impurity_degeneracy(int alphabet, std::size_t length, Impurities which) {
  const std::size_t shift = which == Impurities::One ? 1 : 2;
  if (length < shift + 1) throw std::invalid_argument("length too small for impurity count");
  return tl_zero_modes(alphabet, length - shift) - tl_zero_modes(alphabet, length - shift - 1);
}

double tl_memory_bound(int alphabet) {
  if (alphabet < 3) throw std::invalid_argument("memory bound needs N >= 3");
  const double n = alphabet;
  const double root = n + std::sqrt(n * n - 4);
  const double inner = 1 - 4 * (n - 1) / (root * root);
  return inner * inner / n;
}

}  // namespace pfchain
