#include "pfchain/numeric.hpp"

#include <cmath>

namespace pfchain {

BigInt ipow(unsigned long base, unsigned long exp) {
  BigInt r;
  mpz_ui_pow_ui(r.get_mpz_t(), base, exp);
  return r;
}

BigInt binomial(unsigned long n, unsigned long k) {
  BigInt r;
  if (k > n) return r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

Rational half_binomial(long twice_top, unsigned long k) {
  // prod_{j<k} (top - j) / k!
  Rational top(twice_top, 2);
  top.canonicalize();
  Rational r(1);
  for (unsigned long j = 0; j < k; ++j) {
    r *= (top - Rational(static_cast<long>(j)));
    r /= Rational(static_cast<long>(j + 1));
  }
  return r;
}

Rational ratio(const BigInt& num, const BigInt& den) {
  if (den == 0) throw std::domain_error("ratio: zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

double to_double(const BigInt& x) { return x.get_d(); }

double to_double(const Rational& x) {
  // mpq_get_d truncates; good enough for reporting, exact work stays rational
  return x.get_d();
}

double log_of(const BigInt& x) {
  if (x <= 0) throw std::domain_error("log_of: non-positive argument");
  long exp = 0;
  double mant = mpz_get_d_2exp(&exp, x.get_mpz_t());
  return std::log(mant) + static_cast<double>(exp) * std::log(2.0);
}

std::string to_string(const BigInt& x) { return x.get_str(); }
std::string to_string(const Rational& x) { return x.get_str(); }

PowerFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_power_law: need two or more paired points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw std::invalid_argument("fit_power_law: non-positive data");
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  double den = n * sxx - sx * sx;
  if (den == 0) throw std::invalid_argument("fit_power_law: degenerate abscissae");
  PowerFit f;
  f.exponent = (n * sxy - sx * sy) / den;
  f.log_prefactor = (sy - f.exponent * sx) / n;
  return f;
}

}  // namespace pfchain
