#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfchain {

using BigInt = mpz_class;
using Rational = mpq_class;

// Thrown when a requested object would exceed a configured size limit.
class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when an iterative method fails to reach its tolerance.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

BigInt ipow(unsigned long base, unsigned long exp);
BigInt binomial(unsigned long n, unsigned long k);

// Generalized binomial C(top/2, k) for an integer or half-integer top given as twice its value.
Rational half_binomial(long twice_top, unsigned long k);

Rational ratio(const BigInt& num, const BigInt& den);

double to_double(const BigInt& x);
double to_double(const Rational& x);
// log of a positive big integer without overflow
double log_of(const BigInt& x);

std::string to_string(const BigInt& x);
std::string to_string(const Rational& x);

struct PowerFit {
  double exponent = 0;
  double log_prefactor = 0;
};

// Least squares of log y against log x.
PowerFit fit_power_law(std::span<const double> x, std::span<const double> y);

}  // namespace pfchain
