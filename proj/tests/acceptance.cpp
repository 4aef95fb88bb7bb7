// End-to-end acceptance run: one PASS/FAIL line per criterion.
#include "pfchain/bounds.hpp"
#include "pfchain/census.hpp"
#include "pfchain/chains.hpp"
#include "pfchain/montecarlo.hpp"
#include "pfchain/spectra.hpp"
#include "pfchain/walks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

using namespace pfchain;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1fs", secs);
  std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << title << " | " << o.detail << " | " << buf << std::endl;
}

std::string num(double x, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

// counts of states per irreducible string, by a depth-first walk over prefixes
// that keeps the reduced stack incrementally
std::unordered_map<std::string, std::uint64_t> enumerate_sector_sizes(int n, std::size_t l) {
  std::unordered_map<std::string, std::uint64_t> out;
  std::string stack;
  std::function<void(std::size_t)> rec = [&](std::size_t depth) {
    if (depth == l) {
      ++out[stack];
      return;
    }
    for (int c = 0; c < n; ++c) {
      const char ch = static_cast<char>('a' + c);
      if (!stack.empty() && stack.back() == ch) {
        stack.pop_back();
        rec(depth + 1);
        stack.push_back(ch);
      } else {
        stack.push_back(ch);
        rec(depth + 1);
        stack.pop_back();
      }
    }
  };
  rec(0);
  return out;
}

double shape(std::size_t l, double exponent) {
  return std::pow(spectral_radius(3), static_cast<double>(l)) * std::pow(static_cast<double>(l), exponent);
}

}  // namespace

int main() {
  std::cout << "acceptance run, one line per criterion" << std::endl;

  criterion(1, "exact census: recurrence vs exhaustive enumeration, partition identity", [] {
    std::size_t checked = 0;
    for (int n : {3, 4})
      for (std::size_t l = 1; l <= 12; ++l) {
        const auto c = sector_dims(n, l);
        const auto sizes = enumerate_sector_sizes(n, l);
        for (const auto& [k, size] : sizes) {
          if (c.dim(k.size()) != BigInt(static_cast<unsigned long>(size)))
            return Outcome{false, "mismatch N=" + std::to_string(n) + " L=" + std::to_string(l) + " sector " + k};
          ++checked;
        }
        if (BigInt(static_cast<unsigned long>(sizes.size())) != sector_count(n, l))
          return Outcome{false, "sector count mismatch N=" + std::to_string(n) + " L=" + std::to_string(l)};
      }
    for (int n : {3, 4})
      for (std::size_t l = 1; l <= 60; ++l)
        if (sector_dims(n, l).total_states() != ipow(n, l))
          return Outcome{false, "partition identity fails N=" + std::to_string(n) + " L=" + std::to_string(l)};
    return Outcome{true, std::to_string(checked) + " sectors matched; sum mult*dim = N^L for L <= 60"};
  });

  criterion(2, "closed forms equal the recurrence exactly (N=3, L <= 20)", [] {
    std::size_t checked = 0;
    for (std::size_t l = 1; l <= 20; ++l) {
      const auto c = sector_dims(3, l);
      if (l % 2 == 0 && k0_closed_form(3, l) != Rational(c.dim(0)))
        return Outcome{false, "largest-sector form fails at L=" + std::to_string(l)};
      for (std::size_t d = l % 2; d <= l; d += 2, ++checked)
        if (kd_closed_form(3, l, d) != Rational(c.dim(d)))
          return Outcome{false, "depth form fails at L=" + std::to_string(l) + " d=" + std::to_string(d)};
    }
    return Outcome{true, std::to_string(checked) + " (L,d) pairs equal as rationals"};
  });

  criterion(3, "lumping: nonzero spectra agree to 1e-10 and V M = Q V exactly (N=3, L <= 8)", [] {
    double worst = 0;
    for (std::size_t l = 2; l <= 8; ++l) {
      auto nl = build_full_nonlocal(3, l);
      auto lu = build_lumped(3, l, true);
      const auto chk = check_lumping(nl, lu);
      if (!chk.holds) return Outcome{false, "identity fails at L=" + std::to_string(l)};
      std::vector<double> full;
      if (l <= 6) {
        for (auto z : dense_spectrum(nl))
          if (std::abs(z) > 1e-8) full.push_back(z.real());
      } else {
        for (double x : sector_compression_spectrum(nl))
          if (std::abs(x) > 1e-8) full.push_back(x);
      }
      std::vector<double> lumped;
      for (auto z : dense_spectrum(lu))
        if (std::abs(z) > 1e-8) lumped.push_back(z.real());
      std::sort(full.begin(), full.end());
      std::sort(lumped.begin(), lumped.end());
      if (full.size() != lumped.size())
        return Outcome{false, "nonzero spectrum sizes differ at L=" + std::to_string(l) + ": " + std::to_string(full.size()) +
                                  " vs " + std::to_string(lumped.size())};
      for (std::size_t i = 0; i < full.size(); ++i) worst = std::max(worst, std::abs(full[i] - lumped[i]));
    }
    return Outcome{worst <= 1e-10, "max eigenvalue difference " + num(worst, 3) +
                                       " (full dense solve L <= 6, sector compression L = 7, 8)"};
  });

  criterion(4, "Cheeger sandwich: N=3 gap <= 2 Phi (L <= 12); N=2 window (odd L <= 13)", [] {
    std::ostringstream os;
    bool ok = true;
    double tightest = 0;
    for (std::size_t l = 2; l <= 12; ++l) {
      const double gap = spectral_gap(build_lumped(3, l)).gap;
      const double phi = to_double(cone_stats(3, l, l % 2 == 0 ? 2 : 1).expansion);
      tightest = std::max(tightest, gap / (2 * phi));
      if (gap > 2 * phi) {
        ok = false;
        os << "N=3 L=" << l << " gap " << gap << " > " << 2 * phi << "; ";
      }
    }
    for (std::size_t l = 3; l <= 13; l += 2) {
      const double gap = spectral_gap(build_lumped(2, l)).gap;
      const double lo = 1 / (M_PI * static_cast<double>(l)), hi = std::sqrt(8 / (M_PI * static_cast<double>(l)));
      if (gap < lo || gap > hi) {
        ok = false;
        os << "N=2 L=" << l << " gap " << gap << " outside [" << lo << "," << hi << "]; ";
      }
    }
    os << "largest gap/(2 Phi) at N=3: " << num(tightest);
    return Outcome{ok, os.str()};
  });

  criterion(5, "gap scaling: ratio to rho^L L^-3/2 within factor 2 (L=6..14); local/nonlocal ratio decreasing", [] {
    std::vector<double> ratios;
    for (std::size_t l = 6; l <= 14; ++l) ratios.push_back(spectral_gap(build_lumped(3, l)).gap / shape(l, -1.5));
    const double spread = *std::max_element(ratios.begin(), ratios.end()) / *std::min_element(ratios.begin(), ratios.end());
    std::vector<double> ls, rel;
    bool decreasing = true, below = true;
    for (std::size_t l = 4; l <= 9; ++l) {
      const double loc = spectral_gap(build_full_local(3, l)).gap;
      const double nonloc = spectral_gap(build_lumped(3, l)).gap;
      below = below && loc <= nonloc;
      if (!rel.empty() && loc / nonloc >= rel.back()) decreasing = false;
      ls.push_back(static_cast<double>(l));
      rel.push_back(loc / nonloc);
    }
    const auto fit = fit_power_law(ls, rel);
    return Outcome{spread < 2 && decreasing && below,
                   "ratio spread " + num(spread) + "; local/nonlocal " + num(rel.front()) + " -> " + num(rel.back()) +
                       " over L=4..9, fitted exponent " + num(fit.exponent, 3)};
  });

  criterion(6, "two-letter charge relaxation: t_Q ~ L^alpha with alpha = 2.0 +- 0.3", [] {
    std::vector<double> ls, ts;
    std::ostringstream os;
    for (std::size_t l : {8u, 16u, 32u, 64u}) {
      SimConfig cfg;
      cfg.alphabet = 2;
      cfg.length = l;
      cfg.trajectories = 10000;
      cfg.gamma = 0.1;
      cfg.seed = 7;
      cfg.t_max = 10'000'000;
      cfg.observables.depth = false;
      const auto fp = estimate_tQ(cfg);
      if (fp.censored) return Outcome{false, "censored at L=" + std::to_string(l)};
      ls.push_back(static_cast<double>(l));
      ts.push_back(fp.t);
      os << "L=" << l << ":" << fp.t << " ";
    }
    const double alpha = fit_power_law(ls, ts).exponent;
    os << "alpha=" << num(alpha, 3);
    return Outcome{std::abs(alpha - 2.0) <= 0.3, os.str()};
  });

  criterion(7, "three-letter charge relaxation: one-constant fit within factor 3 (L=8..24); t_Q(0.1) above the lower bound", [] {
    std::vector<double> ratio;
    std::ostringstream os;
    bool above = true;
    double worst_margin = 1e300;
    for (std::size_t l = 8; l <= 24; ++l) {
      SimConfig cfg;
      cfg.alphabet = 3;
      cfg.length = l;
      cfg.trajectories = 10000;
      cfg.seed = 11;
      cfg.t_max = 100'000'000;
      cfg.observables.depth = false;
      cfg.gamma = 0.01;
      const auto slow = estimate_tQ(cfg);
      if (slow.censored) return Outcome{false, "censored at L=" + std::to_string(l)};
      // one-constant form t = c L^{3/2} rho^{-L}
      ratio.push_back(slow.t * shape(l, -1.5));
      cfg.gamma = 0.1;
      const auto fast = estimate_tQ(cfg);
      for (auto form : {ChargeConstant::Proof, ChargeConstant::Headline}) {
        const auto b = charge_time_lower_bound(3, l, 0.1, form);
        if (!b.valid || fast.censored || fast.t <= b.value) {
          above = false;
          os << "bound not exceeded at L=" << l << " (" << fast.t << " vs " << b.value << "); ";
        } else {
          worst_margin = std::min(worst_margin, fast.t / b.value);
        }
      }
    }
    double lg = 0;
    for (double r : ratio) lg += std::log(r);
    const double c = std::exp(lg / static_cast<double>(ratio.size()));
    double factor = 1;
    for (double r : ratio) factor = std::max(factor, std::max(r / c, c / r));
    os << "max deviation from fit x" << num(factor, 3) << "; smallest t_Q(0.1)/bound " << num(worst_margin, 3);
    return Outcome{factor < 3 && above, os.str()};
  });

  criterion(8, "escape: exact leak <= t Phi (N=3, L=8, d=2, t <= 50); Monte Carlo at L=30 within 4 sigma", [] {
    auto nl = build_full_nonlocal(3, 8);
    const auto phi = cone_stats(3, 8, 2).expansion;
    const auto leak = escape_curve_exact(nl, cone_members(nl, cone_stem(3, 2)), 50);
    for (std::size_t t = 0; t < leak.size(); ++t)
      if (leak[t] > phi * Rational(static_cast<long>(t))) return Outcome{false, "exact leak exceeds bound at t=" + std::to_string(t)};
    SimConfig cfg;
    cfg.alphabet = 3;
    cfg.length = 30;
    cfg.trajectories = 100000;
    cfg.seed = 5;
    const auto e = cone_escape_probability(cfg, 2, {1, 2, 5, 10, 20, 50, 100, 200});
    double worst = -1e300;
    for (std::size_t k = 0; k < e.times.size(); ++k)
      worst = std::max(worst, (e.left[k] - e.bound[k]) / std::max(e.left_err[k], 1.0 / static_cast<double>(cfg.trajectories)));
    return Outcome{e.within_bound, "exact leak(50) = " + num(to_double(leak[50])) + " vs 50 Phi = " + num(50 * to_double(phi)) +
                                       "; MC max (left - bound)/sigma = " + num(worst, 3)};
  });

  criterion(9, "Temperley-Lieb counting: closed form within 0.5 ulp (L <= 30, N=3,4,5); memory bound 0.1672", [] {
    for (int n : {3, 4, 5})
      for (std::size_t l = 0; l <= 30; ++l) {
        const BigInt exact = tl_zero_modes(n, l);
        double nearest = exact.get_d();
        const double up = std::nextafter(nearest, INFINITY);
        if (Rational(up) - Rational(exact) < Rational(exact) - Rational(nearest)) nearest = up;
        const double ulp = std::nextafter(nearest, INFINITY) - nearest;
        Rational diff = Rational(tl_zero_modes_closed_form(n, l)) - Rational(exact);
        if (diff < 0) diff = -diff;
        if (diff > Rational(ulp) / 2) return Outcome{false, "N=" + std::to_string(n) + " L=" + std::to_string(l)};
      }
    const double m = tl_memory_bound(3);
    return Outcome{std::abs(m - 0.1672) <= 1e-4, "memory bound " + num(m, 8)};
  });

  criterion(10, "one-step law: step() frequencies vs chain rows, chi-square at 1e6 samples", [] {
    double worst = 1;
    std::uint64_t unexpected = 0;
    std::size_t rows = 0;
    for (auto [n, l] : {std::pair{2, 4}, std::pair{3, 3}})
      for (GateKind g : {GateKind::PairFlip, GateKind::TemperleyLieb}) {
        auto chain = build_full_local(n, static_cast<std::size_t>(l), g);
        for (std::uint64_t i = 0; i < chain.dimension(); ++i, ++rows) {
          const auto law = one_step_law(chain, i, 1'000'000, 1000 + i);
          worst = std::min(worst, law.p_value);
          unexpected += law.unexpected;
        }
      }
    // Bonferroni over all rows at family level 1e-3
    const double threshold = 1e-3 / static_cast<double>(rows);
    return Outcome{worst > threshold && unexpected == 0,
                   std::to_string(rows) + " rows, smallest p = " + num(worst, 3) + " (threshold " + num(threshold, 3) + ")"};
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
