#include "oracle.hpp"
#include "pfchain/census.hpp"
#include "pfchain/chains.hpp"
#include "pfchain/spectra.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace pfchain;

namespace {

// 1 - second largest eigenvalue modulus of a dense matrix
double dense_gap(const oracle::Dense& m) {
  const long d = static_cast<long>(m.size());
  Eigen::MatrixXd a(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) a(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  std::vector<double> mods;
  for (long k = 0; k < d; ++k) mods.push_back(std::abs(es.eigenvalues()(k)));
  std::sort(mods.rbegin(), mods.rend());
  return 1 - mods[1];
}

}  // namespace

TEST(Spectra, GapsMatchDenseOracle) {
  for (std::size_t l = 2; l <= 5; ++l) {
    const double nonloc = dense_gap(oracle::nonlocal_chain(3, l));
    EXPECT_NEAR(spectral_gap(build_full_nonlocal(3, l)).gap, nonloc, 1e-9) << l;
    EXPECT_NEAR(spectral_gap(build_lumped(3, l)).gap, nonloc, 1e-9) << l;
    const double loc = dense_gap(oracle::local_chain(3, l, 1.0 / 3));
    EXPECT_NEAR(spectral_gap(build_full_local(3, l)).gap, loc, 1e-9) << l;
  }
  for (std::size_t l = 3; l <= 7; l += 2)
    EXPECT_NEAR(spectral_gap(build_lumped(2, l)).gap, dense_gap(oracle::nonlocal_chain(2, l)), 1e-9) << l;
}

TEST(Spectra, IterativeAgreesWithDense) {
  GapOptions dense, iter;
  dense.dense_limit = 1u << 20;
  iter.dense_limit = 0;
  for (const auto& chain : {build_lumped(3, 10), build_full_local(3, 6), build_full_local(2, 8, GateKind::TemperleyLieb)}) {
    const auto a = spectral_gap(chain, dense);
    const auto b = spectral_gap(chain, iter);
    EXPECT_EQ(a.method, GapMethod::Dense);
    EXPECT_EQ(b.method, GapMethod::Iterative);
    EXPECT_NEAR(a.gap, b.gap, 1e-8);
    EXPECT_LT(b.residual, 1e-6);
  }
}

TEST(Spectra, LocalGapBelowNonlocal) {
  for (std::size_t l = 2; l <= 8; ++l) {
    const double loc = spectral_gap(build_full_local(3, l)).gap;
    const double nonloc = spectral_gap(build_lumped(3, l)).gap;
    EXPECT_LE(loc, nonloc + 1e-12) << l;
  }
}

TEST(Spectra, CompressionSpectrumEqualsLumpedSpectrum) {
  for (std::size_t l = 2; l <= 6; ++l) {
    const auto comp = sector_compression_spectrum(build_full_nonlocal(3, l));
    auto lumped = dense_spectrum(build_lumped(3, l));
    std::vector<double> re;
    for (auto z : lumped) {
      EXPECT_NEAR(z.imag(), 0.0, 1e-12);
      re.push_back(z.real());
    }
    std::sort(re.rbegin(), re.rend());
    ASSERT_EQ(comp.size(), re.size());
    for (std::size_t i = 0; i < re.size(); ++i) EXPECT_NEAR(comp[i], re[i], 1e-10);
  }
}

TEST(Spectra, ConeExpansionAgreesAcrossChains) {
  for (std::size_t l = 2; l <= 8; ++l) {
    auto nl = build_full_nonlocal(3, l);
    auto lu = build_lumped(3, l, true);
    for (std::size_t d = (l % 2 ? 1 : 2); d <= l; d += 2) {
      const auto stem = cone_stem(3, d);
      const auto expect = cone_stats(3, l, d).expansion;
      const auto a = subset_expansion(nl, cone_members(nl, stem));
      const auto b = subset_expansion(lu, cone_members(lu, stem));
      ASSERT_TRUE(a.exact && b.exact);
      EXPECT_EQ(*a.exact, expect) << l << " " << d;
      EXPECT_EQ(*b.exact, expect) << l << " " << d;
      if (l <= 6) {
        auto loc = build_full_local(3, l);
        EXPECT_EQ(*subset_expansion(loc, cone_members(loc, stem)).exact, expect) << l << " " << d;
      }
    }
  }
  auto nl = build_full_nonlocal(3, 8);
  EXPECT_EQ(*subset_expansion(nl, cone_members(nl, cone_stem(3, 2))).exact, Rational(181, 3009));
}

TEST(Spectra, EscapeLeakBoundedByExpansion) {
  for (std::size_t l = 4; l <= 8; ++l) {
    auto nl = build_full_nonlocal(3, l);
    for (std::size_t d = (l % 2 ? 1 : 2); d <= l; d += 2) {
      const auto phi = cone_stats(3, l, d).expansion;
      const auto leak = escape_curve_exact(nl, cone_members(nl, cone_stem(3, d)), l == 8 ? 50 : 20);
      EXPECT_EQ(leak[0], 0);
      EXPECT_EQ(leak[1], phi);  // one step leaks exactly the expansion
      for (std::size_t t = 0; t < leak.size(); ++t) ASSERT_LE(leak[t], phi * Rational(static_cast<long>(t))) << l << " " << d << " " << t;
    }
  }
}

TEST(Spectra, CheegerSandwich) {
  for (std::size_t l = 2; l <= 10; ++l) {
    const auto r = cheeger_check(build_lumped(3, l));
    EXPECT_TRUE(r.upper_holds) << l;
    EXPECT_LE(r.gap, r.upper);
    EXPECT_FALSE(r.lower_proven);
  }
  for (std::size_t l = 3; l <= 13; l += 2) {
    const auto r = cheeger_check(build_lumped(2, l));
    EXPECT_TRUE(r.upper_holds && r.lower_proven && r.lower_holds) << l;
    EXPECT_GE(r.gap, 1 / (M_PI * static_cast<double>(l)));
    EXPECT_LE(r.gap, std::sqrt(8 / (M_PI * static_cast<double>(l))));
    ASSERT_TRUE(r.edge_expansion);
    EXPECT_EQ(*r.edge_expansion, n2_min_expansion(l));
  }
}

TEST(Spectra, RelaxationTimes) {
  const auto g = spectral_gap(build_lumped(3, 6));
  EXPECT_NEAR(g.relaxation_time() * g.gap, 1.0, 1e-15);
  EXPECT_NEAR(g.mixing_time_lower(), g.relaxation_time() * std::log(4.0), 1e-12);
}
