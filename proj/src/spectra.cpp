#include "pfchain/spectra.hpp"

#include "pfchain/census.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

namespace pfchain {

double GapResult::mixing_time_lower() const { return relaxation_time() * std::log(4.0); }

namespace {

using Vec = Eigen::VectorXd;
using Op = std::function<void(const Vec&, Vec&)>;

Eigen::MatrixXd dense_matrix(const StochasticChain& chain) {
  const auto n = static_cast<Eigen::Index>(chain.dimension());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (const auto& [j, v] : chain.row(static_cast<std::uint64_t>(i))) m(i, static_cast<Eigen::Index>(j)) = v;
  return m;
}

// Similarity D^{1/2} P D^{-1/2}; symmetric for a reversible chain.
Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& p, const std::vector<double>& pi) {
  Eigen::MatrixXd s = p;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j)
      s(i, j) *= std::sqrt(pi[static_cast<std::size_t>(i)] / pi[static_cast<std::size_t>(j)]);
  return 0.5 * (s + s.transpose());
}

// Drop the eigenvalue closest to 1 and return the index of the largest remaining modulus.
Eigen::Index second_index(const Eigen::VectorXcd& ev) {
  Eigen::Index one = 0;
  for (Eigen::Index i = 1; i < ev.size(); ++i)
    if (std::abs(ev[i] - 1.0) < std::abs(ev[one] - 1.0)) one = i;
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (i == one) continue;
    if (best < 0 || std::abs(ev[i]) > std::abs(ev[best])) best = i;
  }
  return best;
}

GapResult dense_gap(const StochasticChain& chain) {
  GapResult r;
  r.method = GapMethod::Dense;
  const Eigen::MatrixXd p = dense_matrix(chain);
  if (p.rows() < 2) throw std::invalid_argument("spectral_gap: chain needs two or more states");
  if (chain.reversible()) {
    const auto pi = chain.stationary();
    const Eigen::MatrixXd s = symmetrized(p, pi);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success) throw NumericFailure("dense symmetric eigensolve failed", NAN);
    Eigen::VectorXcd ev = es.eigenvalues().cast<std::complex<double>>();
    auto k = second_index(ev);
    r.lambda2 = ev[k];
    Vec x = es.eigenvectors().col(k);
    r.residual = (s * x - ev[k].real() * x).norm() / x.norm();
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> es(p);
    if (es.info() != Eigen::Success) throw NumericFailure("dense eigensolve failed", NAN);
    Eigen::VectorXcd ev = es.eigenvalues();
    auto k = second_index(ev);
    r.lambda2 = ev[k];
    Eigen::VectorXcd x = es.eigenvectors().col(k);
    r.residual = (p.cast<std::complex<double>>() * x - ev[k] * x).norm() / x.norm();
  }
  r.iterations = 1;
  r.gap = 1.0 - std::abs(r.lambda2);
  return r;
}

// Explicitly restarted Arnoldi for the largest-modulus eigenvalue of an operator
// restricted to an invariant subspace (the projector removes the stationary mode).
GapResult arnoldi_gap(const Op& op, const std::function<void(Vec&)>& project, std::size_t n, bool symmetric,
                      const GapOptions& opts) {
  const std::size_t m = std::max<std::size_t>(4, std::min(opts.krylov_dim, n - 1));
  std::mt19937_64 gen(0x5eed);
  std::normal_distribution<double> g;
  Vec v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = g(gen);
  project(v);
  v.normalize();

  GapResult r;
  r.method = GapMethod::Iterative;
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m + 1));
  Vec w(static_cast<Eigen::Index>(n));
  double best_res = INFINITY;
  while (r.iterations < opts.max_iterations) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m + 1), static_cast<Eigen::Index>(m));
    basis.col(0) = v;
    Eigen::Index k = 0;
    bool breakdown = false;
    for (; k < static_cast<Eigen::Index>(m); ++k) {
      op(basis.col(k), w);
      ++r.iterations;
      project(w);
      for (int pass = 0; pass < 2; ++pass) {
        Vec c = basis.leftCols(k + 1).transpose() * w;
        w -= basis.leftCols(k + 1) * c;
        h.col(k).head(k + 1) += c;
      }
      double nrm = w.norm();
      h(k + 1, k) = nrm;
      if (nrm < 1e-13) {
        breakdown = true;
        ++k;
        break;
      }
      basis.col(k + 1) = w / nrm;
    }
    const Eigen::Index dim = k;
    Eigen::MatrixXd hk = h.topLeftCorner(dim, dim);
    Eigen::VectorXcd theta;
    Eigen::MatrixXcd svec;
    if (symmetric) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (hk + hk.transpose()));
      theta = es.eigenvalues().cast<std::complex<double>>();
      svec = es.eigenvectors().cast<std::complex<double>>();
    } else {
      Eigen::EigenSolver<Eigen::MatrixXd> es(hk);
      theta = es.eigenvalues();
      svec = es.eigenvectors();
    }
    Eigen::Index top = 0;
    for (Eigen::Index i = 1; i < theta.size(); ++i)
      if (std::abs(theta[i]) > std::abs(theta[top])) top = i;
    Eigen::VectorXcd s = svec.col(top);
    s /= s.norm();
    const double est = breakdown ? 0.0 : std::abs(h(dim, dim - 1) * s[dim - 1]);
    Eigen::VectorXcd y = basis.leftCols(dim).cast<std::complex<double>>() * s;
    r.lambda2 = theta[top];
    if (est <= opts.tol || breakdown) {
      // confirm with a true residual
      Vec re = y.real(), im = y.imag();
      Vec are(static_cast<Eigen::Index>(n)), aim(static_cast<Eigen::Index>(n));
      op(re, are);
      op(im, aim);
      project(are);
      project(aim);
      r.iterations += 2;
      Eigen::VectorXcd ay = are.cast<std::complex<double>>() + std::complex<double>(0, 1) * aim.cast<std::complex<double>>();
      r.residual = (ay - theta[top] * y).norm() / y.norm();
      if (r.residual <= std::max(opts.tol, 10 * est) || breakdown) {
        r.gap = 1.0 - std::abs(r.lambda2);
        return r;
      }
    }
    best_res = std::min(best_res, est);
    // restart from the target Ritz vector plus a little of the next ones
    Vec next = y.real() + y.imag();
    for (Eigen::Index i = 0, used = 0; i < theta.size() && used < 3; ++i) {
      if (i == top) continue;
      Eigen::VectorXcd z = basis.leftCols(dim).cast<std::complex<double>>() * svec.col(i);
      next += 1e-3 * (z.real() + z.imag());
      ++used;
    }
    project(next);
    double nn = next.norm();
    if (!(nn > 0)) throw NumericFailure("Arnoldi restart vector vanished", best_res);
    v = next / nn;
  }
  throw NumericFailure("Arnoldi did not converge, residual " + std::to_string(best_res), best_res);
}

}  // namespace

GapResult spectral_gap(const StochasticChain& chain, const GapOptions& opts) {
  const std::size_t n = chain.dimension();
  if (n <= opts.dense_limit) return dense_gap(chain);
  const auto pi = chain.stationary();
  if (chain.reversible()) {
    std::vector<double> sq(n), isq(n);
    for (std::size_t i = 0; i < n; ++i) {
      sq[i] = std::sqrt(pi[i]);
      isq[i] = 1.0 / sq[i];
    }
    Eigen::Map<const Vec> root(sq.data(), static_cast<Eigen::Index>(n));
    std::vector<double> tmp(n), out(n);
    Op op = [&](const Vec& x, Vec& y) {
      for (std::size_t i = 0; i < n; ++i) tmp[i] = x[static_cast<Eigen::Index>(i)] * isq[i];
      chain.apply_right(tmp, out);
      for (std::size_t i = 0; i < n; ++i) y[static_cast<Eigen::Index>(i)] = out[i] * sq[i];
    };
    auto project = [&](Vec& x) { x -= root.dot(x) * root; };
    return arnoldi_gap(op, project, n, true, opts);
  }
  Eigen::Map<const Vec> piv(pi.data(), static_cast<Eigen::Index>(n));
  std::vector<double> tmp(n), out(n);
  Op op = [&](const Vec& x, Vec& y) {
    std::copy(x.data(), x.data() + n, tmp.begin());
    chain.apply_right(tmp, out);
    std::copy(out.begin(), out.end(), y.data());
  };
  // right eigenvectors with lambda != 1 are orthogonal to pi
  auto project = [&](Vec& x) { x.array() -= piv.dot(x); };
  return arnoldi_gap(op, project, n, false, opts);
}

std::vector<std::complex<double>> dense_spectrum(const StochasticChain& chain) {
  const Eigen::MatrixXd p = dense_matrix(chain);
  std::vector<std::complex<double>> out;
  if (chain.reversible()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(p, chain.stationary()), Eigen::EigenvaluesOnly);
    for (Eigen::Index i = es.eigenvalues().size(); i-- > 0;) out.emplace_back(es.eigenvalues()[i], 0.0);
    return out;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(p, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()[i]);
  return out;
}

std::vector<double> sector_compression_spectrum(const StochasticChain& nonlocal) {
  if (nonlocal.kind() != ChainKind::Nonlocal) throw std::invalid_argument("need a nonlocal chain");
  const auto& part = *nonlocal.partition();
  const auto ns = static_cast<Eigen::Index>(part.sectors.size());
  const std::uint64_t n = static_cast<std::uint64_t>(nonlocal.alphabet());
  // (B^T P_bath B)_{kl} = sum_{i in k, j in l} P_bath(i,j) / sqrt(|k||l|)
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(ns, ns);
  for (std::uint64_t i = 0; i < part.sector_of.size(); ++i) {
    const auto k = part.sector_of[i];
    const std::uint64_t base = i - i % n;
    for (std::uint64_t b = 0; b < n; ++b) c(k, part.sector_of[base + b]) += 1.0 / static_cast<double>(n);
  }
  for (Eigen::Index k = 0; k < ns; ++k)
    for (Eigen::Index l = 0; l < ns; ++l)
      c(k, l) /= std::sqrt(static_cast<double>(part.size_of(static_cast<std::size_t>(k))) *
                           static_cast<double>(part.size_of(static_cast<std::size_t>(l))));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (c + c.transpose()), Eigen::EigenvaluesOnly);
  std::vector<double> out;
  for (Eigen::Index i = ns; i-- > 0;) out.push_back(es.eigenvalues()[i]);
  return out;
}

Expansion subset_expansion(const StochasticChain& chain, std::span<const std::uint64_t> subset, bool exact) {
  const std::size_t n = chain.dimension();
  std::vector<char> in(n, 0);
  for (auto i : subset) {
    if (i >= n) throw std::out_of_range("subset index");
    in[i] = 1;
  }
  std::size_t count = static_cast<std::size_t>(std::count(in.begin(), in.end(), 1));
  if (count == 0 || count == n) throw std::invalid_argument("subset must be nonempty and proper");
  exact = exact && chain.has_exact();

  Expansion e;
  e.size = count;
  const auto pi = chain.stationary();
  Rational flow_q = 0, weight_q = 0;
  double flow_d = 0, weight_d = 0;

  // nonlocal chains: the boundary resample fixes the sector masses, the average does the rest
  std::vector<Rational> out_fraction;
  if (chain.kind() == ChainKind::Nonlocal) {
    const auto& part = *chain.partition();
    out_fraction.resize(part.sectors.size());
    for (std::size_t k = 0; k < part.sectors.size(); ++k) {
      long outside = 0;
      for (auto m = part.member_offsets[k]; m < part.member_offsets[k + 1]; ++m) outside += !in[part.members[m]];
      out_fraction[k] = Rational(outside, static_cast<long>(part.size_of(k)));
      out_fraction[k].canonicalize();
    }
  }
  const std::uint64_t alphabet = static_cast<std::uint64_t>(chain.alphabet());
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!in[i]) continue;
    if (!out_fraction.empty()) {
      const auto& part = *chain.partition();
      Rational mass = 0;
      const std::uint64_t base = i - i % alphabet;
      for (std::uint64_t b = 0; b < alphabet; ++b) mass += out_fraction[part.sector_of[base + b]];
      mass /= Rational(static_cast<long>(alphabet));
      flow_q += mass;
      weight_q += 1;
      continue;
    }
    if (exact) {
      Rational w = chain.stationary_exact(i), mass = 0;
      for (const auto& [j, v] : chain.row_exact(i))
        if (!in[j]) mass += v;
      flow_q += w * mass;
      weight_q += w;
    } else {
      double mass = 0;
      for (const auto& [j, v] : chain.row(i))
        if (!in[j]) mass += v;
      flow_d += pi[i] * mass;
      weight_d += pi[i];
    }
  }
  if (exact) {
    Rational r = flow_q / weight_q;
    r.canonicalize();
    e.exact = r;
    e.value = r.get_d();
  } else {
    e.value = flow_d / weight_d;
  }
  return e;
}

std::vector<std::uint64_t> cone_members(const StochasticChain& chain, const SectorId& stem) {
  std::vector<std::uint64_t> out;
  if (chain.kind() == ChainKind::Lumped) {
    for (std::size_t k = 0; k < chain.sectors().size(); ++k)
      if (chain.sectors()[k].has_prefix(stem)) out.push_back(k);
    return out;
  }
  if (chain.kind() == ChainKind::Nonlocal) {
    const auto& part = *chain.partition();
    for (std::uint64_t i = 0; i < part.sector_of.size(); ++i)
      if (part.sectors[part.sector_of[i]].has_prefix(stem)) out.push_back(i);
    return out;
  }
  if (chain.kind() == ChainKind::Local) {
    std::vector<Digit> st;
    for (std::uint64_t i = 0; i < chain.dimension(); ++i) {
      auto s = state_from_index(chain.alphabet(), chain.length(), i);
      reduce_digits(s.digits(), st);
      if (st.size() >= stem.depth() && std::equal(stem.digits().begin(), stem.digits().end(), st.begin()))
        out.push_back(i);
    }
    return out;
  }
  throw std::invalid_argument("cone_members: chain has no sector structure");
}

CheegerReport cheeger_check(const StochasticChain& chain, const GapResult& gap) {
  if (chain.kind() == ChainKind::Custom) throw std::invalid_argument("cheeger_check: chain has no sector structure");
  const int n = chain.alphabet();
  const std::size_t l = chain.length();
  if (l < 2) throw std::invalid_argument("cheeger_check: length must be >= 2");
  DimensionTable table(n, l);
  CheegerReport rep;
  rep.gap = gap.gap;
  bool first = true;
  // cones hanging off sector boundaries; the flow out of a union of sectors is
  // set by the boundary resample alone, so it is the same for every chain kind
  for (std::size_t d = (l % 2 == 1 ? 1 : 2); d <= l; d += 2) {
    auto cs = cone_stats(table, l, d);
    if (first || cs.expansion < rep.min_expansion) {
      rep.min_expansion = cs.expansion;
      rep.argmin_depth = d;
      first = false;
    }
  }
  const double phi = rep.min_expansion.get_d();
  rep.upper = 2 * phi;
  rep.lower_witness = 0.5 * phi * phi;
  rep.upper_holds = gap.gap <= rep.upper;
  rep.lower_proven = n == 2;
  rep.lower_holds = gap.gap >= rep.lower_witness;
  if (n == 2) rep.edge_expansion = n2_min_expansion(l);
  return rep;
}

CheegerReport cheeger_check(const StochasticChain& chain, const GapOptions& opts) {
  return cheeger_check(chain, spectral_gap(chain, opts));
}

std::vector<Rational> escape_curve_exact(const StochasticChain& chain, std::span<const std::uint64_t> subset,
                                         std::size_t t_max) {
  const std::size_t n = chain.dimension();
  std::vector<char> in(n, 0);
  for (auto i : subset) in.at(i) = 1;
  std::vector<Rational> p(n, Rational(0));
  Rational total = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (in[i]) {
      p[i] = chain.stationary_exact(i);
      total += p[i];
    }
  if (total == 0) throw std::invalid_argument("escape_curve_exact: empty subset");
  for (auto& x : p) x /= total;
  std::vector<Rational> leak;
  leak.reserve(t_max + 1);
  for (std::size_t t = 0;; ++t) {
    Rational out = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (!in[i]) out += p[i];
    leak.push_back(out);
    if (t == t_max) break;
    p = chain.apply_left_exact(p);
  }
  return leak;
}

}  // namespace pfchain
