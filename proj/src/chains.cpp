#include "pfchain/chains.hpp"

#include "pfchain/census.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace pfchain {

GateWeights gate_weights(GateKind kind, int alphabet) {
  check_alphabet(alphabet);
  const long n = alphabet;
  if (kind == GateKind::PairFlip) return {Rational(1, n), Rational(1, n)};
  Rational stay = Rational(1) - Rational(2 * (n - 1), n * n);
  Rational move(2, n * n);
  stay.canonicalize();
  move.canonicalize();
  return {stay, move};
}

template <class S>
void CsrMatrix<S>::push_row(std::vector<std::pair<std::uint64_t, S>>& entries) {
  for (auto& [c, v] : entries) {
    col.push_back(c);
    val.push_back(v);
  }
  row_ptr.push_back(val.size());
  ++rows;
}

template struct CsrMatrix<double>;
template struct CsrMatrix<Rational>;

std::size_t SectorPartition::index_of(const SectorId& k) const {
  auto it = std::lower_bound(sectors.begin(), sectors.end(), k);
  if (it == sectors.end() || !(*it == k)) throw std::out_of_range("sector not in partition");
  return static_cast<std::size_t>(it - sectors.begin());
}

namespace {

std::uint64_t upow(std::uint64_t b, std::size_t e) {
  std::uint64_t r = 1;
  while (e--) r *= b;
  return r;
}

std::uint64_t sector_key(std::span<const Digit> irr, int alphabet) {
  std::uint64_t v = 0;
  for (Digit d : irr) v = v * static_cast<std::uint64_t>(alphabet) + d;
  return v * 64 + irr.size();
}

template <class S>
void merge_sorted(std::vector<std::pair<std::uint64_t, S>>& v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::size_t w = 0;
  for (std::size_t r = 0; r < v.size(); ++r) {
    if (w > 0 && v[w - 1].first == v[r].first)
      v[w - 1].second += v[r].second;
    else
      v[w++] = std::move(v[r]);
  }
  v.resize(w);
  std::erase_if(v, [](const auto& e) { return e.second == 0; });
}

double as_double(const Rational& r) { return r.get_d(); }

}  // namespace

SectorPartition partition_states(int alphabet, std::size_t length, std::uint64_t cap) {
  SectorPartition p;
  p.alphabet = alphabet;
  p.length = length;
  const std::uint64_t dim = state_space_size(alphabet, length, cap);
  p.sectors = enumerate_sectors(alphabet, length);
  std::unordered_map<std::uint64_t, std::uint32_t> lookup;
  lookup.reserve(p.sectors.size() * 2);
  for (std::size_t k = 0; k < p.sectors.size(); ++k)
    lookup.emplace(sector_key(p.sectors[k].digits(), alphabet), static_cast<std::uint32_t>(k));

  p.sector_of.resize(dim);
  std::vector<Digit> digits(length, 0), st;
  st.reserve(length);
  for (std::uint64_t i = 0; i < dim; ++i) {
    reduce_digits(digits, st);
    p.sector_of[i] = lookup.at(sector_key(st, alphabet));
    // odometer increment, last site fastest
    for (std::size_t j = length; j-- > 0;) {
      if (++digits[j] < alphabet) break;
      digits[j] = 0;
    }
  }
  p.member_offsets.assign(p.sectors.size() + 1, 0);
  for (auto k : p.sector_of) ++p.member_offsets[k + 1];
  std::partial_sum(p.member_offsets.begin(), p.member_offsets.end(), p.member_offsets.begin());
  p.members.resize(dim);
  std::vector<std::uint64_t> fill(p.member_offsets.begin(), p.member_offsets.end() - 1);
  for (std::uint64_t i = 0; i < dim; ++i) p.members[fill[p.sector_of[i]]++] = i;
  return p;
}

template <class S>
void StochasticChain::apply_factor(const Factor& f, std::span<const S> in, std::span<S> out,
                                   const S& stay, const S& move) const {
  const std::uint64_t n = static_cast<std::uint64_t>(alphabet_);
  const std::uint64_t dim = dimension_;
  switch (f.type) {
    case Factor::Type::Bath: {
      for (std::uint64_t base = 0; base < dim; base += n) {
        S sum = in[base];
        for (std::uint64_t c = 1; c < n; ++c) sum += in[base + c];
        sum /= static_cast<long>(n);
        for (std::uint64_t c = 0; c < n; ++c) out[base + c] = sum;
      }
      break;
    }
    case Factor::Type::Gate: {
      const std::uint64_t s1 = upow(n, length_ - 2 - f.site);  // stride of the right site
      const std::uint64_t s0 = s1 * n;
      const std::uint64_t diag = s0 + s1;
      const std::uint64_t blocks = upow(n, f.site);
      if (out.data() != in.data()) std::copy(in.begin(), in.end(), out.begin());
      const S keep = stay - move;
      for (std::uint64_t hi = 0; hi < blocks; ++hi) {
        for (std::uint64_t lo = 0; lo < s1; ++lo) {
          const std::uint64_t base = hi * s0 * n + lo;
          S sum = in[base];
          for (std::uint64_t a = 1; a < n; ++a) sum += in[base + a * diag];
          sum *= move;
          for (std::uint64_t c = 0; c < n; ++c) {
            S v = in[base + c * diag];
            v *= keep;
            v += sum;
            out[base + c * diag] = v;
          }
        }
      }
      break;
    }
    case Factor::Type::SectorAverage: {
      const auto& p = *partition_;
      std::vector<S> sums(p.sectors.size(), S(0));
      for (std::uint64_t i = 0; i < dim; ++i) sums[p.sector_of[i]] += in[i];
      for (std::size_t k = 0; k < sums.size(); ++k) sums[k] /= static_cast<long>(p.size_of(k));
      for (std::uint64_t i = 0; i < dim; ++i) out[i] = sums[p.sector_of[i]];
      break;
    }
  }
}

std::vector<double> StochasticChain::stationary() const {
  switch (kind_) {
    case ChainKind::Local:
    case ChainKind::Nonlocal:
      return std::vector<double>(dimension_, 1.0 / static_cast<double>(dimension_));
    case ChainKind::Lumped: {
      std::vector<double> pi(dimension_);
      for (std::size_t i = 0; i < dimension_; ++i) pi[i] = to_double(ratio(weights_[i], weight_total_));
      return pi;
    }
    case ChainKind::Custom:
      if (custom_stationary_.empty()) throw std::logic_error("custom chain has no stationary vector");
      return custom_stationary_;
  }
  return {};
}

Rational StochasticChain::stationary_exact(std::size_t i) const {
  if (kind_ == ChainKind::Lumped) return ratio(weights_.at(i), weight_total_);
  if (kind_ == ChainKind::Custom) throw std::logic_error("custom chain has no exact stationary vector");
  return Rational(1, static_cast<long>(dimension_));
}

void StochasticChain::apply_left(std::span<const double> p, std::span<double> out) const {
  if (p.size() != dimension_ || out.size() != dimension_) throw std::invalid_argument("apply_left: size");
  if (factored()) {
    const auto w = gate_weights(gate_, alphabet_);
    const double stay = as_double(w.stay), move = as_double(w.move);
    std::vector<double> a(p.begin(), p.end()), b(dimension_);
    for (const auto& f : factors_) {
      apply_factor<double>(f, a, b, stay, move);
      a.swap(b);
    }
    std::copy(a.begin(), a.end(), out.begin());
    return;
  }
  const auto& m = *explicit_;
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) out[m.col[e]] += p[r] * m.val[e];
}

void StochasticChain::apply_right(std::span<const double> x, std::span<double> out) const {
  if (x.size() != dimension_ || out.size() != dimension_) throw std::invalid_argument("apply_right: size");
  if (factored()) {
    const auto w = gate_weights(gate_, alphabet_);
    const double stay = as_double(w.stay), move = as_double(w.move);
    std::vector<double> a(x.begin(), x.end()), b(dimension_);
    // every factor is symmetric, so the transpose just reverses the order
    for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) {
      apply_factor<double>(*it, a, b, stay, move);
      a.swap(b);
    }
    std::copy(a.begin(), a.end(), out.begin());
    return;
  }
  const auto& m = *explicit_;
  for (std::size_t r = 0; r < m.rows; ++r) {
    double s = 0;
    for (std::size_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) s += m.val[e] * x[m.col[e]];
    out[r] = s;
  }
}

std::vector<Rational> StochasticChain::apply_left_exact(const std::vector<Rational>& p) const {
  if (p.size() != dimension_) throw std::invalid_argument("apply_left_exact: size");
  if (factored()) {
    const auto w = gate_weights(gate_, alphabet_);
    std::vector<Rational> a(p), b(dimension_);
    for (const auto& f : factors_) {
      apply_factor<Rational>(f, a, b, w.stay, w.move);
      a.swap(b);
    }
    for (auto& x : a) x.canonicalize();
    return a;
  }
  if (!exact_) throw std::logic_error("chain has no exact representation");
  const auto& m = *exact_;
  std::vector<Rational> out(dimension_, Rational(0));
  for (std::size_t r = 0; r < m.rows; ++r) {
    if (p[r] == 0) continue;
    for (std::size_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) out[m.col[e]] += p[r] * m.val[e];
  }
  return out;
}

template <class S>
std::vector<std::pair<std::uint64_t, S>> StochasticChain::propagate(
    std::vector<std::pair<std::uint64_t, S>> v) const {
  const std::uint64_t n = static_cast<std::uint64_t>(alphabet_);
  if (!factored()) {
    std::vector<std::pair<std::uint64_t, S>> out;
    for (const auto& [i, x] : v) {
      if constexpr (std::is_same_v<S, Rational>) {
        if (!exact_) throw std::logic_error("chain has no exact representation");
        const auto& m = *exact_;
        for (std::size_t e = m.row_ptr[i]; e < m.row_ptr[i + 1]; ++e) out.emplace_back(m.col[e], x * m.val[e]);
      } else {
        const auto& m = *explicit_;
        for (std::size_t e = m.row_ptr[i]; e < m.row_ptr[i + 1]; ++e) out.emplace_back(m.col[e], x * m.val[e]);
      }
    }
    merge_sorted(out);
    return out;
  }
  const auto w = gate_weights(gate_, alphabet_);
  S stay, move;
  if constexpr (std::is_same_v<S, Rational>) {
    stay = w.stay;
    move = w.move;
  } else {
    stay = as_double(w.stay);
    move = as_double(w.move);
  }
  std::vector<std::pair<std::uint64_t, S>> next;
  for (const auto& f : factors_) {
    next.clear();
    switch (f.type) {
      case Factor::Type::Bath:
        for (const auto& [i, x] : v) {
          S share = x;
          share /= static_cast<long>(n);
          const std::uint64_t base = i - i % n;
          for (std::uint64_t c = 0; c < n; ++c) next.emplace_back(base + c, share);
        }
        break;
      case Factor::Type::Gate: {
        const std::uint64_t s1 = upow(n, length_ - 2 - f.site), s0 = s1 * n, diag = s0 + s1;
        for (const auto& [i, x] : v) {
          const std::uint64_t a = (i / s0) % n, b = (i / s1) % n;
          if (a != b) {
            next.emplace_back(i, x);
            continue;
          }
          const std::uint64_t base = i - a * diag;
          for (std::uint64_t c = 0; c < n; ++c) next.emplace_back(base + c * diag, x * (c == a ? stay : move));
        }
        break;
      }
      case Factor::Type::SectorAverage: {
        const auto& p = *partition_;
        std::unordered_map<std::uint32_t, S> mass;
        for (const auto& [i, x] : v) mass[p.sector_of[i]] += x;
        for (auto& [k, m] : mass) {
          S each = m;
          each /= static_cast<long>(p.size_of(k));
          for (std::uint64_t e = p.member_offsets[k]; e < p.member_offsets[k + 1]; ++e)
            next.emplace_back(p.members[e], each);
        }
        break;
      }
    }
    merge_sorted(next);
    v.swap(next);
  }
  if constexpr (std::is_same_v<S, Rational>)
    for (auto& e : v) e.second.canonicalize();
  return v;
}

std::vector<std::pair<std::uint64_t, Rational>> StochasticChain::propagate_exact(
    std::vector<std::pair<std::uint64_t, Rational>> v) const {
  return propagate<Rational>(std::move(v));
}

std::vector<std::pair<std::uint64_t, double>> StochasticChain::row(std::uint64_t i) const {
  if (i >= dimension_) throw std::out_of_range("row index");
  return propagate<double>({{i, 1.0}});
}

std::vector<std::pair<std::uint64_t, Rational>> StochasticChain::row_exact(std::uint64_t i) const {
  if (i >= dimension_) throw std::out_of_range("row index");
  return propagate<Rational>({{i, Rational(1)}});
}

CsrMatrix<double> StochasticChain::to_csr() const {
  if (explicit_) return *explicit_;
  CsrMatrix<double> m;
  m.cols = dimension_;
  for (std::uint64_t i = 0; i < dimension_; ++i) {
    auto r = row(i);
    m.push_row(r);
  }
  return m;
}

CsrMatrix<Rational> StochasticChain::to_csr_exact() const {
  if (exact_) return *exact_;
  if (!factored()) throw std::logic_error("chain has no exact representation");
  CsrMatrix<Rational> m;
  m.cols = dimension_;
  for (std::uint64_t i = 0; i < dimension_; ++i) {
    auto r = row_exact(i);
    m.push_row(r);
  }
  return m;
}

void StochasticChain::write_coordinates(std::ostream& os, bool exact) const {
  os << "# rows " << dimension_ << " cols " << dimension_ << "\n";
  for (std::uint64_t i = 0; i < dimension_; ++i) {
    if (exact) {
      for (const auto& [j, v] : row_exact(i)) os << i << ' ' << j << ' ' << v.get_str() << '\n';
    } else {
      for (const auto& [j, v] : row(i)) os << i << ' ' << j << ' ' << std::setprecision(17) << v << '\n';
    }
  }
}

StochasticChain StochasticChain::from_matrix(CsrMatrix<double> m, std::optional<std::vector<double>> stationary) {
  if (m.rows != m.cols || m.row_ptr.size() != m.rows + 1) throw std::invalid_argument("from_matrix: not square");
  for (std::size_t r = 0; r < m.rows; ++r) {
    double s = 0;
    for (std::size_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) {
      if (m.val[e] < 0) throw std::invalid_argument("from_matrix: negative entry");
      s += m.val[e];
    }
    if (std::abs(s - 1) > 1e-12) throw std::invalid_argument("from_matrix: row does not sum to 1");
  }
  StochasticChain c;
  c.kind_ = ChainKind::Custom;
  c.dimension_ = m.rows;
  c.explicit_ = std::move(m);
  if (stationary) c.custom_stationary_ = std::move(*stationary);
  return c;
}

StochasticChain build_full_local(int alphabet, std::size_t length, GateKind gate, LayerOrder order,
                                 std::uint64_t cap) {
  StochasticChain c;
  c.alphabet_ = alphabet;
  c.length_ = length;
  c.kind_ = ChainKind::Local;
  c.gate_ = gate;
  c.order_ = order;
  c.dimension_ = state_space_size(alphabet, length, cap);
  c.factors_.push_back({Factor::Type::Bath, 0});
  // 1-based pairs (2i,2i+1) start at 0-based site 1, 3, ...; pairs (2i-1,2i) at 0, 2, ...
  auto layer = [&](std::size_t first) {
    for (std::size_t j = first; j + 1 < length; j += 2) c.factors_.push_back({Factor::Type::Gate, j});
  };
  if (order == LayerOrder::Standard) {
    layer(1);
    layer(0);
  } else {
    layer(0);
    layer(1);
  }
  return c;
}

StochasticChain build_full_nonlocal(int alphabet, std::size_t length, std::uint64_t cap) {
  StochasticChain c;
  c.alphabet_ = alphabet;
  c.length_ = length;
  c.kind_ = ChainKind::Nonlocal;
  c.dimension_ = state_space_size(alphabet, length, cap);
  c.partition_ = std::make_shared<const SectorPartition>(partition_states(alphabet, length, cap));
  c.factors_ = {{Factor::Type::Bath, 0}, {Factor::Type::SectorAverage, 0}};
  return c;
}

StochasticChain build_lumped(int alphabet, std::size_t length, bool exact, std::uint64_t cap) {
  StochasticChain c;
  c.alphabet_ = alphabet;
  c.length_ = length;
  c.kind_ = ChainKind::Lumped;
  c.reversible_ = true;
  c.sectors_ = enumerate_sectors(alphabet, length, cap);
  c.dimension_ = c.sectors_.size();
  const DimensionTable table(alphabet, length);

  std::unordered_map<SectorId, std::size_t, SectorIdHash> index;
  index.reserve(c.sectors_.size() * 2);
  for (std::size_t k = 0; k < c.sectors_.size(); ++k) index.emplace(c.sectors_[k], k);
  auto find = [&](std::vector<Digit> d) { return index.at(SectorId::from_digits(alphabet, std::move(d))); };

  c.weights_.resize(c.dimension_);
  c.weight_total_ = ipow(alphabet, length);
  CsrMatrix<double> md;
  CsrMatrix<Rational> mq;
  md.cols = mq.cols = c.dimension_;
  const Digit n = static_cast<Digit>(alphabet);
  std::vector<std::pair<std::uint64_t, BigInt>> counts;
  for (std::size_t k = 0; k < c.dimension_; ++k) {
    const auto s = c.sectors_[k].digits();
    const std::size_t d = s.size();
    const BigInt& size = table(length, d);
    c.weights_[k] = size;
    // states of s split by the sector of their length-(L-1) prefix: the parent
    // vertex (depth d-1) or a child vertex (depth d+1); the last site is then
    // resampled uniformly
    counts.clear();
    if (d >= 1) {
      const BigInt& pw = table(length - 1, d - 1);
      std::vector<Digit> parent(s.begin(), s.end() - 1);
      for (Digit b = 0; b < n; ++b) {
        std::vector<Digit> t = parent;
        if (!t.empty() && t.back() == b)
          t.pop_back();
        else
          t.push_back(b);
        counts.emplace_back(find(std::move(t)), pw);
      }
    }
    if (d + 1 <= length - 1) {
      const BigInt& cw = table(length - 1, d + 1);
      for (Digit ch = 0; ch < n; ++ch) {
        if (d >= 1 && s.back() == ch) continue;
        for (Digit b = 0; b < n; ++b) {
          std::vector<Digit> t(s.begin(), s.end());
          if (b != ch) {
            t.push_back(ch);
            t.push_back(b);
          }
          counts.emplace_back(find(std::move(t)), cw);
        }
      }
    }
    merge_sorted(counts);
    const BigInt denom = size * alphabet;
    std::vector<std::pair<std::uint64_t, double>> rd;
    std::vector<std::pair<std::uint64_t, Rational>> rq;
    for (auto& [j, w] : counts) {
      Rational q = ratio(w, denom);
      rd.emplace_back(j, q.get_d());
      if (exact) rq.emplace_back(j, std::move(q));
    }
    md.push_row(rd);
    if (exact) mq.push_row(rq);
  }
  c.explicit_ = std::move(md);
  if (exact) c.exact_ = std::move(mq);
  return c;
}

bool strongly_connected(const StochasticChain& chain) {
  const std::size_t n = chain.dimension();
  if (n == 0) return false;
  const auto m = chain.to_csr();
  std::vector<std::vector<std::uint64_t>> rev(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e)
      if (m.val[e] > 0) rev[m.col[e]].push_back(r);
  auto reach = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::deque<std::uint64_t> q{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!q.empty()) {
      auto u = q.front();
      q.pop_front();
      auto visit = [&](std::uint64_t v) {
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          q.push_back(v);
        }
      };
      if (forward) {
        for (std::size_t e = m.row_ptr[u]; e < m.row_ptr[u + 1]; ++e)
          if (m.val[e] > 0) visit(m.col[e]);
      } else {
        for (auto v : rev[u]) visit(v);
      }
    }
    return count == n;
  };
  return reach(true) && reach(false);
}

LumpingCheck check_lumping(const StochasticChain& nonlocal, const StochasticChain& lumped) {
  if (nonlocal.kind() != ChainKind::Nonlocal || lumped.kind() != ChainKind::Lumped)
    throw std::invalid_argument("check_lumping: need a nonlocal and a lumped chain");
  if (!lumped.has_exact()) throw std::invalid_argument("check_lumping: lumped chain built without exact entries");
  const auto& part = *nonlocal.partition();
  if (part.sectors != lumped.sectors()) throw std::invalid_argument("check_lumping: sector bases differ");
  LumpingCheck res;
  res.sectors = part.sectors.size();
  for (std::size_t k = 0; k < part.sectors.size(); ++k) {
    const long sz = static_cast<long>(part.size_of(k));
    std::vector<std::pair<std::uint64_t, Rational>> start;
    for (auto e = part.member_offsets[k]; e < part.member_offsets[k + 1]; ++e)
      start.emplace_back(part.members[e], Rational(1, sz));
    auto lhs = nonlocal.propagate_exact(std::move(start));  // row k of U P
    std::vector<std::pair<std::uint64_t, Rational>> rhs;    // row k of Q U
    for (const auto& [j, q] : lumped.row_exact(k)) {
      Rational each = q / Rational(static_cast<long>(part.size_of(j)));
      for (auto e = part.member_offsets[j]; e < part.member_offsets[j + 1]; ++e) rhs.emplace_back(part.members[e], each);
    }
    merge_sorted(rhs);
    for (auto& e : rhs) e.second.canonicalize();
    if (lhs != rhs) ++res.mismatches;
  }
  res.holds = res.mismatches == 0;
  return res;
}

}  // namespace pfchain
