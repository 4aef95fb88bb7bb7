#include "pfchain/montecarlo.hpp"

#include "pfchain/census.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace pfchain {

// ---- Philox4x32-10 ----

Philox4x32::Counter Philox4x32::generate(Counter c, Key k) {
  constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += w0;
    k[1] += w1;
  }
  return c;
}

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

std::uint32_t StreamRng::next_u32() {
  if (pos_ == 4) {
    buf_ = Philox4x32::generate({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                 static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                                key_);
    ++block_;
    pos_ = 0;
  }
  return buf_[pos_++];
}

std::uint32_t StreamRng::below(std::uint32_t n) {
  // Lemire's multiply-shift with rejection
  std::uint64_t m = static_cast<std::uint64_t>(next_u32()) * n;
  std::uint32_t low = static_cast<std::uint32_t>(m);
  if (low < n) {
    const std::uint32_t threshold = (0u - n) % n;
    while (low < threshold) {
      m = static_cast<std::uint64_t>(next_u32()) * n;
      low = static_cast<std::uint32_t>(m);
    }
  }
  return static_cast<std::uint32_t>(m >> 32);
}

double StreamRng::uniform01() {
  const std::uint64_t hi = next_u32() >> 5, lo = next_u32() >> 6;  // 53 bits
  return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
}

// ---- dynamics ----

namespace {

inline void gate_layer(std::span<Digit> s, std::size_t first, std::uint32_t n, GateKind gate, StreamRng& rng) {
  const std::size_t len = s.size();
  const std::uint32_t nn = n * n, keep = nn - 2 * (n - 1);
  for (std::size_t j = first; j + 1 < len; j += 2) {
    if (s[j] != s[j + 1]) continue;
    Digit b;
    if (gate == GateKind::PairFlip) {
      b = static_cast<Digit>(rng.below(n));
    } else {
      // one draw: stay with weight N^2 - 2(N-1), each other symbol with weight 2
      const std::uint32_t r = rng.below(nn);
      if (r < keep) continue;
      const std::uint32_t k = (r - keep) / 2;
      b = static_cast<Digit>(k < s[j] ? k : k + 1);
    }
    s[j] = s[j + 1] = b;
  }
}

}  // namespace

void step(std::span<Digit> state, int alphabet, GateKind gate, LayerOrder order, StreamRng& rng) {
  if (state.empty()) return;
  const std::uint32_t n = static_cast<std::uint32_t>(alphabet);
  if (n < 2) return;
  state.back() = static_cast<Digit>(rng.below(n));
  // 1-based pairs (2i,2i+1) begin at 0-based site 1
  if (order == LayerOrder::Standard) {
    gate_layer(state, 1, n, gate, rng);
    gate_layer(state, 0, n, gate, rng);
  } else {
    gate_layer(state, 0, n, gate, rng);
    gate_layer(state, 1, n, gate, rng);
  }
}

SpinString step(const SpinString& s, GateKind gate, StreamRng& rng, LayerOrder order) {
  std::vector<Digit> d(s.digits().begin(), s.digits().end());
  step(d, s.alphabet(), gate, order, rng);
  return SpinString::from_digits(s.alphabet(), std::move(d));
}

std::vector<std::uint64_t> recording_grid(std::uint64_t t_max, std::uint64_t dense_until, double growth) {
  if (!(growth > 1.0)) throw std::invalid_argument("grid growth must exceed 1");
  std::vector<std::uint64_t> g;
  for (std::uint64_t t = 0; t <= std::min(t_max, dense_until); ++t) g.push_back(t);
  double x = static_cast<double>(g.back());
  while (g.back() < t_max) {
    x *= growth;
    auto t = static_cast<std::uint64_t>(std::ceil(x));
    t = std::min(std::max(t, g.back() + 1), t_max);
    g.push_back(t);
  }
  return g;
}

SpinString max_charge_state(int alphabet, std::size_t length, Symbol a) {
  // a on even (1-based) sites; those carry +1
  Symbol other = a == 1 ? 2 : 1;
  return SpinString::alternating(alphabet, length, other, a);
}

void SimConfig::validate() const {
  check_alphabet(alphabet);
  if (length < 2) throw std::invalid_argument("length must be >= 2");
  if (trajectories < 1) throw std::invalid_argument("need at least one trajectory");
  if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  for (Symbol a : observables.charges)
    if (a < 1 || a > alphabet) throw std::invalid_argument("charge symbol out of range");
  for (auto i : observables.match_sites)
    if (i >= length) throw std::invalid_argument("match site out of range");
  if (initial.kind == InitialKind::Explicit) {
    if (!initial.state || initial.state->length() != length || initial.state->alphabet() != alphabet)
      throw std::invalid_argument("explicit initial state does not match N and L");
  }
  if (bootstrap_groups < 1) throw std::invalid_argument("need at least one bootstrap group");
}

const SeriesColumn& EnsembleSeries::column(const std::string& name) const {
  for (const auto& c : columns)
    if (c.name == name) return c;
  throw std::out_of_range("no column " + name);
}

// ---- cone sampling ----

namespace {

// big integers scaled by a common power of two so they fit in doubles
std::vector<double> scaled(const std::vector<BigInt>& v) {
  long top = std::numeric_limits<long>::min();
  for (const auto& x : v)
    if (x > 0) {
      long e = 0;
      mpz_get_d_2exp(&e, x.get_mpz_t());
      top = std::max(top, e);
    }
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] > 0) {
      long e = 0;
      double m = mpz_get_d_2exp(&e, v[i].get_mpz_t());
      out[i] = std::ldexp(m, static_cast<int>(e - top));
    }
  return out;
}

}  // namespace

ConeSampler::ConeSampler(int alphabet, std::size_t length, std::size_t depth)
    : alphabet_(alphabet), length_(length), stem_(cone_stem(alphabet, depth)) {
  if (depth < 1 || depth > length || depth % 2 != length % 2 || (depth == 1 && length % 2 == 0))
    throw std::invalid_argument("cone depth must satisfy 1 <= d <= L, d = L mod 2");
  DimensionTable t(alphabet, length);
  std::vector<BigInt> w;
  for (std::size_t d = depth; d <= length; d += 2) {
    depths_.push_back(d);
    w.push_back(t(length, d) * ipow(alphabet - 1, d - stem_.depth()));
  }
  depth_weights_ = scaled(w);
  walks_.resize(length + 1);
  for (std::size_t m = 0; m <= length; ++m) {
    std::vector<BigInt> row(length + 1);
    for (std::size_t d = 0; d <= length; ++d) row[d] = d <= m ? t(m, d) : BigInt(0);
    walks_[m] = scaled(row);
  }
}

std::size_t ConeSampler::pick(std::span<const double> w, StreamRng& rng) const {
  double total = 0;
  for (double x : w) total += x;
  double u = rng.uniform01() * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return i;
    u -= w[i];
  }
  for (std::size_t i = w.size(); i-- > 0;)
    if (w[i] > 0) return i;
  throw std::logic_error("pick: all weights zero");
}

std::vector<Digit> ConeSampler::sample(StreamRng& rng) const {
  const std::uint32_t n = static_cast<std::uint32_t>(alphabet_);
  // target sector: depth by weight, then a uniform extension of the stem
  const std::size_t depth = depths_[pick(depth_weights_, rng)];
  std::vector<Digit> target(stem_.digits().begin(), stem_.digits().end());
  while (target.size() < depth) {
    Digit c = static_cast<Digit>(rng.below(n - 1));
    if (c >= target.back()) ++c;
    target.push_back(c);
  }
  // uniform string reducing to target: on the N-regular tree the number of
  // length-m walks between two vertices depends only on their distance
  std::vector<Digit> out, cur;
  out.reserve(length_);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < length_; ++i) {
    const std::size_t m = length_ - i - 1;
    for (std::uint32_t c = 0; c < n; ++c) {
      std::size_t dep = cur.size(), common = 0;
      bool back = !cur.empty() && cur.back() == c;
      std::size_t nd = back ? dep - 1 : dep + 1;
      // common prefix of the neighbour with the target
      std::size_t lim = std::min(dep, target.size());
      while (common < lim && cur[common] == target[common]) ++common;
      if (back) {
        common = std::min(common, nd);
      } else if (common == dep && dep < target.size() && target[dep] == c) {
        common = dep + 1;
      }
      const std::size_t dist = nd + target.size() - 2 * common;
      w[c] = dist <= m ? walks_[m][dist] : 0.0;
    }
    const Digit c = static_cast<Digit>(pick(w, rng));
    if (!cur.empty() && cur.back() == c)
      cur.pop_back();
    else
      cur.push_back(c);
    out.push_back(c);
  }
  return out;
}

// ---- ensemble engine ----

namespace {

constexpr std::uint64_t kBootstrapStream = 0xB0075742A9ull << 20;
constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

struct Engine {
  const SimConfig& cfg;
  std::vector<std::uint64_t> grid;
  std::size_t n_obs = 0;
  std::vector<std::string> names;
  std::uint64_t n = 0;
  std::size_t groups = 1;
  std::size_t L = 0;

  std::vector<Digit> state, init;
  std::vector<StreamRng> rng;
  std::vector<std::uint64_t> own_first;  // per-trajectory first passage

  // [obs][grid]
  std::vector<std::int64_t> sum, sumsq;
  // [group][grid] for the first charge observable
  std::vector<std::int64_t> gsum;
  std::vector<std::int64_t> gcount;

  std::size_t done = 0;  // grid points recorded
  std::uint64_t now = 0;

  explicit Engine(const SimConfig& c, std::vector<std::uint64_t> g) : cfg(c), grid(std::move(g)) {
    L = cfg.length;
    n = cfg.trajectories;
    groups = static_cast<std::size_t>(std::min<std::uint64_t>(n, cfg.bootstrap_groups));
    const auto& o = cfg.observables;
    for (Symbol a : o.charges) names.push_back("charge_" + std::to_string(a));
    if (o.depth) names.push_back("depth");
    if (o.cone_escape) names.push_back("outside_cone_" + std::to_string(*o.cone_escape));
    for (auto i : o.match_sites) names.push_back("match_" + std::to_string(i));
    n_obs = names.size();
    sum.assign(n_obs * grid.size(), 0);
    sumsq.assign(n_obs * grid.size(), 0);
    gsum.assign(groups * grid.size(), 0);
    gcount.assign(groups, 0);
    for (std::uint64_t t = 0; t < n; ++t) ++gcount[t % groups];

    state.resize(n * L);
    rng.resize(n);
    std::optional<ConeSampler> cone;
    if (cfg.initial.kind == InitialKind::UniformCone) cone.emplace(cfg.alphabet, L, cfg.initial.cone_depth);
    const Symbol a = o.charges.empty() ? 1 : o.charges.front();
    const SpinString maxq = max_charge_state(cfg.alphabet, L, a);
    for (std::uint64_t t = 0; t < n; ++t) {
      rng[t] = StreamRng(cfg.seed, t);
      Digit* s = &state[t * L];
      switch (cfg.initial.kind) {
        case InitialKind::MaxCharge:
          std::copy(maxq.digits().begin(), maxq.digits().end(), s);
          break;
        case InitialKind::Explicit:
          std::copy(cfg.initial.state->digits().begin(), cfg.initial.state->digits().end(), s);
          break;
        case InitialKind::UniformCone: {
          auto v = cone->sample(rng[t]);
          std::copy(v.begin(), v.end(), s);
          break;
        }
        case InitialKind::Uniform:
          for (std::size_t i = 0; i < L; ++i) s[i] = static_cast<Digit>(rng[t].below(static_cast<std::uint32_t>(cfg.alphabet)));
          break;
      }
    }
    init = state;
    if (cfg.per_trajectory_passage) own_first.assign(n, kNever);
  }

  // Advance trajectories [lo, hi) to grid[upto-1], recording into the given buffers.
  void advance(std::uint64_t lo, std::uint64_t hi, std::size_t from, std::size_t upto, std::uint64_t t0,
               std::vector<std::int64_t>& s1, std::vector<std::int64_t>& s2, std::vector<std::int64_t>& gs) {
    const auto& o = cfg.observables;
    std::vector<Digit> st;
    const SectorId stem = o.cone_escape ? cone_stem(cfg.alphabet, *o.cone_escape) : SectorId();
    const std::size_t G = grid.size();
    const double thresh = cfg.gamma * static_cast<double>(L) / 2.0;
    for (std::uint64_t tr = lo; tr < hi; ++tr) {
      std::span<Digit> s(&state[tr * L], L);
      std::span<const Digit> s0(&init[tr * L], L);
      std::uint64_t t = t0;
      for (std::size_t gi = from; gi < upto; ++gi) {
        while (t < grid[gi]) {
          step(s, cfg.alphabet, cfg.gate, cfg.order, rng[tr]);
          ++t;
        }
        std::size_t k = 0;
        auto put = [&](std::int64_t v) {
          s1[k * G + gi] += v;
          s2[k * G + gi] += v * v;
          ++k;
        };
        bool first_charge = true;
        for (Symbol a : o.charges) {
          std::int64_t q = 0;
          const Digit d = static_cast<Digit>(a - 1);
          for (std::size_t i = 0; i < L; ++i)
            if (s[i] == d) q += (i % 2 == 0) ? -1 : 1;
          if (first_charge) {
            gs[(tr % groups) * G + gi] += q;
            if (!own_first.empty() && own_first[tr] == kNever && static_cast<double>(q) <= thresh)
              own_first[tr] = grid[gi];
            first_charge = false;
          }
          put(q);
        }
        if (o.depth || o.cone_escape) reduce_digits(s, st);
        if (o.depth) put(static_cast<std::int64_t>(st.size()));
        if (o.cone_escape) {
          bool inside = st.size() >= stem.depth() &&
                        std::equal(stem.digits().begin(), stem.digits().end(), st.begin());
          put(inside ? 0 : 1);
        }
        for (auto i : o.match_sites) put(s[i] == s0[i] ? 1 : 0);
      }
    }
  }

  // Record grid points [done, upto).
  void run_to(std::size_t upto) {
    upto = std::min(upto, grid.size());
    if (upto <= done) return;
    const unsigned threads = static_cast<unsigned>(std::min<std::uint64_t>(cfg.threads, n));
    const std::uint64_t t0 = now;
    if (threads <= 1) {
      advance(0, n, done, upto, t0, sum, sumsq, gsum);
    } else {
      std::vector<std::vector<std::int64_t>> a(threads, std::vector<std::int64_t>(sum.size(), 0)),
          b(threads, std::vector<std::int64_t>(sum.size(), 0)), c(threads, std::vector<std::int64_t>(gsum.size(), 0));
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < threads; ++w) {
        const std::uint64_t lo = n * w / threads, hi = n * (w + 1) / threads;
        pool.emplace_back([&, w, lo, hi] { advance(lo, hi, done, upto, t0, a[w], b[w], c[w]); });
      }
      for (auto& th : pool) th.join();
      // integer sums: the combination order cannot change the result
      for (unsigned w = 0; w < threads; ++w) {
        for (std::size_t i = 0; i < sum.size(); ++i) {
          sum[i] += a[w][i];
          sumsq[i] += b[w][i];
        }
        for (std::size_t i = 0; i < gsum.size(); ++i) gsum[i] += c[w][i];
      }
    }
    done = upto;
    now = grid[upto - 1];
  }

  double mean(std::size_t k, std::size_t gi) const {
    return static_cast<double>(sum[k * grid.size() + gi]) / static_cast<double>(n);
  }

  // first recorded grid index where the mean of the first charge is <= gamma L / 2
  std::optional<std::size_t> crossing() const {
    if (cfg.observables.charges.empty()) return std::nullopt;
    const double thresh = cfg.gamma * static_cast<double>(L) / 2.0;
    for (std::size_t gi = 0; gi < done; ++gi)
      if (mean(0, gi) <= thresh) return gi;
    return std::nullopt;
  }

  FirstPassage ensemble_passage() const {
    FirstPassage fp;
    fp.estimator = "ensemble_mean";
    fp.gamma = cfg.gamma;
    fp.horizon = now;
    fp.resamples = cfg.bootstrap_resamples;
    auto gi = crossing();
    const double inf = std::numeric_limits<double>::infinity();
    if (!gi) {
      fp.censored = true;
      fp.t = fp.ci_lo = fp.ci_hi = inf;
      return fp;
    }
    fp.censored = false;
    fp.t = static_cast<double>(grid[*gi]);
    // grouped bootstrap over trajectories
    const std::size_t G = grid.size();
    const double thresh = cfg.gamma * static_cast<double>(L) / 2.0;
    StreamRng r(cfg.seed, kBootstrapStream);
    std::vector<double> ts;
    std::vector<std::uint32_t> pick(groups);
    for (std::size_t b = 0; b < cfg.bootstrap_resamples; ++b) {
      std::int64_t cnt = 0;
      for (auto& p : pick) {
        p = r.below(static_cast<std::uint32_t>(groups));
        cnt += gcount[p];
      }
      double tb = inf;
      for (std::size_t g = 0; g < done; ++g) {
        std::int64_t s = 0;
        for (auto p : pick) s += gsum[p * G + g];
        if (static_cast<double>(s) / static_cast<double>(cnt) <= thresh) {
          tb = static_cast<double>(grid[g]);
          break;
        }
      }
      ts.push_back(tb);
    }
    std::sort(ts.begin(), ts.end());
    if (!ts.empty()) {
      auto q = [&](double p) {
        std::size_t i = static_cast<std::size_t>(std::floor(p * static_cast<double>(ts.size() - 1)));
        return ts[i];
      };
      fp.ci_lo = q(0.025);
      fp.ci_hi = q(0.975);
    } else {
      fp.ci_lo = fp.ci_hi = fp.t;
    }
    return fp;
  }

  FirstPassage own_passage() const {
    FirstPassage fp;
    fp.estimator = "per_trajectory_mean";
    fp.gamma = cfg.gamma;
    fp.horizon = now;
    double s = 0, s2 = 0;
    bool censored = false;
    for (auto t : own_first) {
      if (t == kNever) {
        censored = true;
        break;
      }
      s += static_cast<double>(t);
      s2 += static_cast<double>(t) * static_cast<double>(t);
    }
    if (censored) {
      fp.censored = true;
      fp.t = fp.ci_lo = fp.ci_hi = std::numeric_limits<double>::infinity();
      return fp;
    }
    const double nn = static_cast<double>(own_first.size());
    fp.censored = false;
    fp.t = s / nn;
    const double var = nn > 1 ? (s2 - s * s / nn) / (nn - 1) : 0.0;
    const double se = std::sqrt(std::max(var, 0.0) / nn);
    fp.ci_lo = fp.t - 1.96 * se;
    fp.ci_hi = fp.t + 1.96 * se;
    return fp;
  }

  EnsembleSeries series() const {
    EnsembleSeries out;
    out.trajectories = n;
    out.times.assign(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(done));
    const std::size_t G = grid.size();
    const double nn = static_cast<double>(n);
    for (std::size_t k = 0; k < n_obs; ++k) {
      SeriesColumn c;
      c.name = names[k];
      // charges are reported normalized, 2 Q / L
      const bool is_charge = k < cfg.observables.charges.size();
      const double scale = is_charge ? 2.0 / static_cast<double>(L) : 1.0;
      for (std::size_t gi = 0; gi < done; ++gi) {
        const double m = static_cast<double>(sum[k * G + gi]) / nn;
        const double var = nn > 1 ? (static_cast<double>(sumsq[k * G + gi]) - nn * m * m) / (nn - 1) : 0.0;
        c.mean.push_back(m * scale);
        c.std_error.push_back(std::sqrt(std::max(var, 0.0) / nn) * scale);
      }
      if (is_charge) c.name = "Q" + std::to_string(cfg.observables.charges[k]);
      out.columns.push_back(std::move(c));
    }
    if (!cfg.observables.charges.empty()) out.first_passage = ensemble_passage();
    if (cfg.per_trajectory_passage) out.per_trajectory = own_passage();
    return out;
  }
};

}  // namespace

EnsembleSeries run_ensemble(const SimConfig& cfg) {
  cfg.validate();
  Engine e(cfg, recording_grid(cfg.t_max, cfg.dense_until, cfg.grid_growth));
  e.run_to(e.grid.size());
  return e.series();
}

FirstPassage estimate_tQ(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.observables.charges.empty()) throw std::invalid_argument("estimate_tQ needs a charge observable");
  Engine e(cfg, recording_grid(cfg.t_max, cfg.dense_until, cfg.grid_growth));
  std::size_t upto = 1;
  while (e.done < e.grid.size()) {
    // windows roughly double the simulated time
    const std::uint64_t target = std::max<std::uint64_t>(2 * e.now, e.now + 256);
    while (upto < e.grid.size() && e.grid[upto - 1] < target) ++upto;
    e.run_to(upto);
    if (auto gi = e.crossing()) {
      const double stop = cfg.extend_factor * static_cast<double>(e.grid[*gi]);
      if (static_cast<double>(e.now) >= stop) break;
      // finish exactly at the extension horizon
      std::size_t last = upto;
      while (last < e.grid.size() && static_cast<double>(e.grid[last - 1]) < stop) ++last;
      e.run_to(last);
      upto = last;
      break;
    }
  }
  return e.ensemble_passage();
}

EscapeEstimate cone_escape_probability(const SimConfig& cfg, std::size_t depth, std::vector<std::uint64_t> t_samples) {
  cfg.validate();
  std::sort(t_samples.begin(), t_samples.end());
  t_samples.erase(std::unique(t_samples.begin(), t_samples.end()), t_samples.end());
  EscapeEstimate est;
  est.depth = depth;
  est.expansion = cone_stats(cfg.alphabet, cfg.length, depth).expansion;
  est.times = t_samples;
  const std::size_t T = t_samples.size(), L = cfg.length;
  std::vector<std::int64_t> outside(T, 0), left(T, 0);
  ConeSampler sampler(cfg.alphabet, L, depth);
  const auto stem = sampler.stem().digits();
  const std::uint64_t n = cfg.trajectories;
  const unsigned threads = static_cast<unsigned>(std::min<std::uint64_t>(cfg.threads, n));
  auto work = [&](std::uint64_t lo, std::uint64_t hi, std::vector<std::int64_t>& out, std::vector<std::int64_t>& lft) {
    std::vector<Digit> st;
    for (std::uint64_t tr = lo; tr < hi; ++tr) {
      StreamRng r(cfg.seed, tr);
      auto s = sampler.sample(r);
      auto inside = [&] {
        reduce_digits(s, st);
        return st.size() >= stem.size() && std::equal(stem.begin(), stem.end(), st.begin());
      };
      bool has_left = !inside();
      std::uint64_t t = 0;
      for (std::size_t k = 0; k < T; ++k) {
        bool in_now = !has_left;
        while (t < t_samples[k]) {
          step(s, cfg.alphabet, cfg.gate, cfg.order, r);
          ++t;
          in_now = inside();
          if (!in_now) has_left = true;
        }
        if (t == 0) in_now = inside();
        out[k] += in_now ? 0 : 1;
        lft[k] += has_left ? 1 : 0;
      }
    }
  };
  if (threads <= 1) {
    work(0, n, outside, left);
  } else {
    std::vector<std::vector<std::int64_t>> a(threads, std::vector<std::int64_t>(T, 0)), b = a;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] { work(n * w / threads, n * (w + 1) / threads, a[w], b[w]); });
    for (auto& th : pool) th.join();
    for (unsigned w = 0; w < threads; ++w)
      for (std::size_t k = 0; k < T; ++k) {
        outside[k] += a[w][k];
        left[k] += b[w][k];
      }
  }
  const double nn = static_cast<double>(n), phi = est.expansion.get_d();
  for (std::size_t k = 0; k < T; ++k) {
    const double po = static_cast<double>(outside[k]) / nn, pl = static_cast<double>(left[k]) / nn;
    est.outside.push_back(po);
    est.outside_err.push_back(std::sqrt(po * (1 - po) / nn));
    est.left.push_back(pl);
    est.left_err.push_back(std::sqrt(pl * (1 - pl) / nn));
    est.bound.push_back(static_cast<double>(t_samples[k]) * phi);
    // binomial error floor of one count keeps zero-hit estimates honest
    const double sigma = std::max(est.left_err.back(), 1.0 / nn);
    if (pl > est.bound.back() + 4 * sigma) est.within_bound = false;
  }
  return est;
}

}  // namespace pfchain

#include <boost/math/distributions/chi_squared.hpp>

#include <unordered_map>

namespace pfchain {

OneStepLaw one_step_law(const StochasticChain& local, std::uint64_t start, std::uint64_t samples, std::uint64_t seed) {
  if (local.kind() != ChainKind::Local) throw std::invalid_argument("one_step_law needs a local chain");
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  const auto exact = local.row(start);
  std::unordered_map<std::uint64_t, std::size_t> cell;
  for (std::size_t k = 0; k < exact.size(); ++k) cell.emplace(exact[k].first, k);
  std::vector<std::uint64_t> counts(exact.size(), 0);
  OneStepLaw law;
  law.start = start;
  const auto s0 = state_from_index(local.alphabet(), local.length(), start);
  std::vector<Digit> s(local.length());
  StreamRng rng(seed, start);
  for (std::uint64_t i = 0; i < samples; ++i) {
    std::copy(s0.digits().begin(), s0.digits().end(), s.begin());
    step(s, local.alphabet(), local.gate(), local.order(), rng);
    std::uint64_t idx = 0;
    for (Digit d : s) idx = idx * static_cast<std::uint64_t>(local.alphabet()) + d;
    auto it = cell.find(idx);
    if (it == cell.end())
      ++law.unexpected;
    else
      ++counts[it->second];
  }
  const double n = static_cast<double>(samples);
  for (std::size_t k = 0; k < exact.size(); ++k) {
    const double p = exact[k].second, e = n * p, o = static_cast<double>(counts[k]);
    law.chi2 += (o - e) * (o - e) / e;
    const double sd = std::sqrt(n * p * (1 - p));
    if (sd > 0) law.max_abs_z = std::max(law.max_abs_z, std::abs(o - e) / sd);
  }
  law.dof = exact.size() > 1 ? exact.size() - 1 : 0;
  if (law.dof > 0) {
    boost::math::chi_squared dist(static_cast<double>(law.dof));
    law.p_value = boost::math::cdf(boost::math::complement(dist, law.chi2));
  } else {
    law.p_value = counts.empty() || counts[0] == samples ? 1.0 : 0.0;
  }
  if (law.unexpected > 0) law.p_value = 0;
  return law;
}

}  // namespace pfchain
