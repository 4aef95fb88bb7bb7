#include "pfchain/cli.hpp"

#include "pfchain/bounds.hpp"
#include "pfchain/census.hpp"
#include "pfchain/chains.hpp"
#include "pfchain/montecarlo.hpp"
#include "pfchain/spectra.hpp"
#include "pfchain/walks.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <unistd.h>

#ifndef PFCHAIN_VERSION
#define PFCHAIN_VERSION "0.0.0"
#endif

namespace pfchain {

using json = nlohmann::ordered_json;

std::string version_string() { return PFCHAIN_VERSION; }

namespace {

constexpr int kSchema = 1;

const std::vector<std::string> kCommands = {"census", "gap", "expansion", "simulate", "sweep", "bounds", "verify"};

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

GateKind parse_gate(const std::string& g) { return g == "tl" ? GateKind::TemperleyLieb : GateKind::PairFlip; }
LayerOrder parse_order(const std::string& o) { return o == "reversed" ? LayerOrder::Reversed : LayerOrder::Standard; }

StochasticChain make_chain(const ExperimentSpec& s, bool exact_lumped = false) {
  if (s.chain == "local") return build_full_local(s.n, s.len, parse_gate(s.gate), parse_order(s.order));
  if (s.chain == "nonlocal") return build_full_nonlocal(s.n, s.len);
  return build_lumped(s.n, s.len, exact_lumped);
}

// ---- output plumbing ----

struct Artifact {
  std::string primary;
  std::optional<json> summary;
  int status = kExitOk;
};

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json metadata(const ExperimentSpec& s) {
  json m;
  m["schema"] = kSchema;
  m["tool"] = "pfchain";
  m["version"] = version_string();
  m["timestamp"] = utc_now();
  m["command"] = s.command;
  m["argv"] = s.argv;
  json cfg = json::object();
  for (const auto& [k, v] : s.settings) cfg[k] = v;
  m["config"] = cfg;
  return m;
}

std::string csv_from_flat(const json& obj) {
  std::ostringstream h, v;
  bool first = true;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!first) {
      h << ',';
      v << ',';
    }
    first = false;
    h << it.key();
    if (it->is_string())
      v << it->get<std::string>();
    else if (!it->is_structured())
      v << it->dump();
  }
  return h.str() + "\n" + v.str() + "\n";
}

// ---- subcommands ----

Artifact do_census(const ExperimentSpec& s) {
  const auto census = sector_dims(s.n, s.len);
  DimensionTable table(s.n, s.len);
  json rows = json::array();
  std::ostringstream csv;
  csv << "d,multiplicity,dim_exact,dim_asymptotic,cone_volume,cone_expansion_exact,cone_expansion_asymptotic,cone_regime\n";
  for (std::size_t d = s.len % 2; d <= s.len; d += 2) {
    json r;
    r["d"] = d;
    r["multiplicity"] = census.multiplicity(d).get_str();
    r["dim_exact"] = census.dim(d).get_str();
    std::string asym;
    if (s.n >= 3) {
      double a = kd_asymptotic(s.n, s.len, d);
      asym = fmt(a);
      r["dim_asymptotic"] = num(a);
    } else {
      r["dim_asymptotic"] = nullptr;
    }
    std::string vol, ex, exa, regime;
    if (s.len >= 2 && (d >= 2 || (d == 1 && s.len % 2 == 1))) {
      auto cs = cone_stats(table, s.len, d);
      vol = cs.volume.get_str();
      ex = cs.expansion.get_str();
      if (s.n >= 3) exa = fmt(cs.asymptotic_expansion);
      regime = cs.regime == ConeRegime::Slow ? "slow" : cs.regime == ConeRegime::Fast ? "fast" : "crossover";
      r["cone_volume"] = vol;
      r["cone_expansion_exact"] = ex;
      r["cone_expansion_asymptotic"] = s.n >= 3 ? num(cs.asymptotic_expansion) : json(nullptr);
      r["cone_regime"] = regime;
    }
    csv << d << ',' << r["multiplicity"].get<std::string>() << ',' << r["dim_exact"].get<std::string>() << ','
        << asym << ',' << vol << ',' << ex << ',' << exa << ',' << regime << '\n';
    rows.push_back(r);
  }
  Artifact a;
  if (s.format == "json") {
    json j;
    j["schema"] = kSchema;
    j["N"] = s.n;
    j["L"] = s.len;
    j["total_states"] = census.total_states().get_str();
    j["sector_count"] = sector_count(s.n, s.len).get_str();
    j["rows"] = rows;
    a.primary = j.dump(2) + "\n";
  } else {
    a.primary = csv.str();
  }
  return a;
}

Artifact do_gap(const ExperimentSpec& s) {
  const auto chain = make_chain(s);
  GapOptions opts;
  opts.tol = s.tol;
  const auto g = spectral_gap(chain, opts);
  const auto ch = cheeger_check(chain, g);
  json j;
  j["schema"] = kSchema;
  j["N"] = s.n;
  j["L"] = s.len;
  j["chain"] = s.chain;
  j["gate"] = s.gate;
  j["order"] = s.order;
  j["dimension"] = chain.dimension();
  j["gap"] = g.gap;
  j["lambda2_re"] = g.lambda2.real();
  j["lambda2_im"] = g.lambda2.imag();
  j["method"] = g.method == GapMethod::Dense ? "dense" : "iterative";
  j["residual"] = g.residual;
  j["iterations"] = g.iterations;
  j["relaxation_time"] = num(g.relaxation_time());
  j["mixing_time_lower"] = num(g.mixing_time_lower());
  j["cheeger_upper"] = ch.upper;
  j["cheeger_lower_witness"] = ch.lower_witness;
  j["cheeger_upper_holds"] = ch.upper_holds;
  j["cheeger_lower_proven"] = ch.lower_proven;
  j["cheeger_lower_holds"] = ch.lower_holds;
  j["min_cone_expansion"] = ch.min_expansion.get_str();
  j["min_cone_depth"] = ch.argmin_depth;
  if (s.n >= 3) {
    // where the gap sits between the conjectured L^-3 rho^2L and L^-3/2 rho^L shapes
    const double l = static_cast<double>(s.len), rho = spectral_radius(s.n);
    j["gap_over_upper_shape"] = g.gap / (std::pow(l, -1.5) * std::pow(rho, l));
    j["gap_over_lower_shape"] = g.gap / (std::pow(l, -3.0) * std::pow(rho, 2 * l));
    auto b = gap_upper_bound(s.n, s.len);
    j["gap_upper_valid"] = b.valid;
    j["gap_upper"] = num(b.value);
  } else {
    auto w = n2_gap_window(s.len);
    j["n2_window_lower"] = w.get("lower");
    j["n2_window_upper"] = w.get("upper");
  }
  Artifact a;
  a.primary = s.format == "csv" ? csv_from_flat(j) : j.dump(2) + "\n";
  return a;
}

Artifact do_expansion(const ExperimentSpec& s) {
  const auto chain = make_chain(s, true);
  const auto stem = cone_stem(s.n, s.depth);
  const auto members = cone_members(chain, stem);
  const auto e = subset_expansion(chain, members, s.exact);
  const auto cs = cone_stats(s.n, s.len, s.depth);
  json j;
  j["schema"] = kSchema;
  j["N"] = s.n;
  j["L"] = s.len;
  j["chain"] = s.chain;
  j["depth"] = s.depth;
  j["stem"] = stem.str();
  j["subset_size"] = e.size;
  j["expansion"] = e.value;
  j["expansion_exact"] = e.exact ? json(e.exact->get_str()) : json(nullptr);
  j["census_exact"] = cs.expansion.get_str();
  j["agree"] = e.exact ? (*e.exact == cs.expansion) : (std::abs(e.value - cs.expansion.get_d()) < 1e-12);
  if (s.n == 2 && s.len % 2 == 1 && s.depth == 1) j["edge_expansion"] = n2_min_expansion(s.len).get_str();
  Artifact a;
  a.primary = s.format == "csv" ? csv_from_flat(j) : j.dump(2) + "\n";
  return a;
}

SimConfig sim_config(const ExperimentSpec& s) {
  SimConfig c;
  c.alphabet = s.n;
  c.length = s.len;
  c.gate = parse_gate(s.gate);
  c.order = parse_order(s.order);
  c.trajectories = s.traj;
  c.t_max = s.tmax;
  c.seed = s.seed;
  c.gamma = s.gamma;
  c.threads = s.threads;
  c.per_trajectory_passage = s.per_trajectory;
  c.observables.charges.assign(s.charges.begin(), s.charges.end());
  c.observables.depth = s.track_depth;
  c.observables.cone_escape = s.cone;
  c.observables.match_sites = s.match;
  if (s.state) {
    c.initial.kind = InitialKind::Explicit;
    c.initial.state = SpinString::parse(s.n, *s.state);
  } else if (s.init == "uniform") {
    c.initial.kind = InitialKind::Uniform;
  } else if (s.init == "cone") {
    c.initial.kind = InitialKind::UniformCone;
    c.initial.cone_depth = s.depth;
  }
  return c;
}

json passage_json(const FirstPassage& fp) {
  json j;
  j["estimator"] = fp.estimator;
  j["gamma"] = fp.gamma;
  j["t_Q"] = num(fp.t);
  j["ci_lo"] = num(fp.ci_lo);
  j["ci_hi"] = num(fp.ci_hi);
  j["censored"] = fp.censored;
  j["horizon"] = fp.horizon;
  j["resamples"] = fp.resamples;
  return j;
}

Artifact do_simulate(const ExperimentSpec& s) {
  const auto cfg = sim_config(s);
  const auto series = run_ensemble(cfg);
  json summary;
  summary["schema"] = kSchema;
  summary["N"] = s.n;
  summary["L"] = s.len;
  summary["trajectories"] = series.trajectories;
  if (series.first_passage) summary["first_passage"] = passage_json(*series.first_passage);
  if (series.per_trajectory) summary["per_trajectory"] = passage_json(*series.per_trajectory);
  Artifact a;
  if (s.format == "json") {
    json j = summary;
    j["times"] = series.times;
    for (const auto& c : series.columns) {
      j["mean_" + c.name] = c.mean;
      j["stderr_" + c.name] = c.std_error;
    }
    a.primary = j.dump() + "\n";
    return a;
  }
  std::ostringstream os;
  os << "t";
  for (const auto& c : series.columns) os << ",mean_" << c.name << ",stderr_" << c.name;
  os << '\n';
  os << std::setprecision(10);
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    os << series.times[i];
    for (const auto& c : series.columns) os << ',' << c.mean[i] << ',' << c.std_error[i];
    os << '\n';
  }
  a.primary = os.str();
  a.summary = summary;
  return a;
}

Artifact do_sweep(const ExperimentSpec& s) {
  if (s.lens.empty()) throw UsageError("--lens: need at least one length");
  std::ostringstream os;
  os << "L,t_Q,ci_lo,ci_hi,censored,charge_time_lower\n";
  std::vector<double> xs, ys, ratios;
  json rows = json::array();
  for (auto l : s.lens) {
    ExperimentSpec one = s;
    one.len = l;
    auto cfg = sim_config(one);
    cfg.observables.depth = false;
    const auto fp = estimate_tQ(cfg);
    double lower = std::nan("");
    if (s.n >= 3) {
      auto b = charge_time_lower_bound(s.n, l, s.gamma, s.headline ? ChargeConstant::Headline : ChargeConstant::Proof);
      if (b.valid) lower = b.value;
    }
    os << l << ',' << fmt(fp.t) << ',' << fmt(fp.ci_lo) << ',' << fmt(fp.ci_hi) << ',' << (fp.censored ? 1 : 0) << ','
       << (std::isnan(lower) ? "" : fmt(lower)) << '\n';
    json r = passage_json(fp);
    r["L"] = l;
    rows.push_back(r);
    if (!fp.censored) {
      xs.push_back(static_cast<double>(l));
      ys.push_back(fp.t);
      if (s.n >= 3) {
        const double shape = std::pow(static_cast<double>(l), 1.5) / std::pow(spectral_radius(s.n), static_cast<double>(l));
        ratios.push_back(fp.t / shape);
      }
    }
  }
  json summary;
  summary["schema"] = kSchema;
  summary["N"] = s.n;
  summary["gamma"] = s.gamma;
  summary["rows"] = rows;
  if (xs.size() >= 2) summary["power_law_exponent"] = fit_power_law(xs, ys).exponent;
  if (ratios.size() >= 1) {
    double lg = 0;
    for (double r : ratios) lg += std::log(r);
    const double c = std::exp(lg / static_cast<double>(ratios.size()));
    double worst = 1;
    for (double r : ratios) worst = std::max(worst, std::max(r / c, c / r));
    summary["shape_constant"] = c;
    summary["shape_max_factor"] = worst;
  }
  Artifact a;
  if (s.format == "json") {
    a.primary = summary.dump(2) + "\n";
  } else {
    a.primary = os.str();
    a.summary = summary;
  }
  return a;
}

Artifact do_bounds(const ExperimentSpec& s) {
  std::ostringstream os;
  os << "curve,N,L,gamma,d,t,value,valid,note\n";
  auto emit = [&](const Bound& b, std::size_t l, double d, double t) {
    os << b.name << ',' << s.n << ',' << l << ',' << fmt(s.gamma) << ',' << fmt(d) << ',' << fmt(t) << ','
       << (b.valid ? fmt(b.value) : "") << ',' << (b.valid ? 1 : 0) << ",\"" << b.note << "\"\n";
  };
  std::vector<std::size_t> lens = s.lens.empty() ? std::vector<std::size_t>{s.len} : s.lens;
  if (s.curve == "entropy") {
    std::vector<double> times = s.times;
    if (times.empty())
      for (double t = 1; t <= 1e12; t *= 10) times.push_back(t);
    for (auto l : lens)
      for (double t : times) emit(entropy_bound_curve(s.n, l, static_cast<double>(s.depth), t, s.bipartite), l, static_cast<double>(s.depth), t);
  } else {
    for (auto l : lens) {
      Bound b;
      if (s.curve == "gap_upper")
        b = gap_upper_bound(s.n, l);
      else if (s.curve == "entropy_time")
        b = entropy_time_lower_bound(s.n, l, s.gamma);
      else if (s.curve == "charge_time")
        b = charge_time_lower_bound(s.n, l, s.gamma, s.headline ? ChargeConstant::Headline : ChargeConstant::Proof);
      else
        b = n2_gap_window(l);
      emit(b, l, std::nan(""), std::nan(""));
    }
  }
  Artifact a;
  a.primary = os.str();
  return a;
}

// ---- verify suites ----

struct Report {
  std::ostringstream text;
  int passed = 0, failed = 0;
  void check(bool ok, const std::string& suite, const std::string& what) {
    text << (ok ? "PASS " : "FAIL ") << suite << ": " << what << '\n';
    (ok ? passed : failed)++;
  }
};

void suite_walks(Report& r, int n, std::size_t max_len) {
  for (std::size_t l = 1; l <= std::min<std::size_t>(max_len, 8); ++l) {
    const auto dim = state_space_size(n, l, kDefaultStateCap);
    bool ok = true;
    std::uint64_t frozen = 0;
    for (std::uint64_t i = 0; i < dim && ok; ++i) {
      auto s = state_from_index(n, l, i);
      auto k = reduce(s);
      if (k.depth() % 2 != l % 2) ok = false;
      frozen += is_frozen(s);
      long total = 0;
      for (Symbol a = 1; a <= n; ++a) {
        auto q = charge(s, a);
        total += q.value;
        if (q.value != sector_charge(k, a, l).value) ok = false;
      }
      if (l % 2 == 0 && total != 0) ok = false;
      std::vector<Digit> d(s.digits().begin(), s.digits().end());
      for (std::size_t j = 0; j + 1 < l; ++j) {
        if (d[j] != d[j + 1]) continue;
        for (Digit b = 0; b < n; ++b) {
          auto t = d;
          t[j] = t[j + 1] = b;
          if (!(reduce(SpinString::from_digits(n, t)) == k)) ok = false;
        }
      }
    }
    BigInt expect = BigInt(n) * ipow(n - 1, l - 1);
    r.check(ok && BigInt(static_cast<unsigned long>(frozen)) == expect, "walks",
            "N=" + std::to_string(n) + " L=" + std::to_string(l) + " reduction, pair-flip invariance, charges, frozen count");
  }
}

void suite_census(Report& r, int n, std::size_t max_len) {
  for (std::size_t l = 1; l <= max_len; ++l) {
    const auto census = sector_dims(n, l);
    bool ok = census.total_states() == ipow(n, l);
    if (BigInt(static_cast<unsigned long>(std::pow(n, l))) < BigInt(static_cast<unsigned long>(kDefaultStateCap) * 16)) {
      auto part = partition_states(n, l, kDefaultStateCap * 16);
      for (std::size_t k = 0; k < part.sectors.size(); ++k)
        if (BigInt(static_cast<unsigned long>(part.size_of(k))) != census.dim(part.sectors[k].depth())) ok = false;
      if (BigInt(static_cast<unsigned long>(part.sectors.size())) != sector_count(n, l)) ok = false;
    }
    if (n >= 3)
      for (std::size_t d = l % 2; d <= l; d += 2)
        if (kd_closed_form(n, l, d) != Rational(census.dim(d))) ok = false;
    r.check(ok, "census", "N=" + std::to_string(n) + " L=" + std::to_string(l) + " enumeration, partition, closed forms");
  }
}

void suite_lumping(Report& r, int n, std::size_t max_len) {
  for (std::size_t l = 2; l <= max_len; ++l) {
    auto nl = build_full_nonlocal(n, l);
    auto lu = build_lumped(n, l, true);
    auto chk = check_lumping(nl, lu);
    bool ok = chk.holds;
    const auto q = lu.to_csr_exact();
    std::map<std::pair<std::uint64_t, std::uint64_t>, Rational> entry;
    for (std::size_t i = 0; i < q.rows; ++i) {
      Rational sum = 0;
      for (auto e = q.row_ptr[i]; e < q.row_ptr[i + 1]; ++e) {
        sum += q.val[e];
        entry[{i, q.col[e]}] = q.val[e];
      }
      if (sum != 1) ok = false;
    }
    for (const auto& [ij, v] : entry) {
      auto it = entry.find({ij.second, ij.first});
      Rational back = it == entry.end() ? Rational(0) : it->second;
      if (lu.stationary_exact(ij.first) * v != lu.stationary_exact(ij.second) * back) ok = false;
    }
    r.check(ok, "lumping", "N=" + std::to_string(n) + " L=" + std::to_string(l) + " U P = Q U exact, row sums, detailed balance (" +
                               std::to_string(chk.sectors) + " sectors)");
  }
}

void suite_cheeger(Report& r, int n, std::size_t max_len) {
  for (std::size_t l = 2; l <= max_len; ++l) {
    auto lu = build_lumped(n, l);
    auto g = spectral_gap(lu);
    auto ch = cheeger_check(lu, g);
    bool ok = ch.upper_holds && (!ch.lower_proven || ch.lower_holds);
    std::string what = "N=" + std::to_string(n) + " L=" + std::to_string(l) + " gap " + fmt(g.gap) + " <= 2 Phi " + fmt(ch.upper);
    if (n == 2 && l % 2 == 1) {
      auto w = n2_gap_window(l);
      ok = ok && g.gap >= w.get("lower") && g.gap <= w.get("upper");
      what += ", inside (1/(pi L), sqrt(8/(pi L)))";
    }
    if (n >= 3 && l % 2 == 0) {
      auto b = gap_upper_bound(n, l);
      ok = ok && g.gap <= b.value * (1 + 1e-12);
      what += ", <= |K_max|/N^L " + fmt(b.value);
    }
    r.check(ok, "cheeger", what);
  }
}

void suite_escape(Report& r, int n, std::size_t max_len) {
  const std::size_t l = std::min<std::size_t>(max_len, 8);
  const std::size_t d = l % 2 == 0 ? 2 : 1;
  auto nl = build_full_nonlocal(n, l);
  auto members = cone_members(nl, cone_stem(n, d));
  auto phi = cone_stats(n, l, d).expansion;
  auto leak = escape_curve_exact(nl, members, 50);
  bool ok = leak[0] == 0;
  for (std::size_t t = 0; t < leak.size(); ++t)
    if (leak[t] > phi * Rational(static_cast<long>(t))) ok = false;
  r.check(ok, "escape", "N=" + std::to_string(n) + " L=" + std::to_string(l) + " d=" + std::to_string(d) +
                            " exact leak <= t Phi for t <= 50");
}

void suite_onestep(Report& r, int n, std::uint64_t samples, std::uint64_t seed) {
  std::size_t l = 1;
  while (std::pow(n, static_cast<double>(l + 1)) <= 81) ++l;
  l = std::max<std::size_t>(l, 2);
  for (GateKind g : {GateKind::PairFlip, GateKind::TemperleyLieb}) {
    auto chain = build_full_local(n, l, g);
    double worst = 1;
    std::uint64_t unexpected = 0;
    for (std::uint64_t i = 0; i < chain.dimension(); ++i) {
      auto law = one_step_law(chain, i, samples, seed);
      worst = std::min(worst, law.p_value);
      unexpected += law.unexpected;
    }
    r.check(worst > 1e-4 && unexpected == 0, "onestep",
            std::string(g == GateKind::PairFlip ? "pf" : "tl") + " N=" + std::to_string(n) + " L=" + std::to_string(l) +
                " smallest chi2 p-value " + fmt(worst));
  }
}

bool within_half_ulp(const BigInt& exact, double approx) {
  double nearest = exact.get_d();
  // get_d truncates; step to the correctly rounded neighbour if needed
  double up = std::nextafter(nearest, INFINITY);
  Rational dn = Rational(exact) - Rational(nearest), du = Rational(up) - Rational(exact);
  if (du < dn) nearest = up;
  const double ulp = std::nextafter(nearest, INFINITY) - nearest;
  Rational diff = Rational(approx) - Rational(exact);
  if (diff < 0) diff = -diff;
  return diff <= Rational(ulp) / 2;
}

void suite_tl(Report& r) {
  for (int n : {3, 4, 5}) {
    bool ok = true;
    for (std::size_t l = 0; l <= 30; ++l) ok = ok && within_half_ulp(tl_zero_modes(n, l), tl_zero_modes_closed_form(n, l));
    r.check(ok, "tl", "N=" + std::to_string(n) + " closed form within 0.5 ulp of recurrence for L <= 30");
  }
  const double m = tl_memory_bound(3);
  r.check(std::abs(m - 0.1672) <= 1e-4, "tl", "memory bound N=3 = " + fmt(m));
}

Artifact do_verify(const ExperimentSpec& s) {
  Report rep;
  const auto& su = s.suite;
  auto want = [&](const char* name) { return su == "all" || su == name; };
  if (want("walks")) suite_walks(rep, s.n, s.max_len);
  if (want("census")) suite_census(rep, s.n, s.max_len);
  if (want("lumping")) suite_lumping(rep, s.n, s.max_len);
  if (want("cheeger")) suite_cheeger(rep, s.n, s.max_len);
  if (want("escape")) suite_escape(rep, s.n, s.max_len);
  if (want("onestep")) suite_onestep(rep, s.n, s.samples, s.seed);
  if (want("tl")) suite_tl(rep);
  rep.text << "summary: " << rep.passed << " passed, " << rep.failed << " failed\n";
  Artifact a;
  a.primary = rep.text.str();
  a.status = rep.failed == 0 ? kExitOk : kExitNumeric;
  return a;
}

}  // namespace

// ---- parsing ----

ExperimentSpec parse_args(const std::vector<std::string>& args) {
  ExperimentSpec spec;
  spec.argv = args;

  std::vector<std::string> user;
  std::optional<std::string> config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config: missing file name");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      user.push_back(args[i]);
    }
  }
  CLI::App app{"pair-flip chain toolkit"};
  app.name("pfchain");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.require_subcommand(1);
  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> blurb = {
      {"census", "sector dimensions, multiplicities and cone expansions"},
      {"gap", "spectral gap of a chain with the Cheeger sandwich"},
      {"expansion", "expansion of a cone, from the chain and from the census"},
      {"simulate", "Monte Carlo ensemble time series and charge first passage"},
      {"sweep", "charge first-passage time over several lengths"},
      {"bounds", "closed-form bound curves"},
      {"verify", "run the built-in consistency suites"}};
  for (const auto& c : kCommands) subs[c] = app.add_subcommand(c, blurb.at(c));

  for (auto& [name, sub] : subs) {
    sub->add_option("--out", spec.out, "output file (default stdout)");
    sub->add_option("--format", spec.format)->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", spec.seed);
    sub->add_option("--threads", spec.threads)->check(CLI::PositiveNumber);
    sub->add_option("--n", spec.n)->check(CLI::Range(2, kMaxAlphabet));
  }
  for (const char* c : {"census", "gap", "expansion", "simulate", "bounds"})
    subs[c]->add_option("--len", spec.len)->check(CLI::PositiveNumber);
  for (const char* c : {"gap", "expansion"}) {
    subs[c]->add_option("--chain", spec.chain)->check(CLI::IsMember({"local", "nonlocal", "lumped"}));
    subs[c]->add_option("--gate", spec.gate)->check(CLI::IsMember({"pf", "tl"}));
    subs[c]->add_option("--order", spec.order)->check(CLI::IsMember({"standard", "reversed"}));
  }
  subs["gap"]->add_option("--tol", spec.tol)->check(CLI::PositiveNumber);
  subs["expansion"]->add_option("--depth", spec.depth)->check(CLI::PositiveNumber);
  subs["expansion"]->add_flag("--exact,!--float", spec.exact);
  for (const char* c : {"simulate", "sweep"}) {
    auto* s = subs[c];
    s->add_option("--gate", spec.gate)->check(CLI::IsMember({"pf", "tl"}));
    s->add_option("--order", spec.order)->check(CLI::IsMember({"standard", "reversed"}));
    s->add_option("--traj", spec.traj)->check(CLI::PositiveNumber);
    s->add_option("--tmax", spec.tmax)->check(CLI::PositiveNumber);
    s->add_option("--gamma", spec.gamma)->check(CLI::Range(0.0, 1.0));
    s->add_option("--init", spec.init)->check(CLI::IsMember({"max", "uniform", "cone"}));
    s->add_option("--depth", spec.depth, "cone depth for --init cone");
    s->add_option("--state", spec.state, "explicit initial string");
    s->add_option("--charges", spec.charges)->delimiter(',');
    s->add_flag("--track-depth,!--no-depth", spec.track_depth);
    s->add_option("--cone", spec.cone, "record escape from this cone depth");
    s->add_option("--match", spec.match)->delimiter(',');
    s->add_flag("--per-trajectory", spec.per_trajectory);
  }
  subs["sweep"]->add_option("--lens", spec.lens)->delimiter(',')->required();
  subs["sweep"]->add_flag("--headline", spec.headline);
  subs["bounds"]->add_option("--curve", spec.curve)
      ->check(CLI::IsMember({"gap_upper", "entropy_time", "charge_time", "entropy", "n2_window"}));
  subs["bounds"]->add_option("--lens", spec.lens)->delimiter(',');
  subs["bounds"]->add_option("--gamma", spec.gamma);
  subs["bounds"]->add_option("--depth", spec.depth);
  subs["bounds"]->add_option("--times", spec.times)->delimiter(',');
  subs["bounds"]->add_flag("--headline", spec.headline);
  subs["bounds"]->add_flag("--bipartite", spec.bipartite);
  subs["verify"]->add_option("--suite", spec.suite)
      ->check(CLI::IsMember({"all", "walks", "census", "lumping", "cheeger", "escape", "onestep", "tl"}));
  subs["verify"]->add_option("--max-len", spec.max_len)->check(CLI::PositiveNumber);
  subs["verify"]->add_option("--samples", spec.samples)->check(CLI::PositiveNumber);

  if (user.empty()) throw UsageError("missing subcommand; expected one of census gap expansion simulate sweep bounds verify");
  if (user[0] == "--help" || user[0] == "-h") throw HelpRequested(app.help());
  if (user[0] == "--version") throw HelpRequested("pfchain " + version_string() + "\n");
  if (std::find(kCommands.begin(), kCommands.end(), user[0]) == kCommands.end())
    throw UsageError("unknown subcommand '" + user[0] + "'");

  CLI::App* sub = subs[user[0]];
  std::vector<std::string> argv{user[0]};
  if (config_path) {
    std::ifstream f(*config_path);
    if (!f) throw UsageError("--config: cannot read '" + *config_path + "'");
    std::string line;
    for (int lineno = 1; std::getline(f, line); ++lineno) {
      auto strip = [](std::string x) {
        const auto b = x.find_first_not_of(" \t\r");
        const auto e = x.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : x.substr(b, e - b + 1);
      };
      line = strip(line);
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw UsageError(*config_path + ":" + std::to_string(lineno) + ": expected key=value");
      const std::string key = strip(line.substr(0, eq)), value = strip(line.substr(eq + 1));
      if (sub->get_option_no_throw("--" + key) == nullptr)
        throw UsageError(*config_path + ":" + std::to_string(lineno) + ": unknown key '" + key + "' for " + user[0]);
      argv.push_back("--" + key + "=" + value);
    }
  }
  // flags given on the command line come last and win
  argv.insert(argv.end(), user.begin() + 1, user.end());
  std::reverse(argv.begin(), argv.end());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(sub->help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  spec.command = user[0];
  // gap and expansion report a single record; JSON unless csv was asked for
  if ((spec.command == "gap" || spec.command == "expansion") && sub->get_option("--format")->count() == 0) spec.format = "json";
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_name().empty() || opt->get_name() == "--help") continue;
    std::string value;
    if (opt->count() > 0) {
      // list options keep every token, scalars keep the last one (flags override config)
      const auto& res = opt->results();
      if (opt->get_expected_max() > 1)
        for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
      else
        value = res.back();
    } else {
      value = opt->get_default_str();
    }
    std::string name = opt->get_name();
    if (name.rfind("--", 0) == 0) name = name.substr(2);
    spec.settings.emplace_back(name, value);
  }
  if (spec.state && spec.init != "max") throw UsageError("--state and --init are mutually exclusive");
  return spec;
}

int run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  Artifact a;
  const auto& c = spec.command;
  if (c == "census") a = do_census(spec);
  else if (c == "gap") a = do_gap(spec);
  else if (c == "expansion") a = do_expansion(spec);
  else if (c == "simulate") a = do_simulate(spec);
  else if (c == "sweep") a = do_sweep(spec);
  else if (c == "bounds") a = do_bounds(spec);
  else if (c == "verify") a = do_verify(spec);
  else throw UsageError("unknown subcommand '" + c + "'");

  const json meta = metadata(spec);
  if (spec.out) {
    const std::filesystem::path p(*spec.out);
    write_atomic(p, a.primary);
    if (a.summary) write_atomic(p.string() + ".summary.json", a.summary->dump(2) + "\n");
    write_atomic(p.string() + ".meta.json", meta.dump(2) + "\n");
  } else {
    out << a.primary;
    if (a.summary) err << a.summary->dump() << '\n';
    err << "# meta " << meta.dump() << '\n';
  }
  return a.status;
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return run(parse_args(args), out, err);
  } catch (const HelpRequested& h) {
    out << h.what();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CapExceeded& e) {
    err << "resource cap: " << e.what() << '\n';
    return kExitCap;
  } catch (const NumericFailure& e) {
    err << "numeric failure: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace pfchain
