#include "pfchain/walks.hpp"

#include "pfchain/numeric.hpp"

#include <charconv>
#include <functional>
#include <stdexcept>

namespace pfchain {

void check_alphabet(int alphabet) {
  if (alphabet < 2 || alphabet > kMaxAlphabet)
    throw std::invalid_argument("alphabet size must lie in [2, 255], got " + std::to_string(alphabet));
}

namespace {

std::vector<Digit> symbols_to_digits(int alphabet, std::span<const Symbol> symbols) {
  check_alphabet(alphabet);
  std::vector<Digit> d;
  d.reserve(symbols.size());
  for (Symbol s : symbols) {
    if (s < 1 || s > alphabet)
      throw std::invalid_argument("symbol " + std::to_string(s) + " outside [1, " +
                                  std::to_string(alphabet) + "]");
    d.push_back(static_cast<Digit>(s - 1));
  }
  return d;
}

void check_digits(int alphabet, std::span<const Digit> digits) {
  check_alphabet(alphabet);
  for (Digit d : digits)
    if (d >= alphabet) throw std::invalid_argument("digit outside alphabet");
}

std::vector<Symbol> parse_symbols(int alphabet, std::string_view text) {
  std::vector<Symbol> out;
  if (text.empty() || text == "∅") return out;
  bool commas = text.find(',') != std::string_view::npos;
  if (!commas && alphabet <= 9) {
    for (char c : text) {
      if (c < '0' || c > '9') throw std::invalid_argument("bad symbol character in '" + std::string(text) + "'");
      out.push_back(c - '0');
    }
    return out;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string_view::npos) next = text.size();
    auto field = text.substr(pos, next - pos);
    int v = 0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || p != field.data() + field.size())
      throw std::invalid_argument("bad symbol field '" + std::string(field) + "'");
    out.push_back(v);
    pos = next + 1;
  }
  return out;
}

std::string format_digits(int alphabet, std::span<const Digit> digits) {
  std::string s;
  if (alphabet <= 9) {
    for (Digit d : digits) s.push_back(static_cast<char>('1' + d));
    return s;
  }
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i) s.push_back(',');
    s += std::to_string(digits[i] + 1);
  }
  return s;
}

}  // namespace

SpinString::SpinString(int alphabet, std::span<const Symbol> symbols)
    : alphabet_(alphabet), digits_(symbols_to_digits(alphabet, symbols)) {
  if (digits_.empty()) throw std::invalid_argument("spin string must have length >= 1");
}

SpinString::SpinString(int alphabet, std::initializer_list<Symbol> symbols)
    : SpinString(alphabet, std::span<const Symbol>(symbols.begin(), symbols.size())) {}

SpinString SpinString::from_digits(int alphabet, std::vector<Digit> digits) {
  check_digits(alphabet, digits);
  if (digits.empty()) throw std::invalid_argument("spin string must have length >= 1");
  SpinString s;
  s.alphabet_ = alphabet;
  s.digits_ = std::move(digits);
  return s;
}

SpinString SpinString::parse(int alphabet, std::string_view text) {
  auto sym = parse_symbols(alphabet, text);
  return SpinString(alphabet, sym);
}

SpinString SpinString::alternating(int alphabet, std::size_t length, Symbol a, Symbol b) {
  std::vector<Symbol> sym(length);
  for (std::size_t i = 0; i < length; ++i) sym[i] = (i % 2 == 0) ? a : b;
  return SpinString(alphabet, sym);
}

std::string SpinString::str() const { return format_digits(alphabet_, digits_); }

SectorId::SectorId(int alphabet, std::span<const Symbol> irr)
    : alphabet_(alphabet), digits_(symbols_to_digits(alphabet, irr)) {
  for (std::size_t j = 1; j < digits_.size(); ++j)
    if (digits_[j] == digits_[j - 1])
      throw std::invalid_argument("irreducible string has equal adjacent symbols");
}

SectorId::SectorId(int alphabet, std::initializer_list<Symbol> irr)
    : SectorId(alphabet, std::span<const Symbol>(irr.begin(), irr.size())) {}

SectorId SectorId::from_digits(int alphabet, std::vector<Digit> digits) {
  check_digits(alphabet, digits);
  for (std::size_t j = 1; j < digits.size(); ++j)
    if (digits[j] == digits[j - 1])
      throw std::invalid_argument("irreducible string has equal adjacent symbols");
  SectorId k;
  k.alphabet_ = alphabet;
  k.digits_ = std::move(digits);
  return k;
}

SectorId SectorId::parse(int alphabet, std::string_view text) {
  auto sym = parse_symbols(alphabet, text);
  return SectorId(alphabet, sym);
}

bool SectorId::has_prefix(const SectorId& stem) const {
  if (stem.depth() > depth()) return false;
  for (std::size_t i = 0; i < stem.depth(); ++i)
    if (digits_[i] != stem.digits_[i]) return false;
  return true;
}

std::string SectorId::str() const { return format_digits(alphabet_, digits_); }
std::string SectorId::pretty() const { return digits_.empty() ? std::string("∅") : str(); }

std::size_t SectorIdHash::operator()(const SectorId& k) const noexcept {
  std::size_t h = static_cast<std::size_t>(k.alphabet()) * 0x9e3779b97f4a7c15ull;
  for (Digit d : k.digits()) h = (h ^ d) * 0x100000001b3ull;
  return h ^ k.depth();
}

std::size_t reduce_digits(std::span<const Digit> in, std::vector<Digit>& out) {
  out.clear();
  for (Digit d : in) {
    if (!out.empty() && out.back() == d)
      out.pop_back();
    else
      out.push_back(d);
  }
  return out.size();
}

SectorId reduce(const SpinString& s) {
  std::vector<Digit> st;
  st.reserve(s.length());
  reduce_digits(s.digits(), st);
  return SectorId::from_digits(s.alphabet(), std::move(st));
}

namespace {
long staggered_sum(std::span<const Digit> digits, Digit a) {
  long q = 0;
  // position i (1-based) carries (-1)^i
  for (std::size_t i = 0; i < digits.size(); ++i)
    if (digits[i] == a) q += (i % 2 == 0) ? -1 : 1;
  return q;
}
}  // namespace

Charge charge(const SpinString& s, Symbol a) {
  if (a < 1 || a > s.alphabet()) throw std::invalid_argument("charge symbol out of range");
  return Charge{a, staggered_sum(s.digits(), static_cast<Digit>(a - 1)), s.length()};
}

Charge sector_charge(const SectorId& k, Symbol a, std::size_t system_length) {
  if (a < 1 || a > k.alphabet()) throw std::invalid_argument("charge symbol out of range");
  return Charge{a, staggered_sum(k.digits(), static_cast<Digit>(a - 1)), system_length};
}

bool is_frozen(const SpinString& s) {
  auto d = s.digits();
  for (std::size_t i = 1; i < d.size(); ++i)
    if (d[i] == d[i - 1]) return false;
  return true;
}

std::vector<SectorId> enumerate_sectors(int alphabet, std::size_t length, std::uint64_t cap) {
  check_alphabet(alphabet);
  if (length < 1) throw std::invalid_argument("length must be >= 1");
  // count first so the guard fires before any allocation
  BigInt total = 0;
  for (std::size_t d = length % 2; d <= length; d += 2)
    total += d == 0 ? BigInt(1) : BigInt(alphabet) * ipow(alphabet - 1, d - 1);
  if (total > BigInt(static_cast<unsigned long>(cap)))
    throw CapExceeded("sector count " + total.get_str() + " exceeds cap " + std::to_string(cap));

  std::vector<SectorId> out;
  out.reserve(total.get_ui());
  std::vector<Digit> cur;
  std::function<void(std::size_t)> grow = [&](std::size_t target) {
    if (cur.size() == target) {
      out.push_back(SectorId::from_digits(alphabet, cur));
      return;
    }
    for (int c = 0; c < alphabet; ++c) {
      if (!cur.empty() && cur.back() == c) continue;
      cur.push_back(static_cast<Digit>(c));
      grow(target);
      cur.pop_back();
    }
  };
  for (std::size_t d = length % 2; d <= length; d += 2) grow(d);
  return out;
}

std::uint64_t state_space_size(int alphabet, std::size_t length, std::uint64_t cap) {
  check_alphabet(alphabet);
  BigInt n = ipow(alphabet, length);
  if (n > BigInt(static_cast<unsigned long>(cap)))
    throw CapExceeded("state space " + n.get_str() + " exceeds cap " + std::to_string(cap));
  return n.get_ui();
}

std::uint64_t state_index(const SpinString& s) {
  std::uint64_t idx = 0;
  for (Digit d : s.digits()) idx = idx * static_cast<std::uint64_t>(s.alphabet()) + d;
  return idx;
}

SpinString state_from_index(int alphabet, std::size_t length, std::uint64_t index) {
  std::vector<Digit> d(length);
  for (std::size_t i = length; i-- > 0;) {
    d[i] = static_cast<Digit>(index % static_cast<std::uint64_t>(alphabet));
    index /= static_cast<std::uint64_t>(alphabet);
  }
  return SpinString::from_digits(alphabet, std::move(d));
}

}  // namespace pfchain
