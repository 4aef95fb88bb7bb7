#pragma once

// Microstates, irreducible strings and staggered charges.
//
// Symbols are 1-based in every public accessor; storage is one byte per
// site holding the 0-based digit.

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pfchain {

using Symbol = int;
using Digit = std::uint8_t;

inline constexpr int kMaxAlphabet = 255;
inline constexpr std::uint64_t kDefaultSectorCap = 1ull << 22;

class SpinString {
 public:
  SpinString() = default;
  SpinString(int alphabet, std::span<const Symbol> symbols);
  SpinString(int alphabet, std::initializer_list<Symbol> symbols);

  static SpinString from_digits(int alphabet, std::vector<Digit> digits);
  // "1123" for N <= 9, "1,1,2,3" otherwise (both accepted when parsing)
  static SpinString parse(int alphabet, std::string_view text);
  // |a b a b ...> of the given length, starting with a
  static SpinString alternating(int alphabet, std::size_t length, Symbol a, Symbol b);

  int alphabet() const { return alphabet_; }
  std::size_t length() const { return digits_.size(); }
  // site is 0-based, value 1-based
  Symbol at(std::size_t site) const { return digits_.at(site) + 1; }
  std::span<const Digit> digits() const { return digits_; }

  std::string str() const;

  friend bool operator==(const SpinString&, const SpinString&) = default;

 private:
  int alphabet_ = 0;
  std::vector<Digit> digits_;
};

// Irreducible string labelling a Krylov sector. The empty string is the root.
class SectorId {
 public:
  SectorId() = default;
  SectorId(int alphabet, std::span<const Symbol> irr);
  SectorId(int alphabet, std::initializer_list<Symbol> irr);

  static SectorId from_digits(int alphabet, std::vector<Digit> digits);
  static SectorId parse(int alphabet, std::string_view text);
  static SectorId root(int alphabet) { return from_digits(alphabet, {}); }

  int alphabet() const { return alphabet_; }
  std::size_t depth() const { return digits_.size(); }
  Symbol at(std::size_t pos) const { return digits_.at(pos) + 1; }
  std::span<const Digit> digits() const { return digits_; }

  // true if this label can occur in a length-L system
  bool fits(std::size_t length) const {
    return depth() <= length && (depth() % 2) == (length % 2);
  }
  bool has_prefix(const SectorId& stem) const;

  // compact form; empty for the root
  std::string str() const;
  // human form; the root prints as "∅"
  std::string pretty() const;

  friend bool operator==(const SectorId&, const SectorId&) = default;
  friend auto operator<=>(const SectorId& a, const SectorId& b) {
    if (auto c = a.alphabet_ <=> b.alphabet_; c != 0) return c;
    if (auto c = a.digits_.size() <=> b.digits_.size(); c != 0) return c;
    return a.digits_ <=> b.digits_;
  }

 private:
  int alphabet_ = 0;
  std::vector<Digit> digits_;
};

struct SectorIdHash {
  std::size_t operator()(const SectorId& k) const noexcept;
};

struct Charge {
  Symbol symbol = 1;
  long value = 0;
  std::size_t length = 0;  // system length used for normalization
  // 2 Q / L as an exact fraction (numerator over length)
  long normalized_numerator() const { return 2 * value; }
  double normalized() const {
    return length == 0 ? 0.0 : 2.0 * static_cast<double>(value) / static_cast<double>(length);
  }
};

SectorId reduce(const SpinString& s);
// stack-reduce raw digits into out; returns the reduced length
std::size_t reduce_digits(std::span<const Digit> in, std::vector<Digit>& out);

Charge charge(const SpinString& s, Symbol a);
// Charge of every member of the sector, normalized by the system length.
Charge sector_charge(const SectorId& k, Symbol a, std::size_t system_length);
inline Charge sector_charge(const SectorId& k, Symbol a) { return sector_charge(k, a, k.depth()); }

bool is_frozen(const SpinString& s);

// All labels of depth d <= L, d = L mod 2, ordered by depth then lexicographically.
std::vector<SectorId> enumerate_sectors(int alphabet, std::size_t length,
                                        std::uint64_t cap = kDefaultSectorCap);

// Mixed-radix indexing of the full state space; site 0 is the most significant digit.
std::uint64_t state_space_size(int alphabet, std::size_t length, std::uint64_t cap);
std::uint64_t state_index(const SpinString& s);
SpinString state_from_index(int alphabet, std::size_t length, std::uint64_t index);

void check_alphabet(int alphabet);

}  // namespace pfchain
