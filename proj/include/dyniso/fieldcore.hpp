#pragma once

// Modular arithmetic over prime fields, prime enumeration and the
// residue-separating prime search used to build weight families.

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "dyniso/error.hpp"

namespace dyniso {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

inline constexpr u64 kDefaultPrimeCap = u64{1} << 20;

inline constexpr u64 mul_mod(u64 a, u64 b, u64 p) {
  if (((a | b | p) >> 32) == 0) return (a * b) % p;
  return static_cast<u64>((static_cast<u128>(a) * b) % p);
}

/// (d + f * s) mod p with a single reduction; d, f, s already reduced.
inline constexpr u64 fma_mod(u64 d, u64 f, u64 s, u64 p) {
  if ((p >> 31) == 0) return (d + f * s) % p;
  return static_cast<u64>((static_cast<u128>(f) * s + d) % p);
}

inline constexpr u64 add_mod(u64 a, u64 b, u64 p) {
  u64 s = a + b;
  return (s >= p || s < a) ? s - p : s;
}

inline constexpr u64 sub_mod(u64 a, u64 b, u64 p) { return a >= b ? a - b : a + (p - b); }

inline constexpr u64 neg_mod(u64 a, u64 p) { return a == 0 ? 0 : p - a; }

// Reduce a signed value into [0, p).
inline constexpr u64 reduce_signed(i64 v, u64 p) {
  i64 r = v % static_cast<i64>(p);
  return static_cast<u64>(r < 0 ? r + static_cast<i64>(p) : r);
}

/// base^exp mod p by repeated squaring.
inline constexpr u64 mod_pow(u64 base, u64 exp, u64 p) {
  if (p == 1) return 0;
  u64 result = 1;
  base %= p;
  while (exp > 0) {
    if (exp & 1U) result = mul_mod(result, base, p);
    base = mul_mod(base, base, p);
    exp >>= 1U;
  }
  return result;
}

/// Deterministic Miller-Rabin; exact for every 64-bit input.
inline bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 small : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % small == 0) return n == small;
  }
  u64 d = n - 1;
  int s = 0;
  while ((d & 1U) == 0) {
    d >>= 1U;
    ++s;
  }
  for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    u64 x = mod_pow(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mul_mod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// A prime modulus. Construction validates primality.
class FieldPrime {
 public:
  explicit FieldPrime(u64 p) : p_(p) {
    require(p >= 2 && p < (u64{1} << 63), ErrorKind::parameter, "modulus out of range: " + std::to_string(p));
    require(is_prime(p), ErrorKind::parameter, "modulus is not prime: " + std::to_string(p));
  }

  u64 value() const noexcept { return p_; }
  operator u64() const noexcept { return p_; }  // NOLINT(google-explicit-constructor)

  friend bool operator==(const FieldPrime&, const FieldPrime&) = default;

 private:
  u64 p_;
};

/// Ordered list of distinct primes, each below 2^bit_budget.
struct PrimeTuple {
  std::vector<u64> primes;
  unsigned bit_budget = 0;

  u64 largest() const { return primes.empty() ? 0 : *std::max_element(primes.begin(), primes.end()); }
  friend bool operator==(const PrimeTuple&, const PrimeTuple&) = default;
};

/// Sieve of Eratosthenes; bound is capped to keep memory bounded.
inline std::vector<u64> primes_up_to(u64 bound, u64 cap = kDefaultPrimeCap) {
  require(bound >= 2, ErrorKind::parameter, "primes_up_to: bound must be >= 2");
  require(bound <= cap, ErrorKind::parameter,
          "primes_up_to: bound " + std::to_string(bound) + " exceeds cap " + std::to_string(cap));
  std::vector<bool> composite(bound + 1, false);
  std::vector<u64> out;
  for (u64 i = 2; i <= bound; ++i) {
    if (composite[i]) continue;
    out.push_back(i);
    for (u64 j = i * i; j <= bound; j += i) composite[j] = true;
  }
  return out;
}

/// Inverse of a modulo p via the extended Euclidean algorithm.
inline u64 mod_inverse(u64 a, u64 p) {
  a %= p;
  require(a != 0, ErrorKind::non_invertible, "mod_inverse: zero has no inverse");
  i64 old_r = static_cast<i64>(a), r = static_cast<i64>(p);
  i64 old_s = 1, s = 0;
  while (r != 0) {
    i64 q = old_r / r;
    i64 tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * s;
    old_s = s;
    s = tmp;
  }
  require(old_r == 1, ErrorKind::non_invertible, "mod_inverse: argument shares a factor with modulus");
  return reduce_signed(old_s, p);
}

inline constexpr u64 kFksMagnitudeCap = u64{1} << 62;

/// Smallest prime below 2^bit_budget under which all values have distinct
/// residues.
inline FieldPrime fks_prime_for_set(const std::set<u64>& values, unsigned bit_budget) {
  require(values.size() >= 2, ErrorKind::parameter, "fks_prime_for_set: need at least two values");
  require(bit_budget >= 1 && bit_budget <= 40, ErrorKind::parameter, "fks_prime_for_set: bit budget out of range");
  require(*values.rbegin() <= kFksMagnitudeCap, ErrorKind::magnitude, "fks_prime_for_set: value over magnitude cap");
  const u64 limit = u64{1} << bit_budget;
  std::vector<u64> residues;
  residues.reserve(values.size());
  for (u64 p = 2; p < limit; ++p) {
    if (!is_prime(p)) continue;
    if (p < values.size()) continue;  // pigeonhole
    residues.clear();
    for (u64 v : values) residues.push_back(v % p);
    std::sort(residues.begin(), residues.end());
    if (std::adjacent_find(residues.begin(), residues.end()) == residues.end()) return FieldPrime(p);
  }
  fail(ErrorKind::budget_exhausted,
       "fks_prime_for_set: no separating prime below 2^" + std::to_string(bit_budget));
}

}  // namespace dyniso
