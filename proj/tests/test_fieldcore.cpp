#include <gtest/gtest.h>

#include <random>

#include "dyniso/fieldcore.hpp"

using namespace dyniso;

namespace {

bool trial_division_prime(u64 n) {
  if (n < 2) return false;
  for (u64 d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

}  // namespace

TEST(Primes, SmallBounds) {
  EXPECT_EQ(primes_up_to(10), (std::vector<u64>{2, 3, 5, 7}));
  EXPECT_EQ(primes_up_to(2), (std::vector<u64>{2}));
  auto p100 = primes_up_to(100);
  EXPECT_EQ(p100.size(), 25U);
  EXPECT_EQ(p100.back(), 97U);
}

TEST(Primes, MatchesTrialDivision) {
  const auto sieve = primes_up_to(10000);
  std::vector<u64> expected;
  for (u64 i = 2; i <= 10000; ++i)
    if (trial_division_prime(i)) expected.push_back(i);
  EXPECT_EQ(sieve, expected);
}

TEST(Primes, BoundErrors) {
  EXPECT_THROW(primes_up_to(1), Error);
  try {
    primes_up_to(kDefaultPrimeCap + 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parameter);
  }
}

TEST(Primes, MillerRabinAgreesWithTrialDivision) {
  for (u64 i = 0; i < 20000; ++i) EXPECT_EQ(is_prime(i), trial_division_prime(i)) << i;
  EXPECT_TRUE(is_prime(1000003));
  EXPECT_TRUE(is_prime(18446744073709551557ULL));
  EXPECT_FALSE(is_prime(3215031751ULL));  // strong pseudoprime to bases 2,3,5,7
}

TEST(FieldPrimeType, RejectsComposite) {
  EXPECT_THROW(FieldPrime(15), Error);
  EXPECT_THROW(FieldPrime(1), Error);
  EXPECT_EQ(FieldPrime(97).value(), 97U);
}

TEST(ModPow, Examples) {
  EXPECT_EQ(mod_pow(2, 10, 1000003), 1024U);
  EXPECT_EQ(mod_pow(2, 0, 7), 1U);
  EXPECT_EQ(mod_pow(3, 100, 101), 1U);
  EXPECT_EQ(mod_pow(2, ~u64{0}, 1000003), mod_pow(2, (~u64{0}) % 1000002, 1000003));
}

TEST(ModPow, MatchesRepeatedMultiplication) {
  for (u64 p : primes_up_to(97))
    for (u64 b = 0; b < p; ++b) {
      u64 acc = 1 % p;
      for (u64 e = 0; e <= 12; ++e) {
        EXPECT_EQ(mod_pow(b, e, p), acc);
        acc = acc * b % p;
      }
    }
}

TEST(ModInverse, Examples) {
  EXPECT_EQ(mod_inverse(1, 7), 1U);
  EXPECT_EQ(mod_inverse(3, 7), 5U);
  const u64 v = mod_inverse(10, 1000003);
  EXPECT_EQ(10 * v % 1000003, 1U);
  try {
    mod_inverse(0, 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::non_invertible);
  }
}

TEST(ModInverse, EveryResidue) {
  for (u64 p : {2ULL, 5ULL, 97ULL, 1009ULL})
    for (u64 a = 1; a < p; ++a) EXPECT_EQ(mul_mod(a, mod_inverse(a, p), p), 1U);
}

TEST(FksPrime, Examples) {
  EXPECT_EQ(fks_prime_for_set({0, 1, 3}, 4).value(), 5U);
  EXPECT_EQ(fks_prime_for_set({0, 1}, 2).value(), 2U);
  EXPECT_EQ(fks_prime_for_set({6, 20, 34}, 5).value(), 3U);
}

TEST(FksPrime, BudgetExhausted) {
  try {
    fks_prime_for_set({0, 1, 2, 3, 4, 5}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::budget_exhausted);
  }
}

TEST(FksPrime, OutputSeparatesAndIsSmallest) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::set<u64> values;
    const int count = 2 + static_cast<int>(rng() % 10);
    while (static_cast<int>(values.size()) < count) values.insert(rng() % 100000);
    const u64 p = fks_prime_for_set(values, 16).value();
    std::set<u64> residues;
    for (u64 v : values) residues.insert(v % p);
    EXPECT_EQ(residues.size(), values.size());
    for (u64 q = 2; q < p; ++q) {
      if (!trial_division_prime(q)) continue;
      std::set<u64> r;
      for (u64 v : values) r.insert(v % q);
      EXPECT_LT(r.size(), values.size()) << "smaller prime " << q << " also separates";
    }
  }
}
