#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "qunit/budget.hpp"

namespace qunit {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

inline u64 mulmod(u64 a, u64 b, u64 m) {
  return static_cast<u64>(static_cast<u128>(a) * b % m);
}

inline u64 addmod(u64 a, u64 b, u64 m) {
  u64 r = a + b;
  if (r >= m || r < a) r -= m;
  return r;
}

u64 powmod(u64 base, u64 exp, u64 m);

// floor(sqrt(n)).
u64 isqrt(u64 n);
u128 isqrt(u128 n);
mpz_class isqrt(const mpz_class& n);

bool is_square(u64 n);

// Kronecker symbol (a|b), with (a|0) = [|a| == 1].
int kronecker(i64 a, i64 b);

// Deterministic primality:
//   n < 2^64:        strong Miller-Rabin to the 12 prime bases 2..37,
//                    then a strong Lucas test (Selfridge parameters).
//   n < 3.317e24:    strong Miller-Rabin to the 13 prime bases 2..41,
//                    then the same strong Lucas test.
// Both Miller-Rabin base sets are proven deterministic below those bounds,
// so the Lucas stage is a redundant second certificate. Above 3.317e24
// the answer is BPSW (no known counterexample, not proven).
bool is_prime(u64 n);
bool is_prime(const mpz_class& n);

// Human-readable description of the method is_prime used for n.
std::string primality_method(const mpz_class& n);

std::vector<std::uint32_t> primes_up_to(std::uint32_t n);

struct PrimePower {
  u64 prime;
  unsigned exponent;
  bool operator==(const PrimePower&) const = default;
};

// Prime factorization, primes strictly increasing, exponents >= 1.
class Factorization {
 public:
  Factorization() = default;
  explicit Factorization(std::vector<PrimePower> parts);

  const std::vector<PrimePower>& parts() const { return parts_; }
  std::size_t distinct_primes() const { return parts_.size(); }
  bool empty() const { return parts_.empty(); }
  mpz_class value() const;
  bool divisible_by(u64 p) const;

  auto begin() const { return parts_.begin(); }
  auto end() const { return parts_.end(); }

 private:
  std::vector<PrimePower> parts_;
};

// Trial division plus Pollard-Brent rho. Throws ResourceLimitError when
// the rho iteration budget is spent.
Factorization factor(u64 n, const WorkBudget& budget = default_budget());

bool is_squarefree(u64 n, const WorkBudget& budget = default_budget());

// Every prime divisor appears at least squared; is_powerful(1) is true.
bool is_powerful(u64 n, const WorkBudget& budget = default_budget());

// Largest divisor of n whose prime factors all divide m.
mpz_class smooth_part(const mpz_class& n, const mpz_class& m);

// Strict decimal parse (digits only, optional leading '+').
bool parse_decimal(const std::string& text, mpz_class& out);

}  // namespace qunit
