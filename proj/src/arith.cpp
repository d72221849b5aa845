#include "qunit/arith.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qunit/errors.hpp"

namespace qunit {

u64 powmod(u64 base, u64 exp, u64 m) {
  if (m == 1) return 0;
  u64 result = 1;
  base %= m;
  while (exp) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

u64 isqrt(u64 n) {
  u64 r = static_cast<u64>(std::sqrt(static_cast<long double>(n)));
  while (r > 0 && static_cast<u128>(r) * r > n) --r;
  while (static_cast<u128>(r + 1) * (r + 1) <= n) ++r;
  return r;
}

u128 isqrt(u128 n) {
  if (n <= UINT64_MAX) return isqrt(static_cast<u64>(n));
  // Newton from above.
  u128 x = static_cast<u128>(std::sqrt(static_cast<long double>(n))) + 2;
  while (true) {
    u128 y = (x + n / x) / 2;
    if (y >= x) break;
    x = y;
  }
  while (x * x > n) --x;
  while ((x + 1) * (x + 1) <= n) ++x;
  return x;
}

mpz_class isqrt(const mpz_class& n) {
  if (n < 0) throw PreconditionError("isqrt of a negative number");
  mpz_class r;
  mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
  return r;
}

bool is_square(u64 n) {
  u64 r = isqrt(n);
  return r * r == n;
}

int kronecker(i64 a, i64 b) {
  if (b == 0) return (a == 1 || a == -1) ? 1 : 0;
  int result = 1;
  u64 bu;
  if (b < 0) {
    bu = static_cast<u64>(-(b + 1)) + 1;
    if (a < 0) result = -result;
  } else {
    bu = static_cast<u64>(b);
  }
  int twos = __builtin_ctzll(bu);
  if (twos > 0) {
    if ((a & 1) == 0) return 0;
    int a8 = static_cast<int>(((a % 8) + 8) % 8);
    if ((twos & 1) && (a8 == 3 || a8 == 5)) result = -result;
    bu >>= twos;
  }
  // Jacobi symbol (a | bu), bu odd and positive.
  u64 au;
  if (a >= 0) {
    au = static_cast<u64>(a) % bu;
  } else {
    u64 neg = static_cast<u64>(-(a + 1)) + 1;
    au = (bu - neg % bu) % bu;
  }
  while (au != 0) {
    while ((au & 1) == 0) {
      au >>= 1;
      u64 b8 = bu & 7;
      if (b8 == 3 || b8 == 5) result = -result;
    }
    std::swap(au, bu);
    if ((au & 3) == 3 && (bu & 3) == 3) result = -result;
    au %= bu;
  }
  return bu == 1 ? result : 0;
}

namespace {

constexpr u64 kSmallPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41};

bool miller_rabin(u64 n, u64 a) {
  a %= n;
  if (a == 0) return true;
  u64 d = n - 1;
  int s = __builtin_ctzll(d);
  d >>= s;
  u64 x = powmod(a, d, n);
  if (x == 1 || x == n - 1) return true;
  for (int i = 1; i < s; ++i) {
    x = mulmod(x, x, n);
    if (x == n - 1) return true;
  }
  return false;
}

u64 half_mod(u64 x, u64 n) {
  // n odd
  if (x & 1) return static_cast<u64>((static_cast<u128>(x) + n) >> 1);
  return x >> 1;
}

u64 to_residue(i64 v, u64 n) {
  if (v >= 0) return static_cast<u64>(v) % n;
  u64 neg = (static_cast<u64>(-(v + 1)) + 1) % n;
  return neg == 0 ? 0 : n - neg;
}

// Strong Lucas probable-prime test with Selfridge's method A (P = 1).
// n < 2^62.
bool strong_lucas(u64 n) {
  if (is_square(n)) return false;
  i64 D = 5;
  while (true) {
    int j = kronecker(D, static_cast<i64>(n));
    if (j == -1) break;
    if (j == 0 && static_cast<u64>(D < 0 ? -D : D) != n) return false;
    D = D > 0 ? -(D + 2) : -(D - 2);
  }
  const u64 Dm = to_residue(D, n);
  const u64 Qm = to_residue((1 - D) / 4, n);
  u64 d = n + 1;
  int s = __builtin_ctzll(d);
  d >>= s;

  u64 U = 1, V = 1, Qk = Qm;
  int top = 63 - __builtin_clzll(d);
  for (int bit = top - 1; bit >= 0; --bit) {
    U = mulmod(U, V, n);
    V = (mulmod(V, V, n) + n - mulmod(2, Qk, n)) % n;
    Qk = mulmod(Qk, Qk, n);
    if ((d >> bit) & 1) {
      u64 U2 = half_mod(addmod(U, V, n), n);
      u64 V2 = half_mod(addmod(mulmod(Dm, U, n), V, n), n);
      U = U2;
      V = V2;
      Qk = mulmod(Qk, Qm, n);
    }
  }
  if (U == 0 || V == 0) return true;
  for (int r = 1; r < s; ++r) {
    V = (mulmod(V, V, n) + n - mulmod(2, Qk, n)) % n;
    if (V == 0) return true;
    Qk = mulmod(Qk, Qk, n);
  }
  return false;
}

bool miller_rabin(const mpz_class& n, unsigned long a) {
  mpz_class nm1 = n - 1;
  mpz_class d = nm1;
  unsigned long s = mpz_scan1(d.get_mpz_t(), 0);
  mpz_fdiv_q_2exp(d.get_mpz_t(), d.get_mpz_t(), s);
  mpz_class x;
  mpz_class base = a;
  mpz_powm(x.get_mpz_t(), base.get_mpz_t(), d.get_mpz_t(), n.get_mpz_t());
  if (x == 1 || x == nm1) return true;
  for (unsigned long i = 1; i < s; ++i) {
    x = x * x % n;
    if (x == nm1) return true;
  }
  return false;
}

mpz_class half_mod(const mpz_class& x, const mpz_class& n) {
  mpz_class y = x;
  if (mpz_odd_p(y.get_mpz_t())) y += n;
  return y / 2;
}

mpz_class mod_pos(const mpz_class& x, const mpz_class& n) {
  mpz_class r;
  mpz_fdiv_r(r.get_mpz_t(), x.get_mpz_t(), n.get_mpz_t());
  return r;
}

bool strong_lucas(const mpz_class& n) {
  if (mpz_perfect_square_p(n.get_mpz_t())) return false;
  long D = 5;
  while (true) {
    mpz_class Dz = D;
    int j = mpz_kronecker(Dz.get_mpz_t(), n.get_mpz_t());
    if (j == -1) break;
    if (j == 0) return false;  // n is large, so |D| != n
    D = D > 0 ? -(D + 2) : -(D - 2);
  }
  const mpz_class Dm = mod_pos(mpz_class(D), n);
  const mpz_class Qm = mod_pos(mpz_class((1 - D) / 4), n);
  mpz_class d = n + 1;
  unsigned long s = mpz_scan1(d.get_mpz_t(), 0);
  mpz_fdiv_q_2exp(d.get_mpz_t(), d.get_mpz_t(), s);

  mpz_class U = 1, V = 1, Qk = Qm;
  long top = static_cast<long>(mpz_sizeinbase(d.get_mpz_t(), 2)) - 1;
  for (long bit = top - 1; bit >= 0; --bit) {
    U = U * V % n;
    V = mod_pos(V * V - 2 * Qk, n);
    Qk = Qk * Qk % n;
    if (mpz_tstbit(d.get_mpz_t(), bit)) {
      mpz_class U2 = half_mod(U + V, n) % n;
      mpz_class V2 = half_mod((Dm * U + V) % n, n) % n;
      U = U2;
      V = V2;
      Qk = Qk * Qm % n;
    }
  }
  if (U == 0 || V == 0) return true;
  for (unsigned long r = 1; r < s; ++r) {
    V = mod_pos(V * V - 2 * Qk, n);
    if (V == 0) return true;
    Qk = Qk * Qk % n;
  }
  return false;
}

const mpz_class& mr13_bound() {
  static const mpz_class bound("3317044064679887385961981");
  return bound;
}

}  // namespace

bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 p : kSmallPrimes) {
    if (n == p) return true;
    if (n % p == 0) return false;
  }
  if (n < 41 * 41) return true;
  for (int i = 0; i < 12; ++i) {
    if (!miller_rabin(n, kSmallPrimes[i])) return false;
  }
  if (n >= (u64{1} << 62)) return strong_lucas(mpz_class(std::to_string(n)));
  return strong_lucas(n);
}

bool is_prime(const mpz_class& n) {
  if (n < 2) return false;
  if (mpz_fits_ulong_p(n.get_mpz_t())) return is_prime(static_cast<u64>(n.get_ui()));
  for (u64 p : kSmallPrimes) {
    if (mpz_divisible_ui_p(n.get_mpz_t(), p)) return false;
  }
  for (u64 p : kSmallPrimes) {
    if (!miller_rabin(n, p)) return false;
  }
  return strong_lucas(n);
}

std::string primality_method(const mpz_class& n) {
  if (n < 2) return "trivial (n < 2)";
  if (mpz_fits_ulong_p(n.get_mpz_t())) {
    return "strong Miller-Rabin bases 2..37 + strong Lucas (Selfridge A); "
           "deterministic for n < 2^64";
  }
  if (n < mr13_bound()) {
    return "strong Miller-Rabin bases 2..41 + strong Lucas (Selfridge A); "
           "deterministic for n < 3.317e24";
  }
  return "BPSW (strong Miller-Rabin bases 2..41 + strong Lucas); probable prime only";
}

std::vector<std::uint32_t> primes_up_to(std::uint32_t n) {
  std::vector<std::uint32_t> primes;
  if (n < 2) return primes;
  std::vector<bool> composite(n + 1, false);
  for (std::uint64_t i = 2; i <= n; ++i) {
    if (composite[i]) continue;
    primes.push_back(static_cast<std::uint32_t>(i));
    for (std::uint64_t j = i * i; j <= n; j += i) composite[j] = true;
  }
  return primes;
}

Factorization::Factorization(std::vector<PrimePower> parts) : parts_(std::move(parts)) {
  std::sort(parts_.begin(), parts_.end(),
            [](const PrimePower& a, const PrimePower& b) { return a.prime < b.prime; });
}

mpz_class Factorization::value() const {
  mpz_class v = 1;
  for (const auto& pp : parts_) {
    mpz_class p = static_cast<unsigned long>(pp.prime);
    mpz_class pe;
    mpz_pow_ui(pe.get_mpz_t(), p.get_mpz_t(), pp.exponent);
    v *= pe;
  }
  return v;
}

bool Factorization::divisible_by(u64 p) const {
  return std::any_of(parts_.begin(), parts_.end(),
                     [p](const PrimePower& pp) { return pp.prime == p; });
}

namespace {

class RhoBudget {
 public:
  explicit RhoBudget(u64 limit) : left_(limit) {}
  void spend(u64 n) {
    if (n > left_) throw ResourceLimitError("factor: Pollard rho iteration budget exhausted");
    left_ -= n;
  }

 private:
  u64 left_;
};

// Pollard-Brent; returns a nontrivial factor of composite n, or n on failure.
u64 brent(u64 n, u64 c, RhoBudget& budget) {
  auto f = [n, c](u64 v) { return addmod(mulmod(v, v, n), c, n); };
  const u64 batch = 128;
  u64 y = 2, x = 2, ys = 2, q = 1, g = 1, r = 1;
  while (g == 1) {
    x = y;
    for (u64 i = 0; i < r; ++i) y = f(y);
    budget.spend(r);
    u64 k = 0;
    while (k < r && g == 1) {
      ys = y;
      u64 lim = std::min(batch, r - k);
      for (u64 i = 0; i < lim; ++i) {
        y = f(y);
        q = mulmod(q, x > y ? x - y : y - x, n);
      }
      budget.spend(lim);
      g = std::gcd(q, n);
      k += lim;
    }
    r *= 2;
  }
  if (g == n) {
    do {
      ys = f(ys);
      budget.spend(1);
      g = std::gcd(x > ys ? x - ys : ys - x, n);
    } while (g == 1);
  }
  return g;
}

void split(u64 n, std::vector<u64>& out, RhoBudget& budget) {
  if (n == 1) return;
  if (is_prime(n)) {
    out.push_back(n);
    return;
  }
  u64 r = isqrt(n);
  if (r * r == n) {
    split(r, out, budget);
    split(r, out, budget);
    return;
  }
  for (u64 c = 1;; ++c) {
    u64 g = brent(n, c, budget);
    if (g != n && g != 1) {
      split(g, out, budget);
      split(n / g, out, budget);
      return;
    }
  }
}

}  // namespace

Factorization factor(u64 n, const WorkBudget& budget) {
  if (n == 0) throw PreconditionError("factor: n must be positive");
  std::vector<u64> primes;
  static const std::vector<std::uint32_t> small = primes_up_to(1000);
  for (std::uint32_t p : small) {
    if (static_cast<u64>(p) * p > n) break;
    while (n % p == 0) {
      primes.push_back(p);
      n /= p;
    }
  }
  if (n > 1) {
    RhoBudget rho(budget.rho_iterations);
    split(n, primes, rho);
  }
  std::sort(primes.begin(), primes.end());
  std::vector<PrimePower> parts;
  for (u64 p : primes) {
    if (!parts.empty() && parts.back().prime == p) {
      ++parts.back().exponent;
    } else {
      parts.push_back({p, 1});
    }
  }
  return Factorization(std::move(parts));
}

bool is_squarefree(u64 n, const WorkBudget& budget) {
  const Factorization f = factor(n, budget);
  return std::all_of(f.begin(), f.end(), [](const PrimePower& pp) { return pp.exponent == 1; });
}

bool is_powerful(u64 n, const WorkBudget& budget) {
  const Factorization f = factor(n, budget);
  return std::all_of(f.begin(), f.end(), [](const PrimePower& pp) { return pp.exponent >= 2; });
}

mpz_class smooth_part(const mpz_class& n, const mpz_class& m) {
  mpz_class rest = abs(n);
  mpz_class part = 1;
  mpz_class g = gcd(rest, m);
  while (g != 1 && rest != 0) {
    rest /= g;
    part *= g;
    g = gcd(rest, m);
  }
  return part;
}

bool parse_decimal(const std::string& text, mpz_class& out) {
  std::size_t start = (!text.empty() && text[0] == '+') ? 1 : 0;
  if (start >= text.size()) return false;
  for (std::size_t i = start; i < text.size(); ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  return out.set_str(text.substr(start), 10) == 0;
}

}  // namespace qunit
