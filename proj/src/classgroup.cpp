#include "qunit/classgroup.hpp"

#include <cmath>
#include <numeric>
#include <unordered_set>

#include "qunit/infra.hpp"

namespace qunit {

namespace {

i128 mod_pos(i128 a, i128 m) {
  i128 r = a % m;
  return r < 0 ? r + m : r;
}

i128 abs128(i128 v) { return v < 0 ? -v : v; }

i128 gcd128(i128 a, i128 b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    const i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

u64 key(u64 a, u64 b) { return (a << 32) ^ b; }

const std::vector<std::uint32_t>& euler_primes() {
  static const std::vector<std::uint32_t> primes = primes_up_to(1'000'000);
  return primes;
}

}  // namespace

u64 class_number_exact(const QField& K, const WorkBudget& budget) {
  const u64 D = K.disc();
  if (D > kExactClassNumberDisc) throw PreconditionError("discriminant too large for cycle count");
  const u64 s = K.sqrt_disc();

  // All reduced ideals [A, (B + sqrt D)/2]: B <= s, s - B < 2A <= s + B,
  // A | (D - B^2)/4.
  std::unordered_set<u64> reduced;
  for (u64 B = (D & 1) ? 1 : 2; B <= s; B += 2) {
    const u64 N = (D - B * B) / 4;
    const u64 lo = (s - B + 2) / 2, hi = (s + B) / 2;
    const Factorization fac = factor(N, budget);
    std::vector<u64> divisors{1};
    for (const auto& pp : fac) {
      const std::size_t n0 = divisors.size();
      u64 pk = 1;
      for (unsigned e = 1; e <= pp.exponent; ++e) {
        pk *= pp.prime;
        for (std::size_t i = 0; i < n0; ++i) divisors.push_back(divisors[i] * pk);
      }
    }
    for (u64 A : divisors)
      if (A >= lo && A <= hi) reduced.insert(key(A, B));
  }

  u64 cycles = 0;
  std::unordered_set<u64> seen;
  u64 steps = 0;
  for (u64 k0 : reduced) {
    if (seen.count(k0)) continue;
    ++cycles;
    i64 P = static_cast<i64>(k0 & 0xFFFFFFFFULL), Q = static_cast<i64>(2 * (k0 >> 32));
    u64 k = k0;
    do {
      if (++steps > budget.form_cycle_steps) throw ResourceLimitError("class number cycle budget");
      seen.insert(k);
      const i64 q = (P + static_cast<i64>(s)) / Q;
      const i64 P1 = q * Q - P;
      Q = (static_cast<i64>(D) - P1 * P1) / Q;
      P = P1;
      k = key(static_cast<u64>(Q / 2), static_cast<u64>(P));
      if (!reduced.count(k)) throw EngineError("cycle left the reduced set");
    } while (k != k0);
  }
  return cycles;
}

u64 class_number_analytic(const QField& K, double* estimate, const WorkBudget& budget) {
  const i64 D = static_cast<i64>(K.disc());
  long double logL = 0;
  for (std::uint32_t p : euler_primes()) {
    const int chi = kronecker(D, p);
    if (chi != 0) logL -= std::log1p(-static_cast<long double>(chi) / p);
  }
  const long double R = regulator_bsgs(K, 96, {}, budget).to_double();
  const long double est = std::sqrt(static_cast<long double>(D)) * std::exp(logL) / (2 * R);
  if (estimate) *estimate = static_cast<double>(est);
  const long double rounded = std::nearbyint(est);
  if (rounded < 1 || std::fabs(est - rounded) > 0.25L) {
    throw AmbiguousRoundingError("class number estimate " + std::to_string(static_cast<double>(est)) +
                                 " is not within 0.25 of an integer");
  }
  return static_cast<u64>(rounded);
}

ClassNumber class_number(const QField& K, const WorkBudget& budget) {
  if (K.disc() <= kExactClassNumberDisc) return {class_number_exact(K, budget), false};
  return {class_number_analytic(K, nullptr, budget), true};
}

u64 unit_index_mod_f(const QField& K, const mpz_class& x, const mpz_class& y, u64 f,
                     const WorkBudget& budget) {
  if (f == 0) throw PreconditionError("conductor must be positive");
  if (f == 1) return 1;
  auto red = [&](const mpz_class& v) {
    mpz_class r;
    mpz_fdiv_r_ui(r.get_mpz_t(), v.get_mpz_t(), f);
    return static_cast<u64>(r.get_ui());
  };
  const u64 a = red(x), b = red(y);
  const u64 n = K.omega_norm_term() % f;
  const bool delta = K.delta() == 1;
  // (u + v w)(s + t w) = us + n vt + (ut + vs + delta vt) w
  auto mul = [&](std::pair<u64, u64> l, std::pair<u64, u64> r) {
    const u64 vt = mulmod(l.second, r.second, f);
    u64 nv = addmod(mulmod(l.first, r.second, f), mulmod(l.second, r.first, f), f);
    if (delta) nv = addmod(nv, vt, f);
    return std::pair{addmod(mulmod(l.first, r.first, f), mulmod(n, vt, f), f), nv};
  };
  auto in_order = [&](u64 e) {
    std::pair<u64, u64> acc{1 % f, 0}, base{a, b};
    for (; e; e >>= 1) {
      if (e & 1) acc = mul(acc, base);
      base = mul(base, base);
    }
    return acc.second == 0;
  };
  // The index is the order of eps in (O_K / f)^* / (Z / f)^*, a group of
  // order conductor_factor(f).
  const u64 phi = conductor_factor(K, f, budget);
  if (!in_order(phi)) throw EngineError("unit residue is not a unit modulo f");
  u64 k = phi;
  for (const auto& pp : factor(phi, budget)) {
    while (k % pp.prime == 0 && in_order(k / pp.prime)) k /= pp.prime;
  }
  return k;
}

u64 unit_index_mod_f(const QField& K, u64 f, const WorkBudget& budget) {
  if (f == 0) throw PreconditionError("conductor must be positive");
  if (f == 1) return 1;
  const UnitResidue r = unit_residue(K, f, budget);
  return unit_index_mod_f(K, mpz_class(static_cast<unsigned long>(r.x)),
                          mpz_class(static_cast<unsigned long>(r.y)), f, budget);
}

u64 conductor_factor(const QField& K, u64 f, const WorkBudget& budget) {
  if (f == 0) throw PreconditionError("conductor must be positive");
  const i64 D = static_cast<i64>(K.disc());
  u64 phi = 1;
  for (const auto& pp : factor(f, budget)) {
    for (unsigned e = 1; e < pp.exponent; ++e) phi *= pp.prime;
    phi *= static_cast<u64>(static_cast<i64>(pp.prime) - kronecker(D, static_cast<i64>(pp.prime)));
  }
  return phi;
}

u64 pic_order(const QField& K, u64 f, u64 h, u64 unit_index, const WorkBudget& budget) {
  const u128 num = static_cast<u128>(h) * conductor_factor(K, f, budget);
  if (unit_index == 0 || num % unit_index != 0) {
    throw EngineError("unit index does not divide h * conductor factor");
  }
  return static_cast<u64>(num / unit_index);
}

u64 pic_order(const QField& K, u64 f, const WorkBudget& budget) {
  const u64 h = class_number(K, budget).value;
  return pic_order(K, f, h, unit_index_mod_f(K, f, budget), budget);
}

namespace {

struct FormCtx {
  i128 D;
  i128 s;
};

// Accumulated change of variables F -> F o T, tracked on request.
struct Transform {
  mpz_class p = 1, q = 0, r = 0, s = 1;
  // T <- T * [[e, f], [g, h]]
  void mul(long e, const mpz_class& f, long g, const mpz_class& h) {
    mpz_class np = p * e + q * g, nq = p * f + q * h;
    mpz_class nr = r * e + s * g, ns = r * f + s * h;
    p = np, q = nq, r = nr, s = ns;
  }
};

mpz_class to_mpz(i128 v) {
  const bool neg = v < 0;
  u128 u = neg ? static_cast<u128>(-v) : static_cast<u128>(v);
  mpz_class z = static_cast<unsigned long>(u >> 64);
  z <<= 64;
  z += static_cast<unsigned long>(static_cast<u64>(u));
  return neg ? mpz_class(-z) : z;
}

BinaryForm normalize(const FormCtx& X, i128 a, i128 b, Transform* T) {
  const i128 A = abs128(a);
  i128 nb;
  if (A > X.s) {
    nb = mod_pos(b, 2 * A);
    if (nb > A) nb -= 2 * A;
  } else {
    nb = X.s - mod_pos(X.s - b, 2 * A);
  }
  if (T) T->mul(1, to_mpz((nb - b) / (2 * a)), 0, 1);
  return {a, nb, (nb * nb - X.D) / (4 * a)};
}

bool is_reduced(const FormCtx& X, const BinaryForm& f) {
  const i128 A2 = 2 * abs128(f.a);
  return f.b > 0 && f.b <= X.s && A2 >= X.s - f.b + 1 && A2 <= X.s + f.b;
}

// (a, b, c) -> (c, b', c') through (x, y) -> (-y, x + t y).
BinaryForm rho(const FormCtx& X, const BinaryForm& f, Transform* T) {
  const BinaryForm g = normalize(X, f.c, -f.b, nullptr);
  if (T) T->mul(0, -1, 1, to_mpz((g.b + f.b) / (2 * f.c)));
  return g;
}

BinaryForm reduce(const FormCtx& X, BinaryForm f, Transform* T, const WorkBudget& budget) {
  f = normalize(X, f.a, f.b, T);
  u64 steps = 0;
  while (!is_reduced(X, f)) {
    if (++steps > budget.form_cycle_steps) throw ResourceLimitError("form reduction budget");
    f = rho(X, f, T);
  }
  return f;
}

FormCtx context(i128 D) {
  if (D <= 0) throw PreconditionError("form discriminant must be positive");
  const i128 s = static_cast<i128>(isqrt(static_cast<u128>(D)));
  if (s * s == D) throw PreconditionError("form discriminant must not be a square");
  return {D, s};
}

bool same(const BinaryForm& f, const BinaryForm& g) {
  return f.a == g.a && f.b == g.b && f.c == g.c;
}

// On success with U requested: F o U = G.
bool equivalent(const BinaryForm& f, const BinaryForm& g, Transform* U, const WorkBudget& budget) {
  if (f.disc() != g.disc()) return false;
  const FormCtx X = context(f.disc());
  Transform TF, TG;
  const BinaryForm rf = reduce(X, f, U ? &TF : nullptr, budget);
  const BinaryForm rg = reduce(X, g, U ? &TG : nullptr, budget);
  BinaryForm cur = rg;
  u64 steps = 0;
  do {
    if (same(cur, rf)) {
      if (U) {
        // F o TF = G o TG, so U = TF * TG^-1
        U->p = TF.p * TG.s - TF.q * TG.r;
        U->q = -TF.p * TG.q + TF.q * TG.p;
        U->r = TF.r * TG.s - TF.s * TG.r;
        U->s = -TF.r * TG.q + TF.s * TG.p;
      }
      return true;
    }
    if (++steps > budget.form_cycle_steps) throw ResourceLimitError("form cycle budget exhausted");
    cur = rho(X, cur, U ? &TG : nullptr);
  } while (!same(cur, rg));
  return false;
}

std::optional<Representation> represents(const BinaryForm& F, i64 n, bool want,
                                          const WorkBudget& budget) {
  if (n == 0) throw PreconditionError("target must be nonzero");
  const i128 content = gcd128(gcd128(F.a, F.b), F.c);
  const BinaryForm F0{F.a / content, F.b / content, F.c / content};
  const i128 N = n;
  for (i128 g = 1; g * g <= abs128(N); ++g) {
    if (N % (g * g) != 0) continue;
    const i128 m = N / (g * g);
    if (m % content != 0) continue;
    const i128 m0 = m / content;
    const i128 D = F0.disc();
    const i128 am = abs128(m0);
    for (i128 b = 0; b < 2 * am; ++b) {
      if (mod_pos(b * b - D, 4 * am) != 0) continue;
      const BinaryForm G{m0, b, (b * b - D) / (4 * m0)};
      Transform U;
      if (equivalent(F0, G, want ? &U : nullptr, budget)) {
        const mpz_class gz = to_mpz(g);
        return Representation{gz * U.p, gz * U.r};
      }
    }
  }
  return std::nullopt;
}

}  // namespace

bool properly_equivalent(const BinaryForm& f, const BinaryForm& g, const WorkBudget& budget) {
  return equivalent(f, g, nullptr, budget);
}

bool form_represents(const BinaryForm& F, i64 n, const WorkBudget& budget) {
  return represents(F, n, false, budget).has_value();
}

std::optional<Representation> form_representation(const BinaryForm& F, i64 n,
                                                  const WorkBudget& budget) {
  return represents(F, n, true, budget);
}

namespace {

BinaryForm pm4_form(const QField& K, u64 p) {
  const u64 D = K.disc();
  if (!is_prime(p) || D % p != 0) throw PreconditionError("p must be a ramified prime");
  return {static_cast<i128>(p), 0, -static_cast<i128>(D / p)};
}

}  // namespace

bool represents_pm4(const QField& K, u64 p, const WorkBudget& budget) {
  const BinaryForm F = pm4_form(K, p);
  return form_represents(F, 4, budget) || form_represents(F, -4, budget);
}

std::optional<Representation> pm4_witness(const QField& K, u64 p, const WorkBudget& budget) {
  const BinaryForm F = pm4_form(K, p);
  if (auto r = form_representation(F, 4, budget)) return r;
  return form_representation(F, -4, budget);
}

std::vector<ConductorAnalysis> unusual_conductors(const QField& K, u64 f_bound,
                                                  const WorkBudget& budget) {
  std::vector<ConductorAnalysis> out;
  const u64 h = class_number(K, budget).value;
  if (h != 2 || f_bound < 2) return out;
  if (f_bound > 100'000'000) throw PreconditionError("f_bound too large");

  const i64 D = static_cast<i64>(K.disc());
  const auto primes = primes_up_to(static_cast<std::uint32_t>(f_bound));
  // kind: 0 ramified, 1 split, -1 inert
  std::vector<int> kind(primes.size());
  mpz_class M = 1;
  for (std::size_t i = 0; i < primes.size(); ++i) {
    kind[i] = kronecker(D, primes[i]);
    if (kind[i] != 1) M *= primes[i];
  }
  if (M == 1) return out;

  const OmegaResidue e = unit_omega_mod_auto(K, M, budget);
  const mpz_class& ex = e.x;
  const mpz_class& ey = e.y;

  std::vector<u64> index(primes.size(), 0);
  std::vector<int> pm4(primes.size(), -1);
  std::vector<std::size_t> spf_idx(f_bound + 1, SIZE_MAX);
  for (std::size_t i = 0; i < primes.size(); ++i)
    for (u64 j = primes[i]; j <= f_bound; j += primes[i])
      if (spf_idx[j] == SIZE_MAX) spf_idx[j] = i;

  for (u64 f = 2; f <= f_bound; ++f) {
    u64 rest = f, k = 1, phi = 1;
    bool ok = true, has_ramified = false, pm4_free = true;
    while (rest > 1 && ok) {
      const std::size_t i = spf_idx[rest];
      const u64 p = primes[i];
      rest /= p;
      if (rest % p == 0 || kind[i] == 1) {
        ok = false;
        break;
      }
      if (index[i] == 0) index[i] = unit_index_mod_f(K, ex, ey, p, budget);
      k = std::lcm(k, index[i]);
      phi *= static_cast<u64>(static_cast<i64>(p) - kind[i]);
      if (kind[i] == 0) {
        has_ramified = true;
        if (pm4[i] < 0) pm4[i] = represents_pm4(K, p, budget) ? 1 : 0;
        if (pm4[i] == 1) pm4_free = false;
      }
    }
    if (!ok || !has_ramified) continue;
    if ((h * phi) % k != 0) throw EngineError("unit index does not divide h * conductor factor");
    const u64 pic = h * phi / k;
    if (pic == 2 && pm4_free) out.push_back({K.d(), f, pic, k, true});
  }
  return out;
}

}  // namespace qunit
