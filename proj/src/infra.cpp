#include "qunit/infra.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <mpfr.h>

namespace qunit {

namespace {

constexpr mpfr_prec_t kPrec = 256;

i128 mpz_to_i128(const mpz_class& z) {
  mpz_class a = abs(z);
  u128 v = 0;
  if (mpz_sizeinbase(a.get_mpz_t(), 2) > 126) throw EngineError("fixed-point overflow");
  std::size_t count = 0;
  u64 limbs[2] = {0, 0};
  mpz_export(limbs, &count, -1, sizeof(u64), 0, 0, a.get_mpz_t());
  v = (static_cast<u128>(limbs[1]) << 64) | limbs[0];
  return sgn(z) < 0 ? -static_cast<i128>(v) : static_cast<i128>(v);
}

mpz_class i128_to_mpz(i128 x) {
  const bool neg = x < 0;
  u128 v = neg ? static_cast<u128>(-x) : static_cast<u128>(x);
  mpz_class hi(static_cast<unsigned long>(v >> 64));
  mpz_class r = (hi << 64) + mpz_class(static_cast<unsigned long>(static_cast<u64>(v)));
  return neg ? mpz_class(-r) : r;
}

i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

i128 mod_pos(i128 a, i128 m) {
  i128 r = a % m;
  return r < 0 ? r + m : r;
}

// g = gcd(a, b) = x*a + y*b
i128 ext_gcd(i128 a, i128 b, i128& x, i128& y) {
  i128 x0 = 1, y0 = 0, x1 = 0, y1 = 1;
  while (b != 0) {
    const i128 q = floor_div(a, b);
    i128 t = a - q * b;
    a = b;
    b = t;
    t = x0 - q * x1;
    x0 = x1;
    x1 = t;
    t = y0 - q * y1;
    y0 = y1;
    y1 = t;
  }
  if (a < 0) {
    a = -a;
    x0 = -x0;
    y0 = -y0;
  }
  x = x0;
  y = y0;
  return a;
}

}  // namespace

Fixed Fixed::from_double(double v) {
  return {static_cast<i128>(std::ldexp(static_cast<long double>(v), kFrac))};
}

Fixed Fixed::from_mpz_scaled(const mpz_class& scaled) { return {mpz_to_i128(scaled)}; }

double Fixed::to_double() const {
  return static_cast<double>(std::ldexp(static_cast<long double>(raw), -kFrac));
}

std::string Fixed::to_string(int digits) const {
  const bool neg = raw < 0;
  u128 v = neg ? static_cast<u128>(-raw) : static_cast<u128>(raw);
  const u128 mask = (static_cast<u128>(1) << kFrac) - 1;
  u128 ip = v >> kFrac;
  u128 frac = v & mask;
  std::string int_digits;
  do {
    int_digits.insert(int_digits.begin(), static_cast<char>('0' + static_cast<int>(ip % 10)));
    ip /= 10;
  } while (ip != 0);
  std::string out = neg ? "-" + int_digits : int_digits;
  if (digits > 0) {
    out += '.';
    for (int i = 0; i < digits; ++i) {
      frac *= 10;
      out += static_cast<char>('0' + static_cast<int>(frac >> kFrac));
      frac &= mask;
    }
  }
  return out;
}

Fixed Fixed::truncated(int bits) const {
  if (bits >= kFrac) return *this;
  const i128 step = static_cast<i128>(1) << (kFrac - bits);
  return {raw & ~(step - 1)};
}

struct Infrastructure::Impl {
  i128 D;
  i64 s;
  i64 delta;
  i128 n;
  mpfr_t sqrtD, t1, t2;
  mpz_class z;
  bool with_distance = true;

  explicit Impl(const QField& K)
      : D(K.disc()),
        s(static_cast<i64>(K.sqrt_disc())),
        delta(K.delta()),
        n(K.omega_norm_term()) {
    mpfr_inits2(kPrec, sqrtD, t1, t2, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_ui(sqrtD, 0, MPFR_RNDN);
    mpfr_set_z(sqrtD, mpz_class(static_cast<unsigned long>(K.disc())).get_mpz_t(), MPFR_RNDN);
    mpfr_sqrt(sqrtD, sqrtD, MPFR_RNDN);
  }
  ~Impl() { mpfr_clears(sqrtD, t1, t2, static_cast<mpfr_ptr>(nullptr)); }

  Fixed to_fixed(mpfr_t x) {
    mpfr_mul_2si(t2, x, Fixed::kFrac, MPFR_RNDN);
    mpfr_get_z(z.get_mpz_t(), t2, MPFR_RNDN);
    return Fixed::from_mpz_scaled(z);
  }

  // ln((P + sqrt D) / Q)
  Fixed ln_phi(i64 P, i64 Q) {
    mpfr_add_si(t1, sqrtD, P, MPFR_RNDN);
    mpfr_div_si(t1, t1, Q, MPFR_RNDN);
    mpfr_log(t1, t1, MPFR_RNDN);
    return to_fixed(t1);
  }

  Fixed ln_int(const mpz_class& v) {
    mpfr_set_z(t1, v.get_mpz_t(), MPFR_RNDN);
    mpfr_log(t1, t1, MPFR_RNDN);
    return to_fixed(t1);
  }

  // -ln|A - B (P + sqrt D) / Q|
  Fixed neg_ln_gap(const mpz_class& A, const mpz_class& B, i128 P, i128 Q) {
    mpfr_set_z(t1, i128_to_mpz(P).get_mpz_t(), MPFR_RNDN);
    mpfr_add(t1, t1, sqrtD, MPFR_RNDN);
    mpfr_div_z(t1, t1, i128_to_mpz(Q).get_mpz_t(), MPFR_RNDN);
    mpfr_mul_z(t1, t1, B.get_mpz_t(), MPFR_RNDN);
    mpfr_z_sub(t1, A.get_mpz_t(), t1, MPFR_RNDN);
    mpfr_abs(t1, t1, MPFR_RNDN);
    mpfr_log(t1, t1, MPFR_RNDN);
    mpfr_neg(t1, t1, MPFR_RNDN);
    return to_fixed(t1);
  }
};

namespace {

void gen_mul(GenResidue& g, const mpz_class& a, const mpz_class& b, const QField& K) {
  mpz_class ra, rb;
  mpz_fdiv_r(ra.get_mpz_t(), a.get_mpz_t(), g.modulus.get_mpz_t());
  mpz_fdiv_r(rb.get_mpz_t(), b.get_mpz_t(), g.modulus.get_mpz_t());
  OmegaMul(K).mul(g.u, g.v, ra, rb, g.modulus);
}

// g <- g / w, where w divides both coordinates of the true generator.
void gen_div(GenResidue& g, mpz_class w) {
  mpz_class h = gcd(w, g.modulus);
  while (h != 1) {
    if (!mpz_divisible_p(g.u.get_mpz_t(), h.get_mpz_t()) ||
        !mpz_divisible_p(g.v.get_mpz_t(), h.get_mpz_t())) {
      throw VerificationError("generator division is not exact");
    }
    g.u /= h;
    g.v /= h;
    g.modulus /= h;
    w /= h;
    if (g.modulus == 1) throw VerificationError("generator precision exhausted");
    h = gcd(w, g.modulus);
  }
  mpz_class inv;
  mpz_invert(inv.get_mpz_t(), w.get_mpz_t(), g.modulus.get_mpz_t());
  g.u = g.u * inv % g.modulus;
  g.v = g.v * inv % g.modulus;
}

ReducedForm make_form(i64 a, i64 b, i128 D) {
  ReducedForm f;
  f.a = a;
  f.b = b;
  f.c = static_cast<i64>((static_cast<i128>(b) * b - D) / (4 * static_cast<i128>(a)));
  return f;
}

}  // namespace

Infrastructure::Infrastructure(const QField& K) : K_(K) {
  if (K.disc() >= kMaxDisc) throw PreconditionError("large-step engine needs d_K < 2^52");
  impl_ = std::make_unique<Impl>(K);
  ln_disc_ = impl_->ln_int(mpz_class(static_cast<unsigned long>(K.disc())));
}

Infrastructure::~Infrastructure() = default;

void Infrastructure::set_track_distance(bool on) { impl_->with_distance = on; }

bool Infrastructure::is_reduced(i64 a, i64 b) const {
  const i64 s = impl_->s;
  return a > 0 && b > 0 && b <= s && 2 * a >= s - b + 1 && 2 * a <= s + b;
}

ReducedForm Infrastructure::principal() const {
  return make_form(1, static_cast<i64>(K_.principal_b()), impl_->D);
}

ReducedForm Infrastructure::principal(const mpz_class& M) const {
  ReducedForm f = principal();
  f.generator = GenResidue{M, mpz_class(1) % M, 0, 1};
  return f;
}

ReducedForm Infrastructure::rho_step(const ReducedForm& f) {
  Impl& I = *impl_;
  const i64 P = f.b, Q = 2 * f.a;
  const i64 q = (P + I.s) / Q;
  const i64 P1 = q * Q - P;
  const i64 Q1 = static_cast<i64>((I.D - static_cast<i128>(P1) * P1) / Q);
  ReducedForm r = make_form(Q1 / 2, P1, I.D);
  r.distance = I.with_distance ? f.distance + I.ln_phi(P1, Q1) : f.distance;
  if (record_divisors) divisors.emplace_back(static_cast<long>(f.a));
  if (f.generator) {
    r.generator = f.generator;
    gen_mul(*r.generator, mpz_class(static_cast<long>((P1 - I.delta) / 2)), 1, K_);
    gen_div(*r.generator, mpz_class(static_cast<long>(f.a)));
    r.generator->norm_sign = -r.generator->norm_sign;
  }
  return r;
}

ReducedForm Infrastructure::rho_back(const ReducedForm& f) {
  Impl& I = *impl_;
  const i64 P = f.b, Q = 2 * f.a;
  const i64 Qp = static_cast<i64>((I.D - static_cast<i128>(P) * P) / Q);
  const i64 qp = (P + I.s) / Qp;
  const i64 Pp = qp * Qp - P;
  ReducedForm r = make_form(Qp / 2, Pp, I.D);
  r.distance = I.with_distance ? f.distance - I.ln_phi(P, Q) : f.distance;
  if (record_divisors) divisors.emplace_back(static_cast<long>(f.a));
  if (f.generator) {
    r.generator = f.generator;
    gen_mul(*r.generator, mpz_class(-static_cast<long>((P + I.delta) / 2)), 1, K_);
    gen_div(*r.generator, mpz_class(static_cast<long>(f.a)));
    r.generator->norm_sign = -r.generator->norm_sign;
  }
  return r;
}

ReducedForm Infrastructure::compose_reduce(const ReducedForm& f, const ReducedForm& g) {
  Impl& I = *impl_;
  const i128 A1 = f.a, A2 = g.a;
  const i128 b1 = (f.b - I.delta) / 2, b2 = (g.b - I.delta) / 2;

  // Composition: [A1, b1 + w][A2, b2 + w] = G [A1 A2 / G^2, t / G + w].
  i128 x1, x2, y1, x4;
  const i128 G1 = ext_gcd(A1, A2, x1, x2);
  const i128 G = ext_gcd(G1, b1 + b2 + I.delta, y1, x4);
  x1 *= y1;
  x2 *= y1;
  const i128 L = A1 * A2 / G;
  const i128 A3 = L / G;
  i128 t = mod_pos(mod_pos(x1 * A1, L) * b2 % L + mod_pos(x2 * A2, L) * b1 % L, L);
  t = mod_pos(t + mod_pos(x4, L) * mod_pos(b1 * b2 + I.n, L) % L, L);
  if (t % G != 0) throw EngineError("composition: t not divisible by G");
  // Representative with s - 2 A3 < B3 <= s: the conjugate of (B3 + sqrt D)/(2 A3)
  // then lies in (-1, 0), so an already reduced ideal takes no steps.
  const i128 B3 = I.s - mod_pos(I.s - (2 * (t / G) + I.delta), 2 * A3);
  const i128 b3 = (B3 - I.delta) / 2;
  if ((I.D - B3 * B3) % (4 * A3) != 0) throw EngineError("composition produced a non-ideal");

  // Regular continued fraction of (B3 + sqrt D) / (2 A3) until reduced.
  i128 P = B3, Q = 2 * A3;
  mpz_class Ap = 0, Ac = 1, Bp = 1, Bc = 0;  // A_{i-2}, A_{i-1}, B_{i-2}, B_{i-1}
  int steps = 0;
  const i64 s = I.s;
  auto reduced = [&](i128 p, i128 q) {
    return q > 0 && p > 0 && p <= s && q >= s - p + 1 && q <= s + p;
  };
  while (!reduced(P, Q)) {
    if (++steps > 4096) throw EngineError("reduction did not terminate");
    const i128 q = Q > 0 ? floor_div(P + s, Q) : floor_div(-P - s - 1, -Q);
    const mpz_class qz = i128_to_mpz(q);
    mpz_class t1 = qz * Ac + Ap;
    Ap = std::move(Ac);
    Ac = std::move(t1);
    t1 = qz * Bc + Bp;
    Bp = std::move(Bc);
    Bc = std::move(t1);
    const i128 P1 = q * Q - P;
    Q = (I.D - P1 * P1) / Q;
    P = P1;
  }

  ReducedForm r = make_form(static_cast<i64>(Q / 2), static_cast<i64>(P), I.D);
  if (I.with_distance) {
    r.distance = f.distance + g.distance;
    if (G != 1) r.distance = r.distance + I.ln_int(i128_to_mpz(G));
    if (steps > 0) r.distance = r.distance + I.neg_ln_gap(Ac, Bc, B3, 2 * A3);
  }
  if (record_divisors) divisors.push_back(i128_to_mpz(L));
  if (f.generator && g.generator) {
    GenResidue gen = *f.generator;
    if (gen.modulus != g.generator->modulus) {
      gen.modulus = gcd(gen.modulus, g.generator->modulus);
      gen.u %= gen.modulus;
      gen.v %= gen.modulus;
    }
    gen_mul(gen, g.generator->u, g.generator->v, K_);
    // nu * A3 = (A3 A_{i-1} - B_{i-1} (b3 + delta)) + B_{i-1} w
    const mpz_class A3z = i128_to_mpz(A3);
    gen_mul(gen, A3z * Ac - Bc * i128_to_mpz(b3 + I.delta), Bc, K_);
    gen_div(gen, i128_to_mpz(L));
    gen.norm_sign = f.generator->norm_sign * g.generator->norm_sign * ((steps & 1) ? -1 : 1);
    r.generator = std::move(gen);
  }
  return r;
}

namespace {

struct BabyTable {
  std::vector<i64> a, b;
  std::vector<Fixed> dist;
  std::vector<u64> quotients;
  std::unordered_map<u64, std::uint32_t> index;
  bool closed = false;  // walk returned to the principal form
};

u64 key(i64 a, i64 b) { return (static_cast<u64>(a) << 32) ^ static_cast<u64>(b); }

struct BsgsResult {
  Fixed R;
  BabyTable table;
};

BsgsResult run_bsgs(Infrastructure& inf, const BsgsOptions& opts, const WorkBudget& budget) {
  const QField& K = inf.field();
  const i64 s = static_cast<i64>(K.sqrt_disc());
  const double quarter = std::pow(static_cast<double>(K.disc()), 0.25);
  const u64 n_target = std::max<u64>(2, static_cast<u64>(std::ceil(opts.baby_factor * quarter)));
  const Fixed margin = inf.ln_disc() + inf.ln_disc() + Fixed{static_cast<i128>(2) << Fixed::kFrac};
  const Fixed need = margin + margin + margin;

  BsgsResult out;
  BabyTable& T = out.table;
  ReducedForm f = inf.principal();
  auto add = [&](const ReducedForm& x) {
    T.index.emplace(key(x.a, x.b), static_cast<std::uint32_t>(T.a.size()));
    T.a.push_back(x.a);
    T.b.push_back(x.b);
    T.dist.push_back(x.distance);
  };
  add(f);
  while (true) {
    if (T.quotients.size() >= budget.period_steps) {
      throw ResourceLimitError("baby-step budget exhausted");
    }
    T.quotients.push_back(static_cast<u64>((f.b + s) / (2 * f.a)));
    f = inf.rho_step(f);
    if (f.is_principal()) {
      T.closed = true;
      out.R = f.distance;
      return out;
    }
    add(f);
    if (T.a.size() > n_target && f.distance >= need) break;
  }

  const Fixed top = T.dist.back();
  const auto it = std::upper_bound(T.dist.begin(), T.dist.end(), top - margin);
  const std::size_t gi = static_cast<std::size_t>(it - T.dist.begin()) - 1;
  ReducedForm giant = make_form(T.a[gi], T.b[gi], static_cast<i128>(K.disc()));
  giant.distance = T.dist[gi];

  const Fixed quarter_unit{static_cast<i128>(1) << (Fixed::kFrac - 2)};
  ReducedForm c = giant;
  for (u64 step = 0;; ++step) {
    if (step >= budget.giant_steps) throw ResourceLimitError("giant-step budget exhausted");
    const auto hit = T.index.find(key(c.a, c.b));
    if (hit != T.index.end()) {
      const Fixed gap = c.distance - T.dist[hit->second];
      if (gap > quarter_unit) {
        out.R = gap;
        return out;
      }
    }
    ReducedForm next = inf.compose_reduce(c, giant);
    const Fixed jump = next.distance - c.distance;
    if (jump.raw <= 0 || jump > top) throw VerificationError("giant step left the covered window");
    c = std::move(next);
  }
}

enum class Op : unsigned char { Square, Forward, Back };

struct Ladder {
  std::size_t start = 0;
  std::vector<Op> ops;
};

// Walks from the baby table to the principal form at distance R by
// squaring and local adjustment. Throws VerificationError if it does not
// end on the principal form at R.
Ladder plan_ladder(Infrastructure& inf, const BabyTable& T, Fixed R, const WorkBudget& budget) {
  Ladder L;
  const Fixed top = T.dist.back();
  int levels = 0;
  while (Fixed{R.raw >> levels} > top) ++levels;
  const Fixed tK{R.raw >> levels};
  const auto it = std::upper_bound(T.dist.begin(), T.dist.end(), tK);
  L.start = static_cast<std::size_t>(it - T.dist.begin()) - 1;
  ReducedForm f = make_form(T.a[L.start], T.b[L.start], static_cast<i128>(inf.field().disc()));
  f.distance = T.dist[L.start];

  const Fixed slack{static_cast<i128>(1) << (Fixed::kFrac - 70)};
  u64 moves = 0;
  for (int k = levels - 1; k >= 0; --k) {
    const Fixed target = k > 0 ? Fixed{R.raw >> k} : R + slack;
    f = inf.compose_reduce(f, f);
    L.ops.push_back(Op::Square);
    while (true) {
      if (++moves > budget.form_cycle_steps) throw ResourceLimitError("ladder budget exhausted");
      ReducedForm nxt = inf.rho_step(f);
      if (nxt.distance > target) break;
      f = std::move(nxt);
      L.ops.push_back(Op::Forward);
    }
    while (f.distance > target) {
      if (++moves > budget.form_cycle_steps) throw ResourceLimitError("ladder budget exhausted");
      f = inf.rho_back(f);
      L.ops.push_back(Op::Back);
    }
  }
  const Fixed tol{static_cast<i128>(1) << (Fixed::kFrac - 64)};
  const Fixed err = f.distance - R;
  if (!f.is_principal() || err > tol || err.raw < -tol.raw) {
    throw VerificationError("ladder did not land on the principal form at the regulator");
  }
  return L;
}

// alpha_j = (A_{j-1} - (k0 + delta) B_{j-1}) + B_{j-1} w modulo M; the
// generator of the j-th ideal of the principal cycle.
GenResidue cycle_generator(const QField& K, const std::vector<u64>& quotients, std::size_t j,
                           const mpz_class& M) {
  const Mat2 c = convergent_matrix_mod(quotients, j, M);
  GenResidue g;
  g.modulus = M;
  const mpz_class shift(static_cast<unsigned long>(K.k0() + K.delta()));
  mpz_class u = c.a - shift * c.c;
  mpz_fdiv_r(g.u.get_mpz_t(), u.get_mpz_t(), M.get_mpz_t());
  g.v = c.c % M;
  g.norm_sign = (j & 1) ? -1 : 1;
  return g;
}

}  // namespace

Fixed regulator_bsgs(const QField& K, int precision, const BsgsOptions& opts,
                     const WorkBudget& budget) {
  if (precision < 1 || precision > Fixed::kFrac) {
    throw PreconditionError("precision must be between 1 and 96 bits");
  }
  Infrastructure inf(K);
  BsgsResult res = run_bsgs(inf, opts, budget);
  if (!res.table.closed) plan_ladder(inf, res.table, res.R, budget);
  return res.R.truncated(precision);
}

namespace detail {

BigUnit unit_mod_big(const QField& K, const mpz_class& M, const BsgsOptions& opts,
                     const WorkBudget& budget) {
  if (M < 2) throw PreconditionError("modulus must be at least 2");
  Infrastructure inf(K);
  BsgsResult res = run_bsgs(inf, opts, budget);
  const BabyTable& T = res.table;
  BigUnit out;
  out.modulus = M;
  if (T.closed) {
    const GenResidue g = cycle_generator(K, T.quotients, T.quotients.size(), M);
    out.x = g.u;
    out.y = g.v;
    out.norm_sign = g.norm_sign;
    return out;
  }

  inf.record_divisors = true;
  const Ladder L = plan_ladder(inf, T, res.R, budget);
  inf.record_divisors = false;
  mpz_class W = 1;
  for (const mpz_class& w : inf.divisors) W *= smooth_part(w, M);
  inf.divisors.clear();

  const mpz_class MW = M * W;
  ReducedForm f = make_form(T.a[L.start], T.b[L.start], static_cast<i128>(K.disc()));
  f.generator = cycle_generator(K, T.quotients, L.start, MW);
  inf.set_track_distance(false);
  for (Op op : L.ops) {
    switch (op) {
      case Op::Square: f = inf.compose_reduce(f, f); break;
      case Op::Forward: f = inf.rho_step(f); break;
      case Op::Back: f = inf.rho_back(f); break;
    }
  }
  inf.set_track_distance(true);
  if (!f.is_principal()) throw VerificationError("replayed ladder diverged");
  const GenResidue& g = *f.generator;
  if (g.modulus % M != 0) throw VerificationError("generator precision below the modulus");
  out.x = g.u % M;
  out.y = g.v % M;
  out.norm_sign = g.norm_sign;
  return out;
}

}  // namespace detail

UnitResidue unit_residue_fast(const QField& K, u64 m, const BsgsOptions& opts,
                              const WorkBudget& budget) {
  if (m < 2) throw PreconditionError("modulus must be at least 2");
  if (m >= (u64{1} << 62)) throw PreconditionError("modulus must be below 2^62");
  const u64 mi = K.shape() == OmegaShape::Half ? 2 * m : m;
  const mpz_class M(static_cast<unsigned long>(mi));
  const detail::BigUnit e = detail::unit_mod_big(K, M, opts, budget);
  return detail::finish_residue(K, m, M, e.x, e.y, e.norm_sign);
}

UnitResidue unit_residue_with(Engine engine, const QField& K, u64 m, const WorkBudget& budget) {
  if (engine == Engine::Small) return unit_residue(K, m, budget);
  if (K.disc() >= Infrastructure::kMaxDisc) throw PreconditionError("large-step engine needs d_K < 2^52");
  return unit_residue_fast(K, m, {}, budget);
}

OmegaResidue unit_omega_mod_auto(const QField& K, const mpz_class& M, const WorkBudget& budget) {
  if (K.disc() >= Infrastructure::kMaxDisc) return unit_omega_mod(K, M, budget);
  const detail::BigUnit e = detail::unit_mod_big(K, M, {}, budget);
  return {e.modulus, e.x, e.y, e.norm_sign};
}

}  // namespace qunit
