#include <cmath>
#include <map>
#include <random>

#include <mpfr.h>

#include "doctest.h"
#include "qunit/infra.hpp"

using namespace qunit;

namespace {

// ln(x + y*omega) at 200 bits, returned as a Fixed.
Fixed ln_unit(const QField& K, const mpz_class& x, const mpz_class& y) {
  mpfr_t a, b;
  mpfr_inits2(200, a, b, static_cast<mpfr_ptr>(nullptr));
  mpfr_set_ui(b, static_cast<unsigned long>(K.disc()), MPFR_RNDN);
  mpfr_sqrt(b, b, MPFR_RNDN);
  mpfr_add_ui(b, b, K.delta(), MPFR_RNDN);
  mpfr_div_2ui(b, b, 1, MPFR_RNDN);  // omega
  mpfr_mul_z(b, b, y.get_mpz_t(), MPFR_RNDN);
  mpfr_add_z(a, b, x.get_mpz_t(), MPFR_RNDN);
  mpfr_log(a, a, MPFR_RNDN);
  mpfr_mul_2ui(a, a, 96, MPFR_RNDN);
  mpz_class z;
  mpfr_get_z(z.get_mpz_t(), a, MPFR_RNDN);
  mpfr_clears(a, b, static_cast<mpfr_ptr>(nullptr));
  return Fixed::from_mpz_scaled(z);
}

bool close(Fixed a, Fixed b, int bits) {
  const i128 tol = static_cast<i128>(1) << (96 - bits);
  const i128 d = a.raw - b.raw;
  return d <= tol && d >= -tol;
}

u64 random_squarefree(std::mt19937_64& rng, u64 lo, u64 hi) {
  while (true) {
    const u64 d = lo + rng() % (hi - lo);
    if (is_squarefree(d)) return d;
  }
}

struct Cycle {
  std::map<std::pair<i64, i64>, std::size_t> index;
  std::vector<ReducedForm> forms;
  Fixed R;
};

Cycle walk(Infrastructure& inf) {
  Cycle c;
  ReducedForm f = inf.principal();
  while (true) {
    c.index[{f.a, f.b}] = c.forms.size();
    c.forms.push_back(f);
    f = inf.rho_step(f);
    if (f.is_principal()) break;
  }
  c.R = f.distance;
  return c;
}

u64 mod(const mpz_class& v, u64 m) {
  mpz_class r;
  mpz_fdiv_r_ui(r.get_mpz_t(), v.get_mpz_t(), m);
  return r.get_ui();
}

}  // namespace

TEST_CASE("fixed point formatting") {
  const Fixed one{static_cast<i128>(1) << 96};
  CHECK(one.to_string(3) == "1.000");
  CHECK(Fixed::from_double(0.5).to_string(2) == "0.50");
  CHECK(Fixed::from_double(-2.25).to_string(2) == "-2.25");
  CHECK(Fixed::from_double(3.75).truncated(1).to_double() == 3.5);
}

TEST_CASE("rho_step walks the principal cycle") {
  {
    Infrastructure inf(QField::make(2));
    const ReducedForm p = inf.principal();
    const ReducedForm q = inf.rho_step(p);
    CHECK(q.same_ideal(p));
    CHECK(close(q.distance, ln_unit(QField::make(2), 1, 1), 90));
  }
  const QField K = QField::make(46);
  Infrastructure inf(K);
  ReducedForm f = inf.principal(46);
  Fixed prev = f.distance;
  u64 steps = 0;
  do {
    f = inf.rho_step(f);
    CHECK(f.distance > prev);
    CHECK(inf.is_reduced(f.a, f.b));
    CHECK(f.b * f.b - 4 * f.a * f.c == static_cast<i64>(K.disc()));
    prev = f.distance;
    ++steps;
  } while (!f.is_principal());
  CHECK(steps == 12);
  CHECK(close(f.distance, ln_unit(K, 24335, 3588), 90));
  const UnitResidue r = unit_residue(K, 46);
  // divisions by a of each step can lower the precision below 46
  const mpz_class& fm = f.generator->modulus;
  CHECK(46 % fm == 0);
  CHECK((f.generator->u - r.x) % fm == 0);
  CHECK((f.generator->v - r.y) % fm == 0);
  CHECK(f.generator->norm_sign == r.norm_sign);

  // and back again
  ReducedForm g = f;
  for (int i = 0; i < 12; ++i) g = inf.rho_back(g);
  CHECK(g.is_principal());
  CHECK(close(g.distance, Fixed{}, 90));
  CHECK(g.generator->u == 1);
  CHECK(g.generator->v == 0);
}

TEST_CASE("compose_reduce lands on the cycle at the summed distance") {
  std::mt19937_64 rng(5);
  for (u64 d = 2; d <= 10000; d += 1 + rng() % 40) {
    if (!is_squarefree(d)) continue;
    const QField K = QField::make(d);
    Infrastructure inf(K);
    const Cycle c = walk(inf);
    const ReducedForm pp = inf.compose_reduce(inf.principal(), inf.principal());
    CHECK(pp.is_principal());
    CHECK(pp.distance.raw == 0);
    const Fixed lnD = inf.ln_disc();
    for (int trial = 0; trial < 20; ++trial) {
      const ReducedForm& f = c.forms[rng() % c.forms.size()];
      const ReducedForm& g = c.forms[rng() % c.forms.size()];
      const ReducedForm h = inf.compose_reduce(f, g);
      INFO("d = " << d);
      CHECK(inf.is_reduced(h.a, h.b));
      const auto it = c.index.find({h.a, h.b});
      REQUIRE(it != c.index.end());
      Fixed pos = h.distance;
      while (pos >= c.R) pos = pos - c.R;
      const Fixed want = c.forms[it->second].distance;
      CHECK((close(pos, want, 80) || close(pos, want + c.R, 80)));
      const Fixed err = h.distance - (f.distance + g.distance);
      CHECK(err.raw <= (lnD + lnD).raw);
      CHECK(-err.raw <= (lnD + lnD).raw);
    }
  }
}

TEST_CASE("composition is associative on the cycle") {
  std::mt19937_64 rng(9);
  for (u64 d = 2; d <= 500; ++d) {
    if (!is_squarefree(d)) continue;
    Infrastructure inf(QField::make(d));
    const Cycle c = walk(inf);
    for (int t = 0; t < 10; ++t) {
      const auto& f = c.forms[rng() % c.forms.size()];
      const auto& g = c.forms[rng() % c.forms.size()];
      const auto& h = c.forms[rng() % c.forms.size()];
      const ReducedForm l = inf.compose_reduce(inf.compose_reduce(f, g), h);
      const ReducedForm r = inf.compose_reduce(f, inf.compose_reduce(g, h));
      // both are reduced forms at nearby distances; walk the lower one up
      ReducedForm lo = l.distance < r.distance ? l : r;
      const ReducedForm& hi = l.distance < r.distance ? r : l;
      int guard = 0;
      while (!lo.same_ideal(hi) && guard++ < 64) lo = inf.rho_step(lo);
      INFO("d = " << d);
      CHECK(lo.same_ideal(hi));
      Fixed gap = hi.distance - lo.distance;
      while (gap.raw > c.R.raw / 2) gap = gap - c.R;
      CHECK(close(gap, Fixed{}, 80));
    }
  }
}

TEST_CASE("tracked generators through composition") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 60; ++t) {
    const u64 d = random_squarefree(rng, 50, 20000);
    const QField K = QField::make(d);
    const UnitData eps = fundamental_unit_exact(K);
    // prime modulus above every norm on the cycle: no precision loss
    u64 m = 100000 + rng() % 900000;
    while (!is_prime(m)) ++m;
    const mpz_class M(static_cast<unsigned long>(m));
    Infrastructure inf(K);
    // generators of the cycle forms by stepping with tracking
    std::vector<ReducedForm> forms{inf.principal(M)};
    while (true) {
      ReducedForm nx = inf.rho_step(forms.back());
      if (nx.is_principal()) break;
      forms.push_back(nx);
    }
    std::map<std::pair<i64, i64>, std::size_t> at;
    for (std::size_t i = 0; i < forms.size(); ++i) at[{forms[i].a, forms[i].b}] = i;
    const Fixed R = ln_unit(K, eps.x, eps.y);
    for (int k = 0; k < 10; ++k) {
      const auto& f = forms[rng() % forms.size()];
      const auto& g = forms[rng() % forms.size()];
      const ReducedForm h = inf.compose_reduce(f, g);
      REQUIRE(h.generator);
      const std::size_t idx = at.at({h.a, h.b});
      // h = forms[idx] * eps^w
      const long w =
          std::lround((h.distance - forms[idx].distance).to_double() / R.to_double());
      CHECK(w >= 0);
      mpz_class u = forms[idx].generator->u, v = forms[idx].generator->v;
      OmegaMul mul(K);
      for (int i = 0; i < w; ++i) mul.mul(u, v, eps.x % M, eps.y % M, M);
      const mpz_class& hm = h.generator->modulus;
      INFO("d = " << d << " m = " << m);
      CHECK(hm == M);
      CHECK((u - h.generator->u) % hm == 0);
      CHECK((v - h.generator->v) % hm == 0);
    }
  }
}

TEST_CASE("regulator_bsgs") {
  CHECK(close(regulator_bsgs(QField::make(2)), ln_unit(QField::make(2), 1, 1), 90));
  CHECK(regulator_bsgs(QField::make(2)).to_string(6) == "0.881373");
  const QField k46 = QField::make(46);
  CHECK(close(regulator_bsgs(k46), ln_unit(k46, 24335, 3588), 90));
  CHECK_THROWS_AS(regulator_bsgs(k46, 97), PreconditionError);
  CHECK(regulator_bsgs(k46, 10).raw % (static_cast<i128>(1) << 86) == 0);

  std::mt19937_64 rng(17);
  for (int t = 0; t < 120; ++t) {
    const u64 d = random_squarefree(rng, 1000, t < 60 ? 200000 : 20000000);
    const QField K = QField::make(d);
    const UnitData eps = fundamental_unit_exact(K);
    const Fixed exact = ln_unit(K, eps.x, eps.y);
    for (double c : {1.0, 0.1}) {
      BsgsOptions o;
      o.baby_factor = c;
      INFO("d = " << d << " c = " << c);
      CHECK(close(regulator_bsgs(K, 96, o), exact, 70));
    }
  }
}

TEST_CASE("regulator agrees with the small-step period for the largest example") {
  // sum of ln((P + sqrt D)/Q) over one period, long double
  const u64 d = 39028039587479ULL;
  const QField K = QField::make(d);
  const long double root = std::sqrt(static_cast<long double>(K.disc()));
  const i64 D = static_cast<i64>(K.disc());
  const i64 P0 = static_cast<i64>(K.principal_b());
  i64 P = P0, Q = 2;
  long double sum = 0, comp = 0;
  u64 len = 0;
  do {
    const i64 q = (P + static_cast<i64>(K.sqrt_disc())) / Q;
    P = q * Q - P;
    Q = static_cast<i64>((static_cast<i128>(D) - static_cast<i128>(P) * P) / Q);
    const long double term = std::log((P + root) / Q) - comp;
    const long double t = sum + term;
    comp = (t - sum) - term;
    sum = t;
    ++len;
  } while (P != P0 || Q != 2);
  const double R = regulator_bsgs(K).to_double();
  CHECK(std::fabs(R - static_cast<double>(sum)) < 1e-6);
  CHECK(R > 1e6);
}

TEST_CASE("unit_residue_fast equals unit_residue") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 300; ++t) {
    const u64 d = random_squarefree(rng, t < 150 ? 2 : 1'000'000, t < 150 ? 100000 : 1'000'000'000);
    const QField K = QField::make(d);
    for (u64 m : {d, u64{4}, 2 + rng() % 1000, (rng() >> 4) + 2}) {
      const UnitResidue a = unit_residue(K, m);
      BsgsOptions o;
      o.baby_factor = (t % 3 == 0) ? 0.2 : 1.0;
      const UnitResidue b = unit_residue_fast(K, m, o);
      INFO("d = " << d << " m = " << m);
      CHECK(a.same_unit(b));
      CHECK_FALSE(b.period_len.has_value());
    }
  }
  CHECK(unit_residue_fast(QField::make(46), 46).y == 0);
  const u64 big = 1004569189366ULL;
  CHECK(unit_residue_fast(QField::make(big), big).Y == 0);
}

TEST_CASE("unit_mod_big with a composite modulus") {
  const QField K = QField::make(4099215);
  const UnitData eps = fundamental_unit_exact(K);
  const mpz_class M = mpz_class(701 * 701) * 9 * 25 * 49 * 1024;
  const detail::BigUnit b = detail::unit_mod_big(K, M);
  CHECK(b.x == eps.x % M);
  CHECK(b.y == eps.y % M);
  CHECK(b.norm_sign == eps.norm_sign);
  CHECK(mod(eps.y, 701) == b.y.get_ui() % 701);
}
