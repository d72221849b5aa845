#include <algorithm>
#include <map>

#include "doctest.h"
#include "qunit/conjectures.hpp"

using namespace qunit;

namespace {

// x, y of eps and its norm, by searching a^2 - d b^2 = +-1 (or +-4 for the
// half shape) directly.
struct SmallUnit {
  u64 x, y;
  int norm;
};

SmallUnit brute_unit(u64 d) {
  const bool half = d % 4 == 1;
  for (u64 b = 1;; ++b) {
    for (int n : {-1, 1}) {
      const i64 t = static_cast<i64>(d * b * b) + (half ? 4 : 1) * n;
      if (t <= 0 || !is_square(static_cast<u64>(t))) continue;
      const u64 a = isqrt(static_cast<u64>(t));
      if (!half) return {a, b, n};
      // (a + b sqrt d)/2 = (a - b)/2 + b omega
      return {(a - b) / 2, b, n};
    }
  }
}

std::vector<std::pair<u64, u64>> pq_pairs(u64 limit) {
  std::vector<std::pair<u64, u64>> out;
  for (u64 p = 5; p * 3 <= limit; p += 4) {
    if (!is_prime(p)) continue;
    for (u64 q = 3; p * q <= limit; q += 4)
      if (is_prime(q)) out.push_back({p, q});
  }
  return out;
}

// Conductors 2..f_max together with every ramified prime: a ramified
// prime beyond f_max is the only witness for many d above f_max.
bool direct_rc_scan(const QField& K, u64 h, const UnitData& e, u64 f_max) {
  std::vector<u64> fs;
  for (u64 f = 2; f <= f_max; ++f) fs.push_back(f);
  for (const auto& pp : factor(K.disc()))
    if (pp.prime > f_max) fs.push_back(pp.prime);
  for (u64 f : fs) {
    if (pic_order(K, f, h, unit_index_mod_f(K, e.x, e.y, f)) == h) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("small units by brute force") {
  CHECK(brute_unit(7).x == 8);
  CHECK(brute_unit(7).y == 3);
  CHECK(brute_unit(15).x == 4);
  CHECK(brute_unit(51).x == 50);
  CHECK(brute_unit(51).y == 7);
  CHECK(brute_unit(65).y == 2);  // 8 + sqrt 65 = 7 + 2 omega
  CHECK(brute_unit(65).norm == -1);
}

TEST_CASE("RC verdicts") {
  CHECK(check_rc(QField::make(46)).status == Status::Holds);
  const Verdict v1817 = check_rc(QField::make(1817));
  CHECK(v1817.status == Status::Fails);
  CHECK(v1817.reason.find("d = 1 mod 8") != std::string::npos);
  REQUIRE(v1817.find("beta"));
  CHECK(*v1817.find("beta") == "1");
  const Verdict v5374 = check_rc(QField::make(5374184665));
  CHECK(v5374.status == Status::Fails);
  CHECK(v5374.reason.find("N(eps) = -1") != std::string::npos);
}

TEST_CASE("RC biconditional against a direct conductor scan") {
  int holds = 0;
  for (u64 d = 2; d <= 10000; ++d) {
    if (!is_squarefree(d)) continue;
    const QField K = QField::make(d);
    const UnitData e = fundamental_unit_exact(K);
    const u64 h = class_number(K).value;
    const bool rc = check_rc(K).status == Status::Holds;
    holds += rc;
    CHECK_MESSAGE(rc == direct_rc_scan(K, h, e, 1000), d);
  }
  CHECK(holds >= 1);
}

TEST_CASE("SC verdicts") {
  const Verdict v46 = check_sc(QField::make(46));
  CHECK(v46.status == Status::Fails);
  CHECK(v46.reason == "d = 6 mod 8");

  const Verdict v = check_sc(QField::make(4099215));
  REQUIRE(v.status == Status::Fails);
  REQUIRE(v.power.size() == 1);
  CHECK(v.power[0].p == 701);
  CHECK(v.power[0].u_mod_p == 0);
  CHECK(v.power[0].u_mod_p2 % 701 == 0);
  CHECK(v.power[0].u_mod_p2 != 0);
  CHECK(v.prime_bound == 10000u);

  ConjectureOptions large;
  large.engine = Engine::Large;
  const Verdict w = check_sc(QField::make(39028039587479), large);
  REQUIRE(w.power.size() == 1);
  CHECK(w.status == Status::Fails);
  CHECK(w.power[0].p == 5);
  CHECK(w.power[0].u_mod_p2 % 5 == 0);
  CHECK(w.power[0].u_mod_p2 % 25 != 0);

  // x mod 701^2 directly from the small-step engine
  const UnitResidue r = unit_residue(QField::make(4099215), 701 * 701);
  CHECK(r.x % 701 == 0);
  CHECK(r.x != 0);
}

TEST_CASE("SC shape preconditions") {
  for (u64 d = 2; d <= 3000; ++d) {
    if (!is_squarefree(d)) continue;
    const QField K = QField::make(d);
    const Verdict v = check_sc(K);
    CHECK(v.status != Status::Holds);
    CHECK(v.status != Status::RefutedUpToBound);
    if (v.status == Status::Unknown || !v.power.empty()) {
      const SmallUnit u = brute_unit(d);
      CHECK(d % 8 == 7);
      CHECK(u.y % 2 == 1);
      CHECK(u.y % d == 0);
    }
  }
}

TEST_CASE("C verdicts are refutations only") {
  CHECK(check_c(QField::make(46)).status == Status::Fails);
  CHECK_THROWS_AS(check_c(QField::make(46), {.k_bound = 4}), PreconditionError);

  ConjectureOptions one;
  one.k_bound = 1;
  one.prime_bound = 1000;
  const Verdict v = check_c(QField::make(4099215), one);
  CHECK(v.status == Status::RefutedUpToBound);
  REQUIRE(v.power.size() == 1);
  CHECK(v.power[0].k == 1);
  CHECK(v.power[0].p == 701);
  CHECK(v.k_bound == 1u);

  for (u64 kb : {1, 5, 9}) {
    ConjectureOptions o;
    o.k_bound = kb;
    o.prime_bound = 200;
    const Verdict v7 = check_c(QField::make(7), o);
    CHECK((v7.status == Status::RefutedUpToBound || v7.status == Status::Unknown));
    CHECK(v7.k_bound == kb);
    CHECK(v7.prime_bound == 200u);
  }
  for (u64 d = 2; d <= 2000; ++d) {
    if (!is_squarefree(d)) continue;
    const Verdict c = check_c(QField::make(d), {.prime_bound = 100, .k_bound = 3});
    CHECK(c.status != Status::Holds);
    if (c.status != Status::Fails) {
      CHECK(c.k_bound.has_value());
      CHECK(c.prime_bound.has_value());
    }
  }
}

TEST_CASE("C witnesses recomputed by exact powers") {
  // eps = 8 + 3 sqrt 7; k = 7 is the only odd k <= 9 with 7 | v
  ConjectureOptions o;
  o.k_bound = 9;
  o.prime_bound = 1000;
  const Verdict v = check_c(QField::make(7), o);
  mpz_class u = 1, w = 0;
  for (u64 k = 1; k <= 9; ++k) {
    const mpz_class nu = 8 * u + 21 * w;
    w = 3 * u + 8 * w;
    u = nu;
    if (k % 2 == 0) continue;
    const bool dv = w % 7 == 0;
    CHECK(dv == (k == 7));
    for (const auto& pw : v.power) {
      if (pw.k != k) continue;
      CHECK(u % pw.p == 0);
      CHECK(u % (pw.p * pw.p) != 0);
    }
  }
}

TEST_CASE("counterexample certificates") {
  const Verdict v = certify_counterexample(QField::make(39028039587479), Conjecture::Mordell);
  CHECK(v.status == Status::Holds);
  REQUIRE(v.find("beta"));
  CHECK(*v.find("beta") == "7");
  REQUIRE(v.find("period_len"));
  CHECK(*v.find("period_len") == "3650856");
  CHECK(*v.find("y_mod_d") == "0");
  CHECK(*v.find("large_step_y_mod_d") == "0");
  REQUIRE(v.find("primality"));
  CHECK(v.find("primality")->find("deterministic") != std::string::npos);

  const Verdict v7 = certify_counterexample(QField::make(7), Conjecture::Mordell);
  CHECK(v7.status == Status::Fails);
  CHECK(*v7.find("y_mod_d") == "3");
  CHECK(certify_counterexample(QField::make(46), Conjecture::Mordell).reason == "d is not prime");
  CHECK(certify_counterexample(QField::make(13), Conjecture::Mordell).status == Status::Fails);
  CHECK(certify_counterexample(QField::make(39028039587479), Conjecture::AAC).status == Status::Fails);
}

TEST_CASE("no prime below 10^6 certifies") {
  int checked = 0;
  ConjectureOptions o;
  o.cross_check = false;
  for (std::uint32_t p : primes_up_to(1'000'000)) {
    if (p < 3) continue;
    const Verdict v =
        certify_counterexample(QField::make(p), p % 4 == 3 ? Conjecture::Mordell : Conjecture::AAC, o);
    CHECK_MESSAGE(v.status == Status::Fails, p);
    ++checked;
  }
  CHECK(checked == 78497);
}

TEST_CASE("bounded norm equation search") {
  const auto r15 = norm_equation_search(5, 3, 10);
  REQUIRE(r15.pq2);
  CHECK(r15.pq2->first == 1);
  CHECK(r15.pq2->second == 1);
  const auto r39 = norm_equation_search(13, 3, 10);
  REQUIRE(r39.pq1);
  CHECK(13 * r39.pq1->first * r39.pq1->first - 3 * r39.pq1->second * r39.pq1->second == 1);
  CHECK(norm_equation_search(5, 7, 10).pq2.has_value());
  CHECK_THROWS_AS(norm_equation_search(3, 5, 10), PreconditionError);
}

TEST_CASE("norm equations follow the parity of y") {
  int bounded_misses = 0;
  for (auto [p, q] : pq_pairs(10000)) {
    const QField K = QField::make(p * q);
    const bool y_even = *unit_residue(K, 2 * p * q).alpha == 0;
    const NormEquationReport exact = norm_equation_decide(p, q);
    const NormEquationReport bounded = norm_equation_search(p, q, 1000);
    if (y_even) {
      CHECK_MESSAGE(exact.pq1.has_value(), (p * 100000 + q));
      if (!bounded.pq1) ++bounded_misses;
    } else {
      CHECK_MESSAGE((exact.pq2 || exact.d2), (p * 100000 + q));
      if (!bounded.pq2 && !bounded.d2) ++bounded_misses;
    }
    auto verify = [](const auto& w, i64 c1, i64 c2, i64 n) {
      if (!w) return;
      const mpz_class v = c1 * w->first * w->first - c2 * w->second * w->second;
      CHECK((v == n || v == -n));
    };
    verify(exact.pq1, p, q, 1);
    verify(exact.pq2, p, q, 2);
    verify(exact.d2, 1, p * q, 2);
    verify(bounded.pq1, p, q, 1);
    verify(bounded.pq2, p, q, 2);
    verify(bounded.d2, 1, p * q, 2);
    // the bounded search never finds what the decision denies
    if (bounded.pq1) CHECK(exact.pq1);
    if (bounded.pq2) CHECK(exact.pq2);
    if (bounded.d2) CHECK(exact.d2);
  }
  MESSAGE("pairs unresolved within bound 1000: " << bounded_misses);
}

TEST_CASE("type 4 form 1 conditions") {
  const Type4Report r15 = type4_eval(QField::make(15), 100);
  CHECK(r15.p == 5);
  CHECK(r15.q == 3);
  CHECK_FALSE(r15.by_parity);
  CHECK_FALSE(r15.by_symbol);
  CHECK(r15.parity_link_applies);
  CHECK(r15.parity_link_holds);
  CHECK(r15.only_two == false);
  CHECK_FALSE(r15.fault);
  const Type4Report r51 = type4_eval(QField::make(51), 100);
  CHECK(r51.p == 17);
  CHECK_FALSE(r51.parity_link_applies);
  CHECK_FALSE(r51.by_parity);
  CHECK_FALSE(r51.by_symbol);
  CHECK_FALSE(r51.fault);
  CHECK_THROWS_AS(type4_eval(QField::make(46)), PreconditionError);
  CHECK_THROWS_AS(type4_eval(QField::make(65)), PreconditionError);

  int evaluated = 0;
  for (auto [p, q] : pq_pairs(10000)) {
    const QField K = QField::make(p * q);
    if (class_number(K).value != 2) continue;
    const u64 d = p * q;
    // conductors must reach the largest ramified prime
    const Type4Report r = type4_eval(K, std::max<u64>(1000, d));
    CHECK_MESSAGE(r.by_parity == r.by_symbol, d);
    CHECK_MESSAGE(r.parity_link_holds, d);
    CHECK_MESSAGE(r.only_two == r.by_parity, d);
    CHECK_FALSE(r.fault);
    ++evaluated;
  }
  CHECK(evaluated > 50);
}

TEST_CASE("emptiness of unusual conductors against d | y") {
  const EmptinessReport r65 = emptiness_eval(QField::make(65), 100);
  CHECK(r65.shape == 'a');
  CHECK_FALSE(r65.d_divides_y);
  CHECK_FALSE(r65.predicted_empty);
  CHECK(r65.observed_empty == false);
  CHECK(r65.consistent);
  CHECK_THROWS_AS(emptiness_eval(QField::make(430)), PreconditionError);

  std::map<char, int> shapes;
  u64 first_c = 0;
  for (u64 d = 2; d <= 10000; ++d) {
    if (!is_squarefree(d)) continue;
    const QField K = QField::make(d);
    if (class_number(K).value != 2) continue;
    const auto shape = emptiness_shape(K);
    if (!shape) continue;
    const EmptinessReport r = emptiness_eval(K, std::max<u64>(1000, d));
    CHECK_MESSAGE(r.consistent, d << " shape " << r.shape);
    ++shapes[*shape];
    if (*shape == 'c' && first_c == 0) first_c = d;
  }
  CHECK(shapes['a'] > 0);
  CHECK(shapes['b'] > 0);
  CHECK(shapes['c'] > 0);
  CHECK(shapes['d'] > 0);
  MESSAGE("smallest shape (c) d with h = 2: " << first_c);
}

TEST_CASE("cancellation") {
  CancellationToken t;
  t.cancel();
  ConjectureOptions o;
  o.cancel = &t;
  CHECK_THROWS_AS(check_sc(QField::make(4099215), o), CancelledError);
}
