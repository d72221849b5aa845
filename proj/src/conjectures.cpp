#include "qunit/conjectures.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace qunit {

std::string to_string(Status s) {
  switch (s) {
    case Status::Holds: return "HOLDS";
    case Status::Fails: return "FAILS";
    case Status::RefutedUpToBound: return "REFUTED_UP_TO_BOUND";
    case Status::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

const std::string* Verdict::find(const std::string& key) const {
  for (const auto& [k, v] : evidence)
    if (k == key) return &v;
  return nullptr;
}

namespace {

void poll(const ConjectureOptions& opt) {
  if (opt.cancel && opt.cancel->cancelled()) throw CancelledError("cancelled");
}

// Residues modulo 2d, so alpha is always known.
UnitResidue unit_mod_2d(const QField& K, const ConjectureOptions& opt) {
  const UnitResidue r = unit_residue_with(opt.engine, K, 2 * K.d(), opt.budget);
  if (!r.alpha) throw EngineError("parity of y unavailable");
  return r;
}

OmegaResidue omega_mod(const QField& K, const mpz_class& M, const ConjectureOptions& opt) {
  if (opt.engine == Engine::Large) {
    if (K.disc() >= Infrastructure::kMaxDisc) throw PreconditionError("large-step engine needs d_K < 2^52");
    return unit_omega_mod_auto(K, M, opt.budget);
  }
  return unit_omega_mod(K, M, opt.budget);
}

std::string str(u64 v) { return std::to_string(v); }

// Batches of primes up to `bound`, with products of squares growing from
// about 256 bits.
std::vector<std::vector<u64>> prime_batches(u64 bound) {
  std::vector<std::vector<u64>> out;
  std::vector<u64> cur;
  double bits = 0, cap = 256;
  for (std::uint32_t p : primes_up_to(static_cast<std::uint32_t>(bound))) {
    cur.push_back(p);
    bits += 2 * std::log2(static_cast<double>(p));
    if (bits >= cap) {
      out.push_back(std::move(cur));
      cur.clear();
      bits = 0;
      cap = std::min(cap * 2, 8192.0);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

u64 mod_u64(const mpz_class& v, u64 m) {
  mpz_class r;
  mpz_fdiv_r_ui(r.get_mpz_t(), v.get_mpz_t(), m);
  return r.get_ui();
}

// u of eps^k modulo p^2 through the small-step engine alone.
u64 u_mod_p2_small(const QField& K, u64 k, u64 p, const WorkBudget& budget) {
  const u64 m = p * p;
  const UnitResidue r = unit_residue(K, m, budget);
  const OmegaMul mul(K);
  mpz_class u, v;
  const mpz_class M(static_cast<unsigned long>(m));
  mul.pow(u, v, mpz_class(static_cast<unsigned long>(r.x)), mpz_class(static_cast<unsigned long>(r.y)),
          mpz_class(static_cast<unsigned long>(k)), M);
  return mod_u64(u, m);
}

// For each pending odd k, look for p <= bound with p | u_k and p^2 not
// dividing u_k. Found witnesses are confirmed by the small-step engine.
void refute_powerful(const QField& K, std::vector<u64> pending, const ConjectureOptions& opt,
                     std::vector<PowerWitness>& found) {
  const OmegaMul mul(K);
  for (const auto& batch : prime_batches(opt.prime_bound)) {
    if (pending.empty()) break;
    poll(opt);
    mpz_class M = 1;
    for (u64 p : batch) M *= static_cast<unsigned long>(p * p);
    const OmegaResidue e = omega_mod(K, M, opt);
    std::vector<u64> still;
    for (u64 k : pending) {
      mpz_class u, v;
      mul.pow(u, v, e.x, e.y, mpz_class(static_cast<unsigned long>(k)), M);
      bool hit = false;
      for (u64 p : batch) {
        const u64 u2 = mod_u64(u, p * p);
        if (u2 % p != 0 || u2 == 0) continue;
        if (u_mod_p2_small(K, k, p, opt.budget) != u2) {
          throw EngineMismatchError("engines disagree on u mod " + str(p) + "^2");
        }
        found.push_back({k, p, u2 % p, u2});
        hit = true;
        break;
      }
      if (!hit) still.push_back(k);
    }
    pending = std::move(still);
  }
}

}  // namespace

Verdict check_rc(const QField& K, const ConjectureOptions& opt) {
  Verdict v;
  const UnitResidue r = unit_mod_2d(K, opt);
  const u64 d = K.d();
  const u64 beta = d % 8;
  const bool dy = r.y % d == 0;
  v.evidence = {{"norm", std::to_string(r.norm_sign)},
                {"beta", str(beta)},
                {"alpha", std::to_string(*r.alpha)},
                {"d_divides_y", dy ? "true" : "false"}};
  std::vector<std::string> failed;
  if (r.norm_sign != 1) failed.push_back("N(eps) = -1");
  if (beta == 1) failed.push_back("d = 1 mod 8");
  if (*r.alpha != 0) failed.push_back("y odd");
  if (!dy) failed.push_back("d does not divide y");
  if (failed.empty()) {
    v.status = Status::Holds;
    v.reason = "N(eps) = 1, d != 1 mod 8, y even and d | y";
  } else {
    v.status = Status::Fails;
    for (std::size_t i = 0; i < failed.size(); ++i) v.reason += (i ? "; " : "") + failed[i];
  }
  return v;
}

Verdict check_sc(const QField& K, const ConjectureOptions& opt) {
  Verdict v;
  const u64 d = K.d();
  if (d % 8 != 7) {
    v.status = Status::Fails;
    v.reason = "d = " + str(d % 8) + " mod 8";
    return v;
  }
  const UnitResidue r = unit_mod_2d(K, opt);
  if (*r.alpha == 0) {
    v.status = Status::Fails;
    v.reason = "y even";
    return v;
  }
  if (r.y % d != 0) {
    v.status = Status::Fails;
    v.reason = "d does not divide y";
    return v;
  }
  v.prime_bound = opt.prime_bound;
  refute_powerful(K, {1}, opt, v.power);
  if (!v.power.empty()) {
    const PowerWitness& w = v.power.front();
    v.status = Status::Fails;
    v.reason = "x not powerful: " + str(w.p) + " | x, " + str(w.p) + "^2 does not divide x";
  } else {
    v.status = Status::Unknown;
    v.reason = "no prime <= " + str(opt.prime_bound) + " shows x is not powerful";
  }
  return v;
}

Verdict check_c(const QField& K, const ConjectureOptions& opt) {
  if (opt.k_bound % 2 == 0) throw PreconditionError("k_bound must be odd");
  Verdict v;
  const u64 d = K.d();
  if (d % 8 != 7) {
    v.status = Status::Fails;
    v.reason = "d = " + str(d % 8) + " mod 8";
    return v;
  }
  const UnitResidue r = unit_mod_2d(K, opt);
  if (*r.alpha == 0) {
    v.status = Status::Fails;
    v.reason = "y even, so no odd k gives v odd";
    return v;
  }
  v.prime_bound = opt.prime_bound;
  v.k_bound = opt.k_bound;

  // d | v_k first; v_k = y (mod 2) is odd for every odd k.
  const OmegaMul mul(K);
  const mpz_class Md(static_cast<unsigned long>(d));
  std::vector<u64> pending;
  for (u64 k = 1; k <= opt.k_bound; k += 2) {
    mpz_class u, w;
    mul.pow(u, w, mpz_class(static_cast<unsigned long>(r.x % d)),
            mpz_class(static_cast<unsigned long>(r.y % d)), mpz_class(static_cast<unsigned long>(k)), Md);
    if (w % Md != 0) {
      v.evidence.push_back({"k=" + str(k), "d does not divide v"});
    } else {
      pending.push_back(k);
    }
  }
  refute_powerful(K, pending, opt, v.power);
  for (const auto& w : v.power) {
    v.evidence.push_back({"k=" + str(w.k), str(w.p) + " | u, " + str(w.p) + "^2 does not divide u"});
  }
  const std::size_t refuted = (opt.k_bound + 1) / 2 - pending.size() + v.power.size();
  if (refuted == (opt.k_bound + 1) / 2) {
    v.status = Status::RefutedUpToBound;
    v.reason = "every odd k <= " + str(opt.k_bound) + " refuted";
  } else {
    v.status = Status::Unknown;
    v.reason = str((opt.k_bound + 1) / 2 - refuted) + " odd k <= " + str(opt.k_bound) +
               " not refuted with primes <= " + str(opt.prime_bound);
  }
  return v;
}

Verdict certify_counterexample(const QField& K, Conjecture which, const ConjectureOptions& opt) {
  Verdict v;
  const u64 d = K.d();
  const u64 residue = which == Conjecture::AAC ? 1 : 3;
  const bool prime = is_prime(d);
  v.evidence.push_back({"primality", prime ? primality_method(mpz_class(std::to_string(d))) : "composite"});
  v.evidence.push_back({"beta", str(d % 8)});
  if (!prime) {
    v.status = Status::Fails;
    v.reason = "d is not prime";
    return v;
  }
  if (d % 4 != residue) {
    v.status = Status::Fails;
    v.reason = "d != " + str(residue) + " mod 4";
    return v;
  }
  poll(opt);
  const UnitResidue r = unit_residue(K, d, opt.budget);
  v.evidence.push_back({"period_len", str(*r.period_len)});
  v.evidence.push_back({"y_mod_d", str(r.y)});
  if (opt.cross_check && K.disc() < Infrastructure::kMaxDisc) {
    poll(opt);
    const UnitResidue f = unit_residue_fast(K, d, {}, opt.budget);
    if (!f.same_unit(r)) throw EngineMismatchError("engines disagree on eps mod d");
    v.evidence.push_back({"large_step_y_mod_d", str(f.y)});
  }
  if (r.y != 0) {
    v.status = Status::Fails;
    v.reason = "d does not divide y";
    return v;
  }
  v.status = Status::Holds;
  v.reason = std::string("d prime, d = ") + str(residue) + " mod 4 and d | y";
  return v;
}

namespace {

void check_norm_equation_pre(u64 p, u64 q) {
  if (!is_prime(p) || !is_prime(q) || p % 4 != 1 || q % 4 != 3) {
    throw PreconditionError("need primes p = 1 mod 4 and q = 3 mod 4");
  }
}

}  // namespace

NormEquationReport norm_equation_search(u64 p, u64 q, u64 bound) {
  check_norm_equation_pre(p, q);
  NormEquationReport rep;
  const u64 d = p * q;
  auto set = [](auto& slot, u64 a, u64 b) {
    if (!slot) slot = std::make_pair(mpz_class(static_cast<unsigned long>(a)), mpz_class(static_cast<unsigned long>(b)));
  };
  // lhs(a) -/+ t = coef * b^2
  auto solve = [&](u64 a, u64 lhs, u64 coef, u64 t, auto& slot) {
    for (int sign : {-1, 1}) {
      if (sign < 0 && lhs < t) continue;
      const u64 rhs = sign < 0 ? lhs - t : lhs + t;
      if (rhs % coef) continue;
      const u64 b2 = rhs / coef;
      if (is_square(b2) && isqrt(b2) <= bound) set(slot, a, isqrt(b2));
    }
  };
  for (u64 a = 0; a <= bound; ++a) {
    solve(a, p * a * a, q, 1, rep.pq1);
    solve(a, p * a * a, q, 2, rep.pq2);
    solve(a, a * a, d, 2, rep.d2);
  }
  return rep;
}

NormEquationReport norm_equation_decide(u64 p, u64 q, const WorkBudget& budget) {
  check_norm_equation_pre(p, q);
  NormEquationReport rep;
  auto find = [&](const BinaryForm& F, i64 n) -> std::optional<std::pair<mpz_class, mpz_class>> {
    for (i64 s : {n, -n})
      if (auto r = form_representation(F, s, budget)) return std::make_pair(abs(r->x), abs(r->y));
    return std::nullopt;
  };
  const BinaryForm Fpq{static_cast<i128>(p), 0, -static_cast<i128>(q)};
  const BinaryForm Fd{1, 0, -static_cast<i128>(p * q)};
  rep.pq1 = find(Fpq, 1);
  rep.pq2 = find(Fpq, 2);
  rep.d2 = find(Fd, 2);
  return rep;
}

namespace {

std::pair<u64, u64> two_prime_split(const QField& K, const WorkBudget& budget) {
  const Factorization f = factor(K.d(), budget);
  if (f.distinct_primes() != 2) throw PreconditionError("d must be a product of two primes");
  u64 p = f.parts()[0].prime, q = f.parts()[1].prime;
  if (p % 4 == 3) std::swap(p, q);
  if (p % 4 != 1 || q % 4 != 3) throw PreconditionError("need p = 1 mod 4 and q = 3 mod 4");
  return {p, q};
}

void require_h2(const QField& K, const WorkBudget& budget) {
  if (class_number(K, budget).value != 2) throw PreconditionError("h(d) must be 2");
}

}  // namespace

Type4Report type4_eval(const QField& K, std::optional<u64> f_bound, const WorkBudget& budget) {
  Type4Report rep;
  std::tie(rep.p, rep.q) = two_prime_split(K, budget);
  require_h2(K, budget);
  ConjectureOptions opt;
  opt.budget = budget;
  const UnitResidue r = unit_mod_2d(K, opt);
  const bool dy = r.y % K.d() == 0;
  const bool p5 = rep.p % 8 == 5;
  const bool y_odd = *r.alpha == 1;
  const bool leg = kronecker(static_cast<i64>(rep.p), static_cast<i64>(rep.q)) == -1;
  rep.by_parity = p5 && y_odd && dy;
  rep.by_symbol = p5 && leg && dy;
  rep.parity_link_applies = p5;
  rep.parity_link_holds = !p5 || (y_odd == leg);
  if (f_bound) {
    const auto D = unusual_conductors(K, *f_bound, budget);
    rep.only_two = D.size() == 1 && D[0].f == 2;
  }
  rep.fault = rep.by_parity != rep.by_symbol || !rep.parity_link_holds || (rep.only_two && *rep.only_two != rep.by_parity);
  return rep;
}

std::optional<char> emptiness_shape(const QField& K, const WorkBudget& budget) {
  const u64 d = K.d();
  const Factorization f = factor(d, budget);
  std::vector<u64> odd;
  bool two = false;
  for (const auto& pp : f) {
    if (pp.prime == 2) two = true;
    else odd.push_back(pp.prime);
  }
  if (odd.size() != 2) return std::nullopt;
  ConjectureOptions opt;
  opt.budget = budget;
  auto unit = [&] { return unit_mod_2d(K, opt); };
  if (!two) {
    const u64 a = odd[0], b = odd[1];
    if (a % 4 == 1 && b % 4 == 1) {
      if (unit().norm_sign == -1) return 'a';
      return std::nullopt;
    }
    const u64 p = a % 4 == 1 ? a : b, q = a % 4 == 1 ? b : a;
    if (p % 8 == 1 && q % 4 == 3 && *unit().alpha == 1) return 'b';
    return std::nullopt;
  }
  const u64 a = odd[0], b = odd[1];
  if (a % 8 == 3 && b % 8 == 3) return 'c';
  for (auto [p, q] : {std::pair{a, b}, std::pair{b, a}}) {
    if (p % 8 == 1 && q % 4 == 3 && kronecker(static_cast<i64>(p), static_cast<i64>(q)) == -1) return 'd';
  }
  return std::nullopt;
}

EmptinessReport emptiness_eval(const QField& K, std::optional<u64> f_bound, const WorkBudget& budget) {
  require_h2(K, budget);
  const auto shape = emptiness_shape(K, budget);
  if (!shape) throw PreconditionError("d matches none of the four shapes");
  EmptinessReport rep;
  rep.shape = *shape;
  ConjectureOptions opt;
  opt.budget = budget;
  rep.d_divides_y = unit_mod_2d(K, opt).y % K.d() == 0;
  rep.predicted_empty = rep.d_divides_y;
  if (f_bound) {
    rep.observed_empty = unusual_conductors(K, *f_bound, budget).empty();
    rep.consistent = *rep.observed_empty == rep.predicted_empty;
  }
  return rep;
}

}  // namespace qunit
