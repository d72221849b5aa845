#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <gmpxx.h>

#include "qunit/arith.hpp"
#include "qunit/budget.hpp"
#include "qunit/errors.hpp"

namespace qunit {

enum class OmegaShape {
  SqrtD,  // d = 2, 3 mod 4: omega = sqrt(d), d_K = 4d
  Half,   // d = 1 mod 4:    omega = (1 + sqrt(d)) / 2, d_K = d
};

// Real quadratic field Q(sqrt(d)), d squarefree, 2 <= d < 2^60.
//
// Everything downstream works with omega = (delta + sqrt(D)) / 2 where
// D = d_K and delta = D mod 2, so omega^2 = delta * omega + n with
// n = (D - delta) / 4.
class QField {
 public:
  static constexpr u64 kMaxD = u64{1} << 60;

  // Throws PreconditionError if d < 2, d >= 2^60 or d is not squarefree.
  static QField make(u64 d, const WorkBudget& budget = default_budget());

  u64 d() const { return d_; }
  OmegaShape shape() const { return shape_; }
  u64 disc() const { return disc_; }
  unsigned beta() const { return static_cast<unsigned>(d_ % 8); }
  unsigned delta() const { return shape_ == OmegaShape::Half ? 1 : 0; }
  u64 omega_norm_term() const { return (disc_ - delta()) / 4; }
  u64 sqrt_disc() const { return sqrt_disc_; }

  // Reduced principal ideal [1, (P0 + sqrt(D)) / 2]; P0 is the largest
  // integer below sqrt(D) with P0 = D mod 2.
  u64 principal_b() const { return principal_b_; }
  // (P0 + sqrt(D)) / 2 = omega + k0.
  u64 k0() const { return (principal_b_ - delta()) / 2; }

 private:
  QField() = default;
  u64 d_ = 0;
  OmegaShape shape_ = OmegaShape::SqrtD;
  u64 disc_ = 0;
  u64 sqrt_disc_ = 0;
  u64 principal_b_ = 0;
};

// Fundamental unit eps = x + y*omega of O_K together with the unit
// X + Y*sqrt(d) of Z[sqrt(d)]; X + Y*sqrt(d) = eps^index.
struct UnitData {
  mpz_class x, y;
  mpz_class X, Y;
  int norm_sign = 0;
  int alpha = 0;      // y mod 2
  int index = 1;      // 1 or 3
  mpz_class beta_tilde;
  u64 period_len = 0;
};

// Residues of the fundamental unit modulo m.
struct UnitResidue {
  u64 modulus = 0;
  u64 x = 0, y = 0;
  u64 X = 0, Y = 0;
  int norm_sign = 0;
  int index = 1;
  // y mod 2, known when the internal modulus was even.
  std::optional<int> alpha;
  // Continued-fraction period length; only the small-step engine knows it.
  std::optional<u64> period_len;

  // Equality of everything both engines can know (all residues, norm
  // sign, index).
  bool same_unit(const UnitResidue& other) const {
    return modulus == other.modulus && x == other.x && y == other.y && X == other.X &&
           Y == other.Y && norm_sign == other.norm_sign && index == other.index;
  }
};

struct CfPeriod {
  u64 length = 0;
  int norm_sign = 0;
};

namespace detail {

// One step of the continued fraction of (P + sqrt(D)) / Q on a reduced
// state. Q_prev is the denominator preceding Q.
struct CfState {
  i64 P, Q, Q_prev;
};

inline u64 next_quotient(const CfState& st, u64 s) {
  return (static_cast<u64>(st.P) + s) / static_cast<u64>(st.Q);
}

inline void advance(CfState& st, u64 q) {
  const i64 P_next = static_cast<i64>(q) * st.Q - st.P;
  const i64 Q_next = st.Q_prev + static_cast<i64>(q) * (st.P - P_next);
  st.Q_prev = st.Q;
  st.P = P_next;
  st.Q = Q_next;
}

inline CfState principal_state(const QField& K) {
  const i64 P0 = static_cast<i64>(K.principal_b());
  const i64 D = static_cast<i64>(K.disc());
  return {P0, 2, (D - P0 * P0) / 2};
}

// Shared tail of both engines: given eps = x + y*omega modulo M (M = m,
// or 2m for the Half shape) derive the UnitResidue modulo m.
UnitResidue finish_residue(const QField& K, u64 m, const mpz_class& M, const mpz_class& x,
                           const mpz_class& y, int norm_sign);

}  // namespace detail

// Walks one full period of the continued fraction of the reduced number
// omega + k0 = [q_0; q_1, ..., q_{l-1}] (purely periodic), calling
// on_quotient(q_i) for each partial quotient. omega itself expands as
// [q_0 - k0; q_1, ..., q_{l-1}, q_0 (repeating)].
template <class OnQuotient>
CfPeriod cf_expand(const QField& K, OnQuotient&& on_quotient,
                   u64 max_steps = default_budget().period_steps) {
  const u64 s = K.sqrt_disc();
  const detail::CfState start = detail::principal_state(K);
  detail::CfState st = start;
  u64 length = 0;
  do {
    if (length == max_steps) {
      throw ResourceLimitError("cf_expand: period step budget exhausted");
    }
    const u64 q = detail::next_quotient(st, s);
    on_quotient(q);
    detail::advance(st, q);
    ++length;
  } while (st.P != start.P || st.Q != start.Q);
  return {length, (length & 1) ? -1 : 1};
}

// Exact fundamental unit through the convergent matrix product.
UnitData fundamental_unit_exact(const QField& K, const WorkBudget& budget = default_budget());

// Small-step algorithm: one period with convergents carried modulo m
// (modulo 2m for the Half shape). Requires 2 <= m < 2^62.
UnitResidue unit_residue(const QField& K, u64 m, const WorkBudget& budget = default_budget());

// Same walk with an arbitrary-size modulus; returns (x, y) of eps mod M
// and the norm sign.
struct OmegaResidue {
  mpz_class modulus, x, y;
  int norm_sign = 0;
};
OmegaResidue unit_omega_mod(const QField& K, const mpz_class& M,
                            const WorkBudget& budget = default_budget());

// alpha = y mod 2, through unit_residue with m = 4.
int y_parity(const QField& K, const WorkBudget& budget = default_budget());

// Multiplication in Z[omega] modulo M on (u, v) = u + v*omega.
struct OmegaMul {
  mpz_class n;  // omega^2 = delta*omega + n
  unsigned delta;
  explicit OmegaMul(const QField& K) : n(static_cast<unsigned long>(K.omega_norm_term())), delta(K.delta()) {}
  void mul(mpz_class& u, mpz_class& v, const mpz_class& a, const mpz_class& b,
           const mpz_class& M) const;
  void pow(mpz_class& u, mpz_class& v, const mpz_class& a, const mpz_class& b, mpz_class e,
           const mpz_class& M) const;
};

// Product of [[q,1],[1,0]] over the quotients: [[A_{l-1}, A_{l-2}],
// [B_{l-1}, B_{l-2}]].
struct Mat2 {
  mpz_class a, b, c, e;
};
Mat2 convergent_matrix(const std::vector<u64>& quotients, std::size_t lo, std::size_t hi);
Mat2 convergent_matrix_mod(const std::vector<u64>& quotients, std::size_t count,
                           const mpz_class& M);

}  // namespace qunit
