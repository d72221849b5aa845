#include "qunit/pell.hpp"

#include <utility>

namespace qunit {

QField QField::make(u64 d, const WorkBudget& budget) {
  if (d < 2) throw PreconditionError("d must be at least 2");
  if (d >= kMaxD) throw PreconditionError("d must be below 2^60");
  if (!is_squarefree(d, budget)) throw PreconditionError("d must be squarefree");
  QField K;
  K.d_ = d;
  if (d % 4 == 1) {
    K.shape_ = OmegaShape::Half;
    K.disc_ = d;
  } else {
    K.shape_ = OmegaShape::SqrtD;
    K.disc_ = 4 * d;
  }
  K.sqrt_disc_ = isqrt(K.disc_);
  u64 p0 = K.sqrt_disc_;
  if ((p0 & 1) != (K.disc_ & 1)) --p0;
  K.principal_b_ = p0;
  return K;
}

void OmegaMul::mul(mpz_class& u, mpz_class& v, const mpz_class& a, const mpz_class& b,
                   const mpz_class& M) const {
  // (u + v w)(a + b w) = ua + n vb + (ub + va + delta vb) w
  mpz_class vb = v * b;
  mpz_class nu = u * a + n * vb;
  mpz_class nv = u * b + v * a;
  if (delta) nv += vb;
  if (M != 0) {
    mpz_fdiv_r(nu.get_mpz_t(), nu.get_mpz_t(), M.get_mpz_t());
    mpz_fdiv_r(nv.get_mpz_t(), nv.get_mpz_t(), M.get_mpz_t());
  }
  u = std::move(nu);
  v = std::move(nv);
}

void OmegaMul::pow(mpz_class& u, mpz_class& v, const mpz_class& a, const mpz_class& b,
                   mpz_class e, const mpz_class& M) const {
  mpz_class bu = a, bv = b;
  u = 1;
  v = 0;
  if (M != 0) u %= M;
  while (e > 0) {
    if (mpz_odd_p(e.get_mpz_t())) mul(u, v, bu, bv, M);
    e >>= 1;
    if (e > 0) mul(bu, bv, bu, bv, M);
  }
}

namespace {

void absorb(Mat2& m, u64 q) {
  // m <- m * [[q, 1], [1, 0]]
  mpz_class t = m.a;
  m.a = m.a * q + m.b;
  m.b = std::move(t);
  t = m.c;
  m.c = m.c * q + m.e;
  m.e = std::move(t);
}

Mat2 multiply(const Mat2& l, const Mat2& r) {
  return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.e, l.c * r.a + l.e * r.c,
          l.c * r.b + l.e * r.e};
}

}  // namespace

Mat2 convergent_matrix(const std::vector<u64>& quotients, std::size_t lo, std::size_t hi) {
  if (hi - lo <= 32) {
    Mat2 m{1, 0, 0, 1};
    for (std::size_t i = lo; i < hi; ++i) absorb(m, quotients[i]);
    return m;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return multiply(convergent_matrix(quotients, lo, mid), convergent_matrix(quotients, mid, hi));
}

Mat2 convergent_matrix_mod(const std::vector<u64>& quotients, std::size_t count,
                           const mpz_class& M) {
  Mat2 m{1, 0, 0, 1};
  for (std::size_t i = 0; i < count; ++i) {
    absorb(m, quotients[i]);
    m.a %= M;
    m.c %= M;
  }
  return m;
}

namespace detail {

UnitResidue finish_residue(const QField& K, u64 m, const mpz_class& M, const mpz_class& x,
                           const mpz_class& y, int norm_sign) {
  UnitResidue r;
  r.modulus = m;
  r.norm_sign = norm_sign;
  const mpz_class mm(static_cast<unsigned long>(m));
  auto red = [&](const mpz_class& v) {
    mpz_class t;
    mpz_fdiv_r(t.get_mpz_t(), v.get_mpz_t(), mm.get_mpz_t());
    return static_cast<u64>(t.get_ui());
  };
  r.x = red(x);
  r.y = red(y);
  if (mpz_even_p(M.get_mpz_t())) r.alpha = mpz_odd_p(y.get_mpz_t()) ? 1 : 0;

  if (K.shape() == OmegaShape::SqrtD) {
    r.X = r.x;
    r.Y = r.y;
    r.index = 1;
    return r;
  }
  // Half shape: M = 2m, so y mod M carries the parity and halving is exact.
  mpz_class ux = x, uy = y;
  if (mpz_odd_p(y.get_mpz_t())) {
    OmegaMul(K).pow(ux, uy, x, y, 3, M);
    r.index = 3;
    if (mpz_odd_p(uy.get_mpz_t())) throw EngineError("cube of unit not in Z[sqrt d]");
  }
  const mpz_class half = uy / 2;
  r.X = red(ux + half);
  r.Y = red(half);
  return r;
}

}  // namespace detail

UnitData fundamental_unit_exact(const QField& K, const WorkBudget& budget) {
  std::vector<u64> quotients;
  const CfPeriod period =
      cf_expand(K, [&](u64 q) { quotients.push_back(q); }, budget.exact_period_steps);
  const Mat2 m = convergent_matrix(quotients, 0, quotients.size());

  UnitData u;
  u.period_len = period.length;
  u.norm_sign = period.norm_sign;
  u.y = m.c;
  u.x = mpz_class(static_cast<unsigned long>(K.k0())) * m.c + m.e;
  u.alpha = mpz_odd_p(u.y.get_mpz_t()) ? 1 : 0;

  const mpz_class d(static_cast<unsigned long>(K.d()));
  if (K.shape() == OmegaShape::SqrtD) {
    if (u.x * u.x - d * u.y * u.y != u.norm_sign) throw EngineError("norm identity failed");
    u.X = u.x;
    u.Y = u.y;
    u.index = 1;
    u.beta_tilde = u.y;
    return u;
  }
  const mpz_class s = 2 * u.x + u.y;
  if (s * s - d * u.y * u.y != 4 * u.norm_sign) throw EngineError("norm identity failed");
  mpz_class ux = u.x, uy = u.y;
  if (u.alpha == 1) {
    OmegaMul(K).pow(ux, uy, u.x, u.y, 3, 0);
    u.index = 3;
    u.beta_tilde = u.y;
  } else {
    u.index = 1;
    u.beta_tilde = u.y / 2;
  }
  u.Y = uy / 2;
  u.X = ux + u.Y;
  return u;
}

UnitResidue unit_residue(const QField& K, u64 m, const WorkBudget& budget) {
  if (m < 2) throw PreconditionError("modulus must be at least 2");
  if (m >= (u64{1} << 62)) throw PreconditionError("modulus must be below 2^62");
  const u64 M = K.shape() == OmegaShape::Half ? 2 * m : m;

  // B_{i-2}, B_{i-1} modulo M.
  u64 b0 = 1 % M, b1 = 0;
  CfPeriod period;
  if (M <= (u64{1} << 32)) {
    period = cf_expand(
        K,
        [&](u64 q) {
          const u64 nb = ((q % M) * b1 + b0) % M;
          b0 = b1;
          b1 = nb;
        },
        budget.period_steps);
  } else {
    period = cf_expand(
        K,
        [&](u64 q) {
          const u64 nb = addmod(mulmod(q % M, b1, M), b0, M);
          b0 = b1;
          b1 = nb;
        },
        budget.period_steps);
  }
  const mpz_class MM(static_cast<unsigned long>(M));
  const mpz_class y(static_cast<unsigned long>(b1));
  mpz_class x = mpz_class(static_cast<unsigned long>(K.k0())) * y + static_cast<unsigned long>(b0);
  x %= MM;
  UnitResidue r = detail::finish_residue(K, m, MM, x, y, period.norm_sign);
  r.period_len = period.length;
  return r;
}

OmegaResidue unit_omega_mod(const QField& K, const mpz_class& M, const WorkBudget& budget) {
  if (M < 2) throw PreconditionError("modulus must be at least 2");
  mpz_class b0 = 1, b1 = 0, t;
  const CfPeriod period = cf_expand(
      K,
      [&](u64 q) {
        mpz_mul_ui(t.get_mpz_t(), b1.get_mpz_t(), q);
        t += b0;
        mpz_fdiv_r(t.get_mpz_t(), t.get_mpz_t(), M.get_mpz_t());
        std::swap(b0, b1);
        std::swap(b1, t);
      },
      budget.period_steps);
  OmegaResidue r;
  r.modulus = M;
  r.y = b1 % M;
  r.x = (mpz_class(static_cast<unsigned long>(K.k0())) * b1 + b0) % M;
  r.norm_sign = period.norm_sign;
  return r;
}

int y_parity(const QField& K, const WorkBudget& budget) {
  return *unit_residue(K, 4, budget).alpha;
}

}  // namespace qunit
