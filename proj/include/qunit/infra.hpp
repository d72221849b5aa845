#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "qunit/pell.hpp"

namespace qunit {

// Signed fixed-point real with 96 fractional bits.
struct Fixed {
  static constexpr int kFrac = 96;
  i128 raw = 0;

  static Fixed from_double(double v);
  static Fixed from_mpz_scaled(const mpz_class& scaled);
  double to_double() const;
  // Decimal expansion with the given number of fractional digits.
  std::string to_string(int digits = 20) const;
  // Largest multiple of 2^-bits not above this value.
  Fixed truncated(int bits) const;

  friend Fixed operator+(Fixed a, Fixed b) { return {a.raw + b.raw}; }
  friend Fixed operator-(Fixed a, Fixed b) { return {a.raw - b.raw}; }
  friend bool operator==(Fixed a, Fixed b) { return a.raw == b.raw; }
  friend auto operator<=>(Fixed a, Fixed b) { return a.raw <=> b.raw; }
};

// Generator residue u + v*omega modulo `modulus`. Divisions by integers
// that share factors with the modulus lower the modulus accordingly.
struct GenResidue {
  mpz_class modulus, u, v;
  int norm_sign = 1;
};

// Reduced ideal [a, (b + sqrt D)/2] of O_K, as the form (a, b, c) with
// b^2 - 4ac = D = d_K. Reduced: |sqrt D - 2a| < b < sqrt D.
// distance = -ln|gamma'| for a positive generator gamma of the ideal.
struct ReducedForm {
  i64 a = 0, b = 0, c = 0;
  Fixed distance;
  std::optional<GenResidue> generator;

  bool is_principal() const { return a == 1; }
  bool same_ideal(const ReducedForm& o) const { return a == o.a && b == o.b; }
};

// Infrastructure of the principal cycle of O_K. Holds an MPFR workspace,
// so one instance per thread.
class Infrastructure {
 public:
  // Requires d_K < 2^52.
  static constexpr u64 kMaxDisc = u64{1} << 52;

  explicit Infrastructure(const QField& K);
  ~Infrastructure();
  Infrastructure(const Infrastructure&) = delete;
  Infrastructure& operator=(const Infrastructure&) = delete;

  const QField& field() const { return K_; }

  ReducedForm principal() const;
  // Principal form with generator 1 modulo M.
  ReducedForm principal(const mpz_class& M) const;

  // Successor / predecessor on the cycle.
  ReducedForm rho_step(const ReducedForm& f);
  ReducedForm rho_back(const ReducedForm& f);

  // Gauss composition followed by reduction. Generators are tracked when
  // both inputs carry one.
  ReducedForm compose_reduce(const ReducedForm& f, const ReducedForm& g);

  bool is_reduced(i64 a, i64 b) const;
  // Distances are skipped (left unchanged) while this is off.
  void set_track_distance(bool on);
  Fixed ln_disc() const { return ln_disc_; }

  // Counters of integer divisions applied to generators; filled when
  // record_divisors is set.
  bool record_divisors = false;
  std::vector<mpz_class> divisors;

  struct Impl;

 private:
  QField K_;
  Fixed ln_disc_;
  std::unique_ptr<Impl> impl_;
};

struct BsgsOptions {
  double baby_factor = 1.0;  // baby table ~ baby_factor * D^(1/4)
};

// Regulator of O_K to `precision` fractional bits (at most 96) via baby
// steps and giant steps, verified by landing on the principal form at
// distance R.
Fixed regulator_bsgs(const QField& K, int precision = 96, const BsgsOptions& opts = {},
                     const WorkBudget& budget = default_budget());

// Same contract as unit_residue through the regulator and a doubling
// ladder; period_len stays empty.
UnitResidue unit_residue_fast(const QField& K, u64 m, const BsgsOptions& opts = {},
                              const WorkBudget& budget = default_budget());

enum class Engine { Small, Large };

// unit_residue or unit_residue_fast; Large requires d_K < 2^52.
UnitResidue unit_residue_with(Engine engine, const QField& K, u64 m,
                              const WorkBudget& budget = default_budget());

// eps = x + y*omega modulo an arbitrary M, through the large-step ladder
// when d_K < 2^52 and the period walk otherwise.
OmegaResidue unit_omega_mod_auto(const QField& K, const mpz_class& M,
                                 const WorkBudget& budget = default_budget());

namespace detail {

struct BigUnit {
  mpz_class modulus, x, y;  // eps = x + y*omega mod modulus
  int norm_sign = 0;
};

// eps modulo an arbitrary modulus M >= 2 through the ladder.
BigUnit unit_mod_big(const QField& K, const mpz_class& M, const BsgsOptions& opts = {},
                     const WorkBudget& budget = default_budget());

}  // namespace detail

}  // namespace qunit
