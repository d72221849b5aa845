#pragma once

#include <optional>
#include <vector>

#include "qunit/pell.hpp"

namespace qunit {

struct ClassNumber {
  u64 value = 0;
  bool heuristic = false;  // analytic estimate, not a proof
};

// Cycle count of reduced ideals up to this discriminant; above it the
// analytic class number formula with a truncated Euler product.
inline constexpr u64 kExactClassNumberDisc = 40'000'000;

ClassNumber class_number(const QField& K, const WorkBudget& budget = default_budget());

// Unconditional count; throws PreconditionError above kExactClassNumberDisc.
u64 class_number_exact(const QField& K, const WorkBudget& budget = default_budget());

// h = round(sqrt(D) L(1, chi) / (2R)) with L(1, chi) truncated at primes
// <= 10^6. Throws AmbiguousRoundingError when the estimate lies within
// 0.25 of a half-integer. `estimate` receives the unrounded value.
u64 class_number_analytic(const QField& K, double* estimate = nullptr,
                          const WorkBudget& budget = default_budget());

// Smallest k >= 1 with eps^k in O_f = Z + f O_K: the order of eps in
// (O_K / f)^* / (Z / f)^*.
u64 unit_index_mod_f(const QField& K, u64 f, const WorkBudget& budget = default_budget());
// Same from eps = x + y*omega known modulo a multiple of f.
u64 unit_index_mod_f(const QField& K, const mpz_class& x, const mpz_class& y, u64 f,
                     const WorkBudget& budget = default_budget());

// f * prod_{p | f} (1 - (d_K | p) / p).
u64 conductor_factor(const QField& K, u64 f, const WorkBudget& budget = default_budget());

// |Pic(O_f)| = h * conductor_factor(f) / unit_index.
u64 pic_order(const QField& K, u64 f, const WorkBudget& budget = default_budget());
u64 pic_order(const QField& K, u64 f, u64 h, u64 unit_index,
              const WorkBudget& budget = default_budget());

// Whether |p a^2 - (d_K / p) b^2| = 4 has an integer solution; p must be
// a ramified prime.
bool represents_pm4(const QField& K, u64 p, const WorkBudget& budget = default_budget());

// x, y with F(x, y) = n.
struct Representation {
  mpz_class x, y;
};

// Some (a, b) with p a^2 - (d_K / p) b^2 = +-4, if any.
std::optional<Representation> pm4_witness(const QField& K, u64 p,
                                          const WorkBudget& budget = default_budget());

struct ConductorAnalysis {
  u64 d = 0;
  u64 f = 0;
  u64 pic_order = 0;
  u64 unit_index = 0;
  bool is_unusual = false;
};

// All unusual conductors f <= f_bound; empty when h(d) != 2.
std::vector<ConductorAnalysis> unusual_conductors(const QField& K, u64 f_bound,
                                                  const WorkBudget& budget = default_budget());

// Indefinite binary quadratic forms a x^2 + b xy + c y^2 with non-square
// discriminant b^2 - 4ac > 0.
struct BinaryForm {
  i128 a, b, c;
  i128 disc() const { return b * b - 4 * a * c; }
};

// Proper equivalence by comparing reduced cycles.
bool properly_equivalent(const BinaryForm& f, const BinaryForm& g,
                         const WorkBudget& budget = default_budget());

// Does F(x, y) = n have an integer solution (n != 0)?
bool form_represents(const BinaryForm& F, i64 n, const WorkBudget& budget = default_budget());
// Same, with an explicit solution; entries can be as large as the unit.
std::optional<Representation> form_representation(const BinaryForm& F, i64 n,
                                                  const WorkBudget& budget = default_budget());

}  // namespace qunit
