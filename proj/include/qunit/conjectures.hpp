#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qunit/classgroup.hpp"
#include "qunit/infra.hpp"

namespace qunit {

enum class Status { Holds, Fails, RefutedUpToBound, Unknown };

std::string to_string(Status s);

// eps^k = u + v sqrt(d) with p | u and p^2 not dividing u.
struct PowerWitness {
  u64 k = 1;
  u64 p = 0;
  u64 u_mod_p = 0;
  u64 u_mod_p2 = 0;
};

struct Verdict {
  Status status = Status::Unknown;
  std::string reason;
  // Named facts backing the status (primality method, beta, ...).
  std::vector<std::pair<std::string, std::string>> evidence;
  // Per odd k: the prime refuting powerfulness of u, when one was found.
  std::vector<PowerWitness> power;
  std::optional<u64> prime_bound, k_bound;

  const std::string* find(const std::string& key) const;
};

struct ConjectureOptions {
  u64 prime_bound = 10'000;
  u64 k_bound = 9;
  Engine engine = Engine::Small;
  // certify_counterexample repeats the residue with the large-step engine
  bool cross_check = true;
  const CancellationToken* cancel = nullptr;
  WorkBudget budget = default_budget();
};

// N(eps) = 1, d != 1 mod 8, y even, d | y.
Verdict check_rc(const QField& K, const ConjectureOptions& opt = {});

// d = 7 mod 8, x powerful, y odd, d | y. Powerfulness is only refuted.
Verdict check_sc(const QField& K, const ConjectureOptions& opt = {});

// Some odd k with eps^k = u + v sqrt(d), u powerful, v odd, d | v. Never
// returns Holds.
Verdict check_c(const QField& K, const ConjectureOptions& opt = {});

enum class Conjecture { AAC, Mordell };

// d prime, d = 1 (AAC) or 3 (Mordell) mod 4, and d | y.
Verdict certify_counterexample(const QField& K, Conjecture which,
                               const ConjectureOptions& opt = {});

struct NormEquationReport {
  // a, b found for |p a^2 - q b^2| = 1, |p a^2 - q b^2| = 2, |a^2 - pq b^2| = 2
  std::optional<std::pair<mpz_class, mpz_class>> pq1, pq2, d2;
};

// Bounded search over 0 <= a, b <= bound.
NormEquationReport norm_equation_search(u64 p, u64 q, u64 bound);
// Complete decision through form equivalence, with witnesses.
NormEquationReport norm_equation_decide(u64 p, u64 q, const WorkBudget& budget = default_budget());

struct Type4Report {
  u64 p = 0, q = 0;
  bool by_parity = false;  // p = 5 mod 8, y odd, d | y
  bool by_symbol = false;  // p = 5 mod 8, (p|q) = -1, d | y
  bool parity_link_applies = false;  // p = 5 mod 8
  bool parity_link_holds = true;     // y odd <=> (p|q) = -1
  std::optional<bool> only_two;      // D_d = {2} up to f_bound
  bool fault = false;
};

// Requires d = pq, p = 1 mod 4, q = 3 mod 4, h(d) = 2.
Type4Report type4_eval(const QField& K, std::optional<u64> f_bound = std::nullopt,
                         const WorkBudget& budget = default_budget());

// Which of the four shapes a-d (two-prime and twice-two-prime patterns
// for which emptiness of D_d is equivalent to d | y) d has, if any.
std::optional<char> emptiness_shape(const QField& K, const WorkBudget& budget = default_budget());

struct EmptinessReport {
  char shape = 0;
  bool d_divides_y = false;
  bool predicted_empty = false;
  std::optional<bool> observed_empty;
  bool consistent = true;
};

// Requires h(d) = 2 and a matching shape.
EmptinessReport emptiness_eval(const QField& K, std::optional<u64> f_bound = std::nullopt,
                       const WorkBudget& budget = default_budget());

}  // namespace qunit
