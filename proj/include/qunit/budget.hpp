#pragma once

#include <atomic>
#include <cstdint>

namespace qunit {

// Work limits shared by all engines. Exceeding one raises
// ResourceLimitError.
struct WorkBudget {
  std::uint64_t rho_iterations = 10'000'000;       // Pollard rho, per factor()
  std::uint64_t period_steps = 100'000'000;        // continued-fraction steps
  std::uint64_t exact_period_steps = 2'000'000;    // fundamental_unit_exact
  std::uint64_t giant_steps = 50'000'000;
  std::uint64_t form_cycle_steps = 50'000'000;     // form/ideal cycle walks
  std::uint64_t sieve_segment = 200'000'000;       // sieve_squarefree width
};

inline const WorkBudget& default_budget() {
  static const WorkBudget budget{};
  return budget;
}

// Cooperative cancellation for long scans; polled between work items.
class CancellationToken {
 public:
  void cancel() { flag_.store(true, std::memory_order_relaxed); }
  bool cancelled() const { return flag_.load(std::memory_order_relaxed); }

 private:
  std::atomic<bool> flag_{false};
};

}  // namespace qunit
