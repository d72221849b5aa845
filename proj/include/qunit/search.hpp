#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qunit/conjectures.hpp"

namespace qunit {

struct DRecord {
  u64 d = 0;
  bool dY = false, dy = false, rc = false;
  int alpha = 0, beta = 0, s = 0, norm = 0;
  u64 h = 0;
  bool h_heuristic = false;
  std::vector<std::pair<std::string, Verdict>> certs;

  // The columns of the results file (certs excluded).
  bool same_columns(const DRecord& o) const;
};

// dy => dY; dY and not dy => d = 5 mod 8 and 3 | d; rc matches its four
// conditions. Throws EngineError on violation.
void validate(const DRecord& r);

// All columns, with eps mod 2d from both engines (the large one only when
// d_K < 2^52); disagreement raises EngineMismatchError.
DRecord compute_record(const QField& K, const WorkBudget& budget = default_budget());

// Squarefree integers of [lo, hi] by a segmented sieve over p^2 <= hi.
class SquarefreeSieve {
 public:
  explicit SquarefreeSieve(u64 hi);
  void for_each(u64 lo, u64 hi, const std::function<void(u64)>& fn,
                const WorkBudget& budget = default_budget()) const;

 private:
  u64 hi_;
  std::vector<std::uint32_t> primes_;
};

std::vector<u64> sieve_squarefree(u64 lo, u64 hi, const WorkBudget& budget = default_budget());

// d | Y through the given engine.
bool d_divides_Y(const QField& K, Engine engine, const WorkBudget& budget = default_budget());

std::string to_string(Engine e);
Engine engine_from_string(const std::string& s);

enum class ShardStatus { Pending, Running, Done };

struct ScanError {
  u64 d = 0;
  std::string message;
};

struct Shard {
  u64 lo = 0, hi = 0;
  ShardStatus status = ShardStatus::Pending;
  std::vector<u64> hits;
  std::vector<ScanError> errors;
  Engine engine = Engine::Small;
};

// One checkpoint line.
std::string shard_event_json(const Shard& s, long long elapsed_ms);
// Last event per (lo, hi); unparsable lines (a torn final write) are skipped.
std::map<std::pair<u64, u64>, Shard> replay_checkpoint(const std::string& path);

struct ScanOptions {
  Engine engine = Engine::Small;
  int workers = 1;
  u64 shard_width = 1'000'000;
  std::string checkpoint;  // empty: no checkpoint
  const CancellationToken* cancel = nullptr;
  // Called by the checkpoint writer after each completed shard.
  std::function<void(const Shard&)> on_shard_done;
  // Called in ascending d order once the hits are assembled.
  std::function<void(const DRecord&)> on_hit;
  WorkBudget budget = default_budget();
};

struct ScanResult {
  std::vector<DRecord> hits;  // sorted by d
  std::vector<ScanError> errors;
  u64 shards = 0, shards_resumed = 0;
};

// Sharded OpenMP scan. Hits are recomputed by compute_record at the end,
// including hits of shards replayed from the checkpoint. Throws
// CancelledError when the token fires; completed shards stay recorded.
ScanResult scan_interval(u64 lo, u64 hi, const ScanOptions& opt = {});

// Single-threaded reference: the d in [lo, hi] with d | Y.
std::vector<u64> scan_interval_serial(u64 lo, u64 hi, Engine engine,
                                      const WorkBudget& budget = default_budget());

// Results file formats.
std::string verdict_json(const Verdict& v);
std::string record_json(const DRecord& r, bool with_certs = false);
DRecord record_from_json(const std::string& line);
std::string results_jsonl(const std::vector<DRecord>& rs);
std::string results_csv(const std::vector<DRecord>& rs);

// The 22 tabulated fields: the 21 known d with d | y and 17451248829.
const std::vector<DRecord>& expected_table();

struct TableRow {
  DRecord expected, actual;
  std::vector<std::string> mismatches;
};

std::vector<TableRow> reproduce_tables(int workers = 1, const WorkBudget& budget = default_budget());

}  // namespace qunit
