#include "qunit/search.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <omp.h>

#include "json.hpp"

namespace qunit {

using ojson = nlohmann::ordered_json;

bool DRecord::same_columns(const DRecord& o) const {
  return d == o.d && dY == o.dY && dy == o.dy && rc == o.rc && alpha == o.alpha && beta == o.beta &&
         s == o.s && norm == o.norm && h == o.h && h_heuristic == o.h_heuristic;
}

void validate(const DRecord& r) {
  const std::string at = " (d = " + std::to_string(r.d) + ")";
  if (r.dy && !r.dY) throw EngineError("d | y without d | Y" + at);
  if (r.dY && !r.dy && !(r.beta == 5 && r.d % 3 == 0)) {
    throw EngineError("d | Y, d !| y outside d = 5 mod 8, 3 | d" + at);
  }
  const bool rc = r.norm == 1 && r.beta != 1 && r.alpha == 0 && r.dy;
  if (rc != r.rc) throw EngineError("rc inconsistent with its conditions" + at);
  if (r.beta != static_cast<int>(r.d % 8)) throw EngineError("beta is not d mod 8" + at);
}

DRecord compute_record(const QField& K, const WorkBudget& budget) {
  const u64 d = K.d();
  const UnitResidue r = unit_residue(K, 2 * d, budget);
  if (K.disc() < Infrastructure::kMaxDisc) {
    const UnitResidue f = unit_residue_fast(K, 2 * d, {}, budget);
    if (!f.same_unit(r)) throw EngineMismatchError("engines disagree on eps mod 2d at d = " + std::to_string(d));
  }
  DRecord rec;
  rec.d = d;
  rec.dY = r.Y % d == 0;
  rec.dy = r.y % d == 0;
  rec.alpha = *r.alpha;
  rec.beta = static_cast<int>(d % 8);
  rec.s = static_cast<int>(factor(d, budget).distinct_primes());
  rec.norm = r.norm_sign;
  rec.rc = rec.norm == 1 && rec.beta != 1 && rec.alpha == 0 && rec.dy;
  const ClassNumber h = class_number(K, budget);
  rec.h = h.value;
  rec.h_heuristic = h.heuristic;
  validate(rec);
  return rec;
}

SquarefreeSieve::SquarefreeSieve(u64 hi) : hi_(hi) {
  const u64 r = isqrt(hi);
  if (r > 0xFFFFFFFFULL) throw PreconditionError("sieve bound too large");
  primes_ = primes_up_to(static_cast<std::uint32_t>(r));
}

void SquarefreeSieve::for_each(u64 lo, u64 hi, const std::function<void(u64)>& fn,
                               const WorkBudget& budget) const {
  if (lo < 2 || lo > hi) throw PreconditionError("need 2 <= lo <= hi");
  if (hi > hi_) throw PreconditionError("segment beyond the sieve bound");
  if (hi - lo >= budget.sieve_segment) throw ResourceLimitError("sieve segment too wide");
  std::vector<char> bad(hi - lo + 1, 0);
  for (std::uint32_t p : primes_) {
    const u64 q = static_cast<u64>(p) * p;
    if (q > hi) break;
    for (u64 m = (lo + q - 1) / q * q; m <= hi; m += q) bad[m - lo] = 1;
  }
  for (u64 i = 0; i < bad.size(); ++i)
    if (!bad[i]) fn(lo + i);
}

std::vector<u64> sieve_squarefree(u64 lo, u64 hi, const WorkBudget& budget) {
  std::vector<u64> out;
  SquarefreeSieve(hi).for_each(lo, hi, [&](u64 d) { out.push_back(d); }, budget);
  return out;
}

bool d_divides_Y(const QField& K, Engine engine, const WorkBudget& budget) {
  return unit_residue_with(engine, K, K.d(), budget).Y == 0;
}

std::string to_string(Engine e) { return e == Engine::Small ? "SMALL" : "LARGE"; }

Engine engine_from_string(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  if (u == "SMALL") return Engine::Small;
  if (u == "LARGE") return Engine::Large;
  throw PreconditionError("engine must be SMALL or LARGE");
}

namespace {

const char* status_name(ShardStatus s) {
  switch (s) {
    case ShardStatus::Pending: return "PENDING";
    case ShardStatus::Running: return "RUNNING";
    case ShardStatus::Done: return "DONE";
  }
  return "PENDING";
}

ShardStatus status_from(const std::string& s) {
  if (s == "DONE") return ShardStatus::Done;
  if (s == "RUNNING") return ShardStatus::Running;
  if (s == "PENDING") return ShardStatus::Pending;
  throw PreconditionError("unknown shard status " + s);
}

}  // namespace

std::string shard_event_json(const Shard& s, long long elapsed_ms) {
  ojson j;
  j["lo"] = s.lo;
  j["hi"] = s.hi;
  j["status"] = status_name(s.status);
  j["hits"] = s.hits;
  j["engine"] = to_string(s.engine);
  j["elapsed_ms"] = elapsed_ms;
  if (!s.errors.empty()) {
    ojson errs = ojson::array();
    for (const auto& e : s.errors) errs.push_back({{"d", e.d}, {"error", e.message}});
    j["errors"] = errs;
  }
  return j.dump();
}

std::map<std::pair<u64, u64>, Shard> replay_checkpoint(const std::string& path) {
  std::map<std::pair<u64, u64>, Shard> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const ojson j = ojson::parse(line);
      Shard s;
      s.lo = j.at("lo").get<u64>();
      s.hi = j.at("hi").get<u64>();
      s.status = status_from(j.at("status").get<std::string>());
      s.hits = j.at("hits").get<std::vector<u64>>();
      s.engine = engine_from_string(j.at("engine").get<std::string>());
      if (j.contains("errors"))
        for (const auto& e : j["errors"]) s.errors.push_back({e.at("d").get<u64>(), e.at("error").get<std::string>()});
      out[{s.lo, s.hi}] = std::move(s);
    } catch (const std::exception&) {
      // torn write from an interrupted run
    }
  }
  return out;
}

namespace {

Shard run_shard(const SquarefreeSieve& sieve, u64 lo, u64 hi, const ScanOptions& opt, bool& cancelled) {
  Shard s;
  s.lo = lo;
  s.hi = hi;
  s.engine = opt.engine;
  u64 seen = 0;
  sieve.for_each(
      lo, hi,
      [&](u64 d) {
        if (cancelled) return;
        if ((++seen & 1023) == 0 && opt.cancel && opt.cancel->cancelled()) {
          cancelled = true;
          return;
        }
        try {
          if (d_divides_Y(QField::make(d), opt.engine, opt.budget)) s.hits.push_back(d);
        } catch (const std::exception& e) {
          s.errors.push_back({d, e.what()});
        }
      },
      opt.budget);
  s.status = ShardStatus::Done;
  return s;
}

}  // namespace

ScanResult scan_interval(u64 lo, u64 hi, const ScanOptions& opt) {
  if (lo < 2 || lo > hi) throw PreconditionError("need 2 <= lo <= hi");
  if (opt.shard_width == 0) throw PreconditionError("shard width must be positive");
  if (opt.workers < 1) throw PreconditionError("workers must be positive");

  std::vector<std::pair<u64, u64>> grid;
  for (u64 a = lo;; a += opt.shard_width) {
    const u64 b = (hi - a < opt.shard_width) ? hi : a + opt.shard_width - 1;
    grid.push_back({a, b});
    if (b == hi) break;
  }

  std::map<std::pair<u64, u64>, Shard> replayed;
  if (!opt.checkpoint.empty()) replayed = replay_checkpoint(opt.checkpoint);

  ScanResult res;
  res.shards = grid.size();
  std::vector<Shard> done(grid.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto it = replayed.find(grid[i]);
    if (it != replayed.end() && it->second.status == ShardStatus::Done) {
      done[i] = it->second;
      ++res.shards_resumed;
    } else {
      todo.push_back(i);
    }
  }

  std::ofstream log;
  if (!opt.checkpoint.empty()) {
    bool torn = false;
    {
      std::ifstream in(opt.checkpoint, std::ios::binary | std::ios::ate);
      if (in && in.tellg() > 0) {
        in.seekg(-1, std::ios::end);
        torn = in.get() != '\n';
      }
    }
    log.open(opt.checkpoint, std::ios::app);
    if (!log) throw EngineError("cannot open checkpoint " + opt.checkpoint);
    if (torn) log << '\n';
  }
  const SquarefreeSieve sieve(hi);
  bool any_cancelled = false;
  std::string failure;

#pragma omp parallel for num_threads(opt.workers) schedule(dynamic, 1)
  for (std::size_t t = 0; t < todo.size(); ++t) {
    const std::size_t i = todo[t];
    if (opt.cancel && opt.cancel->cancelled()) {
#pragma omp atomic write
      any_cancelled = true;
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    bool cancelled = false;
    Shard s;
    try {
      s = run_shard(sieve, grid[i].first, grid[i].second, opt, cancelled);
    } catch (const std::exception& e) {
#pragma omp critical(qunit_scan_failure)
      failure = e.what();
      continue;
    }
    if (cancelled) {
#pragma omp atomic write
      any_cancelled = true;
      continue;
    }
    const long long ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
#pragma omp critical(qunit_checkpoint)
    {
      if (log.is_open()) {
        log << shard_event_json(s, ms) << '\n';
        log.flush();
      }
      if (opt.on_shard_done) opt.on_shard_done(s);
    }
    done[i] = std::move(s);
  }

  if (!failure.empty()) throw EngineError("scan failed: " + failure);
  if (any_cancelled) throw CancelledError("scan cancelled; completed shards are in the checkpoint");

  std::vector<u64> hits;
  for (const Shard& s : done) {
    hits.insert(hits.end(), s.hits.begin(), s.hits.end());
    res.errors.insert(res.errors.end(), s.errors.begin(), s.errors.end());
  }
  std::sort(hits.begin(), hits.end());
  for (u64 d : hits) {
    try {
      DRecord r = compute_record(QField::make(d), opt.budget);
      if (!r.dY) throw EngineMismatchError("scan hit not confirmed by the record engines");
      res.hits.push_back(std::move(r));
      if (opt.on_hit) opt.on_hit(res.hits.back());
    } catch (const EngineError& e) {
      res.errors.push_back({d, e.what()});
    }
  }
  std::sort(res.errors.begin(), res.errors.end(), [](const ScanError& a, const ScanError& b) { return a.d < b.d; });
  return res;
}

std::vector<u64> scan_interval_serial(u64 lo, u64 hi, Engine engine, const WorkBudget& budget) {
  std::vector<u64> hits;
  for (u64 d : sieve_squarefree(lo, hi, budget))
    if (d_divides_Y(QField::make(d), engine, budget)) hits.push_back(d);
  return hits;
}

std::string verdict_json(const Verdict& v) {
  ojson e;
  e["status"] = to_string(v.status);
  e["reason"] = v.reason;
  if (!v.evidence.empty()) {
    ojson ev;
    for (const auto& [k, val] : v.evidence) ev[k] = val;
    e["evidence"] = ev;
  }
  if (!v.power.empty()) {
    ojson pw = ojson::array();
    for (const auto& w : v.power)
      pw.push_back({{"k", w.k}, {"p", w.p}, {"u_mod_p", w.u_mod_p}, {"u_mod_p2", w.u_mod_p2}});
    e["witness"] = pw;
  }
  if (v.prime_bound) e["prime_bound"] = *v.prime_bound;
  if (v.k_bound) e["k_bound"] = *v.k_bound;
  return e.dump();
}

std::string record_json(const DRecord& r, bool with_certs) {
  ojson j;
  j["d"] = r.d;
  j["dY"] = r.dY;
  j["dy"] = r.dy;
  j["rc"] = r.rc;
  j["alpha"] = r.alpha;
  j["beta"] = r.beta;
  j["s"] = r.s;
  j["norm"] = r.norm;
  j["h"] = r.h;
  j["h_heuristic"] = r.h_heuristic;
  if (with_certs && !r.certs.empty()) {
    ojson c;
    for (const auto& [name, v] : r.certs) c[name] = ojson::parse(verdict_json(v));
    j["certs"] = c;
  }
  return j.dump();
}

DRecord record_from_json(const std::string& line) {
  const ojson j = ojson::parse(line);
  DRecord r;
  r.d = j.at("d").get<u64>();
  r.dY = j.at("dY").get<bool>();
  r.dy = j.at("dy").get<bool>();
  r.rc = j.at("rc").get<bool>();
  r.alpha = j.at("alpha").get<int>();
  r.beta = j.at("beta").get<int>();
  r.s = j.at("s").get<int>();
  r.norm = j.at("norm").get<int>();
  r.h = j.at("h").get<u64>();
  r.h_heuristic = j.at("h_heuristic").get<bool>();
  return r;
}

std::string results_jsonl(const std::vector<DRecord>& rs) {
  std::string out;
  for (const auto& r : rs) out += record_json(r) + "\n";
  return out;
}

std::string results_csv(const std::vector<DRecord>& rs) {
  std::ostringstream out;
  out << "d,dY,dy,rc,alpha,beta,s,norm,h,h_heuristic\n";
  auto b = [](bool v) { return v ? "true" : "false"; };
  for (const auto& r : rs) {
    out << r.d << ',' << b(r.dY) << ',' << b(r.dy) << ',' << b(r.rc) << ',' << r.alpha << ',' << r.beta
        << ',' << r.s << ',' << r.norm << ',' << r.h << ',' << b(r.h_heuristic) << '\n';
  }
  return out.str();
}

const std::vector<DRecord>& expected_table() {
  // d, dY, dy, rc, alpha, beta, s, norm, h; h is heuristic above 10^7
  static const std::vector<DRecord> rows = [] {
    struct Row {
      u64 d;
      bool dY, dy, rc;
      int alpha, beta, s, norm;
      u64 h;
    };
    const Row raw[] = {
        {46, true, true, true, 0, 6, 2, 1, 1},
        {430, true, true, true, 0, 6, 3, 1, 2},
        {1817, true, true, false, 0, 1, 2, 1, 1},
        {58254, true, true, true, 0, 6, 5, 1, 8},
        {209991, true, true, true, 0, 7, 2, 1, 2},
        {1752299, true, true, true, 0, 3, 3, 1, 4},
        {3124318, true, true, true, 0, 6, 2, 1, 1},
        {4099215, true, true, false, 1, 7, 3, 1, 4},
        {5374184665, true, true, false, 0, 1, 2, -1, 2},
        {6459560882, true, true, true, 0, 2, 4, 1, 4},
        {16466394154, true, true, true, 0, 2, 4, 1, 32},
        {17451248829, true, false, false, 1, 5, 4, 1, 4},
        {20565608894, true, true, true, 0, 6, 3, 1, 2},
        {25666082990, true, true, true, 0, 6, 4, 1, 8},
        {117477414815, true, true, true, 0, 7, 4, 1, 8},
        {125854178626, true, true, true, 0, 2, 4, 1, 8},
        {1004569189366, true, true, true, 0, 6, 2, 1, 1},
        {1188580642033, true, true, false, 0, 1, 3, 1, 2},
        {15826129757609, true, true, false, 0, 1, 2, 1, 1},
        {18803675974841, true, true, false, 0, 1, 3, 1, 2},
        {20256129307923, true, true, false, 1, 3, 4, 1, 16},
        {39028039587479, true, true, false, 1, 7, 1, 1, 1},
    };
    std::vector<DRecord> out;
    for (const Row& r : raw) {
      DRecord x;
      x.d = r.d;
      x.dY = r.dY;
      x.dy = r.dy;
      x.rc = r.rc;
      x.alpha = r.alpha;
      x.beta = r.beta;
      x.s = r.s;
      x.norm = r.norm;
      x.h = r.h;
      x.h_heuristic = r.d > 10'000'000;
      out.push_back(x);
    }
    return out;
  }();
  return rows;
}

std::vector<TableRow> reproduce_tables(int workers, const WorkBudget& budget) {
  const auto& exp = expected_table();
  std::vector<TableRow> rows(exp.size());
  std::string failure;
#pragma omp parallel for num_threads(std::max(1, workers)) schedule(dynamic, 1)
  for (std::size_t i = 0; i < exp.size(); ++i) {
    TableRow& row = rows[i];
    row.expected = exp[i];
    try {
      row.actual = compute_record(QField::make(exp[i].d), budget);
    } catch (const std::exception& e) {
#pragma omp critical(qunit_table_failure)
      failure = "d = " + std::to_string(exp[i].d) + ": " + e.what();
      continue;
    }
    const DRecord& a = row.actual;
    const DRecord& x = row.expected;
    auto diff = [&](const char* col, auto want, auto got) {
      if (want != got) {
        std::ostringstream m;
        m << col << ": expected " << want << ", got " << got;
        row.mismatches.push_back(m.str());
      }
    };
    diff("dY", x.dY, a.dY);
    diff("dy", x.dy, a.dy);
    diff("rc", x.rc, a.rc);
    diff("alpha", x.alpha, a.alpha);
    diff("beta", x.beta, a.beta);
    diff("s", x.s, a.s);
    diff("norm", x.norm, a.norm);
    diff("h", x.h, a.h);
    diff("h_heuristic", x.h_heuristic, a.h_heuristic);
  }
  if (!failure.empty()) throw EngineError(failure);
  return rows;
}

}  // namespace qunit
