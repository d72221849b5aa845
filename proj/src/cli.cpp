#include "qunit/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qunit/search.hpp"

namespace qunit {

namespace {

using ojson = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

u64 parse_u64(const std::string& text, const char* what) {
  mpz_class v;
  if (!parse_decimal(text, v)) throw UsageError(std::string(what) + ": not a decimal integer: " + text);
  if (v > mpz_class(std::to_string(std::numeric_limits<u64>::max())))
    throw UsageError(std::string(what) + " out of range: " + text);
  return std::stoull(v.get_str());
}

WorkBudget scaled_budget(double f) {
  WorkBudget b;
  auto s = [f](std::uint64_t& x) {
    const long double v = static_cast<long double>(x) * f;
    x = v >= 1.8e19L ? std::numeric_limits<std::uint64_t>::max() : std::max<std::uint64_t>(1, std::llround(v));
  };
  s(b.rho_iterations);
  s(b.period_steps);
  s(b.exact_period_steps);
  s(b.giant_steps);
  s(b.form_cycle_steps);
  s(b.sieve_segment);
  return b;
}

const char* yn(bool b) { return b ? "true" : "false"; }

std::string h_text(const DRecord& r) { return std::to_string(r.h) + (r.h_heuristic ? " (heuristic)" : ""); }

void print_verdict(std::ostream& out, const std::string& name, const Verdict& v) {
  out << std::left << std::setw(10) << name << to_string(v.status);
  if (!v.reason.empty()) out << "  " << v.reason;
  out << '\n';
  for (const auto& [k, val] : v.evidence) out << "  " << k << ": " << val << '\n';
  for (const auto& w : v.power)
    out << "  k = " << w.k << ": p = " << w.p << ", u mod p = " << w.u_mod_p << ", u mod p^2 = " << w.u_mod_p2
        << '\n';
  if (v.prime_bound) out << "  primes up to " << *v.prime_bound << '\n';
  if (v.k_bound) out << "  odd k up to " << *v.k_bound << '\n';
}

void print_record(std::ostream& out, const DRecord& r) {
  out << "d          " << r.d << '\n'
      << "d | Y      " << yn(r.dY) << '\n'
      << "d | y      " << yn(r.dy) << '\n'
      << "RC         " << yn(r.rc) << '\n'
      << "alpha      " << r.alpha << '\n'
      << "beta       " << r.beta << '\n'
      << "s          " << r.s << '\n'
      << "N(eps)     " << r.norm << '\n'
      << "h          " << h_text(r) << '\n';
  for (const auto& [name, v] : r.certs) print_verdict(out, name, v);
}

struct Globals {
  bool json = false;
  double work_budget = 1.0;
  u64 prime_bound = ConjectureOptions{}.prime_bound;
  u64 k_bound = ConjectureOptions{}.k_bound;

  ConjectureOptions conj(const CancellationToken* cancel) const {
    ConjectureOptions o;
    o.prime_bound = prime_bound;
    o.k_bound = k_bound;
    o.budget = scaled_budget(work_budget);
    o.cancel = cancel;
    return o;
  }
};

int cmd_check(const Globals& g, const std::string& d_text, std::ostream& out, const CancellationToken* cancel) {
  const ConjectureOptions o = g.conj(cancel);
  const QField K = QField::make(parse_u64(d_text, "d"), o.budget);
  DRecord r = compute_record(K, o.budget);
  r.certs.push_back({"RC", check_rc(K, o)});
  r.certs.push_back({"SC", check_sc(K, o)});
  r.certs.push_back({"C", check_c(K, o)});
  if (g.json)
    out << record_json(r, true) << '\n';
  else
    print_record(out, r);
  return kExitOk;
}

struct SearchArgs {
  std::string lo, hi;
  std::string engine = "SMALL";
  int workers = 1;
  std::string shard_width = "1000000";
  std::string checkpoint, results, csv;
};

int cmd_search(const Globals& g, const SearchArgs& a, std::ostream& out, std::ostream& err,
               const CancellationToken* cancel) {
  ScanOptions opt;
  opt.engine = engine_from_string(a.engine);
  opt.workers = a.workers;
  opt.shard_width = parse_u64(a.shard_width, "shard width");
  opt.checkpoint = a.checkpoint;
  opt.cancel = cancel;
  opt.budget = scaled_budget(g.work_budget);
  const u64 lo = parse_u64(a.lo, "lo"), hi = parse_u64(a.hi, "hi");
  u64 finished = 0;
  opt.on_shard_done = [&](const Shard& s) {
    ++finished;
    if (!g.json) err << "shard [" << s.lo << ", " << s.hi << "] done, " << s.hits.size() << " hit(s), " << finished
                     << " finished this run\n";
  };
  opt.on_hit = [&](const DRecord& r) {
    if (g.json)
      out << record_json(r) << '\n';
    else
      out << "hit d = " << r.d << "  d | y " << yn(r.dy) << "  RC " << yn(r.rc) << "  h " << h_text(r) << '\n';
    out.flush();
  };
  const ScanResult res = scan_interval(lo, hi, opt);
  if (!a.results.empty()) {
    std::ofstream f(a.results);
    f << results_jsonl(res.hits);
    if (!f) throw EngineError("cannot write " + a.results);
  }
  if (!a.csv.empty()) {
    std::ofstream f(a.csv);
    f << results_csv(res.hits);
    if (!f) throw EngineError("cannot write " + a.csv);
  }
  for (const auto& e : res.errors) err << "error at d = " << e.d << ": " << e.message << '\n';
  if (!g.json)
    err << res.hits.size() << " hit(s) in [" << lo << ", " << hi << "], " << res.shards << " shard(s), "
        << res.shards_resumed << " resumed\n";
  return res.errors.empty() ? kExitOk : kExitEngine;
}

int cmd_table(const Globals& g, int workers, std::ostream& out) {
  const auto rows = reproduce_tables(workers, scaled_budget(g.work_budget));
  bool ok = true;
  if (g.json) {
    for (const auto& row : rows) {
      ojson j = ojson::parse(record_json(row.actual));
      j["match"] = row.mismatches.empty();
      if (!row.mismatches.empty()) j["mismatches"] = row.mismatches;
      out << j.dump() << '\n';
      ok = ok && row.mismatches.empty();
    }
  } else {
    out << std::right << std::setw(15) << "d" << "  dY    dy    RC    a  b  s  N   h\n";
    for (const auto& row : rows) {
      const DRecord& r = row.actual;
      out << std::setw(15) << r.d << "  " << std::left << std::setw(6) << yn(r.dY) << std::setw(6) << yn(r.dy)
          << std::setw(6) << yn(r.rc) << r.alpha << "  " << r.beta << "  " << r.s << "  " << std::setw(3)
          << r.norm << std::setw(16) << h_text(r) << std::right;
      if (row.mismatches.empty()) {
        out << "ok\n";
      } else {
        ok = false;
        out << "MISMATCH";
        for (const auto& m : row.mismatches) out << "; " << m;
        out << '\n';
      }
    }
    out << (ok ? "all 22 rows match\n" : "table mismatch\n");
  }
  return ok ? kExitOk : kExitMismatch;
}

int cmd_certify(const Globals& g, const std::string& d_text, const std::string& which, std::ostream& out,
                const CancellationToken* cancel) {
  Conjecture c;
  if (which == "aac")
    c = Conjecture::AAC;
  else if (which == "mordell")
    c = Conjecture::Mordell;
  else
    throw UsageError("conjecture must be aac or mordell");
  const ConjectureOptions o = g.conj(cancel);
  const u64 d = parse_u64(d_text, "d");
  const QField K = QField::make(d, o.budget);
  const Verdict v = certify_counterexample(K, c, o);
  if (g.json) {
    ojson j;
    j["d"] = d;
    j["conjecture"] = which;
    j["certificate"] = ojson::parse(verdict_json(v));
    out << j.dump() << '\n';
  } else {
    out << "d = " << d << '\n';
    print_verdict(out, which, v);
  }
  return v.status == Status::Holds ? kExitOk : kExitMismatch;
}

int cmd_conductors(const Globals& g, const std::string& d_text, const std::string& bound_text, std::ostream& out) {
  const WorkBudget b = scaled_budget(g.work_budget);
  const u64 d = parse_u64(d_text, "d"), bound = parse_u64(bound_text, "f_bound");
  const QField K = QField::make(d, b);
  const ClassNumber h = class_number(K, b);
  const auto found = unusual_conductors(K, bound, b);
  if (g.json) {
    ojson j;
    j["d"] = d;
    j["f_bound"] = bound;
    j["h"] = h.value;
    j["h_heuristic"] = h.heuristic;
    ojson list = ojson::array();
    for (const auto& c : found) list.push_back({{"f", c.f}, {"pic_order", c.pic_order}, {"unit_index", c.unit_index}});
    j["conductors"] = list;
    out << j.dump() << '\n';
  } else {
    out << "d = " << d << ", h = " << h.value << (h.heuristic ? " (heuristic)" : "") << ", f <= " << bound << '\n';
    if (h.value != 2) out << "h != 2: no unusual conductors\n";
    out << found.size() << " unusual conductor(s)\n";
    for (const auto& c : found)
      out << "  f = " << c.f << "  |Pic| = " << c.pic_order << "  unit index = " << c.unit_index << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            const CancellationToken* cancel) {
  CLI::App app{"Units of real quadratic fields: divisibility searches and certificates", "qunit"};
  app.fallthrough();
  app.require_subcommand(1, 1);

  Globals g;
  app.add_flag("--json", g.json, "JSON output");
  app.add_option("--work-budget", g.work_budget, "Scale factor for all work limits")->check(CLI::PositiveNumber);
  app.add_option("--prime-bound", g.prime_bound, "Prime bound for powerfulness refutation");
  app.add_option("--k-bound", g.k_bound, "Largest odd exponent k tried by check C");

  std::string d_text, bound_text, which;
  auto* check = app.add_subcommand("check", "All record fields and verdicts for d");
  check->add_option("d", d_text)->required();

  SearchArgs sa;
  auto* search = app.add_subcommand("search", "Scan [lo, hi] for squarefree d with d | Y");
  search->add_option("lo", sa.lo)->required();
  search->add_option("hi", sa.hi)->required();
  search->add_option("--engine", sa.engine, "SMALL or LARGE")->capture_default_str();
  search->add_option("--workers", sa.workers)->check(CLI::Range(1, 1024))->capture_default_str();
  search->add_option("--shard-width", sa.shard_width)->capture_default_str();
  search->add_option("--checkpoint", sa.checkpoint, "Append-only shard log, replayed on start");
  search->add_option("--results", sa.results, "JSONL results file");
  search->add_option("--csv", sa.csv, "CSV results file");

  int table_workers = 1;
  auto* table = app.add_subcommand("table", "Recompute the 22 tabulated rows");
  table->add_option("--workers", table_workers)->check(CLI::Range(1, 1024))->capture_default_str();

  auto* certify = app.add_subcommand("certify", "Certify d as a counterexample (aac or mordell)");
  certify->add_option("d", d_text)->required();
  certify->add_option("conjecture", which)->required()->check(CLI::IsMember({"aac", "mordell"}));

  auto* conductors = app.add_subcommand("conductors", "Unusual conductors f <= f_bound");
  conductors->add_option("d", d_text)->required();
  conductors->add_option("f_bound", bound_text)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (check->parsed()) return cmd_check(g, d_text, out, cancel);
    if (search->parsed()) return cmd_search(g, sa, out, err, cancel);
    if (table->parsed()) return cmd_table(g, table_workers, out);
    if (certify->parsed()) return cmd_certify(g, d_text, which, out, cancel);
    if (conductors->parsed()) return cmd_conductors(g, d_text, bound_text, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const PreconditionError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CancelledError& e) {
    err << "cancelled: " << e.what() << '\n';
    return kExitEngine;
  } catch (const EngineError& e) {
    err << "engine error: " << e.what() << '\n';
    return kExitEngine;
  }
  return kExitUsage;
}

}  // namespace qunit
