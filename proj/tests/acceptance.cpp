// One PASS/FAIL line per acceptance criterion; exit status 0 iff all pass.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include "qunit/search.hpp"

using namespace qunit;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int n, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(Clock::now() - t0).count();
  if (s > limit_s) {
    o.pass = false;
    o.detail += "; over the time limit";
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %d %s: %s (%.1f s, limit %.0f s)\n", o.pass ? "PASS" : "FAIL", n, name.c_str(), o.detail.c_str(),
              s, limit_s);
  std::fflush(stdout);
}

// Parity of the period of the plain continued fraction of sqrt(d).
bool sqrt_period_odd(u64 d) {
  const u64 a0 = isqrt(d);
  u64 m = 0, q = 1, a = a0, len = 0;
  do {
    m = a * q - m;
    q = (d - m * m) / q;
    a = (a0 + m) / q;
    ++len;
  } while (a != 2 * a0);
  return len % 2 == 1;
}

std::vector<u64> hit_ds(const ScanResult& r) {
  std::vector<u64> out;
  for (const auto& h : r.hits) out.push_back(h.d);
  return out;
}

std::string join(const std::vector<u64>& v) {
  std::string s = "{";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "}";
}

bool rc_scan(const QField& K, u64 h, const UnitData& e, const std::vector<u64>& fs) {
  for (u64 f : fs)
    if (pic_order(K, f, h, unit_index_mod_f(K, e.x, e.y, f)) == h) return false;
  return true;
}

}  // namespace

int main() {
  criterion(1, "table reproduction", 1800, [] {
    const auto rows = reproduce_tables(1);
    int ok = 0;
    std::string bad;
    for (const auto& r : rows) {
      if (r.mismatches.empty())
        ++ok;
      else
        bad += " d=" + std::to_string(r.expected.d) + " (" + r.mismatches.front() + ")";
    }
    return Outcome{rows.size() == 22 && ok == 22, std::to_string(ok) + "/22 rows match" + bad};
  });

  criterion(2, "Mordell counterexample certificate for 39028039587479", 300, [] {
    const Verdict v = certify_counterexample(QField::make(39028039587479ULL), Conjecture::Mordell);
    const std::string* prim = v.find("primality");
    const std::string* beta = v.find("beta");
    const std::string* y = v.find("y_mod_d");
    const std::string* y2 = v.find("large_step_y_mod_d");
    const bool det = prim && prim->find("deterministic") != std::string::npos;
    const bool ok = v.status == Status::Holds && det && beta && *beta == "7" && y && *y == "0" && y2 && *y2 == "0";
    return Outcome{ok, to_string(v.status) + ", beta " + (beta ? *beta : "?") + ", y mod d " + (y ? *y : "?") +
                           " (large step " + (y2 ? *y2 : "?") + "), " + (prim ? *prim : "no primality")};
  });

  criterion(3, "SC refutation witnesses", 600, [] {
    std::string detail;
    bool ok = true;
    for (auto [d, p] : {std::pair<u64, u64>{4099215, 701}, {39028039587479ULL, 5}}) {
      ConjectureOptions o;
      o.engine = QField::make(d).disc() < Infrastructure::kMaxDisc ? Engine::Large : Engine::Small;
      const auto t0 = Clock::now();
      const Verdict v = check_sc(QField::make(d), o);
      const double s = std::chrono::duration<double>(Clock::now() - t0).count();
      const bool hit = v.status == Status::Fails && v.power.size() == 1 && v.power[0].p == p &&
                       v.power[0].u_mod_p == 0 && v.power[0].u_mod_p2 % p == 0 && v.power[0].u_mod_p2 != 0 &&
                       s <= 300;
      ok = ok && hit;
      std::ostringstream m;
      m << (detail.empty() ? "" : "; ") << "d=" << d << " -> "
        << (v.power.empty() ? std::string("no witness") : "p=" + std::to_string(v.power[0].p)) << " in " << s << " s";
      detail += m.str();
    }
    return Outcome{ok, detail};
  });

  criterion(4, "search spot checks", 600, [] {
    ScanOptions opt;
    const auto a = hit_ds(scan_interval(2, 100'000, opt));
    const auto b = scan_interval(17'451'248'000ULL, 17'451'249'000ULL, opt);
    const bool corner = b.hits.size() == 1 && b.hits[0].d == 17'451'248'829ULL && b.hits[0].dY && !b.hits[0].dy;
    const bool ok = a == std::vector<u64>{46, 430, 1817, 58254} && corner;
    return Outcome{ok, "[2, 1e5] -> " + join(a) + "; [17451248000, 17451249000] -> " + join(hit_ds(b)) +
                           (corner ? " with d | Y, d !| y" : "")};
  });

  criterion(5, "large step == small step on 1000 random d in [1e6, 1e9], m = d", 1200, [] {
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<u64> dist(1'000'000, 1'000'000'000);
    int n = 0, bad = 0;
    while (n < 1000) {
      const u64 d = dist(rng);
      if (!is_squarefree(d)) continue;
      ++n;
      const QField K = QField::make(d);
      if (!unit_residue_fast(K, d).same_unit(unit_residue(K, d))) ++bad;
    }
    return Outcome{bad == 0, std::to_string(n) + " fields, " + std::to_string(bad) + " mismatches"};
  });

  criterion(6, "property suites, squarefree d <= 1e4", 1800, [] {
    int n = 0;
    std::map<std::string, int> bad;
    int literal_rc_misses = 0, rc_holds = 0;
    for (u64 d = 2; d <= 10'000; ++d) {
      if (!is_squarefree(d)) continue;
      ++n;
      const QField K = QField::make(d);
      const UnitData e = fundamental_unit_exact(K);
      const mpz_class D(static_cast<unsigned long>(d));
      // norm identity in both coordinates
      const mpz_class s = K.shape() == OmegaShape::Half ? 2 * e.x + e.y : e.x;
      const mpz_class t = K.shape() == OmegaShape::Half ? mpz_class(e.y) : e.y;
      const int scale = K.shape() == OmegaShape::Half ? 4 : 1;
      if (s * s - D * t * t != scale * e.norm_sign || e.X * e.X - D * e.Y * e.Y != e.norm_sign) ++bad["norm"];
      // (-1)^period
      if ((e.period_len % 2 ? -1 : 1) != e.norm_sign || sqrt_period_odd(d) != (e.norm_sign == -1)) ++bad["period"];
      // X + Y sqrt d is eps or eps^3; eps = (s + t sqrt d) / scale^(1/2)
      {
        mpz_class a = s, b = t;  // (a + b sqrt d) / 2 for Half, a + b sqrt d otherwise
        if (e.index == 3) {
          const mpz_class a3 = a * a * a + 3 * a * b * b * D, b3 = 3 * a * a * b + b * b * b * D;
          a = a3, b = b3;
          if (K.shape() == OmegaShape::Half) a /= 4, b /= 4;
        }
        if (K.shape() == OmegaShape::Half) {
          if (a % 2 != 0 || b % 2 != 0)
            ++bad["X+Y sqrt d"];
          else
            a /= 2, b /= 2;
        }
        if ((e.index != 1 && e.index != 3) || a != e.X || b != e.Y) ++bad["X+Y sqrt d"];
      }
      // divisibility chain
      const bool dy = e.y % D == 0, dY = e.Y % D == 0, d3y = (3 * e.y) % D == 0;
      if ((dy && !dY) || (dY && !d3y)) ++bad["chain"];
      // RC biconditional against a direct conductor scan
      const u64 h = class_number(K).value;
      const bool rc = check_rc(K).status == Status::Holds;
      rc_holds += rc;
      std::vector<u64> fs;
      for (u64 f = 2; f <= 1000; ++f) fs.push_back(f);
      const bool literal = rc_scan(K, h, e, fs);
      std::vector<u64> extra;
      for (const auto& pp : factor(K.disc()))
        if (pp.prime > 1000) extra.push_back(pp.prime);
      const bool full = literal && rc_scan(K, h, e, extra);
      if (rc != full) ++bad["RC"];
      if (rc != literal) ++literal_rc_misses;
      // D_d empty iff d | y where a shape applies
      if (h == 2 && emptiness_shape(K)) {
        if (!emptiness_eval(K, std::max<u64>(1000, d)).consistent) ++bad["emptiness"];
      }
    }
    // two-prime d = pq, p = 1, q = 3 mod 4
    int pairs = 0, type4 = 0;
    for (u64 p = 5; p * 3 <= 10'000; p += 4) {
      if (!is_prime(p)) continue;
      for (u64 q = 3; p * q <= 10'000; q += 4) {
        if (!is_prime(q)) continue;
        ++pairs;
        const QField K = QField::make(p * q);
        const bool y_even = *unit_residue(K, 2 * p * q).alpha == 0;
        const NormEquationReport r = norm_equation_decide(p, q);
        auto verified = [](const auto& w, const mpz_class& c1, const mpz_class& c2, int m) {
          if (!w) return false;
          const mpz_class v = c1 * w->first * w->first - c2 * w->second * w->second;
          return v == m || v == -m;
        };
        const mpz_class P(static_cast<unsigned long>(p)), Q(static_cast<unsigned long>(q));
        const bool ok = y_even ? verified(r.pq1, P, Q, 1)
                               : (verified(r.pq2, P, Q, 2) || verified(r.d2, mpz_class(1), P * Q, 2));
        if (!ok) ++bad["norm equation"];
        if (class_number(K).value == 2) {
          ++type4;
          const Type4Report t = type4_eval(K, std::max<u64>(1000, p * q));
          if (t.by_parity != t.by_symbol || !t.parity_link_holds || t.only_two != t.by_parity || t.fault)
            ++bad["type4"];
        }
      }
    }
    int total = 0;
    std::string detail = std::to_string(n) + " d, " + std::to_string(pairs) + " pq pairs (" + std::to_string(type4) +
                         " with h = 2), RC holds for " + std::to_string(rc_holds) + " d; violations:";
    for (const char* k : {"norm", "period", "X+Y sqrt d", "chain", "RC", "norm equation", "type4", "emptiness"}) {
      detail += std::string(" ") + k + "=" + std::to_string(bad[k]);
      total += bad[k];
    }
    detail += "; conductor scans cover f <= 1000 plus ramified primes (f <= 1000 alone misses " +
              std::to_string(literal_rc_misses) + " RC witnesses)";
    return Outcome{total == 0, detail};
  });

  criterion(7, "determinism and resume on [2, 1e6]", 1800, [] {
    std::string base;
    bool same = true;
    for (int w : {1, 4, 16}) {
      ScanOptions opt;
      opt.workers = w;
      opt.shard_width = 50'000;
      const std::string out = results_jsonl(scan_interval(2, 1'000'000, opt).hits);
      if (base.empty()) base = out;
      same = same && out == base;
    }
    const std::string ck = "/tmp/qunit_acceptance_" + std::to_string(::getpid()) + ".jsonl";
    std::remove(ck.c_str());
    CancellationToken tok;
    ScanOptions opt;
    opt.workers = 4;
    opt.shard_width = 50'000;
    opt.checkpoint = ck;
    opt.cancel = &tok;
    int done = 0;
    opt.on_shard_done = [&](const Shard&) {
      if (++done == 7) tok.cancel();
    };
    bool cancelled = false;
    try {
      scan_interval(2, 1'000'000, opt);
    } catch (const CancelledError&) {
      cancelled = true;
    }
    CancellationToken fresh;
    opt.cancel = &fresh;
    opt.on_shard_done = nullptr;
    const ScanResult resumed = scan_interval(2, 1'000'000, opt);
    std::remove(ck.c_str());
    const bool resume_ok = cancelled && resumed.shards_resumed >= 7 && results_jsonl(resumed.hits) == base;
    const std::size_t hits = std::count(base.begin(), base.end(), '\n');
    return Outcome{same && resume_ok, std::to_string(hits) + " hits; workers 1/4/16 " +
                                          (same ? "byte-identical" : "DIFFER") + "; resume after " +
                                          std::to_string(resumed.shards_resumed) + "/" +
                                          std::to_string(resumed.shards) + " shards " +
                                          (resume_ok ? "byte-identical" : "DIFFERS")};
  });

  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
