// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include "dbmf/engine.h"
#include "dbmf/linklife.h"
#include "dbmf/matrix.h"
#include "dbmf/mobility.h"
#include "dbmf/random.h"
#include "dbmf/report.h"
#include "dbmf/routing.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace dbmf;

namespace
{

struct Verdict
{
  bool pass = true;
  std::string detail;

  void Require (bool ok, const std::string &what)
  {
    if (!ok)
      {
        pass = false;
        detail += (detail.empty () ? "" : "; ") + what;
      }
  }
};

int g_failures = 0;

void
Report (int id, const char *name, const std::function<Verdict ()> &check)
{
  auto t0 = std::chrono::steady_clock::now ();
  Verdict v;
  try
    {
      v = check ();
    }
  catch (const std::exception &e)
    {
      v.pass = false;
      v.detail = std::string ("exception: ") + e.what ();
    }
  double secs = std::chrono::duration<double> (std::chrono::steady_clock::now () - t0).count ();
  if (!v.pass)
    {
      ++g_failures;
    }
  std::printf ("%s criterion %d: %s [%.2fs]%s%s\n", v.pass ? "PASS" : "FAIL", id, name, secs,
               v.detail.empty () ? "" : " -- ", v.detail.c_str ());
  std::fflush (stdout);
}

std::string
Fmt (const char *fmt, double a, double b = 0, double c = 0, double d = 0)
{
  char buf[256];
  std::snprintf (buf, sizeof (buf), fmt, a, b, c, d);
  return buf;
}

// every run made here passes through this, so conservation is checked on all of them
std::uint64_t g_runs = 0;
std::uint64_t g_unbalanced = 0;

void
Account (const RunResult &r)
{
  ++g_runs;
  if (r.report.generated != r.report.delivered + r.report.dropped + r.in_flight)
    {
      ++g_unbalanced;
    }
}

RunResult
Simulate (Simulator &sim)
{
  sim.Run ();
  RunResult r = sim.Result ();
  Account (r);
  return r;
}

RunResult
Simulate (const ScenarioConfig &cfg, TraceMode mode = TraceMode::None)
{
  Simulator sim (cfg, mode);
  return Simulate (sim);
}

// one-sided sign test: P(X >= wins) for X ~ Bin(wins + losses, 1/2)
double
SignTestP (int wins, int losses)
{
  int n = wins + losses;
  if (n == 0)
    {
      return 1.0;
    }
  double p = 0.0;
  for (int k = wins; k <= n; ++k)
    {
      p += std::exp (std::lgamma (n + 1.0) - std::lgamma (k + 1.0) - std::lgamma (n - k + 1.0) - n * std::log (2.0));
    }
  return std::min (1.0, p);
}

ScenarioConfig
StaticWorld (std::uint32_t n)
{
  ScenarioConfig cfg;
  cfg.node_count = n;
  cfg.area_width = 100;
  cfg.area_height = 100;
  cfg.speed_min = cfg.speed_max = 1.0;
  cfg.flows = {};
  return cfg;
}

// ---------------------------------------------------------------------------

Verdict
FuzzyTables ()
{
  // rows = first-table row input (LPE, then DPR), cols = a..d of the other input
  const char *expected[4] = {"aaaa", "abcc", "bccd", "ccdd"};
  const FuzzyLabel all[] = {FuzzyLabel::A, FuzzyLabel::B, FuzzyLabel::C, FuzzyLabel::D};
  Verdict v;
  int cells = 0;
  for (int row = 0; row < 4; ++row)
    {
      for (int col = 0; col < 4; ++col)
        {
          FuzzyLabel want = LabelFromChar (expected[row][col]);
          FuzzyLabel tm = CombineTm (all[col], all[row]); // (lpm, lpe)
          FuzzyLabel life = CombineLinkLife (all[col], all[row]); // (tm, dpr)
          v.Require (tm == want, Fmt ("tm(lpm=%g,lpe=%g)", col, row));
          v.Require (life == want, Fmt ("link_life(tm=%g,dpr=%g)", col, row));
          cells += 2;
        }
    }
  v.Require (CombineTm (FuzzyLabel::D, FuzzyLabel::A) == FuzzyLabel::A, "tm(d,a)");
  v.Require (CombineLinkLife (FuzzyLabel::D, FuzzyLabel::D) == FuzzyLabel::D, "link_life(d,d)");
  if (v.pass)
    {
      v.detail = std::to_string (cells) + " cells exact";
    }
  return v;
}

Verdict
SquashCurve ()
{
  Verdict v;
  v.Require (Squash (0.0) == 0.0, "squash(0) != 0");
  double worst = 0.0;
  double prev = -1.0;
  bool monotone = true;
  const int n = 10000;
  for (int i = 0; i < n; ++i)
    {
      double x = 50.0 * i / (n - 1);
      double s = Squash (x);
      worst = std::max (worst, std::abs (s - std::tanh (x / 2.0)));
      v.Require (s < 1.0 || x > 36.0, Fmt ("squash(%g) reached 1", x));
      // strict wherever the true step exceeds one ulp; never decreasing
      long double step = i == 0 ? 1.0L : std::tanh (static_cast<long double> (x) / 2) - std::tanh (static_cast<long double> (50.0 * (i - 1) / (n - 1)) / 2);
      if (s < prev || (s == prev && step > 0x1.0p-52L))
        {
          monotone = false;
        }
      v.Require (s <= 1.0, "above 1");
      prev = s;
    }
  v.Require (monotone, "not increasing");
  v.Require (worst <= 1e-12, Fmt ("max |squash - tanh(x/2)| = %.3g", worst));
  // supremum: the complement keeps shrinking and stays positive where representable
  v.Require (1.0 - Squash (30.0) > 0.0 && 1.0 - Squash (30.0) < 1.0 - Squash (20.0), "sup");
  if (v.pass)
    {
      v.detail = Fmt ("max deviation %.3g", worst);
    }
  return v;
}

Verdict
FriisRoundtrip ()
{
  Verdict v;
  Rng rng (2024);
  double worst = 0.0;
  for (int q : {2, 3})
    {
      for (int i = 0; i < 1000; ++i)
        {
          RadioParams radio{rng.Uniform (0.1, 10.0), rng.Uniform (0.1, 10.0), q, 50.0};
          double d = rng.Uniform (0.5, 500.0);
          double back = DistanceFromRss (radio, RssAt (radio, d));
          worst = std::max (worst, std::abs (back - d) / d);
          double p = RssAt (radio, d);
          double again = RssAt (radio, DistanceFromRss (radio, p));
          worst = std::max (worst, std::abs (again - p) / p);
        }
    }
  v.Require (worst <= 1e-9, Fmt ("worst relative error %.3g", worst));
  if (v.pass)
    {
      v.detail = Fmt ("worst relative error %.3g", worst);
    }
  return v;
}

Verdict
Telescoping ()
{
  Verdict v;
  Rng rng (77);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t)
    {
      std::size_t m = 2 + rng.Below (9);
      double intv = rng.Uniform (0.1, 5.0);
      RadioParams radio{rng.Uniform (0.5, 2.0), rng.Uniform (0.5, 2.0), t % 2 ? 3 : 2, 50.0};
      RssWindow w (m, intv);
      for (std::size_t i = 0; i < m; ++i)
        {
          w.Add (i * intv, RssAt (radio, rng.Uniform (1.0, 60.0)));
        }
      double sum = 0.0;
      for (std::size_t i = 0; i + 1 < m; ++i)
        {
          sum += DistanceFromRss (radio, w.Samples ()[i + 1].rec_pow) - DistanceFromRss (radio, w.Samples ()[i].rec_pow);
        }
      double explicit_form = sum / ((m - 1) * intv);
      double slope = EstimateRelativeMobility (w, radio).avg_rel_mob;
      worst = std::max (worst, std::abs (slope - explicit_form) / std::max (1.0, std::abs (explicit_form)));
    }
  v.Require (worst <= 1e-12, Fmt ("worst deviation %.3g", worst));
  if (v.pass)
    {
      v.detail = Fmt ("worst deviation %.3g", worst);
    }
  return v;
}

/// Largest remainder in exact integer arithmetic on integer delays.
/// Returns false when the cut-off falls on a remainder tie (either outcome is valid).
bool
PartitionOracle (std::uint64_t total, const std::vector<std::uint64_t> &delays, std::vector<std::uint64_t> &out)
{
  const std::size_t n = delays.size ();
  std::vector<unsigned __int128> w (n, 1);
  for (std::size_t i = 0; i < n; ++i)
    {
      for (std::size_t j = 0; j < n; ++j)
        {
          if (j != i)
            {
              w[i] *= delays[j];
            }
        }
    }
  unsigned __int128 sum = 0;
  for (auto x : w)
    {
      sum += x;
    }
  out.assign (n, 0);
  std::vector<unsigned __int128> rem (n);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i)
    {
      unsigned __int128 num = static_cast<unsigned __int128> (total) * w[i];
      out[i] = static_cast<std::uint64_t> (num / sum);
      rem[i] = num % sum;
      assigned += out[i];
    }
  std::vector<std::size_t> order (n);
  std::iota (order.begin (), order.end (), 0);
  std::stable_sort (order.begin (), order.end (), [&] (std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  std::uint64_t left = total - assigned;
  for (std::uint64_t k = 0; k < left; ++k)
    {
      ++out[order[k]];
    }
  return left == 0 || left == n || rem[order[left - 1]] != rem[order[left]];
}

Verdict
PartitionCheck ()
{
  Verdict v;
  std::vector<double> example{1, 2, 4};
  v.Require (Partition (100, example) == std::vector<std::uint64_t>{57, 29, 14}, "[1,2,4] x 100 != [57,29,14]");
  Rng rng (15);
  int compared = 0;
  for (int t = 0; t < 10000; ++t)
    {
      std::size_t n = 1 + rng.Below (5);
      std::uint64_t total = rng.Below (10001);
      std::vector<std::uint64_t> idelays;
      std::vector<double> delays;
      for (std::size_t i = 0; i < n; ++i)
        {
          idelays.push_back (1 + rng.Below (200));
          delays.push_back (static_cast<double> (idelays.back ()));
        }
      auto got = Partition (total, delays);
      std::uint64_t s = std::accumulate (got.begin (), got.end (), std::uint64_t{0});
      if (s != total)
        {
          v.Require (false, "sum mismatch");
          break;
        }
      long double inv = 0;
      for (double d : delays)
        {
          inv += 1.0L / d;
        }
      bool within = true;
      for (std::size_t i = 0; i < n; ++i)
        {
          long double ideal = total / (delays[i] * inv);
          within = within && std::fabs (static_cast<long double> (got[i]) - ideal) <= 1.0L;
        }
      if (!within)
        {
          v.Require (false, "share off by more than one");
          break;
        }
      std::vector<std::uint64_t> want;
      if (PartitionOracle (total, idelays, want))
        {
          ++compared;
          if (got != want)
            {
              v.Require (false, "disagrees with the exact largest-remainder oracle");
              break;
            }
        }
    }
  if (v.pass)
    {
      v.detail = "10000 fuzz cases, " + std::to_string (compared) + " matched the exact oracle";
    }
  return v;
}

Verdict
Operability ()
{
  Verdict v;
  std::uint64_t tx = 0, violations = 0, deaths = 0, runs = 0;
  auto scan = [&] (const ScenarioConfig &cfg) {
    Simulator sim (cfg);
    const double floor = 0.4 * cfg.energy_initial;
    sim.SetTraceListener ([&] (std::string_view line) {
      if (line.find ("|QueueService|") != std::string_view::npos && line.find ("|tx=1") != std::string_view::npos)
        {
          auto at = line.find ("|energy=");
          double e = std::stod (std::string (line.substr (at + 8, line.find ('|', at + 1) - at - 8)));
          ++tx;
          if (e < floor)
            {
              ++violations;
            }
        }
      if (line.find ("|state=dead|") != std::string_view::npos)
        {
          ++deaths;
        }
    });
    Simulate (sim);
    ++runs;
  };
  for (Protocol p : {Protocol::Dbmf, Protocol::SinglePath, Protocol::Mmre, Protocol::Zd})
    {
      for (std::uint64_t seed : {1, 2, 3})
        {
          ScenarioConfig cfg;
          cfg.protocol = p;
          cfg.seed = seed;
          cfg.node_count = 30;
          cfg.area_width = cfg.area_height = 200;
          scan (cfg);
          cfg.energy_initial = 3.0; // starved: nodes die mid-run
          scan (cfg);
        }
    }
  v.Require (violations == 0, std::to_string (violations) + " transmissions below 40% energy");
  v.Require (deaths > 0, "no node died, rule never exercised");
  v.Require (tx > 0, "nothing transmitted");

  // relay alive (41% left) but unable to afford the projected traffic
  ScenarioConfig cfg = StaticWorld (3);
  Simulator sim (cfg);
  sim.PlaceNodes ({{10, 50}, {50, 50}, {90, 50}});
  sim.Node (1).energy.consumed_energy = 0.59 * cfg.energy_initial;
  sim.RunUntil (3.0);
  auto found = Discover (sim, 0, 2);
  std::uint64_t zero = 0, relay_links = 0;
  for (const auto &a : sim.Annotations ())
    {
      if (a.from == 1 || a.to == 1)
        {
          ++relay_links;
          zero += a.le == 0.0 && a.estimate.lpe == 0.0;
        }
    }
  v.Require (sim.Node (1).alive, "starved relay died");
  v.Require (relay_links > 0 && zero == relay_links, "LE != 0 on a starved relay link");
  v.Require (!found.empty (), "no route through the starved relay");
  if (v.pass)
    {
      v.detail = std::to_string (runs) + " runs, " + std::to_string (tx) + " transmissions scanned, "
                 + std::to_string (deaths) + " deaths, LE=0 on " + std::to_string (relay_links)
                 + " starved-relay annotations";
    }
  return v;
}

Verdict
Determinism ()
{
  Verdict v;
  ScenarioConfig cfg;
  for (Protocol p : {Protocol::Dbmf, Protocol::Mmre})
    {
      cfg.protocol = p;
      auto a = Simulate (cfg, TraceMode::Text);
      auto b = Simulate (cfg, TraceMode::Text);
      v.Require (!a.trace.empty () && a.trace == b.trace, "trace differs");
      v.Require (ToCsv ({a.report}) == ToCsv ({b.report}), "CSV differs");
    }
  MatrixSpec spec;
  spec.base = ScenarioConfig{};
  spec.base.sim_duration = 50;
  spec.node_counts = {20, 50};
  spec.protocols = {Protocol::Dbmf, Protocol::SinglePath, Protocol::Mmre, Protocol::Zd};
  spec.seeds = {1, 2, 3};
  spec.speeds = {10.0};
  auto runs = ExpandMatrix (spec);
  for (const auto &r : runs)
    {
      Simulate (r);
    }
  auto one = RunMatrix (spec, 1);
  auto four = RunMatrix (spec, 4);
  v.Require (one == four, "CSV depends on parallelism");
  v.Require (g_unbalanced == 0, std::to_string (g_unbalanced) + " runs break conservation");
  if (v.pass)
    {
      v.detail = "conservation exact on " + std::to_string (g_runs) + " runs so far";
    }
  return v;
}

Verdict
Directional ()
{
  Verdict v;
  const std::vector<std::uint32_t> sizes{20, 50, 100};
  const std::vector<Protocol> protocols{Protocol::Dbmf, Protocol::Mmre, Protocol::Zd};
  std::map<std::tuple<Protocol, std::uint32_t, std::uint64_t>, MetricsReport> out;
  for (Protocol p : protocols)
    {
      for (std::uint32_t n : sizes)
        {
          for (std::uint64_t seed = 1; seed <= 10; ++seed)
            {
              ScenarioConfig cfg;
              cfg.protocol = p;
              cfg.node_count = n;
              cfg.area_width = cfg.area_height = 500;
              cfg.speed_min = cfg.speed_max = 10;
              cfg.radio_range_min = cfg.radio_range_max = 50;
              cfg.seed = seed;
              cfg.flows[0].src = 0;
              cfg.flows[0].dst = n - 1;
              out[{p, n, seed}] = Simulate (cfg).report;
            }
        }
    }

  auto compare = [&] (const char *metric, Protocol base, std::function<double (const MetricsReport &)> get,
                      bool higher_better, bool growth) {
    int wins = 0, losses = 0;
    double mean_d = 0, mean_b = 0;
    int count = 0;
    auto value = [&] (Protocol p, std::uint32_t n, std::uint64_t s) { return get (out[{p, n, s}]); };
    for (std::uint64_t s = 1; s <= 10; ++s)
      {
        std::vector<std::pair<double, double>> pairs;
        if (growth)
          {
            pairs.push_back ({value (Protocol::Dbmf, 100, s) - value (Protocol::Dbmf, 20, s),
                              value (base, 100, s) - value (base, 20, s)});
          }
        else
          {
            for (std::uint32_t n : sizes)
              {
                pairs.push_back ({value (Protocol::Dbmf, n, s), value (base, n, s)});
              }
          }
        for (auto [d, b] : pairs)
          {
            mean_d += d;
            mean_b += b;
            ++count;
            bool better = higher_better ? d > b : d < b;
            bool worse = higher_better ? d < b : d > b;
            wins += better;
            losses += worse;
          }
      }
    mean_d /= count;
    mean_b /= count;
    double p = SignTestP (wins, losses);
    bool ordered = higher_better ? mean_d > mean_b : mean_d < mean_b;
    std::string line = std::string (metric) + " vs " + std::string (ToString (base))
                       + Fmt (": dbmf %.4g vs %.4g, sign %g/%g", mean_d, mean_b, wins, losses)
                       + Fmt (", p=%.3g", p);
    std::printf ("  %s %s\n", ordered && p < 0.05 ? "ok  " : "miss", line.c_str ());
    v.Require (ordered && p < 0.05, line);
  };

  for (Protocol base : {Protocol::Mmre, Protocol::Zd})
    {
      compare ("pdr", base, [] (const MetricsReport &m) { return m.pdr; }, true, false);
      compare ("delay_ms", base, [] (const MetricsReport &m) { return m.avg_delay; }, false, false);
      compare ("drop_growth_20_to_100", base, [] (const MetricsReport &m) { return m.drop_rate; }, false, true);
    }
  if (v.pass)
    {
      v.detail = "all six orderings significant";
    }
  return v;
}

Verdict
QueueBalance ()
{
  Verdict v;
  ScenarioConfig cfg = StaticWorld (2);
  const double service = 50.0, offered = 60.0, duration = 200.0, warmup = 20.0;
  cfg.max_departure_rate = service;
  cfg.max_arrival_rate = 100.0;
  cfg.energy_initial = 1e6;
  cfg.sim_duration = duration;
  cfg.protocol = Protocol::SinglePath;
  Flow f;
  f.src = 0;
  f.dst = 1;
  f.offered_rate = offered;
  f.total_packets = static_cast<std::uint64_t> (offered * duration);
  f.start_time = 1.0;
  cfg.flows = {f};
  Simulator sim (cfg);
  sim.PlaceNodes ({{20, 50}, {60, 50}});
  auto r = Simulate (sim);
  std::uint64_t overflow = 0;
  for (const auto &p : sim.Packets ())
    {
      if (p.status == PacketStatus::Dropped && p.reason == DropReason::QueueOverflow && p.dropped_at >= warmup)
        {
          ++overflow;
        }
    }
  const double measured = overflow / (duration - warmup);
  const double expected = offered - service; // balance: arrivals in = service out + drops
  v.Require (std::abs (measured - expected) <= 0.05 * expected,
             Fmt ("steady drop rate %.4g pkt/s, expected %.4g", measured, expected));
  v.Require (r.report.drops_link == 0 && r.report.drops_dead == 0, "unexpected non-queue drops");
  if (v.pass)
    {
      v.detail = Fmt ("steady drop rate %.4g pkt/s vs %.4g", measured, expected);
    }
  return v;
}

} // namespace

int
main ()
{
  Report (1, "fuzzy rule tables exact", FuzzyTables);
  Report (2, "squash curve", SquashCurve);
  Report (3, "distance/RSS roundtrip", FriisRoundtrip);
  Report (4, "endpoint slope equals difference sum", Telescoping);
  Report (5, "largest-remainder partition", PartitionCheck);
  Report (6, "operability rule and zero energy duration", Operability);
  Report (8, "directional ordering against the baselines", Directional);
  Report (9, "queue overflow balance", QueueBalance);
  // last, so conservation covers every run above
  Report (7, "conservation and determinism", Determinism);
  return g_failures == 0 ? 0 : 1;
}
