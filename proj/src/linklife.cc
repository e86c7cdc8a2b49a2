#include "dbmf/linklife.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace dbmf
{

RssWindow::RssWindow (std::size_t capacity, double intv)
  : m_capacity (capacity),
    m_intv (intv)
{
  if (capacity < 2)
    {
      throw std::invalid_argument ("RssWindow capacity must be at least 2");
    }
  if (!(intv > 0.0))
    {
      throw std::invalid_argument ("RssWindow interval must be positive");
    }
}

void
RssWindow::Add (double timestamp, double rec_pow)
{
  if (!m_samples.empty ())
    {
      double gap = timestamp - m_samples.back ().timestamp;
      if (!(gap > 0.0))
        {
          throw std::invalid_argument ("RssWindow timestamps must increase");
        }
      if (gap > 1.5 * m_intv)
        {
          m_samples.clear ();
        }
    }
  m_samples.push_back ({timestamp, rec_pow});
  if (m_samples.size () > m_capacity)
    {
      m_samples.pop_front ();
    }
}

RelativeMobility
EstimateRelativeMobility (const RssWindow &window, const RadioParams &radio)
{
  const auto &samples = window.Samples ();
  if (samples.size () < 2)
    {
      throw InsufficientSamples ("relative mobility needs two Hello samples");
    }
  double first = DistanceFromRss (radio, samples.front ().rec_pow);
  double last = DistanceFromRss (radio, samples.back ().rec_pow);
  double span = static_cast<double> (samples.size () - 1) * window.Interval ();
  return {(last - first) / span, last};
}

double
LinkPrediction (double rad_rng, double current_distance, double avg_rel_mob, double lp_cap)
{
  if (avg_rel_mob <= kMobilityEpsilon)
    {
      return lp_cap;
    }
  double lp = (rad_rng - current_distance) / avg_rel_mob;
  return std::clamp (lp, 0.0, lp_cap);
}

double
Squash (double x)
{
  if (x < 0.0 || std::isnan (x))
    {
      throw NegativeInput ("Squash is defined on [0, inf)");
    }
  double e = std::exp (-x);
  double v = -std::expm1 (-x) / (1.0 + e);
  // keep the open upper bound once the value rounds to 1
  return std::min (v, std::nextafter (1.0, 0.0));
}

MobilityEstimate
EstimateMobility (const RssWindow &window, const RadioParams &radio, double rad_rng, double lp_cap)
{
  MobilityEstimate est;
  for (const auto &s : window.Samples ())
    {
      est.distances.push_back (DistanceFromRss (radio, s.rec_pow));
    }
  RelativeMobility rm = EstimateRelativeMobility (window, radio);
  est.current_distance = rm.current_distance;
  est.avg_rel_mob = rm.avg_rel_mob;
  est.lp = LinkPrediction (rad_rng, rm.current_distance, rm.avg_rel_mob, lp_cap);
  est.lpm = Squash (est.lp);
  return est;
}

Rates
AggregateRates (const TrafficState &traffic, const EnergyProfile &profile)
{
  const auto &arr = traffic.per_path_arrival;
  const auto &dept = traffic.per_path_departure;
  Rates r{std::accumulate (arr.begin (), arr.end (), 0.0),
          std::accumulate (dept.begin (), dept.end (), 0.0)};
  if (r.data_arr > profile.max_arrival)
    {
      throw CapacityExceeded ("arrival rate exceeds node capacity");
    }
  if (r.data_dept > profile.max_departure)
    {
      throw CapacityExceeded ("departure rate exceeds node capacity");
    }
  return r;
}

double
TransmissionEnergyRate (const EnergyProfile &profile, double data_dept)
{
  return profile.send_cost * data_dept;
}

double
ReceptionEnergyRate (const EnergyProfile &profile)
{
  return profile.recv_cost * profile.max_arrival;
}

double
ActiveTime (double total_packets, double per_packet_time)
{
  return total_packets * per_packet_time;
}

double
TotalEnergyConsumption (double active_time, double trans_rate, double recv_rate)
{
  return active_time * (trans_rate + recv_rate);
}

bool
IsOperational (const EnergyProfile &profile, double projected_consumption)
{
  return 0.6 * profile.initial_energy - profile.consumed_energy - projected_consumption >= 0.0;
}

double
LinkEnergyDuration (double at_j, bool op_j, double at_k, bool op_k)
{
  return op_j && op_k ? std::min (at_j, at_k) : 0.0;
}

double
DropRatio (std::uint64_t arrived_total, std::uint64_t departed_plus_queued)
{
  if (departed_plus_queued > arrived_total)
    {
      throw InconsistentCounters ("more packets left the node than arrived");
    }
  if (arrived_total == 0)
    {
      // alternatives would be 0.0 (pessimistic) or excluding the link
      return 1.0;
    }
  double drops = static_cast<double> (arrived_total - departed_plus_queued);
  return 1.0 - drops / static_cast<double> (arrived_total);
}

EnergyEstimate
EstimateEnergy (const EnergyProfile &profile, const TrafficState &traffic, double total_packets)
{
  EnergyEstimate est;
  bool within_capacity = true;
  Rates rates{};
  try
    {
      rates = AggregateRates (traffic, profile);
    }
  catch (const CapacityExceeded &)
    {
      within_capacity = false;
      const auto &dept = traffic.per_path_departure;
      rates.data_dept = std::accumulate (dept.begin (), dept.end (), 0.0);
    }
  est.trans_rate = TransmissionEnergyRate (profile, rates.data_dept);
  est.recv_rate = ReceptionEnergyRate (profile);
  est.per_packet_time = 1.0 / profile.max_departure;
  est.active_time = ActiveTime (total_packets, est.per_packet_time);
  est.total_consumption = TotalEnergyConsumption (est.active_time, est.trans_rate, est.recv_rate);
  est.operational = within_capacity && IsOperational (profile, est.total_consumption);
  return est;
}

LinkEnergy
PairEnergy (const EnergyEstimate &j, const EnergyEstimate &k)
{
  double le = LinkEnergyDuration (j.active_time, j.operational, k.active_time, k.operational);
  return {le, Squash (le)};
}

FuzzyLabel
LabelOf (double value, LabelScale scale)
{
  if (!(value >= 0.0 && value <= 1.0))
    {
      throw OutOfRange ("label input must lie in [0, 1]");
    }
  static constexpr std::array<double, 3> kUniform{0.25, 0.50, 0.75};
  static constexpr std::array<double, 3> kEnergy{0.40, 0.60, 0.80};
  const auto &cuts = scale == LabelScale::Lpe ? kEnergy : kUniform;
  int idx = 0;
  while (idx < 3 && value >= cuts[idx])
    {
      ++idx;
    }
  return static_cast<FuzzyLabel> (idx);
}

namespace
{

using Table = std::array<std::array<FuzzyLabel, 4>, 4>;
constexpr FuzzyLabel a = FuzzyLabel::A;
constexpr FuzzyLabel b = FuzzyLabel::B;
constexpr FuzzyLabel c = FuzzyLabel::C;
constexpr FuzzyLabel d = FuzzyLabel::D;

// rows: LPE label, columns: LPM label
constexpr Table kTmTable{{
  {a, a, a, a},
  {a, b, c, c},
  {b, c, c, d},
  {c, c, d, d},
}};

// rows: DPR label, columns: TM label
constexpr Table kLinkLifeTable{{
  {a, a, a, a},
  {a, b, c, c},
  {b, c, c, d},
  {c, c, d, d},
}};

std::size_t
Idx (FuzzyLabel l)
{
  return static_cast<std::size_t> (l);
}

void
PrintTable (std::ostream &os, const char *name, const char *rows, const char *cols, const Table &t)
{
  os << "table " << name << " rows=" << rows << " cols=" << cols << "\n";
  os << "  a b c d\n";
  for (std::size_t r = 0; r < 4; ++r)
    {
      os << ToChar (static_cast<FuzzyLabel> (r));
      for (std::size_t col = 0; col < 4; ++col)
        {
          os << ' ' << ToChar (t[r][col]);
        }
      os << "\n";
    }
}

} // namespace

FuzzyLabel
CombineTm (FuzzyLabel lpm_label, FuzzyLabel lpe_label)
{
  return kTmTable[Idx (lpe_label)][Idx (lpm_label)];
}

FuzzyLabel
CombineLinkLife (FuzzyLabel tm, FuzzyLabel dpr_label)
{
  return kLinkLifeTable[Idx (dpr_label)][Idx (tm)];
}

FuzzyLabel
RouteLife (std::span<const FuzzyLabel> link_labels)
{
  return LabelMin (link_labels);
}

LinkLifeEstimate
EvaluateLink (double lpm, double lpe, double dpr)
{
  LinkLifeEstimate est;
  est.lpm = lpm;
  est.lpe = lpe;
  est.dpr = dpr;
  est.tm = CombineTm (LabelOf (lpm, LabelScale::Lpm), LabelOf (lpe, LabelScale::Lpe));
  est.link_life = CombineLinkLife (est.tm, LabelOf (dpr, LabelScale::Dpr));
  return est;
}

std::string
RuleTablesText ()
{
  std::ostringstream os;
  PrintTable (os, "tm", "lpe", "lpm", kTmTable);
  PrintTable (os, "link_life", "dpr", "tm", kLinkLifeTable);
  return os.str ();
}

} // namespace dbmf
