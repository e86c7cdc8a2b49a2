#ifndef DBMF_LINKLIFE_H
#define DBMF_LINKLIFE_H

#include "dbmf/mobility.h"
#include "dbmf/model.h"

#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dbmf
{

struct InsufficientSamples : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};
struct NegativeInput : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};
struct CapacityExceeded : std::runtime_error
{
  using std::runtime_error::runtime_error;
};
struct InconsistentCounters : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};
struct OutOfRange : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

struct RssSample
{
  double timestamp; // s
  double rec_pow;
};

/**
 * Received-power history of one neighbour's Hellos, newest last.
 *
 * Holds at most `capacity` samples. A gap wider than 1.5 * intv since the
 * last sample means Hellos were missed; the stale history is discarded
 * before the new sample is stored.
 */
class RssWindow
{
public:
  RssWindow (std::size_t capacity, double intv);

  /// Throws std::invalid_argument unless timestamp is after the last sample.
  void Add (double timestamp, double rec_pow);
  void Clear () { m_samples.clear (); }

  std::size_t Size () const { return m_samples.size (); }
  std::size_t Capacity () const { return m_capacity; }
  double Interval () const { return m_intv; }
  const std::deque<RssSample> &Samples () const { return m_samples; }
  /// Timestamp of the newest sample; only meaningful when Size() > 0.
  double LastTimestamp () const { return m_samples.back ().timestamp; }

private:
  std::size_t m_capacity;
  double m_intv;
  std::deque<RssSample> m_samples;
};

struct RelativeMobility
{
  double avg_rel_mob; // m/s, positive = receding
  double current_distance; // m
};

struct MobilityEstimate
{
  std::vector<double> distances;
  double current_distance = 0.0;
  double avg_rel_mob = 0.0;
  double lp = 0.0; // s
  double lpm = 0.0;
};

/// Below this relative speed (m/s) a link is treated as static or closing.
inline constexpr double kMobilityEpsilon = 1e-6;

/**
 * Endpoint slope of the distance series recovered from the window:
 * (d_last - d_first) / ((m - 1) * intv). Needs at least two samples.
 */
RelativeMobility EstimateRelativeMobility (const RssWindow &window, const RadioParams &radio);

/// Seconds until the link is predicted to leave radio range, in [0, lp_cap].
double LinkPrediction (double rad_rng, double current_distance, double avg_rel_mob, double lp_cap);

/// (1 - e^-x) / (1 + e^-x), i.e. tanh(x / 2). Maps [0, inf) onto [0, 1).
double Squash (double x);

MobilityEstimate EstimateMobility (const RssWindow &window, const RadioParams &radio,
                                   double rad_rng, double lp_cap);

struct EnergyProfile
{
  double initial_energy = 0.0; // J
  double consumed_energy = 0.0; // J, cumulative
  double recv_cost = 0.0; // J/pkt
  double send_cost = 0.0; // J/pkt
  double max_arrival = 0.0; // pkt/s
  double max_departure = 0.0; // pkt/s

  double Remaining () const { return initial_energy - consumed_energy; }
};

struct TrafficState
{
  std::vector<double> per_path_arrival; // pkt/s, one entry per path through the node
  std::vector<double> per_path_departure;
  std::uint64_t arrived_total = 0;
  std::uint64_t departed_total = 0;
  std::uint64_t dropped_total = 0;
};

struct Rates
{
  double data_arr; // pkt/s
  double data_dept;
};

/// Sums the per-path rates. Throws CapacityExceeded past either maximum.
Rates AggregateRates (const TrafficState &traffic, const EnergyProfile &profile);

double TransmissionEnergyRate (const EnergyProfile &profile, double data_dept);

/// Worst-case reception budget: every arrival slot used.
double ReceptionEnergyRate (const EnergyProfile &profile);

/// Time the node must stay up to move total_packets at per_packet_time each.
double ActiveTime (double total_packets, double per_packet_time);

double TotalEnergyConsumption (double active_time, double trans_rate, double recv_rate);

/// A node stays operational while 40% of its initial energy would survive.
bool IsOperational (const EnergyProfile &profile, double projected_consumption);

/// min(at_j, at_k) when both nodes stay operational, otherwise 0.
double LinkEnergyDuration (double at_j, bool op_j, double at_k, bool op_k);

/**
 * 1 - drops / arrivals, where drops = arrived - (departed + queued).
 * A node that has seen no traffic scores 1.0: no evidence of loss.
 */
double DropRatio (std::uint64_t arrived_total, std::uint64_t departed_plus_queued);

struct EnergyEstimate
{
  double trans_rate = 0.0; // J/s
  double recv_rate = 0.0; // J/s
  double per_packet_time = 0.0; // s/pkt
  double active_time = 0.0; // s
  double total_consumption = 0.0; // J
  bool operational = false;
  double le = 0.0; // s, filled by PairEnergy
  double lpe = 0.0;
};

/**
 * Per-node half of the energy prediction. per_packet_time is taken as
 * 1 / max_departure. A node whose rates break its capacity is reported as
 * not operational.
 */
EnergyEstimate EstimateEnergy (const EnergyProfile &profile, const TrafficState &traffic,
                               double total_packets);

struct LinkEnergy
{
  double le;
  double lpe;
};

LinkEnergy PairEnergy (const EnergyEstimate &j, const EnergyEstimate &k);

enum class LabelScale
{
  Lpm,
  Lpe,
  Dpr,
  LinkLife,
};

/// Crisp-range lookup; intervals are [lo, hi) except the last, which is closed.
FuzzyLabel LabelOf (double value, LabelScale scale);

/// Rule table combining mobility and energy predictions.
FuzzyLabel CombineTm (FuzzyLabel lpm_label, FuzzyLabel lpe_label);

/// Rule table combining TM with the drop-ratio label.
FuzzyLabel CombineLinkLife (FuzzyLabel tm, FuzzyLabel dpr_label);

/// A route lives only as long as its weakest link.
FuzzyLabel RouteLife (std::span<const FuzzyLabel> link_labels);

struct LinkLifeEstimate
{
  double lpm = 0.0;
  double lpe = 0.0;
  double dpr = 1.0;
  FuzzyLabel tm = FuzzyLabel::A;
  FuzzyLabel link_life = FuzzyLabel::A;
};

LinkLifeEstimate EvaluateLink (double lpm, double lpe, double dpr);

/// Both rule tables as text, rows in input-label order.
std::string RuleTablesText ();

} // namespace dbmf

#endif /* DBMF_LINKLIFE_H */
