#ifndef DBMF_MOBILITY_H
#define DBMF_MOBILITY_H

#include "dbmf/model.h"
#include "dbmf/random.h"

#include <stdexcept>
#include <vector>

namespace dbmf
{

struct Position
{
  double x = 0.0;
  double y = 0.0;

  friend bool operator== (const Position &, const Position &) = default;
};

double Distance (const Position &a, const Position &b);

/**
 * Random Waypoint state of one node. odometer and moving_time accumulate
 * over the node's lifetime so travel can be audited.
 */
struct WaypointState
{
  Position position;
  Position target;
  double speed = 0.0; // m/s
  double pause_remaining = 0.0; // s
  double odometer = 0.0; // m
  double moving_time = 0.0; // s
};

/// Friis parameters of one transmitter/receiver.
struct RadioParams
{
  double trans_pow = 1.0;
  double k_const = 1.0;
  int q_exp = 2;
  double rad_rng = 50.0;
};

struct ZeroDistance : std::domain_error
{
  using std::domain_error::domain_error;
};

struct NonPositivePower : std::domain_error
{
  using std::domain_error::domain_error;
};

/// Distances below this are treated as co-located and clamped before RssAt.
inline constexpr double kMinLinkDistance = 0.01;

std::vector<WaypointState> InitPositions (const ScenarioConfig &cfg, Rng &rng);

/// One radio range per node, uniform in [radio_range_min, radio_range_max].
std::vector<double> InitRadioRanges (const ScenarioConfig &cfg, Rng &rng);

/**
 * Moves toward the target for dt seconds. Arrival starts a pause of
 * cfg.pause_time; when the pause ends a new target and speed are drawn
 * and any leftover time is spent moving again.
 */
WaypointState Advance (WaypointState state, double dt, const ScenarioConfig &cfg, Rng &rng);

/// K * trans_pow / distance^q. Throws ZeroDistance for distance <= 0.
double RssAt (const RadioParams &radio, double distance);

/// (K * trans_pow / rec_pow)^(1/q). Throws NonPositivePower.
double DistanceFromRss (const RadioParams &radio, double rec_pow);

/// Bidirectional link rule, boundary inclusive.
bool InRange (const Position &a, const Position &b, const RadioParams &radio_a,
              const RadioParams &radio_b);

} // namespace dbmf

#endif /* DBMF_MOBILITY_H */
