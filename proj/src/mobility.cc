#include "dbmf/mobility.h"

#include <algorithm>
#include <cmath>

namespace dbmf
{

double
Distance (const Position &a, const Position &b)
{
  return std::hypot (a.x - b.x, a.y - b.y);
}

namespace
{

Position
RandomPoint (const ScenarioConfig &cfg, Rng &rng)
{
  double x = rng.Uniform (0.0, cfg.area_width);
  double y = rng.Uniform (0.0, cfg.area_height);
  return {x, y};
}

} // namespace

std::vector<WaypointState>
InitPositions (const ScenarioConfig &cfg, Rng &rng)
{
  std::vector<WaypointState> states (cfg.node_count);
  for (auto &s : states)
    {
      s.position = RandomPoint (cfg, rng);
      s.target = RandomPoint (cfg, rng);
      s.speed = rng.Uniform (cfg.speed_min, cfg.speed_max);
    }
  return states;
}

std::vector<double>
InitRadioRanges (const ScenarioConfig &cfg, Rng &rng)
{
  std::vector<double> ranges (cfg.node_count);
  for (auto &r : ranges)
    {
      r = rng.Uniform (cfg.radio_range_min, cfg.radio_range_max);
    }
  return ranges;
}

WaypointState
Advance (WaypointState state, double dt, const ScenarioConfig &cfg, Rng &rng)
{
  double left = dt;
  // a zero pause with a target equal to the position could spin; the
  // iteration bound makes that impossible
  for (int guard = 0; left > 0.0 && guard < 64; ++guard)
    {
      if (state.pause_remaining > 0.0)
        {
          double p = std::min (state.pause_remaining, left);
          state.pause_remaining -= p;
          left -= p;
          if (state.pause_remaining > 0.0)
            {
              break;
            }
          state.target = RandomPoint (cfg, rng);
          state.speed = rng.Uniform (cfg.speed_min, cfg.speed_max);
          continue;
        }

      double dx = state.target.x - state.position.x;
      double dy = state.target.y - state.position.y;
      double remaining = std::hypot (dx, dy);
      double reach = state.speed * left;
      if (reach < remaining)
        {
          double f = reach / remaining;
          state.position.x += dx * f;
          state.position.y += dy * f;
          state.odometer += reach;
          state.moving_time += left;
          left = 0.0;
        }
      else
        {
          double t = state.speed > 0.0 ? remaining / state.speed : left;
          state.position = state.target;
          state.odometer += remaining;
          state.moving_time += t;
          left -= t;
          if (cfg.pause_time > 0.0)
            {
              state.pause_remaining = cfg.pause_time;
            }
          else
            {
              state.target = RandomPoint (cfg, rng);
              state.speed = rng.Uniform (cfg.speed_min, cfg.speed_max);
            }
        }
    }
  state.position.x = std::clamp (state.position.x, 0.0, cfg.area_width);
  state.position.y = std::clamp (state.position.y, 0.0, cfg.area_height);
  return state;
}

double
RssAt (const RadioParams &radio, double distance)
{
  if (!(distance > 0.0))
    {
      throw ZeroDistance ("RssAt needs a positive distance");
    }
  return radio.k_const * radio.trans_pow / std::pow (distance, radio.q_exp);
}

double
DistanceFromRss (const RadioParams &radio, double rec_pow)
{
  if (!(rec_pow > 0.0))
    {
      throw NonPositivePower ("DistanceFromRss needs a positive received power");
    }
  double ratio = radio.k_const * radio.trans_pow / rec_pow;
  switch (radio.q_exp)
    {
    case 2:
      return std::sqrt (ratio);
    case 3:
      return std::cbrt (ratio);
    default:
      return std::pow (ratio, 1.0 / radio.q_exp);
    }
}

bool
InRange (const Position &a, const Position &b, const RadioParams &radio_a, const RadioParams &radio_b)
{
  return Distance (a, b) <= std::min (radio_a.rad_rng, radio_b.rad_rng);
}

} // namespace dbmf
