#include "dbmf/routing.h"

#include "dbmf/linklife.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

namespace dbmf
{

RouteCandidate
MakeCandidate (Path path, std::vector<FuzzyLabel> link_labels, double delay_estimate,
               double discovered_at, double min_residual_energy)
{
  if (link_labels.size () != path.HopCount ())
    {
      throw std::invalid_argument ("one link label per hop expected");
    }
  RouteCandidate c;
  c.route_life = RouteLife (link_labels);
  c.path = std::move (path);
  c.link_labels = std::move (link_labels);
  c.delay_estimate = delay_estimate;
  c.discovered_at = discovered_at;
  c.min_residual_energy = min_residual_energy;
  return c;
}

namespace
{

using Link = std::pair<NodeId, NodeId>;

std::set<Link>
LinksOf (const Path &p)
{
  std::set<Link> links;
  for (std::size_t i = 0; i + 1 < p.nodes.size (); ++i)
    {
      links.insert (std::minmax (p.nodes[i], p.nodes[i + 1]));
    }
  return links;
}

std::set<NodeId>
RelaysOf (const Path &p)
{
  if (p.nodes.size () <= 2)
    {
      return {};
    }
  return {p.nodes.begin () + 1, p.nodes.end () - 1};
}

template <typename Key, typename Extract>
std::vector<std::size_t>
GreedyDisjoint (std::span<const Path> paths, Extract extract)
{
  std::vector<std::size_t> kept;
  std::set<Key> used;
  std::set<std::vector<NodeId>> seen;
  for (std::size_t i = 0; i < paths.size (); ++i)
    {
      // identical paths share every element, but a direct link has no relays
      if (!seen.insert (paths[i].nodes).second)
        {
          continue;
        }
      auto keys = extract (paths[i]);
      bool clash = std::any_of (keys.begin (), keys.end (),
                                [&] (const Key &k) { return used.count (k) > 0; });
      if (clash)
        {
          continue;
        }
      used.insert (keys.begin (), keys.end ());
      kept.push_back (i);
    }
  return kept;
}

std::vector<std::size_t>
LinkDisjointIndices (std::span<const Path> paths)
{
  return GreedyDisjoint<Link> (paths, LinksOf);
}

std::vector<std::size_t>
NodeDisjointIndices (std::span<const Path> paths)
{
  return GreedyDisjoint<NodeId> (paths, RelaysOf);
}

std::vector<Path>
PathsOf (std::span<const RouteCandidate> cands)
{
  std::vector<Path> out;
  out.reserve (cands.size ());
  for (const auto &c : cands)
    {
      out.push_back (c.path);
    }
  return out;
}

std::vector<double>
DelaysOf (std::span<const RouteCandidate> cands)
{
  std::vector<double> out;
  for (const auto &c : cands)
    {
      out.push_back (c.delay_estimate);
    }
  return out;
}

RoutePlan
SinglePlan (std::vector<RouteCandidate> ranked, std::size_t chosen, std::uint64_t packets)
{
  RoutePlan plan;
  plan.selected = {ranked[chosen]};
  plan.partitions = {packets};
  plan.pd = static_cast<double> (packets) * ranked[chosen].delay_estimate;
  plan.candidates = std::move (ranked);
  return plan;
}

void
RequireRoutes (std::span<const RouteCandidate> discovered)
{
  if (discovered.empty ())
    {
      throw NoRouteFound ("no route discovered");
    }
}

} // namespace

std::vector<Path>
SelectLinkDisjoint (std::span<const Path> paths)
{
  std::vector<Path> out;
  for (std::size_t i : LinkDisjointIndices (paths))
    {
      out.push_back (paths[i]);
    }
  return out;
}

std::vector<Path>
SelectNodeDisjoint (std::span<const Path> paths)
{
  std::vector<Path> out;
  for (std::size_t i : NodeDisjointIndices (paths))
    {
      out.push_back (paths[i]);
    }
  return out;
}

std::vector<RouteCandidate>
Rank (std::vector<RouteCandidate> candidates)
{
  std::stable_sort (candidates.begin (), candidates.end (),
                    [] (const RouteCandidate &x, const RouteCandidate &y) {
                      if (x.route_life != y.route_life)
                        {
                          return x.route_life > y.route_life;
                        }
                      if (x.path.HopCount () != y.path.HopCount ())
                        {
                          return x.path.HopCount () < y.path.HopCount ();
                        }
                      if (x.delay_estimate != y.delay_estimate)
                        {
                          return x.delay_estimate < y.delay_estimate;
                        }
                      return x.path.nodes < y.path.nodes;
                    });
  return candidates;
}

double
PartitionDelayProduct (std::uint64_t total, std::span<const double> delays)
{
  if (delays.empty ())
    {
      throw EmptyPathSet ("partition over no paths");
    }
  double inv = 0.0;
  for (double d : delays)
    {
      if (!(d > 0.0))
        {
          throw std::invalid_argument ("path delays must be positive");
        }
      inv += 1.0 / d;
    }
  return static_cast<double> (total) / inv;
}

std::vector<std::uint64_t>
Partition (std::uint64_t total, std::span<const double> delays)
{
  double pd = PartitionDelayProduct (total, delays);
  const std::size_t n = delays.size ();
  std::vector<std::uint64_t> counts (n);
  std::vector<double> remainder (n);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i)
    {
      double ideal = pd / delays[i];
      double whole = std::floor (ideal);
      counts[i] = static_cast<std::uint64_t> (whole);
      // floating error can push a floor past the total; clamp before use
      counts[i] = std::min (counts[i], total - std::min (total, assigned));
      remainder[i] = ideal - whole;
      assigned += counts[i];
    }
  std::vector<std::size_t> order (n);
  std::iota (order.begin (), order.end (), 0);
  std::stable_sort (order.begin (), order.end (),
                    [&] (std::size_t x, std::size_t y) { return remainder[x] > remainder[y]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % n)
    {
      ++counts[order[k]];
      ++assigned;
    }
  return counts;
}

RoutePlan
RedistributeOnFailure (RoutePlan plan, const Path &failed, std::span<const std::uint64_t> unsent)
{
  auto it = std::find_if (plan.selected.begin (), plan.selected.end (),
                          [&] (const RouteCandidate &c) { return c.path == failed; });
  if (it == plan.selected.end ())
    {
      return plan;
    }
  const std::size_t failed_idx = static_cast<std::size_t> (it - plan.selected.begin ());
  std::uint64_t orphaned = failed_idx < unsent.size () ? unsent[failed_idx] : 0;

  std::vector<RouteCandidate> survivors;
  std::vector<std::uint64_t> quotas;
  for (std::size_t i = 0; i < plan.selected.size (); ++i)
    {
      if (i != failed_idx)
        {
          survivors.push_back (plan.selected[i]);
          quotas.push_back (i < unsent.size () ? unsent[i] : 0);
        }
    }

  if (survivors.empty ())
    {
      // the failed path might sit in the backup list too
      std::erase_if (plan.backups, [&] (const RouteCandidate &c) { return c.path == failed; });
      if (!plan.backups.empty ())
        {
          survivors.push_back (plan.backups.front ());
          plan.backups.erase (plan.backups.begin ());
          quotas.push_back (0);
        }
    }

  plan.selected = std::move (survivors);
  if (plan.selected.empty ())
    {
      plan.partitions.clear ();
      plan.pd = 0.0;
      plan.needs_discovery = true;
      return plan;
    }

  auto delays = DelaysOf (plan.selected);
  auto extra = Partition (orphaned, delays);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < quotas.size (); ++i)
    {
      quotas[i] += extra[i];
      total += quotas[i];
    }
  plan.partitions = std::move (quotas);
  plan.pd = PartitionDelayProduct (total, delays);
  return plan;
}

RoutePlan
StrategyDbmf (std::span<const RouteCandidate> discovered, std::uint64_t packets,
              std::uint32_t path_count)
{
  RequireRoutes (discovered);
  auto ranked = Rank ({discovered.begin (), discovered.end ()});

  // a route rated `a` is expected to break at once; keep it only when
  // nothing better was found
  std::vector<RouteCandidate> usable;
  for (const auto &c : ranked)
    {
      if (c.route_life != FuzzyLabel::A)
        {
          usable.push_back (c);
        }
    }
  if (usable.empty ())
    {
      usable.push_back (ranked.front ());
    }

  auto paths = PathsOf (usable);
  RoutePlan plan;
  for (std::size_t i : LinkDisjointIndices (paths))
    {
      if (plan.selected.size () >= path_count)
        {
          break;
        }
      plan.selected.push_back (usable[i]);
    }
  auto delays = DelaysOf (plan.selected);
  plan.partitions = Partition (packets, delays);
  plan.pd = PartitionDelayProduct (packets, delays);
  plan.candidates = std::move (ranked);
  return plan;
}

RoutePlan
StrategySinglePath (std::span<const RouteCandidate> discovered, std::uint64_t packets)
{
  RequireRoutes (discovered);
  std::vector<RouteCandidate> ranked (discovered.begin (), discovered.end ());
  std::stable_sort (ranked.begin (), ranked.end (), [] (const RouteCandidate &x, const RouteCandidate &y) {
    if (x.path.HopCount () != y.path.HopCount ())
      {
        return x.path.HopCount () < y.path.HopCount ();
      }
    return x.delay_estimate < y.delay_estimate;
  });
  return SinglePlan (std::move (ranked), 0, packets);
}

RoutePlan
StrategyMmre (std::span<const RouteCandidate> discovered, std::uint64_t packets)
{
  RequireRoutes (discovered);
  std::vector<RouteCandidate> ranked (discovered.begin (), discovered.end ());
  std::stable_sort (ranked.begin (), ranked.end (), [] (const RouteCandidate &x, const RouteCandidate &y) {
    return x.min_residual_energy > y.min_residual_energy;
  });
  RoutePlan plan = SinglePlan (ranked, 0, packets);
  plan.backups.assign (ranked.begin () + 1, ranked.end ());
  return plan;
}

RoutePlan
StrategyZd (std::span<const RouteCandidate> discovered, std::uint64_t packets, std::uint32_t path_count)
{
  RequireRoutes (discovered);
  auto paths = PathsOf (discovered);
  RoutePlan plan;
  for (std::size_t i : NodeDisjointIndices (paths))
    {
      if (plan.selected.size () >= path_count)
        {
          break;
        }
      plan.selected.push_back (discovered[i]);
    }
  std::vector<double> equal (plan.selected.size (), 1.0);
  plan.partitions = Partition (packets, equal);
  plan.pd = PartitionDelayProduct (packets, DelaysOf (plan.selected));
  plan.candidates.assign (discovered.begin (), discovered.end ());
  return plan;
}

RoutePlan
BuildPlan (Protocol protocol, std::span<const RouteCandidate> discovered, std::uint64_t packets,
           std::uint32_t path_count)
{
  switch (protocol)
    {
    case Protocol::Dbmf:
      return StrategyDbmf (discovered, packets, path_count);
    case Protocol::SinglePath:
      return StrategySinglePath (discovered, packets);
    case Protocol::Mmre:
      return StrategyMmre (discovered, packets);
    case Protocol::Zd:
      return StrategyZd (discovered, packets, path_count);
    }
  throw std::invalid_argument ("unknown protocol");
}

} // namespace dbmf
