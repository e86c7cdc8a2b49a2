#ifndef DBMF_ROUTING_H
#define DBMF_ROUTING_H

#include "dbmf/model.h"

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace dbmf
{

struct NoRouteFound : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct EmptyPathSet : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

/**
 * A discovered path with the per-hop labels its route reply collected.
 * min_residual_energy is the smallest remaining energy among relay nodes
 * (infinite for a direct link); only the energy-ranked baseline reads it.
 */
struct RouteCandidate
{
  Path path;
  std::vector<FuzzyLabel> link_labels;
  FuzzyLabel route_life = FuzzyLabel::A;
  double delay_estimate = 0.0; // s
  double discovered_at = 0.0; // s
  double min_residual_energy = std::numeric_limits<double>::infinity ();
};

/// Builds a candidate with route_life = min(link_labels). Throws on a label/hop mismatch.
RouteCandidate MakeCandidate (Path path, std::vector<FuzzyLabel> link_labels, double delay_estimate,
                              double discovered_at = 0.0,
                              double min_residual_energy = std::numeric_limits<double>::infinity ());

struct RoutePlan
{
  std::size_t flow = 0;
  std::vector<RouteCandidate> candidates; // ranked
  std::vector<RouteCandidate> selected;
  std::vector<std::uint64_t> partitions; // unsent packets assigned per selected path
  double pd = 0.0; // packets * seconds
  std::vector<RouteCandidate> backups; // promoted in order when every selected path fails
  bool needs_discovery = false;

  bool Empty () const { return selected.empty (); }
};

/// Greedy in input order: keep a path iff it shares no undirected link with a kept one.
std::vector<Path> SelectLinkDisjoint (std::span<const Path> paths);

/// Greedy in input order: keep a path iff it shares no relay node with a kept one.
std::vector<Path> SelectNodeDisjoint (std::span<const Path> paths);

/// Best route life first; then fewer hops, smaller delay, lexicographic nodes. Stable.
std::vector<RouteCandidate> Rank (std::vector<RouteCandidate> candidates);

/**
 * Splits total packets in inverse proportion to each path's delay and
 * integerizes by largest remainder, so the counts sum to total and each
 * stays within one packet of its ideal share. Remainder ties go to the
 * lower index.
 */
std::vector<std::uint64_t> Partition (std::uint64_t total, std::span<const double> delays);

/// PD such that share_i = PD / delay_i and the shares sum to total.
double PartitionDelayProduct (std::uint64_t total, std::span<const double> delays);

/**
 * Drops `failed` from the plan and spreads its unsent packets over the
 * survivors by Partition on their delays. With no survivor the first
 * backup takes everything; with no backup either the plan is left empty
 * and flagged for rediscovery.
 */
RoutePlan RedistributeOnFailure (RoutePlan plan, const Path &failed,
                                 std::span<const std::uint64_t> unsent);

RoutePlan StrategyDbmf (std::span<const RouteCandidate> discovered, std::uint64_t packets,
                        std::uint32_t path_count);
RoutePlan StrategySinglePath (std::span<const RouteCandidate> discovered, std::uint64_t packets);
RoutePlan StrategyMmre (std::span<const RouteCandidate> discovered, std::uint64_t packets);
RoutePlan StrategyZd (std::span<const RouteCandidate> discovered, std::uint64_t packets,
                      std::uint32_t path_count);

/// Dispatches on protocol. Throws NoRouteFound for an empty discovery.
RoutePlan BuildPlan (Protocol protocol, std::span<const RouteCandidate> discovered,
                     std::uint64_t packets, std::uint32_t path_count);

} // namespace dbmf

#endif /* DBMF_ROUTING_H */
