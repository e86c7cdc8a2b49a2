#ifndef DBMF_REPORT_H
#define DBMF_REPORT_H

#include "dbmf/model.h"
#include "dbmf/packet.h"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dbmf
{

struct NoTraffic : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct NoDeliveries : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct MetricsReport
{
  std::string protocol;
  std::uint32_t node_count = 0;
  std::uint64_t seed = 0;
  double pdr = 0.0; // percent
  double avg_delay = 0.0; // ms; 0 when nothing was delivered
  double drop_rate = 0.0; // packets/s, network-wide
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t drops_queue = 0;
  std::uint64_t drops_link = 0;
  std::uint64_t drops_dead = 0;
  std::uint64_t drops_noroute = 0;
  double wall_time = 0.0; // s, not exported

  friend bool operator== (const MetricsReport &, const MetricsReport &) = default;
};

/// 100 * delivered / generated. Throws NoTraffic when nothing was generated.
double ComputePdr (std::span<const PacketRecord> records);

/// Mean source-to-destination time of delivered packets, in ms. Throws NoDeliveries.
double ComputeAvgDelay (std::span<const PacketRecord> records);

/// Dropped packets per second of simulated time.
double ComputeDropRate (std::span<const PacketRecord> records, double sim_duration);

/**
 * Aggregates records into a report. Runs without traffic or deliveries
 * report 0 for the undefined metric rather than failing.
 */
MetricsReport Summarize (std::span<const PacketRecord> records, double sim_duration,
                         std::string_view protocol, std::uint32_t node_count, std::uint64_t seed);

inline constexpr std::string_view kCsvHeader =
  "protocol,node_count,seed,pdr,avg_delay_ms,drop_rate_pps,generated,delivered,dropped,"
  "drops_queue,drops_link,drops_dead,drops_noroute";

/// Header plus one row per report, sorted by (protocol, node_count, seed), 6-decimal fixed point.
std::string ToCsv (std::vector<MetricsReport> reports);

/// Parses text produced by ToCsv. wall_time is not part of the format and reads back as 0.
std::vector<MetricsReport> ParseCsv (std::string_view text);

} // namespace dbmf

#endif /* DBMF_REPORT_H */
