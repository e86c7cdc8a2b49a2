#ifndef DBMF_PACKET_H
#define DBMF_PACKET_H

#include "dbmf/model.h"

#include <cstdint>
#include <limits>
#include <string_view>

namespace dbmf
{

enum class PacketStatus : std::uint8_t
{
  InFlight,
  Delivered,
  Dropped,
};

enum class DropReason : std::uint8_t
{
  None,
  QueueOverflow,
  LinkBreak,
  NodeDead,
  NoRoute,
};

std::string_view ToString (DropReason reason);

/// Packets injected outside any flow (tests, probes) carry this flow id.
inline constexpr std::uint32_t kNoFlow = std::numeric_limits<std::uint32_t>::max ();

struct PacketRecord
{
  std::uint32_t flow = kNoFlow;
  std::uint64_t sequence = 0;
  double created_at = 0.0;
  double delivered_at = std::numeric_limits<double>::quiet_NaN ();
  double dropped_at = std::numeric_limits<double>::quiet_NaN ();
  Path path; // empty until routed
  std::uint32_t size = 0; // bytes
  PacketStatus status = PacketStatus::InFlight;
  DropReason reason = DropReason::None;
  NodeId dropped_at_node = 0;
  std::uint32_t hop = 0; // index in path of the node currently holding it
  std::uint64_t plan_generation = 0;
};

} // namespace dbmf

#endif /* DBMF_PACKET_H */
