#ifndef DBMF_MODEL_H
#define DBMF_MODEL_H

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dbmf
{

/**
 * Crisp-range fuzzy label. Ordered a < b < c < d; d is the best.
 */
enum class FuzzyLabel : std::uint8_t
{
  A = 0,
  B = 1,
  C = 2,
  D = 3,
};

char ToChar (FuzzyLabel label);
FuzzyLabel LabelFromChar (char c);

/// Minimum of a non-empty label list. Throws EmptyList.
FuzzyLabel LabelMin (std::span<const FuzzyLabel> labels);

using NodeId = std::uint32_t;

struct EmptyList : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

/**
 * Ordered node sequence from source to destination. Constructed through
 * MakePath, which enforces length >= 2 and no repeated node.
 */
struct Path
{
  std::vector<NodeId> nodes;

  std::size_t HopCount () const { return nodes.empty () ? 0 : nodes.size () - 1; }
  NodeId Source () const { return nodes.front (); }
  NodeId Destination () const { return nodes.back (); }

  friend bool operator== (const Path &, const Path &) = default;
  friend auto operator<=> (const Path &, const Path &) = default;
};

struct InvalidPath : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

Path MakePath (std::vector<NodeId> nodes);
std::string ToString (const Path &path);

struct Flow
{
  NodeId src = 0;
  NodeId dst = 1;
  std::uint64_t total_packets = 1000;
  double offered_rate = 10.0; // pkt/s
  std::uint32_t packet_size = 512; // bytes
  double start_time = 1.0; // s

  friend bool operator== (const Flow &, const Flow &) = default;
};

enum class Protocol : std::uint8_t
{
  Dbmf,
  SinglePath,
  Mmre,
  Zd,
};

std::string_view ToString (Protocol protocol);
/// Throws std::invalid_argument for unknown names.
Protocol ProtocolFromString (std::string_view name);

/**
 * One experiment, flat. Units are part of the field names' documentation:
 * meters, seconds, m/s, joules, packets.
 */
struct ScenarioConfig
{
  std::uint32_t node_count = 50;
  double area_width = 500.0;
  double area_height = 500.0;
  double speed_min = 10.0;
  double speed_max = 10.0;
  double pause_time = 0.0;
  double radio_range_min = 50.0;
  double radio_range_max = 50.0;
  double trans_pow = 1.0;
  double friis_k = 1.0;
  int friis_q = 2;
  double hello_interval = 1.0;
  std::uint32_t rss_window = 4;
  double sim_duration = 100.0;
  std::vector<Flow> flows{Flow{}};
  Protocol protocol = Protocol::Dbmf;
  std::uint32_t path_count = 3;
  std::uint32_t queue_capacity = 50;
  double energy_initial = 100.0;
  double energy_recv_per_packet = 0.005;
  double energy_send_per_packet = 0.01;
  double control_energy_fraction = 0.1;
  double max_arrival_rate = 100.0;
  double max_departure_rate = 50.0;
  double lp_cap = 1000.0;
  double link_bitrate = 2.0e6; // bit/s
  std::uint64_t seed = 1;

  friend bool operator== (const ScenarioConfig &, const ScenarioConfig &) = default;
};

struct ConfigViolation
{
  std::string field;
  std::string constraint;

  friend bool operator== (const ConfigViolation &, const ConfigViolation &) = default;
};

class InvalidConfig : public std::runtime_error
{
public:
  explicit InvalidConfig (std::vector<ConfigViolation> violations);

  const std::vector<ConfigViolation> &Violations () const { return m_violations; }
  bool Names (std::string_view field) const;

private:
  std::vector<ConfigViolation> m_violations;
};

/// Every violated constraint, in field order. Empty means valid.
std::vector<ConfigViolation> CheckConfig (const ScenarioConfig &cfg);

/// Returns cfg unchanged, or throws InvalidConfig listing all violations.
const ScenarioConfig &ValidateConfig (const ScenarioConfig &cfg);

/**
 * Scenario documents are JSON objects whose keys are exactly the
 * ScenarioConfig field names. Missing keys take defaults; unknown keys
 * and mistyped values throw InvalidConfig. The result is not validated.
 */
ScenarioConfig ParseScenario (std::string_view text);
ScenarioConfig LoadScenario (const std::string &path);
std::string SerializeScenario (const ScenarioConfig &cfg);

} // namespace dbmf

#endif /* DBMF_MODEL_H */
