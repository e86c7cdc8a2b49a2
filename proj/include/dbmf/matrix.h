#ifndef DBMF_MATRIX_H
#define DBMF_MATRIX_H

#include "dbmf/model.h"
#include "dbmf/report.h"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dbmf
{

enum class FlowPlacement
{
  Endpoints, // one flow from node 0 to node node_count - 1
  Base, // the base scenario's flows, unchanged
  Random, // flow_count flows between distinct random pairs
};

/**
 * Experiment sweep: the Cartesian product node_counts x protocols x speeds
 * x seeds applied on top of a base scenario. A speed sets both
 * speed_min and speed_max.
 */
struct MatrixSpec
{
  ScenarioConfig base;
  std::vector<std::uint32_t> node_counts;
  std::vector<Protocol> protocols;
  std::vector<std::uint64_t> seeds;
  std::vector<double> speeds;
  FlowPlacement flows = FlowPlacement::Endpoints;
  std::uint32_t flow_count = 1;
  double flows_per_node = 0.0; // Random only: when > 0, flow_count = max(1, round(n * this))
  std::string out;
  std::uint32_t parallelism = 1;
};

/**
 * JSON document. "base" is either an inline scenario object or a path,
 * resolved against base_dir. Omitted sweep lists default to the base
 * value; present lists must be non-empty. Throws InvalidConfig.
 */
MatrixSpec ParseMatrix (std::string_view text, const std::string &base_dir = ".");
MatrixSpec LoadMatrix (const std::string &path);

/// One validated scenario per cell and seed, in protocol, node count, speed, seed order.
std::vector<ScenarioConfig> ExpandMatrix (const MatrixSpec &spec);

/// Failure of one matrix run; the message names the cell and seed.
struct MatrixRunFailed : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/**
 * Runs every scenario on up to `parallelism` worker threads. The result
 * is in input order whatever the completion order.
 */
std::vector<MetricsReport> RunScenarios (const std::vector<ScenarioConfig> &scenarios,
                                         std::uint32_t parallelism);

/// ExpandMatrix, RunScenarios and ToCsv.
std::string RunMatrix (const MatrixSpec &spec, std::uint32_t parallelism);

} // namespace dbmf

#endif /* DBMF_MATRIX_H */
