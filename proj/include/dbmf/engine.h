#ifndef DBMF_ENGINE_H
#define DBMF_ENGINE_H

#include "dbmf/linklife.h"
#include "dbmf/mobility.h"
#include "dbmf/model.h"
#include "dbmf/packet.h"
#include "dbmf/random.h"
#include "dbmf/report.h"
#include "dbmf/routing.h"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <tuple>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

namespace dbmf
{

enum class EventKind : std::uint8_t
{
  HelloBroadcast,
  HelloAck,
  MobilityTick,
  FlowPacketGen,
  PacketHop,
  QueueService,
  RouteRequestHop,
  RouteReplyHop,
  PlanRefresh,
  StatsSnapshot,
  SimEnd,
};

std::string_view ToString (EventKind kind);

/**
 * Scheduled event. The meaning of node/peer/ref/aux depends on kind; see
 * Simulator::Dispatch.
 */
struct Event
{
  double time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::SimEnd;
  NodeId node = 0;
  NodeId peer = 0;
  std::uint64_t ref = 0;
  std::uint64_t aux = 0;
};

/// Min-queue on (time, seq). seq is assigned at push, so ties pop in push order.
class EventQueue
{
public:
  /// Throws std::logic_error for an event earlier than the last popped time.
  std::uint64_t Push (Event ev);
  Event Pop ();
  bool Empty () const { return m_heap.empty (); }
  std::size_t Size () const { return m_heap.size (); }
  double Now () const { return m_now; }
  const Event &Top () const { return m_heap.top (); }

private:
  struct Later
  {
    bool operator() (const Event &x, const Event &y) const
    {
      return x.time != y.time ? x.time > y.time : x.seq > y.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> m_heap;
  std::uint64_t m_nextSeq = 0;
  double m_now = 0.0;
};

enum class TraceMode
{
  None, // nothing formatted
  Hash, // lines formatted and hashed, not kept
  Text, // lines kept in memory and hashed
};

/**
 * Line-oriented run trace: time|seq|kind|key=value|... with 9-decimal
 * fixed-point numbers. The FNV-1a hash covers every byte written.
 */
class Trace
{
public:
  explicit Trace (TraceMode mode = TraceMode::None) : m_mode (mode) {}

  bool Enabled () const { return m_mode != TraceMode::None || m_listener != nullptr; }
  void SetListener (std::function<void (std::string_view)> listener) { m_listener = std::move (listener); }
  void Write (std::string_view line);

  const std::string &Text () const { return m_text; }
  std::uint64_t Hash () const { return m_hash; }
  std::uint64_t Lines () const { return m_lines; }

private:
  TraceMode m_mode;
  std::function<void (std::string_view)> m_listener;
  std::string m_text;
  std::uint64_t m_hash = 0xcbf29ce484222325ULL;
  std::uint64_t m_lines = 0;
};

struct NodeRuntime
{
  NodeId id = 0;
  WaypointState waypoint;
  RadioParams radio;
  EnergyProfile energy;
  TrafficState traffic;
  std::deque<std::uint64_t> queue; // packet indices, head first
  std::map<NodeId, RssWindow> neighbors;
  bool alive = true;

  double data_energy = 0.0; // J charged for data packets
  double control_energy = 0.0; // J charged for Hello/Ack/route control
  double next_service = 0.0;
  bool service_scheduled = false;
  // rate registrations of installed plans, keyed by (flow, plan generation, slot)
  std::map<std::tuple<std::uint32_t, std::uint64_t, std::uint32_t>, double> arrival_regs;
  std::map<std::tuple<std::uint32_t, std::uint64_t, std::uint32_t>, double> departure_regs;
};

enum class LinkStatus
{
  Alive,
  OutOfRange,
  EndpointDead,
};

enum class EnqueueResult
{
  Accepted,
  Dropped,
};

struct RunResult
{
  MetricsReport report;
  std::string trace; // empty unless TraceMode::Text
  std::uint64_t trace_hash = 0;
  std::uint64_t in_flight = 0;
};

/// Per-link numbers a route reply collects, kept for inspection.
struct LinkAnnotation
{
  double time = 0.0;
  NodeId from = 0; // upstream end
  NodeId to = 0;
  double le = 0.0;
  LinkLifeEstimate estimate;
};

/**
 * One deterministic simulation run.
 *
 * Construction draws the initial topology and schedules the periodic
 * events; Run() then processes the queue until SimEnd. Everything that
 * happens is a function of (config, seed): mobility draws from its own
 * stream so protocol choices never perturb node movement.
 */
class Simulator
{
public:
  explicit Simulator (const ScenarioConfig &cfg, TraceMode mode = TraceMode::None);

  /// Overrides initial positions; with freeze the nodes never move.
  void PlaceNodes (const std::vector<Position> &positions, bool freeze = true);
  void SetTraceListener (std::function<void (std::string_view)> listener);

  void Run ();
  /// Processes events with time <= t.
  void RunUntil (double t);
  RunResult Result () const;

  double Now () const { return m_events.Now (); }
  const ScenarioConfig &Config () const { return m_cfg; }
  NodeRuntime &Node (NodeId id) { return m_nodes.at (id); }
  const NodeRuntime &Node (NodeId id) const { return m_nodes.at (id); }
  std::size_t NodeCount () const { return m_nodes.size (); }
  const std::vector<PacketRecord> &Packets () const { return m_packets; }
  const std::vector<LinkAnnotation> &Annotations () const { return m_annotations; }
  const Trace &GetTrace () const { return m_trace; }
  /// Installed plan of a flow, if any.
  const RoutePlan *Plan (std::uint32_t flow) const;

  LinkStatus CheckLink (NodeId a, NodeId b) const;

  /// Creates a packet following `path` and enqueues it at the path's source.
  EnqueueResult InjectPacket (const Path &path, std::uint32_t size);

  /**
   * Floods a route request from src and advances the clock until the
   * replies are collected. Throws NoRouteFound when none arrives.
   */
  std::vector<RouteCandidate> Discover (NodeId src, NodeId dst);

  /// Link label as node `from` would annotate it now for a reply of `flow`.
  LinkAnnotation AnnotateLink (NodeId from, NodeId to, std::uint32_t flow, bool add_request) const;

  double ControlLatency () const;
  double DataLatency (std::uint32_t size) const;
  double DiscoveryWindow () const { return m_discoveryWindow; }

private:
  struct Discovery
  {
    std::uint32_t flow = kNoFlow;
    NodeId src = 0;
    NodeId dst = 0;
    double started = 0.0;
    std::vector<bool> forwarded;
    std::vector<RouteCandidate> replies;
    bool finished = false;
  };

  struct RouteMessage
  {
    std::uint64_t discovery = 0;
    std::vector<NodeId> route; // recorded so far (request) or full route (reply)
    std::size_t position = 0; // reply: index of the node now holding it
    std::vector<FuzzyLabel> labels; // reply: per hop, filled from the destination end
    double min_residual = 0.0;
    double sent_at = 0.0;
  };

  struct FlowRuntime
  {
    Flow flow;
    std::uint64_t generated = 0;
    std::optional<RoutePlan> plan;
    std::vector<std::uint64_t> quota; // unsent packets left per selected path
    std::uint64_t generation = 0;
    bool discovering = false;
    bool retry_scheduled = false;
    std::deque<std::uint64_t> pending;
  };

  void Schedule (double time, EventKind kind, NodeId node = 0, NodeId peer = 0, std::uint64_t ref = 0,
                 std::uint64_t aux = 0);
  void Dispatch (const Event &ev);

  void OnMobilityTick (const Event &ev);
  void OnHelloBroadcast (const Event &ev);
  void OnHelloAck (const Event &ev);
  void OnFlowPacketGen (const Event &ev);
  void OnQueueService (const Event &ev);
  void OnPacketHop (const Event &ev);
  void OnRouteRequestHop (const Event &ev);
  void OnRouteReplyHop (const Event &ev);
  void OnPlanRefresh (const Event &ev);
  void OnStatsSnapshot (const Event &ev);
  void OnSimEnd (const Event &ev);

  void Charge (NodeId node, double joules, bool control);
  void Kill (NodeId node);
  void Drop (std::uint64_t packet, DropReason reason, NodeId at);
  EnqueueResult Enqueue (NodeId node, std::uint64_t packet);
  void EnsureService (NodeId node);

  std::uint64_t StartDiscovery (std::uint32_t flow, NodeId src, NodeId dst);
  void BroadcastRequest (NodeId from, std::uint64_t msg);
  void FinishDiscovery (std::uint64_t discovery);
  void InstallPlan (std::uint32_t flow, RoutePlan plan);
  void ClearPlan (std::uint32_t flow);
  void RegisterRates (std::uint32_t flow);
  void UnregisterRates (std::uint32_t flow);
  void DispatchPacket (std::uint32_t flow, std::uint64_t packet);
  void ReportFailure (std::uint64_t packet);
  void RequestRoute (std::uint32_t flow);
  std::uint64_t UnsentPackets (const FlowRuntime &fr) const;
  TrafficState TrafficWithRequest (NodeId node, double arrival, double departure) const;

  void TraceLine (const Event &ev, std::initializer_list<std::pair<std::string_view, std::string>> fields);

  ScenarioConfig m_cfg;
  Trace m_trace;
  EventQueue m_events;
  Rng m_mobilityRng;
  Rng m_protocolRng;
  std::vector<NodeRuntime> m_nodes;
  std::vector<FlowRuntime> m_flows;
  std::vector<PacketRecord> m_packets;
  std::vector<Discovery> m_discoveries;
  std::vector<RouteMessage> m_messages;
  std::vector<LinkAnnotation> m_annotations;
  bool m_frozen = false;
  bool m_finished = false;
  double m_discoveryWindow = 0.0;
  std::uint64_t m_tick = 0;
  std::uint64_t m_delivered = 0;
  std::uint64_t m_dropped = 0;
  double m_wallTime = 0.0;
};

/// Builds, runs and summarizes one scenario.
RunResult Run (const ScenarioConfig &cfg, TraceMode mode = TraceMode::None);

/// Route discovery on a fresh simulator for the given topology.
std::vector<RouteCandidate> Discover (Simulator &sim, NodeId src, NodeId dst);

} // namespace dbmf

#endif /* DBMF_ENGINE_H */
