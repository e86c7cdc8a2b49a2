#include "dbmf/engine.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dbmf
{

namespace
{

constexpr double kMobilityTick = 0.1; // s
constexpr double kProcessingDelay = 0.001; // s per hop
constexpr std::uint32_t kControlPacketBytes = 64;
constexpr double kMaxRequestJitter = 0.005; // s
constexpr std::size_t kMaxHops = 32;
constexpr double kRetryHoldoff = 1.0; // s between failed discoveries
constexpr double kDelaySmoothing = 0.2;
constexpr double kOperableFraction = 0.4;

// PlanRefresh actions
constexpr std::uint64_t kFinishDiscovery = 0;
constexpr std::uint64_t kCheckPlan = 1;
constexpr std::uint64_t kRetryDiscovery = 2;
constexpr std::uint64_t kPathFailure = 3;

// StatsSnapshot variants
constexpr std::uint64_t kSnapshotDeath = 0;
constexpr std::uint64_t kSnapshotFinal = 1;

std::string
F (double v)
{
  char buf[64];
  auto res = std::to_chars (buf, buf + sizeof (buf), v, std::chars_format::fixed, 9);
  return std::string (buf, res.ptr);
}

std::string
U (std::uint64_t v)
{
  return std::to_string (v);
}

std::string
PlanSummary (const RoutePlan &plan)
{
  std::string s;
  for (std::size_t i = 0; i < plan.selected.size (); ++i)
    {
      if (i > 0)
        {
          s += ';';
        }
      s += ToString (plan.selected[i].path);
      s += ':';
      s += ToChar (plan.selected[i].route_life);
      s += ':';
      s += U (i < plan.partitions.size () ? plan.partitions[i] : 0);
    }
  return s;
}

} // namespace

std::string_view
ToString (EventKind kind)
{
  switch (kind)
    {
    case EventKind::HelloBroadcast:
      return "HelloBroadcast";
    case EventKind::HelloAck:
      return "HelloAck";
    case EventKind::MobilityTick:
      return "MobilityTick";
    case EventKind::FlowPacketGen:
      return "FlowPacketGen";
    case EventKind::PacketHop:
      return "PacketHop";
    case EventKind::QueueService:
      return "QueueService";
    case EventKind::RouteRequestHop:
      return "RouteRequestHop";
    case EventKind::RouteReplyHop:
      return "RouteReplyHop";
    case EventKind::PlanRefresh:
      return "PlanRefresh";
    case EventKind::StatsSnapshot:
      return "StatsSnapshot";
    case EventKind::SimEnd:
      return "SimEnd";
    }
  return "?";
}

std::uint64_t
EventQueue::Push (Event ev)
{
  if (ev.time < m_now)
    {
      throw std::logic_error ("event scheduled in the past");
    }
  ev.seq = m_nextSeq++;
  m_heap.push (ev);
  return ev.seq;
}

Event
EventQueue::Pop ()
{
  Event ev = m_heap.top ();
  m_heap.pop ();
  m_now = ev.time;
  return ev;
}

void
Trace::Write (std::string_view line)
{
  ++m_lines;
  if (m_listener)
    {
      m_listener (line);
    }
  if (m_mode == TraceMode::None)
    {
      return;
    }
  for (unsigned char ch : line)
    {
      m_hash = (m_hash ^ ch) * 0x100000001b3ULL;
    }
  m_hash = (m_hash ^ static_cast<unsigned char> ('\n')) * 0x100000001b3ULL;
  if (m_mode == TraceMode::Text)
    {
      m_text.append (line);
      m_text += '\n';
    }
}

Simulator::Simulator (const ScenarioConfig &cfg, TraceMode mode)
  : m_cfg (ValidateConfig (cfg)),
    m_trace (mode),
    m_mobilityRng (Rng::Stream (cfg.seed, 1)),
    m_protocolRng (Rng::Stream (cfg.seed, 2))
{
  auto waypoints = InitPositions (m_cfg, m_mobilityRng);
  auto ranges = InitRadioRanges (m_cfg, m_mobilityRng);
  m_nodes.resize (m_cfg.node_count);
  for (NodeId i = 0; i < m_cfg.node_count; ++i)
    {
      NodeRuntime &n = m_nodes[i];
      n.id = i;
      n.waypoint = waypoints[i];
      n.radio = {m_cfg.trans_pow, m_cfg.friis_k, m_cfg.friis_q, ranges[i]};
      n.energy = {m_cfg.energy_initial,
                  0.0,
                  m_cfg.energy_recv_per_packet,
                  m_cfg.energy_send_per_packet,
                  m_cfg.max_arrival_rate,
                  m_cfg.max_departure_rate};
    }

  double diameter = std::hypot (m_cfg.area_width, m_cfg.area_height);
  double hops = std::min<double> (std::ceil (diameter / m_cfg.radio_range_min), kMaxHops);
  m_discoveryWindow = 2.0 * hops * (ControlLatency () + kMaxRequestJitter);

  for (const Flow &f : m_cfg.flows)
    {
      FlowRuntime fr;
      fr.flow = f;
      m_flows.push_back (std::move (fr));
    }

  const double end = m_cfg.sim_duration;
  for (NodeId i = 0; i < m_cfg.node_count; ++i)
    {
      Schedule (end, EventKind::StatsSnapshot, i, 0, 0, kSnapshotFinal);
    }
  Schedule (end, EventKind::SimEnd);
  Schedule (0.0, EventKind::MobilityTick, 0, 0, 0);
  for (NodeId i = 0; i < m_cfg.node_count; ++i)
    {
      double offset = m_cfg.hello_interval * i / m_cfg.node_count;
      if (offset < end)
        {
          Schedule (offset, EventKind::HelloBroadcast, i, 0, 0);
        }
    }
  for (std::uint32_t f = 0; f < m_flows.size (); ++f)
    {
      if (m_flows[f].flow.start_time < end)
        {
          Schedule (m_flows[f].flow.start_time, EventKind::FlowPacketGen, 0, 0, f, 0);
        }
    }
}

void
Simulator::PlaceNodes (const std::vector<Position> &positions, bool freeze)
{
  if (positions.size () != m_nodes.size ())
    {
      throw std::invalid_argument ("one position per node expected");
    }
  for (std::size_t i = 0; i < positions.size (); ++i)
    {
      m_nodes[i].waypoint.position = positions[i];
      m_nodes[i].waypoint.target = positions[i];
    }
  m_frozen = freeze;
}

void
Simulator::SetTraceListener (std::function<void (std::string_view)> listener)
{
  m_trace.SetListener (std::move (listener));
}

double
Simulator::ControlLatency () const
{
  return kControlPacketBytes * 8.0 / m_cfg.link_bitrate + kProcessingDelay;
}

double
Simulator::DataLatency (std::uint32_t size) const
{
  return size * 8.0 / m_cfg.link_bitrate + kProcessingDelay;
}

void
Simulator::Schedule (double time, EventKind kind, NodeId node, NodeId peer, std::uint64_t ref,
                     std::uint64_t aux)
{
  Event ev;
  ev.time = time;
  ev.kind = kind;
  ev.node = node;
  ev.peer = peer;
  ev.ref = ref;
  ev.aux = aux;
  m_events.Push (ev);
}

void
Simulator::Run ()
{
  auto t0 = std::chrono::steady_clock::now ();
  while (!m_finished && !m_events.Empty ())
    {
      Dispatch (m_events.Pop ());
    }
  m_wallTime += std::chrono::duration<double> (std::chrono::steady_clock::now () - t0).count ();
}

void
Simulator::RunUntil (double t)
{
  while (!m_finished && !m_events.Empty () && m_events.Top ().time <= t)
    {
      Dispatch (m_events.Pop ());
    }
}

void
Simulator::Dispatch (const Event &ev)
{
  switch (ev.kind)
    {
    case EventKind::MobilityTick:
      OnMobilityTick (ev);
      break;
    case EventKind::HelloBroadcast:
      OnHelloBroadcast (ev);
      break;
    case EventKind::HelloAck:
      OnHelloAck (ev);
      break;
    case EventKind::FlowPacketGen:
      OnFlowPacketGen (ev);
      break;
    case EventKind::QueueService:
      OnQueueService (ev);
      break;
    case EventKind::PacketHop:
      OnPacketHop (ev);
      break;
    case EventKind::RouteRequestHop:
      OnRouteRequestHop (ev);
      break;
    case EventKind::RouteReplyHop:
      OnRouteReplyHop (ev);
      break;
    case EventKind::PlanRefresh:
      OnPlanRefresh (ev);
      break;
    case EventKind::StatsSnapshot:
      OnStatsSnapshot (ev);
      break;
    case EventKind::SimEnd:
      OnSimEnd (ev);
      break;
    }
}

void
Simulator::TraceLine (const Event &ev, std::initializer_list<std::pair<std::string_view, std::string>> fields)
{
  std::string line = F (ev.time);
  line += '|';
  line += U (ev.seq);
  line += '|';
  line += ToString (ev.kind);
  for (const auto &[key, value] : fields)
    {
      line += '|';
      line += key;
      line += '=';
      line += value;
    }
  m_trace.Write (line);
}

LinkStatus
Simulator::CheckLink (NodeId a, NodeId b) const
{
  const NodeRuntime &na = m_nodes.at (a);
  const NodeRuntime &nb = m_nodes.at (b);
  if (!na.alive || !nb.alive)
    {
      return LinkStatus::EndpointDead;
    }
  return InRange (na.waypoint.position, nb.waypoint.position, na.radio, nb.radio) ? LinkStatus::Alive
                                                                                 : LinkStatus::OutOfRange;
}

void
Simulator::Charge (NodeId node, double joules, bool control)
{
  NodeRuntime &n = m_nodes[node];
  n.energy.consumed_energy += joules;
  (control ? n.control_energy : n.data_energy) += joules;
  if (n.alive && n.energy.Remaining () < kOperableFraction * n.energy.initial_energy)
    {
      Kill (node);
    }
}

void
Simulator::Kill (NodeId node)
{
  NodeRuntime &n = m_nodes[node];
  n.alive = false;
  while (!n.queue.empty ())
    {
      std::uint64_t pkt = n.queue.front ();
      n.queue.pop_front ();
      ++n.traffic.dropped_total;
      Drop (pkt, DropReason::NodeDead, node);
      ReportFailure (pkt);
    }
  Schedule (Now (), EventKind::StatsSnapshot, node, 0, 0, kSnapshotDeath);
}

void
Simulator::Drop (std::uint64_t packet, DropReason reason, NodeId at)
{
  PacketRecord &p = m_packets[packet];
  p.status = PacketStatus::Dropped;
  p.reason = reason;
  p.dropped_at = Now ();
  p.dropped_at_node = at;
  ++m_dropped;
}

EnqueueResult
Simulator::Enqueue (NodeId node, std::uint64_t packet)
{
  NodeRuntime &n = m_nodes[node];
  if (!n.alive)
    {
      Drop (packet, DropReason::NodeDead, node);
      ReportFailure (packet);
      return EnqueueResult::Dropped;
    }
  ++n.traffic.arrived_total;
  if (n.queue.size () >= m_cfg.queue_capacity)
    {
      ++n.traffic.dropped_total;
      Drop (packet, DropReason::QueueOverflow, node);
      return EnqueueResult::Dropped;
    }
  n.queue.push_back (packet);
  EnsureService (node);
  return EnqueueResult::Accepted;
}

void
Simulator::EnsureService (NodeId node)
{
  NodeRuntime &n = m_nodes[node];
  if (n.service_scheduled || n.queue.empty () || !n.alive)
    {
      return;
    }
  n.service_scheduled = true;
  Schedule (std::max (Now (), n.next_service), EventKind::QueueService, node);
}

EnqueueResult
Simulator::InjectPacket (const Path &path, std::uint32_t size)
{
  PacketRecord p;
  p.sequence = m_packets.size ();
  p.created_at = Now ();
  p.path = path;
  p.size = size;
  m_packets.push_back (p);
  return Enqueue (path.Source (), m_packets.size () - 1);
}

// ---------------------------------------------------------------------------
// periodic machinery

void
Simulator::OnMobilityTick (const Event &ev)
{
  if (!m_frozen)
    {
      for (auto &n : m_nodes)
        {
          n.waypoint = Advance (n.waypoint, kMobilityTick, m_cfg, m_mobilityRng);
        }
    }
  if (m_trace.Enabled ())
    {
      TraceLine (ev, {{"tick", U (ev.ref)}});
    }
  double next = (ev.ref + 1) * kMobilityTick;
  if (next < m_cfg.sim_duration)
    {
      Schedule (next, EventKind::MobilityTick, 0, 0, ev.ref + 1);
    }
}

void
Simulator::OnHelloBroadcast (const Event &ev)
{
  NodeRuntime &sender = m_nodes[ev.node];
  if (!sender.alive)
    {
      return;
    }
  const double before = sender.energy.Remaining ();
  const double frac = m_cfg.control_energy_fraction;
  std::uint64_t receivers = 0;
  for (NodeRuntime &rx : m_nodes)
    {
      if (rx.id == sender.id || CheckLink (sender.id, rx.id) != LinkStatus::Alive)
        {
          continue;
        }
      double d = std::max (Distance (sender.waypoint.position, rx.waypoint.position), kMinLinkDistance);
      auto it = rx.neighbors.try_emplace (sender.id, m_cfg.rss_window, m_cfg.hello_interval).first;
      it->second.Add (Now (), RssAt (sender.radio, d));
      Charge (rx.id, frac * rx.energy.recv_cost, true);
      Schedule (Now () + ControlLatency (), EventKind::HelloAck, rx.id, sender.id);
      ++receivers;
    }
  Charge (sender.id, frac * sender.energy.send_cost, true);
  if (m_trace.Enabled ())
    {
      TraceLine (ev, {{"node", U (ev.node)}, {"energy", F (before)}, {"receivers", U (receivers)}});
    }
  double offset = m_cfg.hello_interval * ev.node / m_cfg.node_count;
  double next = offset + static_cast<double> (ev.ref + 1) * m_cfg.hello_interval;
  if (next < m_cfg.sim_duration && m_nodes[ev.node].alive)
    {
      Schedule (next, EventKind::HelloBroadcast, ev.node, 0, ev.ref + 1);
    }
}

void
Simulator::OnHelloAck (const Event &ev)
{
  NodeRuntime &acker = m_nodes[ev.node];
  if (!acker.alive)
    {
      return;
    }
  const double before = acker.energy.Remaining ();
  const double frac = m_cfg.control_energy_fraction;
  bool heard = CheckLink (ev.node, ev.peer) == LinkStatus::Alive;
  Charge (ev.node, frac * acker.energy.send_cost, true);
  if (heard)
    {
      Charge (ev.peer, frac * m_nodes[ev.peer].energy.recv_cost, true);
    }
  if (m_trace.Enabled ())
    {
      TraceLine (ev, {{"node", U (ev.node)}, {"peer", U (ev.peer)}, {"energy", F (before)},
                      {"heard", heard ? "1" : "0"}});
    }
}

void
Simulator::OnStatsSnapshot (const Event &ev)
{
  if (!m_trace.Enabled ())
    {
      return;
    }
  const NodeRuntime &n = m_nodes[ev.node];
  TraceLine (ev, {{"node", U (ev.node)},
                  {"state", ev.aux == kSnapshotDeath ? "dead" : "final"},
                  {"alive", n.alive ? "1" : "0"},
                  {"remaining", F (n.energy.Remaining ())},
                  {"arrived", U (n.traffic.arrived_total)},
                  {"departed", U (n.traffic.departed_total)},
                  {"dropped", U (n.traffic.dropped_total)},
                  {"queued", U (n.queue.size ())}});
}

void
Simulator::OnSimEnd (const Event &ev)
{
  m_finished = true;
  if (m_trace.Enabled ())
    {
      std::uint64_t in_flight = m_packets.size () - m_delivered - m_dropped;
      TraceLine (ev, {{"generated", U (m_packets.size ())},
                      {"delivered", U (m_delivered)},
                      {"dropped", U (m_dropped)},
                      {"in_flight", U (in_flight)}});
    }
}

// ---------------------------------------------------------------------------
// data plane

void
Simulator::OnFlowPacketGen (const Event &ev)
{
  const auto f = static_cast<std::uint32_t> (ev.ref);
  FlowRuntime &fr = m_flows[f];
  PacketRecord p;
  p.flow = f;
  p.sequence = ev.aux;
  p.created_at = Now ();
  p.size = fr.flow.packet_size;
  m_packets.push_back (p);
  const std::uint64_t pkt = m_packets.size () - 1;
  ++fr.generated;

  std::string action;
  if (fr.plan)
    {
      DispatchPacket (f, pkt);
      action = "dispatch";
    }
  else if (fr.pending.size () >= m_cfg.queue_capacity)
    {
      Drop (pkt, DropReason::NoRoute, fr.flow.src);
      action = "drop";
    }
  else
    {
      fr.pending.push_back (pkt);
      RequestRoute (f);
      action = "pending";
    }
  if (m_trace.Enabled ())
    {
      TraceLine (ev, {{"flow", U (f)}, {"packet", U (pkt)}, {"action", action}});
    }

  std::uint64_t next_index = ev.aux + 1;
  double next = fr.flow.start_time + static_cast<double> (next_index) / fr.flow.offered_rate;
  if (next_index < fr.flow.total_packets && next < m_cfg.sim_duration)
    {
      Schedule (next, EventKind::FlowPacketGen, 0, 0, f, next_index);
    }
}

void
Simulator::DispatchPacket (std::uint32_t flow, std::uint64_t packet)
{
  FlowRuntime &fr = m_flows[flow];
  const RoutePlan &plan = *fr.plan;
  std::size_t best = 0;
  for (std::size_t i = 1; i < fr.quota.size (); ++i)
    {
      if (fr.quota[i] > fr.quota[best])
        {
          best = i;
        }
    }
  if (fr.quota[best] > 0)
    {
      --fr.quota[best];
    }
  PacketRecord &p = m_packets[packet];
  p.path = plan.selected[best].path;
  p.hop = 0;
  p.plan_generation = fr.generation;
  Enqueue (p.path.Source (), packet);
}

void
Simulator::OnQueueService (const Event &ev)
{
  NodeRuntime &n = m_nodes[ev.node];
  n.service_scheduled = false;
  if (!n.alive)
    {
      return;
    }
  while (!n.queue.empty ())
    {
      std::uint64_t pkt = n.queue.front ();
      PacketRecord &p = m_packets[pkt];
      NodeId next = p.path.nodes[p.hop + 1];
      LinkStatus status = CheckLink (n.id, next);
      if (status == LinkStatus::Alive)
        {
          break;
        }
      n.queue.pop_front ();
      ++n.traffic.dropped_total;
      DropReason reason = status == LinkStatus::OutOfRange ? DropReason::LinkBreak : DropReason::NodeDead;
      Drop (pkt, reason, n.id);
      ReportFailure (pkt);
      if (m_trace.Enabled ())
        {
          TraceLine (ev, {{"node", U (n.id)}, {"packet", U (pkt)}, {"next", U (next)},
                          {"drop", std::string (ToString (reason))}});
        }
    }
  if (n.queue.empty ())
    {
      return;
    }

  std::uint64_t pkt = n.queue.front ();
  n.queue.pop_front ();
  PacketRecord &p = m_packets[pkt];
  NodeId next = p.path.nodes[p.hop + 1];
  const double before = n.energy.Remaining ();
  if (m_trace.Enabled ())
    {
      TraceLine (ev, {{"node", U (n.id)}, {"packet", U (pkt)}, {"next", U (next)}, {"energy", F (before)},
                      {"tx", "1"}});
    }
  ++n.traffic.departed_total;
  Schedule (Now () + DataLatency (p.size), EventKind::PacketHop, next, n.id, pkt);
  n.next_service = Now () + 1.0 / n.energy.max_departure;
  Charge (n.id, n.energy.send_cost, false);
  EnsureService (n.id);
}

void
Simulator::OnPacketHop (const Event &ev)
{
  NodeRuntime &rx = m_nodes[ev.node];
  PacketRecord &p = m_packets[ev.ref];
  std::string result;
  if (!rx.alive)
    {
      Drop (ev.ref, DropReason::NodeDead, rx.id);
      ReportFailure (ev.ref);
      result = "dead";
    }
  else
    {
      Charge (rx.id, rx.energy.recv_cost, false);
      ++p.hop;
      if (rx.id == p.path.Destination ())
        {
          ++rx.traffic.arrived_total;
          ++rx.traffic.departed_total;
          p.status = PacketStatus::Delivered;
          p.delivered_at = Now ();
          ++m_delivered;
          result = "delivered";
          if (p.flow != kNoFlow)
            {
              FlowRuntime &fr = m_flows[p.flow];
              if (fr.plan && p.plan_generation == fr.generation)
                {
                  for (auto &c : fr.plan->selected)
                    {
                      if (c.path == p.path)
                        {
                          double sample = p.delivered_at - p.created_at;
                          c.delay_estimate = (1.0 - kDelaySmoothing) * c.delay_estimate + kDelaySmoothing * sample;
                        }
                    }
                }
            }
        }
      else if (!rx.alive)
        {
          // the reception itself exhausted the relay
          ++rx.traffic.arrived_total;
          ++rx.traffic.dropped_total;
          Drop (ev.ref, DropReason::NodeDead, rx.id);
          ReportFailure (ev.ref);
          result = "dead";
        }
      else
        {
          result = Enqueue (rx.id, ev.ref) == EnqueueResult::Accepted ? "queued" : "overflow";
        }
    }
  if (m_trace.Enabled ())
    {
      TraceLine (ev, {{"node", U (ev.node)}, {"from", U (ev.peer)}, {"packet", U (ev.ref)}, {"result", result}});
    }
}

void
Simulator::ReportFailure (std::uint64_t packet)
{
  const PacketRecord &p = m_packets[packet];
  if (p.flow == kNoFlow)
    {
      return;
    }
  const FlowRuntime &fr = m_flows[p.flow];
  if (!fr.plan || p.plan_generation != fr.generation)
    {
      return;
    }
  Schedule (Now (), EventKind::PlanRefresh, 0, 0, packet, kPathFailure);
}

// ---------------------------------------------------------------------------
// route discovery

std::uint64_t
Simulator::StartDiscovery (std::uint32_t flow, NodeId src, NodeId dst)
{
  Discovery d;
  d.flow = flow;
  d.src = src;
  d.dst = dst;
  d.started = Now ();
  d.forwarded.assign (m_nodes.size (), false);
  d.forwarded[src] = true;
  m_discoveries.push_back (std::move (d));
  const std::uint64_t id = m_discoveries.size () - 1;

  if (flow != kNoFlow)
    {
      m_flows[flow].discovering = true;
    }
  Schedule (Now () + 2.0 * m_discoveryWindow, EventKind::PlanRefresh, 0, 0, id, kFinishDiscovery);

  if (m_nodes[src].alive)
    {
      RouteMessage msg;
      msg.discovery = id;
      msg.route = {src};
      msg.sent_at = Now ();
      m_messages.push_back (std::move (msg));
      BroadcastRequest (src, m_messages.size () - 1);
    }
  return id;
}

void
Simulator::BroadcastRequest (NodeId from, std::uint64_t msg)
{
  const RouteMessage &m = m_messages[msg];
  double depart = Now () + m_protocolRng.Uniform (0.0, kMaxRequestJitter);
  for (const NodeRuntime &rx : m_nodes)
    {
      if (rx.id == from || CheckLink (from, rx.id) != LinkStatus::Alive)
        {
          continue;
        }
      if (std::find (m.route.begin (), m.route.end (), rx.id) != m.route.end ())
        {
          continue;
        }
      Schedule (depart + ControlLatency (), EventKind::RouteRequestHop, rx.id, from, msg);
    }
  Charge (from, m_cfg.control_energy_fraction * m_nodes[from].energy.send_cost, true);
}

void
Simulator::OnRouteRequestHop (const Event &ev)
{
  NodeRuntime &rx = m_nodes[ev.node];
  std::string result;
  const std::uint64_t disc_id = m_messages[ev.ref].discovery;
  Discovery &disc = m_discoveries[disc_id];
  double before = rx.energy.Remaining ();
  if (!rx.alive)
    {
      result = "dead";
    }
  else
    {
      Charge (rx.id, m_cfg.control_energy_fraction * rx.energy.recv_cost, true);
      std::vector<NodeId> route = m_messages[ev.ref].route;
      if (disc.finished)
        {
          result = "stale";
        }
      else if (rx.id == disc.dst)
        {
          if (Now () <= disc.started + m_discoveryWindow && rx.alive)
            {
              route.push_back (rx.id);
              RouteMessage reply;
              reply.discovery = disc_id;
              reply.position = route.size () - 1;
              reply.labels.assign (route.size () - 1, FuzzyLabel::A);
              reply.route = std::move (route);
              reply.min_residual = std::numeric_limits<double>::infinity ();
              reply.sent_at = Now ();
              m_messages.push_back (std::move (reply));
              const std::uint64_t id = m_messages.size () - 1;
              const auto &r = m_messages[id];
              NodeId prev = r.route[r.position - 1];
              if (CheckLink (rx.id, prev) == LinkStatus::Alive)
                {
                  Schedule (Now () + ControlLatency (), EventKind::RouteReplyHop, prev, rx.id, id);
                }
              Charge (rx.id, m_cfg.control_energy_fraction * rx.energy.send_cost, true);
              result = "reply";
            }
          else
            {
              result = "late";
            }
        }
      else if (disc.forwarded[rx.id])
        {
          result = "duplicate";
        }
      else if (route.size () >= kMaxHops)
        {
          result = "ttl";
        }
      else if (rx.alive)
        {
          disc.forwarded[rx.id] = true;
          route.push_back (rx.id);
          RouteMessage fwd;
          fwd.discovery = disc_id;
          fwd.route = std::move (route);
          fwd.sent_at = Now ();
          m_messages.push_back (std::move (fwd));
          BroadcastRequest (rx.id, m_messages.size () - 1);
          result = "forward";
        }
      else
        {
          result = "exhausted";
        }
    }
  if (m_trace.Enabled ())
    {
      TraceLine (ev, {{"node", U (ev.node)}, {"from", U (ev.peer)}, {"req", U (disc_id)}, {"energy", F (before)},
                      {"result", result}});
    }
}

TrafficState
Simulator::TrafficWithRequest (NodeId node, double arrival, double departure) const
{
  const NodeRuntime &n = m_nodes[node];
  TrafficState t = n.traffic;
  t.per_path_arrival.clear ();
  t.per_path_departure.clear ();
  for (const auto &[key, rate] : n.arrival_regs)
    {
      t.per_path_arrival.push_back (rate);
    }
  for (const auto &[key, rate] : n.departure_regs)
    {
      t.per_path_departure.push_back (rate);
    }
  if (arrival > 0.0)
    {
      t.per_path_arrival.push_back (arrival);
    }
  if (departure > 0.0)
    {
      t.per_path_departure.push_back (departure);
    }
  return t;
}

LinkAnnotation
Simulator::AnnotateLink (NodeId from, NodeId to, std::uint32_t flow, bool add_request) const
{
  const NodeRuntime &j = m_nodes.at (from);
  const NodeRuntime &k = m_nodes.at (to);
  const Flow nominal = m_flows.empty () ? Flow{} : m_flows.front ().flow;
  const Flow &fl = flow == kNoFlow ? nominal : m_flows[flow].flow;

  double lpm = 0.0;
  auto it = j.neighbors.find (to);
  if (it != j.neighbors.end () && it->second.Size () >= 2)
    {
      double rng = std::min (j.radio.rad_rng, k.radio.rad_rng);
      lpm = EstimateMobility (it->second, k.radio, rng, m_cfg.lp_cap).lpm;
    }

  double rate = add_request ? fl.offered_rate : 0.0;
  double arr_j = from == fl.src ? 0.0 : rate;
  double dept_k = to == fl.dst ? 0.0 : rate;
  double total = static_cast<double> (fl.total_packets);
  EnergyEstimate ej = EstimateEnergy (j.energy, TrafficWithRequest (from, arr_j, rate), total);
  EnergyEstimate ek = EstimateEnergy (k.energy, TrafficWithRequest (to, rate, dept_k), total);
  ej.operational = ej.operational && j.alive;
  ek.operational = ek.operational && k.alive;
  LinkEnergy le = PairEnergy (ej, ek);

  double dpr = DropRatio (k.traffic.arrived_total, k.traffic.departed_total + k.queue.size ());

  LinkAnnotation a;
  a.time = Now ();
  a.from = from;
  a.to = to;
  a.le = le.le;
  a.estimate = EvaluateLink (lpm, le.lpe, dpr);
  return a;
}

void
Simulator::OnRouteReplyHop (const Event &ev)
{
  NodeRuntime &rx = m_nodes[ev.node];
  RouteMessage &m = m_messages[ev.ref];
  Discovery &disc = m_discoveries[m.discovery];
  double before = rx.energy.Remaining ();
  if (!rx.alive)
    {
      if (m_trace.Enabled ())
        {
          TraceLine (ev, {{"node", U (ev.node)}, {"from", U (ev.peer)}, {"req", U (m.discovery)}, {"result", "dead"}});
        }
      return;
    }
  Charge (rx.id, m_cfg.control_energy_fraction * rx.energy.recv_cost, true);
  --m.position;
  LinkAnnotation a = AnnotateLink (rx.id, ev.peer, disc.flow, true);
  m_annotations.push_back (a);
  m.labels[m.position] = a.estimate.link_life;

  std::string result;
  if (m.position == 0)
    {
      if (!disc.finished)
        {
          disc.replies.push_back (MakeCandidate (Path{m.route}, m.labels, Now () - m.sent_at, Now (),
                                                 m.min_residual));
          result = "collected";
        }
      else
        {
          result = "stale";
        }
    }
  else
    {
      m.min_residual = std::min (m.min_residual, rx.energy.Remaining ());
      NodeId prev = m.route[m.position - 1];
      if (rx.alive && CheckLink (rx.id, prev) == LinkStatus::Alive)
        {
          Schedule (Now () + ControlLatency (), EventKind::RouteReplyHop, prev, rx.id, ev.ref);
          result = "forward";
        }
      else
        {
          result = "lost";
        }
      if (rx.alive)
        {
          Charge (rx.id, m_cfg.control_energy_fraction * rx.energy.send_cost, true);
        }
    }
  if (m_trace.Enabled ())
    {
      const auto &e = a.estimate;
      TraceLine (ev, {{"node", U (ev.node)},
                      {"from", U (ev.peer)},
                      {"req", U (m.discovery)},
                      {"energy", F (before)},
                      {"lpm", F (e.lpm)},
                      {"le", F (a.le)},
                      {"lpe", F (e.lpe)},
                      {"dpr", F (e.dpr)},
                      {"tm", std::string (1, ToChar (e.tm))},
                      {"link_life", std::string (1, ToChar (e.link_life))},
                      {"result", result}});
    }
}

std::vector<RouteCandidate>
Simulator::Discover (NodeId src, NodeId dst)
{
  if (src == dst || src >= m_nodes.size () || dst >= m_nodes.size ())
    {
      throw std::invalid_argument ("discovery needs two distinct existing nodes");
    }
  std::uint64_t id = StartDiscovery (kNoFlow, src, dst);
  RunUntil (m_discoveries[id].started + 2.0 * m_discoveryWindow);
  if (m_discoveries[id].replies.empty ())
    {
      throw NoRouteFound ("no route from " + std::to_string (src) + " to " + std::to_string (dst));
    }
  return m_discoveries[id].replies;
}

std::vector<RouteCandidate>
Discover (Simulator &sim, NodeId src, NodeId dst)
{
  return sim.Discover (src, dst);
}

// ---------------------------------------------------------------------------
// plans

std::uint64_t
Simulator::UnsentPackets (const FlowRuntime &fr) const
{
  return (fr.flow.total_packets - fr.generated) + fr.pending.size ();
}

void
Simulator::RequestRoute (std::uint32_t flow)
{
  FlowRuntime &fr = m_flows[flow];
  if (fr.discovering || fr.retry_scheduled || fr.plan || UnsentPackets (fr) == 0)
    {
      return;
    }
  StartDiscovery (flow, fr.flow.src, fr.flow.dst);
}

void
Simulator::RegisterRates (std::uint32_t flow)
{
  FlowRuntime &fr = m_flows[flow];
  const RoutePlan &plan = *fr.plan;
  std::uint64_t sum = std::accumulate (fr.quota.begin (), fr.quota.end (), std::uint64_t{0});
  for (std::uint32_t slot = 0; slot < plan.selected.size (); ++slot)
    {
      double share = sum > 0 ? static_cast<double> (fr.quota[slot]) / static_cast<double> (sum)
                             : 1.0 / static_cast<double> (plan.selected.size ());
      double rate = fr.flow.offered_rate * share;
      if (rate <= 0.0)
        {
          continue;
        }
      const auto &nodes = plan.selected[slot].path.nodes;
      auto key = std::make_tuple (flow, fr.generation, slot);
      for (std::size_t i = 0; i < nodes.size (); ++i)
        {
          NodeRuntime &n = m_nodes[nodes[i]];
          if (i > 0)
            {
              n.arrival_regs[key] = rate;
            }
          if (i + 1 < nodes.size ())
            {
              n.departure_regs[key] = rate;
            }
        }
    }
  for (auto &n : m_nodes)
    {
      n.traffic = TrafficWithRequest (n.id, 0.0, 0.0);
    }
}

void
Simulator::UnregisterRates (std::uint32_t flow)
{
  for (auto &n : m_nodes)
    {
      std::erase_if (n.arrival_regs, [&] (const auto &kv) { return std::get<0> (kv.first) == flow; });
      std::erase_if (n.departure_regs, [&] (const auto &kv) { return std::get<0> (kv.first) == flow; });
      n.traffic = TrafficWithRequest (n.id, 0.0, 0.0);
    }
}

void
Simulator::InstallPlan (std::uint32_t flow, RoutePlan plan)
{
  FlowRuntime &fr = m_flows[flow];
  plan.flow = flow;
  ++fr.generation;
  fr.quota = plan.partitions;
  fr.plan = std::move (plan);
  RegisterRates (flow);
  while (!fr.pending.empty ())
    {
      std::uint64_t pkt = fr.pending.front ();
      fr.pending.pop_front ();
      DispatchPacket (flow, pkt);
    }
  if (m_cfg.protocol == Protocol::Dbmf)
    {
      Schedule (Now () + m_cfg.hello_interval, EventKind::PlanRefresh, static_cast<NodeId> (fr.generation), 0,
                flow, kCheckPlan);
    }
}

void
Simulator::ClearPlan (std::uint32_t flow)
{
  FlowRuntime &fr = m_flows[flow];
  UnregisterRates (flow);
  fr.plan.reset ();
  fr.quota.clear ();
}

void
Simulator::FinishDiscovery (std::uint64_t discovery)
{
  Discovery &d = m_discoveries[discovery];
  d.finished = true;
  if (d.flow == kNoFlow)
    {
      return;
    }
  FlowRuntime &fr = m_flows[d.flow];
  fr.discovering = false;
  const std::uint64_t unsent = UnsentPackets (fr);
  if (d.replies.empty ())
    {
      for (std::uint64_t pkt : fr.pending)
        {
          Drop (pkt, DropReason::NoRoute, fr.flow.src);
        }
      fr.pending.clear ();
      if (fr.generated < fr.flow.total_packets && Now () + kRetryHoldoff < m_cfg.sim_duration)
        {
          fr.retry_scheduled = true;
          Schedule (Now () + kRetryHoldoff, EventKind::PlanRefresh, 0, 0, d.flow, kRetryDiscovery);
        }
      return;
    }
  if (unsent == 0)
    {
      return;
    }
  InstallPlan (d.flow, BuildPlan (m_cfg.protocol, d.replies, unsent, m_cfg.path_count));
}

void
Simulator::OnPlanRefresh (const Event &ev)
{
  std::string detail;
  std::string action;
  switch (ev.aux)
    {
    case kFinishDiscovery: {
      action = "install";
      const Discovery &d = m_discoveries[ev.ref];
      FinishDiscovery (ev.ref);
      if (d.flow != kNoFlow && m_flows[d.flow].plan && !d.replies.empty ())
        {
          detail = PlanSummary (*m_flows[d.flow].plan);
        }
      else
        {
          detail = d.replies.empty () ? "no_route" : "none";
        }
      if (m_trace.Enabled ())
        {
          TraceLine (ev, {{"action", action}, {"req", U (ev.ref)}, {"flow", d.flow == kNoFlow ? "-" : U (d.flow)},
                          {"replies", U (d.replies.size ())}, {"plan", detail}});
        }
      return;
    }
    case kRetryDiscovery: {
      auto f = static_cast<std::uint32_t> (ev.ref);
      m_flows[f].retry_scheduled = false;
      RequestRoute (f);
      if (m_trace.Enabled ())
        {
          TraceLine (ev, {{"action", "retry"}, {"flow", U (f)}});
        }
      return;
    }
    case kCheckPlan: {
      auto f = static_cast<std::uint32_t> (ev.ref);
      FlowRuntime &fr = m_flows[f];
      if (!fr.plan || fr.generation != ev.node)
        {
          return;
        }
      bool expired = false;
      std::string lives;
      for (const auto &c : fr.plan->selected)
        {
          std::vector<FuzzyLabel> labels;
          for (std::size_t i = 0; i + 1 < c.path.nodes.size (); ++i)
            {
              labels.push_back (AnnotateLink (c.path.nodes[i], c.path.nodes[i + 1], f, false).estimate.link_life);
            }
          FuzzyLabel life = RouteLife (labels);
          lives += ToChar (life);
          expired = expired || life == FuzzyLabel::A;
        }
      if (m_trace.Enabled ())
        {
          TraceLine (ev, {{"action", "check"}, {"flow", U (f)}, {"lives", lives}, {"expired", expired ? "1" : "0"}});
        }
      if (expired)
        {
          ClearPlan (f);
          RequestRoute (f);
        }
      else if (fr.generated < fr.flow.total_packets && Now () + m_cfg.hello_interval < m_cfg.sim_duration)
        {
          Schedule (Now () + m_cfg.hello_interval, EventKind::PlanRefresh, ev.node, 0, f, kCheckPlan);
        }
      return;
    }
    case kPathFailure: {
      const PacketRecord &p = m_packets[ev.ref];
      FlowRuntime &fr = m_flows[p.flow];
      bool applied = false;
      if (fr.plan && p.plan_generation == fr.generation)
        {
          bool present = std::any_of (fr.plan->selected.begin (), fr.plan->selected.end (),
                                      [&] (const RouteCandidate &c) { return c.path == p.path; });
          if (present)
            {
              applied = true;
              RoutePlan next = RedistributeOnFailure (*fr.plan, p.path, fr.quota);
              UnregisterRates (p.flow);
              if (next.Empty ())
                {
                  fr.plan.reset ();
                  fr.quota.clear ();
                  RequestRoute (p.flow);
                }
              else
                {
                  fr.quota = next.partitions;
                  fr.plan = std::move (next);
                  RegisterRates (p.flow);
                }
            }
        }
      if (m_trace.Enabled ())
        {
          TraceLine (ev, {{"action", "failure"}, {"flow", U (p.flow)}, {"path", ToString (p.path)},
                          {"applied", applied ? "1" : "0"},
                          {"plan", fr.plan ? PlanSummary (*fr.plan) : std::string ("none")}});
        }
      return;
    }
    default:
      throw std::logic_error ("unknown PlanRefresh action");
    }
}

const RoutePlan *
Simulator::Plan (std::uint32_t flow) const
{
  const auto &fr = m_flows.at (flow);
  return fr.plan ? &*fr.plan : nullptr;
}

RunResult
Simulator::Result () const
{
  RunResult r;
  r.report = Summarize (m_packets, m_cfg.sim_duration, ToString (m_cfg.protocol), m_cfg.node_count, m_cfg.seed);
  r.report.wall_time = m_wallTime;
  r.trace = m_trace.Text ();
  r.trace_hash = m_trace.Hash ();
  r.in_flight = m_packets.size () - m_delivered - m_dropped;
  return r;
}

RunResult
Run (const ScenarioConfig &cfg, TraceMode mode)
{
  Simulator sim (cfg, mode);
  sim.Run ();
  return sim.Result ();
}

} // namespace dbmf
