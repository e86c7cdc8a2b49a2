#include "dbmf/engine.h"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace dbmf;

namespace
{

ScenarioConfig
Static (std::uint32_t n, double duration = 30.0)
{
  ScenarioConfig cfg;
  cfg.node_count = n;
  cfg.area_width = 100;
  cfg.area_height = 100;
  cfg.speed_min = cfg.speed_max = 1.0;
  cfg.sim_duration = duration;
  cfg.flows = {};
  return cfg;
}

const std::vector<Position> kLine{{10, 50}, {50, 50}, {90, 50}};

std::vector<std::string>
Lines (const std::string &text, std::string_view kind)
{
  std::vector<std::string> out;
  std::istringstream in (text);
  std::string line;
  std::string tag = "|" + std::string (kind) + "|";
  while (std::getline (in, line))
    {
      if (line.find (tag) != std::string::npos)
        {
          out.push_back (line);
        }
    }
  return out;
}

} // namespace

TEST_CASE ("event queue orders by time then push order and refuses the past")
{
  EventQueue q;
  Event e;
  e.time = 2.0;
  e.ref = 1;
  q.Push (e);
  e.time = 1.0;
  e.ref = 2;
  q.Push (e);
  e.time = 2.0;
  e.ref = 3;
  q.Push (e);
  CHECK (q.Pop ().ref == 2);
  CHECK (q.Pop ().ref == 1);
  CHECK (q.Now () == 2.0);
  e.time = 1.5;
  CHECK_THROWS_AS (q.Push (e), std::logic_error);
  CHECK (q.Pop ().ref == 3);
  CHECK (q.Empty ());
}

TEST_CASE ("two static nodes in range deliver everything")
{
  ScenarioConfig cfg = Static (2, 40);
  Flow f;
  f.src = 0;
  f.dst = 1;
  f.total_packets = 100;
  f.offered_rate = 5;
  cfg.flows = {f};
  Simulator sim (cfg);
  sim.PlaceNodes ({{20, 20}, {50, 40}});
  sim.Run ();
  auto r = sim.Result ();
  CHECK (r.report.generated == 100);
  CHECK (r.report.delivered == 100);
  CHECK (r.report.pdr == 100.0);
  CHECK (r.report.dropped == 0);
  CHECK (r.in_flight == 0);
  REQUIRE (sim.Plan (0) != nullptr);
  CHECK (sim.Plan (0)->selected.front ().path == MakePath ({0, 1}));
}

TEST_CASE ("same config and seed give the same trace and report")
{
  ScenarioConfig cfg;
  cfg.sim_duration = 40;
  auto a = Run (cfg, TraceMode::Text);
  auto b = Run (cfg, TraceMode::Text);
  CHECK (a.trace == b.trace);
  CHECK (a.trace_hash == b.trace_hash);
  CHECK (ToCsv ({a.report}) == ToCsv ({b.report}));
  auto h = Run (cfg, TraceMode::Hash);
  CHECK (h.trace_hash == a.trace_hash);
  cfg.seed = 2;
  CHECK (Run (cfg, TraceMode::Hash).trace_hash != a.trace_hash);
}

TEST_CASE ("trace times never decrease and every run conserves packets")
{
  for (Protocol p : {Protocol::Dbmf, Protocol::SinglePath, Protocol::Mmre, Protocol::Zd})
    {
      ScenarioConfig cfg;
      cfg.protocol = p;
      cfg.sim_duration = 60;
      auto r = Run (cfg, TraceMode::Text);
      std::istringstream in (r.trace);
      std::string line;
      double last = 0.0;
      bool ordered = true;
      while (std::getline (in, line))
        {
          double t = std::stod (line.substr (0, line.find ('|')));
          ordered = ordered && t >= last;
          last = t;
        }
      CHECK (ordered);
      CHECK (r.report.generated == r.report.delivered + r.report.dropped + r.in_flight);
      CHECK (r.report.dropped
             == r.report.drops_queue + r.report.drops_link + r.report.drops_dead + r.report.drops_noroute);
    }
}

TEST_CASE ("queue capacity is exact: one past it overflows")
{
  ScenarioConfig cfg = Static (2);
  cfg.queue_capacity = 10;
  Simulator sim (cfg);
  sim.PlaceNodes ({{20, 20}, {50, 40}});
  Path p = MakePath ({0, 1});
  for (int i = 0; i < 10; ++i)
    {
      CHECK (sim.InjectPacket (p, 512) == EnqueueResult::Accepted);
    }
  CHECK (sim.InjectPacket (p, 512) == EnqueueResult::Dropped);
  CHECK (sim.Packets ().back ().reason == DropReason::QueueOverflow);
  CHECK (sim.Node (0).traffic.arrived_total == 11);
  CHECK (sim.Node (0).traffic.dropped_total == 1);
  sim.Run ();
  CHECK (sim.Result ().report.delivered == 10);
}

TEST_CASE ("back-to-back packets leave one service time apart")
{
  ScenarioConfig cfg = Static (2);
  Simulator sim (cfg);
  sim.PlaceNodes ({{20, 20}, {50, 40}});
  Path p = MakePath ({0, 1});
  for (int i = 0; i < 10; ++i)
    {
      sim.InjectPacket (p, 512);
    }
  sim.Run ();
  const double service = 1.0 / cfg.max_departure_rate;
  const double latency = 512 * 8.0 / cfg.link_bitrate + 0.001;
  CHECK (sim.DataLatency (512) == doctest::Approx (latency).epsilon (1e-15));
  for (std::size_t k = 0; k < 10; ++k)
    {
      const auto &rec = sim.Packets ()[k];
      REQUIRE (rec.status == PacketStatus::Delivered);
      CHECK (std::abs (rec.delivered_at - (k * service + latency)) < 1e-9);
    }
}

TEST_CASE ("energy ledger: data charges per hop and the totals balance")
{
  ScenarioConfig cfg = Static (3);
  Simulator sim (cfg);
  sim.PlaceNodes (kLine);
  const int n = 20;
  for (int i = 0; i < n; ++i)
    {
      sim.InjectPacket (MakePath ({0, 1, 2}), 512);
    }
  sim.Run ();
  CHECK (sim.Result ().report.delivered == n);
  const double send = cfg.energy_send_per_packet, recv = cfg.energy_recv_per_packet;
  CHECK (sim.Node (0).data_energy == doctest::Approx (n * send).epsilon (1e-12));
  CHECK (sim.Node (1).data_energy == doctest::Approx (n * (send + recv)).epsilon (1e-12));
  CHECK (sim.Node (2).data_energy == doctest::Approx (n * recv).epsilon (1e-12));
  for (NodeId i = 0; i < 3; ++i)
    {
      const auto &node = sim.Node (i);
      CHECK (std::abs (node.energy.consumed_energy - node.data_energy - node.control_energy) < 1e-9);
      CHECK (node.control_energy > 0.0);
    }
}

TEST_CASE ("Hello fan-out: every neighbour samples and acknowledges")
{
  ScenarioConfig cfg = Static (3);
  Simulator sim (cfg, TraceMode::Text);
  sim.PlaceNodes ({{40, 40}, {60, 40}, {50, 60}});
  sim.RunUntil (0.99);
  const auto &text = sim.GetTrace ().Text ();
  auto hellos = Lines (text, "HelloBroadcast");
  REQUIRE (hellos.size () == 3);
  for (const auto &h : hellos)
    {
      CHECK (h.find ("|receivers=2") != std::string::npos);
    }
  CHECK (Lines (text, "HelloAck").size () == 6);
  for (NodeId i = 0; i < 3; ++i)
    {
      const auto &node = sim.Node (i);
      REQUIRE (node.neighbors.size () == 2);
      for (const auto &[peer, window] : node.neighbors)
        {
          REQUIRE (window.Size () == 1);
          double derived = DistanceFromRss (sim.Node (peer).radio, window.Samples ().back ().rec_pow);
          double truth = Distance (node.waypoint.position, sim.Node (peer).waypoint.position);
          CHECK (std::abs (derived - truth) < 1e-9);
        }
    }
}

TEST_CASE ("an out-of-range node hears nothing")
{
  ScenarioConfig cfg = Static (3);
  Simulator sim (cfg);
  sim.PlaceNodes (kLine);
  sim.RunUntil (5.0);
  CHECK (sim.Node (0).neighbors.count (2) == 0);
  CHECK (sim.Node (0).neighbors.at (1).Size () == 4);
  CHECK (sim.CheckLink (0, 2) == LinkStatus::OutOfRange);
  CHECK (sim.CheckLink (0, 1) == LinkStatus::Alive);
}

TEST_CASE ("a relay that drains dies and its traffic is dropped as node_dead")
{
  ScenarioConfig cfg = Static (3);
  Simulator sim (cfg);
  sim.PlaceNodes (kLine);
  sim.Node (1).energy.consumed_energy = 0.6 * cfg.energy_initial - 0.02;
  for (int i = 0; i < 20; ++i)
    {
      sim.InjectPacket (MakePath ({0, 1, 2}), 512);
    }
  sim.Run ();
  auto r = sim.Result ();
  CHECK_FALSE (sim.Node (1).alive);
  CHECK (sim.CheckLink (0, 1) == LinkStatus::EndpointDead);
  CHECK (r.report.drops_dead > 0);
  CHECK (r.report.delivered + r.report.dropped == 20);
  CHECK (sim.Node (1).energy.Remaining () < 0.4 * cfg.energy_initial);

  // negative control: same topology, fresh battery
  Simulator healthy (cfg);
  healthy.PlaceNodes (kLine);
  for (int i = 0; i < 20; ++i)
    {
      healthy.InjectPacket (MakePath ({0, 1, 2}), 512);
    }
  healthy.Run ();
  CHECK (healthy.Node (1).alive);
  CHECK (healthy.Result ().report.delivered == 20);
}

TEST_CASE ("a packet whose next hop moved away is dropped as link_break")
{
  ScenarioConfig cfg = Static (3);
  Simulator sim (cfg);
  sim.PlaceNodes (kLine);
  sim.InjectPacket (MakePath ({0, 2}), 512);
  sim.Run ();
  CHECK (sim.Packets ().front ().reason == DropReason::LinkBreak);
}

TEST_CASE ("annotation of an idle static link")
{
  ScenarioConfig cfg = Static (3);
  Simulator sim (cfg);
  sim.PlaceNodes (kLine);
  sim.RunUntil (5.0);
  auto a = sim.AnnotateLink (0, 1, kNoFlow, true);
  CHECK (a.estimate.lpm == doctest::Approx (std::tanh (cfg.lp_cap / 2)));
  CHECK (a.estimate.dpr == 1.0);
  CHECK (a.le > 0.0);
  CHECK (a.estimate.link_life >= FuzzyLabel::C);
}

TEST_CASE ("invalid configs are refused at construction")
{
  ScenarioConfig cfg;
  cfg.friis_q = 4;
  CHECK_THROWS_AS (Simulator{cfg}, InvalidConfig);
}
