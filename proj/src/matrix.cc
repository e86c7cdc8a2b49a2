#include "dbmf/matrix.h"

#include "dbmf/engine.h"
#include "dbmf/random.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace dbmf
{

namespace
{

using nlohmann::json;

constexpr std::uint64_t kFlowStream = 3;

template <typename T, typename Convert>
void
ReadList (const json &doc, const char *key, std::vector<T> &out, std::vector<ConfigViolation> &errors,
          Convert convert)
{
  auto it = doc.find (key);
  if (it == doc.end ())
    {
      return;
    }
  if (!it->is_array () || it->empty ())
    {
      errors.push_back ({key, "non-empty array expected"});
      return;
    }
  out.clear ();
  for (const json &v : *it)
    {
      try
        {
          out.push_back (convert (v));
        }
      catch (const std::exception &e)
        {
          errors.push_back ({key, e.what ()});
          return;
        }
    }
}

std::uint64_t
Unsigned (const json &v)
{
  if (!v.is_number_unsigned ())
    {
      throw std::invalid_argument ("non-negative integer expected");
    }
  return v.get<std::uint64_t> ();
}

std::vector<Flow>
PlaceFlows (const MatrixSpec &spec, std::uint32_t node_count, std::uint64_t seed)
{
  Flow shape = spec.base.flows.empty () ? Flow{} : spec.base.flows.front ();
  switch (spec.flows)
    {
    case FlowPlacement::Base:
      return spec.base.flows;
    case FlowPlacement::Endpoints:
      shape.src = 0;
      shape.dst = node_count - 1;
      return {shape};
    case FlowPlacement::Random: {
      Rng rng = Rng::Stream (seed, kFlowStream);
      std::vector<Flow> flows;
      std::uint32_t count = spec.flow_count;
      if (spec.flows_per_node > 0.0)
        {
          count = std::max<std::uint32_t> (1, static_cast<std::uint32_t> (std::lround (node_count * spec.flows_per_node)));
        }
      for (std::uint32_t i = 0; i < count; ++i)
        {
          Flow f = shape;
          f.src = static_cast<NodeId> (rng.Below (node_count));
          f.dst = static_cast<NodeId> (rng.Below (node_count - 1));
          if (f.dst >= f.src)
            {
              ++f.dst;
            }
          flows.push_back (f);
        }
      return flows;
    }
    }
  return {};
}

} // namespace

MatrixSpec
ParseMatrix (std::string_view text, const std::string &base_dir)
{
  json doc;
  try
    {
      doc = json::parse (text);
    }
  catch (const json::parse_error &e)
    {
      throw InvalidConfig (std::vector<ConfigViolation>{{"<document>", std::string ("parse error: ") + e.what ()}});
    }
  if (!doc.is_object ())
    {
      throw InvalidConfig (std::vector<ConfigViolation>{{"<document>", "object expected"}});
    }

  std::vector<ConfigViolation> errors;
  static const char *const kKeys[] = {"base",  "node_counts", "protocols", "seeds",      "speeds",
                                      "flows", "flow_count",  "flows_per_node", "out", "parallelism"};
  for (const auto &[key, value] : doc.items ())
    {
      if (std::find (std::begin (kKeys), std::end (kKeys), key) == std::end (kKeys))
        {
          errors.push_back ({key, "unknown key"});
        }
    }

  MatrixSpec spec;
  if (auto it = doc.find ("base"); it == doc.end ())
    {
      errors.push_back ({"base", "required"});
    }
  else if (it->is_string ())
    {
      std::filesystem::path p (it->get<std::string> ());
      if (p.is_relative ())
        {
          p = std::filesystem::path (base_dir) / p;
        }
      spec.base = LoadScenario (p.string ());
    }
  else if (it->is_object ())
    {
      spec.base = ParseScenario (it->dump ());
    }
  else
    {
      errors.push_back ({"base", "scenario path or object expected"});
    }

  spec.node_counts = {spec.base.node_count};
  spec.protocols = {spec.base.protocol};
  spec.seeds = {spec.base.seed};
  spec.speeds = {spec.base.speed_max};
  ReadList (doc, "node_counts", spec.node_counts, errors,
            [] (const json &v) { return static_cast<std::uint32_t> (Unsigned (v)); });
  ReadList (doc, "protocols", spec.protocols, errors,
            [] (const json &v) { return ProtocolFromString (v.get<std::string> ()); });
  ReadList (doc, "seeds", spec.seeds, errors, Unsigned);
  ReadList (doc, "speeds", spec.speeds, errors, [] (const json &v) {
    if (!v.is_number ())
      {
        throw std::invalid_argument ("number expected");
      }
    return v.get<double> ();
  });

  if (auto it = doc.find ("flows"); it != doc.end ())
    {
      std::string mode = it->is_string () ? it->get<std::string> () : "";
      if (mode == "endpoints")
        {
          spec.flows = FlowPlacement::Endpoints;
        }
      else if (mode == "base")
        {
          spec.flows = FlowPlacement::Base;
        }
      else if (mode == "random")
        {
          spec.flows = FlowPlacement::Random;
        }
      else
        {
          errors.push_back ({"flows", "one of endpoints, base, random"});
        }
    }
  for (auto [key, field] : {std::pair{"flow_count", &spec.flow_count}, std::pair{"parallelism", &spec.parallelism}})
    {
      if (auto it = doc.find (key); it != doc.end ())
        {
          if (!it->is_number_unsigned () || it->get<std::uint64_t> () == 0)
            {
              errors.push_back ({key, "positive integer expected"});
            }
          else
            {
              *field = it->get<std::uint32_t> ();
            }
        }
    }
  if (auto it = doc.find ("flows_per_node"); it != doc.end ())
    {
      if (!it->is_number () || !(it->get<double> () > 0.0))
        {
          errors.push_back ({"flows_per_node", "positive number expected"});
        }
      else
        {
          spec.flows_per_node = it->get<double> ();
        }
    }
  if (auto it = doc.find ("out"); it != doc.end ())
    {
      if (it->is_string ())
        {
          spec.out = it->get<std::string> ();
        }
      else
        {
          errors.push_back ({"out", "string expected"});
        }
    }

  if (!errors.empty ())
    {
      throw InvalidConfig (std::move (errors));
    }
  return spec;
}

MatrixSpec
LoadMatrix (const std::string &path)
{
  std::ifstream in (path);
  if (!in)
    {
      throw std::runtime_error ("cannot open matrix file: " + path);
    }
  std::ostringstream buf;
  buf << in.rdbuf ();
  std::string dir = std::filesystem::path (path).parent_path ().string ();
  return ParseMatrix (buf.str (), dir.empty () ? "." : dir);
}

std::vector<ScenarioConfig>
ExpandMatrix (const MatrixSpec &spec)
{
  std::vector<ScenarioConfig> out;
  for (Protocol protocol : spec.protocols)
    {
      for (std::uint32_t n : spec.node_counts)
        {
          for (double speed : spec.speeds)
            {
              for (std::uint64_t seed : spec.seeds)
                {
                  ScenarioConfig cfg = spec.base;
                  cfg.protocol = protocol;
                  cfg.node_count = n;
                  cfg.speed_min = speed;
                  cfg.speed_max = speed;
                  cfg.seed = seed;
                  if (n >= 2)
                    {
                      cfg.flows = PlaceFlows (spec, n, seed);
                    }
                  out.push_back (ValidateConfig (cfg));
                }
            }
        }
    }
  return out;
}

std::vector<MetricsReport>
RunScenarios (const std::vector<ScenarioConfig> &scenarios, std::uint32_t parallelism)
{
  std::vector<MetricsReport> reports (scenarios.size ());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_lock;
  std::string error;

  auto worker = [&] {
    while (!failed)
      {
        std::size_t i = next++;
        if (i >= scenarios.size ())
          {
            return;
          }
        const ScenarioConfig &cfg = scenarios[i];
        try
          {
            reports[i] = Run (cfg).report;
          }
        catch (const std::exception &e)
          {
            std::lock_guard<std::mutex> guard (error_lock);
            if (!failed.exchange (true))
              {
                error = "run failed for protocol=" + std::string (ToString (cfg.protocol))
                        + " node_count=" + std::to_string (cfg.node_count) + " speed="
                        + std::to_string (cfg.speed_max) + " seed=" + std::to_string (cfg.seed) + ": "
                        + e.what ();
              }
          }
      }
  };

  std::uint32_t workers = std::max<std::uint32_t> (1, parallelism);
  workers = static_cast<std::uint32_t> (std::min<std::size_t> (workers, std::max<std::size_t> (1, scenarios.size ())));
  std::vector<std::thread> pool;
  for (std::uint32_t w = 1; w < workers; ++w)
    {
      pool.emplace_back (worker);
    }
  worker ();
  for (auto &t : pool)
    {
      t.join ();
    }
  if (failed)
    {
      throw MatrixRunFailed (error);
    }
  return reports;
}

std::string
RunMatrix (const MatrixSpec &spec, std::uint32_t parallelism)
{
  return ToCsv (RunScenarios (ExpandMatrix (spec), parallelism));
}

} // namespace dbmf
