#include "dbmf/model.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dbmf
{

char
ToChar (FuzzyLabel label)
{
  return static_cast<char> ('a' + static_cast<int> (label));
}

FuzzyLabel
LabelFromChar (char c)
{
  if (c < 'a' || c > 'd')
    {
      throw std::invalid_argument (std::string ("not a fuzzy label: ") + c);
    }
  return static_cast<FuzzyLabel> (c - 'a');
}

FuzzyLabel
LabelMin (std::span<const FuzzyLabel> labels)
{
  if (labels.empty ())
    {
      throw EmptyList ("LabelMin of an empty list");
    }
  return *std::min_element (labels.begin (), labels.end ());
}

Path
MakePath (std::vector<NodeId> nodes)
{
  if (nodes.size () < 2)
    {
      throw InvalidPath ("path needs at least two nodes");
    }
  std::set<NodeId> seen;
  for (NodeId n : nodes)
    {
      if (!seen.insert (n).second)
        {
          throw InvalidPath ("path repeats node " + std::to_string (n));
        }
    }
  return Path{std::move (nodes)};
}

std::string
ToString (const Path &path)
{
  std::string out;
  for (std::size_t i = 0; i < path.nodes.size (); ++i)
    {
      if (i > 0)
        {
          out += '-';
        }
      out += std::to_string (path.nodes[i]);
    }
  return out;
}

std::string_view
ToString (Protocol protocol)
{
  switch (protocol)
    {
    case Protocol::Dbmf:
      return "dbmf";
    case Protocol::SinglePath:
      return "single_path";
    case Protocol::Mmre:
      return "mmre";
    case Protocol::Zd:
      return "zd";
    }
  return "?";
}

Protocol
ProtocolFromString (std::string_view name)
{
  for (Protocol p : {Protocol::Dbmf, Protocol::SinglePath, Protocol::Mmre, Protocol::Zd})
    {
      if (ToString (p) == name)
        {
          return p;
        }
    }
  throw std::invalid_argument ("unknown protocol: " + std::string (name));
}

namespace
{

std::string
JoinViolations (const std::vector<ConfigViolation> &violations)
{
  std::ostringstream os;
  os << "invalid config:";
  for (const auto &v : violations)
    {
      os << ' ' << v.field << " (" << v.constraint << ");";
    }
  return os.str ();
}

} // namespace

InvalidConfig::InvalidConfig (std::vector<ConfigViolation> violations)
  : std::runtime_error (JoinViolations (violations)),
    m_violations (std::move (violations))
{
}

bool
InvalidConfig::Names (std::string_view field) const
{
  return std::any_of (m_violations.begin (), m_violations.end (),
                      [&] (const ConfigViolation &v) { return v.field == field; });
}

std::vector<ConfigViolation>
CheckConfig (const ScenarioConfig &cfg)
{
  std::vector<ConfigViolation> out;
  auto require = [&] (bool ok, std::string field, std::string constraint) {
    if (!ok)
      {
        out.push_back ({std::move (field), std::move (constraint)});
      }
  };

  require (cfg.node_count >= 2, "node_count", ">= 2");
  require (cfg.area_width > 0, "area_width", "> 0");
  require (cfg.area_height > 0, "area_height", "> 0");
  require (cfg.speed_min > 0, "speed_min", "> 0");
  require (cfg.speed_max > 0, "speed_max", "> 0");
  require (cfg.speed_min <= cfg.speed_max, "speed_max", ">= speed_min");
  require (cfg.pause_time >= 0, "pause_time", ">= 0");
  require (cfg.radio_range_min > 0, "radio_range_min", "> 0");
  require (cfg.radio_range_max > 0, "radio_range_max", "> 0");
  require (cfg.radio_range_min <= cfg.radio_range_max, "radio_range_max", ">= radio_range_min");
  require (cfg.trans_pow > 0, "trans_pow", "> 0");
  require (cfg.friis_k > 0, "friis_k", "> 0");
  require (cfg.friis_q == 2 || cfg.friis_q == 3, "friis_q", "in {2,3}");
  require (cfg.hello_interval > 0, "hello_interval", "> 0");
  require (cfg.rss_window >= 2, "rss_window", ">= 2");
  require (cfg.sim_duration > 0, "sim_duration", "> 0");
  require (cfg.path_count >= 1, "path_count", ">= 1");
  require (cfg.queue_capacity >= 1, "queue_capacity", ">= 1");
  require (cfg.energy_initial > 0, "energy_initial", "> 0");
  require (cfg.energy_recv_per_packet > 0, "energy_recv_per_packet", "> 0");
  require (cfg.energy_send_per_packet > 0, "energy_send_per_packet", "> 0");
  require (cfg.control_energy_fraction > 0, "control_energy_fraction", "> 0");
  require (cfg.max_arrival_rate > 0, "max_arrival_rate", "> 0");
  require (cfg.max_departure_rate > 0, "max_departure_rate", "> 0");
  require (cfg.lp_cap > 0, "lp_cap", "> 0");
  require (cfg.link_bitrate > 0, "link_bitrate", "> 0");

  for (std::size_t i = 0; i < cfg.flows.size (); ++i)
    {
      const Flow &f = cfg.flows[i];
      const std::string prefix = "flows[" + std::to_string (i) + "].";
      require (f.src < cfg.node_count, prefix + "src", "< node_count");
      require (f.dst < cfg.node_count, prefix + "dst", "< node_count");
      require (f.src != f.dst, prefix + "dst", "!= src");
      require (f.total_packets >= 1, prefix + "total_packets", ">= 1");
      require (f.offered_rate > 0, prefix + "offered_rate", "> 0");
      require (f.packet_size > 0, prefix + "packet_size", "> 0");
      require (f.start_time >= 0, prefix + "start_time", ">= 0");
    }
  return out;
}

const ScenarioConfig &
ValidateConfig (const ScenarioConfig &cfg)
{
  auto violations = CheckConfig (cfg);
  if (!violations.empty ())
    {
      throw InvalidConfig (std::move (violations));
    }
  return cfg;
}

namespace
{

using nlohmann::json;

template <typename T>
void
ReadField (const json &obj, const char *key, T &out, std::vector<ConfigViolation> &errors,
           const std::string &prefix = "")
{
  auto it = obj.find (key);
  if (it == obj.end ())
    {
      return;
    }
  try
    {
      if constexpr (std::is_integral_v<T>)
        {
          if (!it->is_number_integer ())
            {
              throw std::invalid_argument ("integer expected");
            }
          if (std::is_unsigned_v<T> && !it->is_number_unsigned ())
            {
              errors.push_back ({prefix + key, "non-negative integer expected"});
              return;
            }
        }
      else if constexpr (std::is_floating_point_v<T>)
        {
          if (!it->is_number ())
            {
              throw std::invalid_argument ("number expected");
            }
        }
      out = it->template get<T> ();
    }
  catch (const std::exception &)
    {
      errors.push_back ({prefix + key, std::is_integral_v<T> ? "integer expected" : "number expected"});
    }
}

void
CheckKeys (const json &obj, std::initializer_list<const char *> known, const std::string &prefix,
           std::vector<ConfigViolation> &errors)
{
  for (const auto &[key, value] : obj.items ())
    {
      bool ok = std::any_of (known.begin (), known.end (), [&] (const char *k) { return key == k; });
      if (!ok)
        {
          errors.push_back ({prefix + key, "unknown key"});
        }
    }
}

} // namespace

ScenarioConfig
ParseScenario (std::string_view text)
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
  CheckKeys (doc,
             {"node_count", "area_width", "area_height", "speed_min", "speed_max", "pause_time",
              "radio_range_min", "radio_range_max", "trans_pow", "friis_k", "friis_q",
              "hello_interval", "rss_window", "sim_duration", "flows", "protocol", "path_count",
              "queue_capacity", "energy_initial", "energy_recv_per_packet",
              "energy_send_per_packet", "control_energy_fraction", "max_arrival_rate",
              "max_departure_rate", "lp_cap", "link_bitrate", "seed"},
             "", errors);

  ScenarioConfig cfg;
  ReadField (doc, "node_count", cfg.node_count, errors);
  ReadField (doc, "area_width", cfg.area_width, errors);
  ReadField (doc, "area_height", cfg.area_height, errors);
  ReadField (doc, "speed_min", cfg.speed_min, errors);
  ReadField (doc, "speed_max", cfg.speed_max, errors);
  ReadField (doc, "pause_time", cfg.pause_time, errors);
  ReadField (doc, "radio_range_min", cfg.radio_range_min, errors);
  ReadField (doc, "radio_range_max", cfg.radio_range_max, errors);
  ReadField (doc, "trans_pow", cfg.trans_pow, errors);
  ReadField (doc, "friis_k", cfg.friis_k, errors);
  ReadField (doc, "friis_q", cfg.friis_q, errors);
  ReadField (doc, "hello_interval", cfg.hello_interval, errors);
  ReadField (doc, "rss_window", cfg.rss_window, errors);
  ReadField (doc, "sim_duration", cfg.sim_duration, errors);
  ReadField (doc, "path_count", cfg.path_count, errors);
  ReadField (doc, "queue_capacity", cfg.queue_capacity, errors);
  ReadField (doc, "energy_initial", cfg.energy_initial, errors);
  ReadField (doc, "energy_recv_per_packet", cfg.energy_recv_per_packet, errors);
  ReadField (doc, "energy_send_per_packet", cfg.energy_send_per_packet, errors);
  ReadField (doc, "control_energy_fraction", cfg.control_energy_fraction, errors);
  ReadField (doc, "max_arrival_rate", cfg.max_arrival_rate, errors);
  ReadField (doc, "max_departure_rate", cfg.max_departure_rate, errors);
  ReadField (doc, "lp_cap", cfg.lp_cap, errors);
  ReadField (doc, "link_bitrate", cfg.link_bitrate, errors);
  ReadField (doc, "seed", cfg.seed, errors);

  if (auto it = doc.find ("protocol"); it != doc.end ())
    {
      try
        {
          cfg.protocol = ProtocolFromString (it->get<std::string> ());
        }
      catch (const std::exception &)
        {
          errors.push_back ({"protocol", "one of dbmf, single_path, mmre, zd"});
        }
    }

  if (auto it = doc.find ("flows"); it != doc.end ())
    {
      if (!it->is_array ())
        {
          errors.push_back ({"flows", "array expected"});
        }
      else
        {
          cfg.flows.clear ();
          for (std::size_t i = 0; i < it->size (); ++i)
            {
              const json &f = (*it)[i];
              const std::string prefix = "flows[" + std::to_string (i) + "].";
              if (!f.is_object ())
                {
                  errors.push_back ({prefix, "object expected"});
                  continue;
                }
              CheckKeys (f, {"src", "dst", "total_packets", "offered_rate", "packet_size", "start_time"},
                         prefix, errors);
              Flow flow;
              ReadField (f, "src", flow.src, errors, prefix);
              ReadField (f, "dst", flow.dst, errors, prefix);
              ReadField (f, "total_packets", flow.total_packets, errors, prefix);
              ReadField (f, "offered_rate", flow.offered_rate, errors, prefix);
              ReadField (f, "packet_size", flow.packet_size, errors, prefix);
              ReadField (f, "start_time", flow.start_time, errors, prefix);
              cfg.flows.push_back (flow);
            }
        }
    }

  if (!errors.empty ())
    {
      throw InvalidConfig (std::move (errors));
    }
  return cfg;
}

ScenarioConfig
LoadScenario (const std::string &path)
{
  std::ifstream in (path);
  if (!in)
    {
      throw std::runtime_error ("cannot open scenario file: " + path);
    }
  std::ostringstream buf;
  buf << in.rdbuf ();
  return ParseScenario (buf.str ());
}

std::string
SerializeScenario (const ScenarioConfig &cfg)
{
  json flows = json::array ();
  for (const Flow &f : cfg.flows)
    {
      flows.push_back ({{"src", f.src},
                        {"dst", f.dst},
                        {"total_packets", f.total_packets},
                        {"offered_rate", f.offered_rate},
                        {"packet_size", f.packet_size},
                        {"start_time", f.start_time}});
    }
  // ordered_json keeps the field order stable and readable
  nlohmann::ordered_json doc;
  doc["node_count"] = cfg.node_count;
  doc["area_width"] = cfg.area_width;
  doc["area_height"] = cfg.area_height;
  doc["speed_min"] = cfg.speed_min;
  doc["speed_max"] = cfg.speed_max;
  doc["pause_time"] = cfg.pause_time;
  doc["radio_range_min"] = cfg.radio_range_min;
  doc["radio_range_max"] = cfg.radio_range_max;
  doc["trans_pow"] = cfg.trans_pow;
  doc["friis_k"] = cfg.friis_k;
  doc["friis_q"] = cfg.friis_q;
  doc["hello_interval"] = cfg.hello_interval;
  doc["rss_window"] = cfg.rss_window;
  doc["sim_duration"] = cfg.sim_duration;
  doc["flows"] = flows;
  doc["protocol"] = std::string (ToString (cfg.protocol));
  doc["path_count"] = cfg.path_count;
  doc["queue_capacity"] = cfg.queue_capacity;
  doc["energy_initial"] = cfg.energy_initial;
  doc["energy_recv_per_packet"] = cfg.energy_recv_per_packet;
  doc["energy_send_per_packet"] = cfg.energy_send_per_packet;
  doc["control_energy_fraction"] = cfg.control_energy_fraction;
  doc["max_arrival_rate"] = cfg.max_arrival_rate;
  doc["max_departure_rate"] = cfg.max_departure_rate;
  doc["lp_cap"] = cfg.lp_cap;
  doc["link_bitrate"] = cfg.link_bitrate;
  doc["seed"] = cfg.seed;
  return doc.dump (2) + "\n";
}

} // namespace dbmf
