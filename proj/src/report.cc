#include "dbmf/report.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <tuple>

namespace dbmf
{

std::string_view
ToString (DropReason reason)
{
  switch (reason)
    {
    case DropReason::None:
      return "none";
    case DropReason::QueueOverflow:
      return "queue_overflow";
    case DropReason::LinkBreak:
      return "link_break";
    case DropReason::NodeDead:
      return "node_dead";
    case DropReason::NoRoute:
      return "no_route";
    }
  return "?";
}

namespace
{

struct Counts
{
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
};

Counts
Count (std::span<const PacketRecord> records)
{
  Counts c;
  for (const auto &r : records)
    {
      ++c.generated;
      c.delivered += r.status == PacketStatus::Delivered;
      c.dropped += r.status == PacketStatus::Dropped;
    }
  return c;
}

void
AppendFixed (std::string &out, double v)
{
  char buf[64];
  auto res = std::to_chars (buf, buf + sizeof (buf), v, std::chars_format::fixed, 6);
  out.append (buf, res.ptr);
}

} // namespace

double
ComputePdr (std::span<const PacketRecord> records)
{
  Counts c = Count (records);
  if (c.generated == 0)
    {
      throw NoTraffic ("no packets generated");
    }
  return 100.0 * static_cast<double> (c.delivered) / static_cast<double> (c.generated);
}

double
ComputeAvgDelay (std::span<const PacketRecord> records)
{
  double sum = 0.0;
  std::uint64_t n = 0;
  for (const auto &r : records)
    {
      if (r.status == PacketStatus::Delivered)
        {
          sum += r.delivered_at - r.created_at;
          ++n;
        }
    }
  if (n == 0)
    {
      throw NoDeliveries ("no packet was delivered");
    }
  return 1000.0 * sum / static_cast<double> (n);
}

double
ComputeDropRate (std::span<const PacketRecord> records, double sim_duration)
{
  if (!(sim_duration > 0.0))
    {
      throw std::invalid_argument ("sim_duration must be positive");
    }
  return static_cast<double> (Count (records).dropped) / sim_duration;
}

MetricsReport
Summarize (std::span<const PacketRecord> records, double sim_duration, std::string_view protocol,
           std::uint32_t node_count, std::uint64_t seed)
{
  MetricsReport m;
  m.protocol = protocol;
  m.node_count = node_count;
  m.seed = seed;
  Counts c = Count (records);
  m.generated = c.generated;
  m.delivered = c.delivered;
  m.dropped = c.dropped;
  for (const auto &r : records)
    {
      if (r.status != PacketStatus::Dropped)
        {
          continue;
        }
      switch (r.reason)
        {
        case DropReason::QueueOverflow:
          ++m.drops_queue;
          break;
        case DropReason::LinkBreak:
          ++m.drops_link;
          break;
        case DropReason::NodeDead:
          ++m.drops_dead;
          break;
        case DropReason::NoRoute:
        case DropReason::None:
          ++m.drops_noroute;
          break;
        }
    }
  m.pdr = c.generated > 0 ? ComputePdr (records) : 0.0;
  m.avg_delay = c.delivered > 0 ? ComputeAvgDelay (records) : 0.0;
  m.drop_rate = ComputeDropRate (records, sim_duration);
  return m;
}

std::string
ToCsv (std::vector<MetricsReport> reports)
{
  std::stable_sort (reports.begin (), reports.end (), [] (const MetricsReport &x, const MetricsReport &y) {
    return std::tie (x.protocol, x.node_count, x.seed) < std::tie (y.protocol, y.node_count, y.seed);
  });
  std::string out (kCsvHeader);
  out += '\n';
  for (const auto &r : reports)
    {
      out += r.protocol;
      for (std::uint64_t v : {std::uint64_t{r.node_count}, r.seed})
        {
          out += ',';
          out += std::to_string (v);
        }
      for (double v : {r.pdr, r.avg_delay, r.drop_rate})
        {
          out += ',';
          AppendFixed (out, v);
        }
      for (std::uint64_t v : {r.generated, r.delivered, r.dropped, r.drops_queue, r.drops_link,
                              r.drops_dead, r.drops_noroute})
        {
          out += ',';
          out += std::to_string (v);
        }
      out += '\n';
    }
  return out;
}

namespace
{

template <typename T>
T
ParseNumber (std::string_view field, std::size_t line)
{
  T v{};
  auto res = std::from_chars (field.data (), field.data () + field.size (), v);
  if (res.ec != std::errc{} || res.ptr != field.data () + field.size ())
    {
      throw std::invalid_argument ("bad CSV field '" + std::string (field) + "' on line "
                                   + std::to_string (line));
    }
  return v;
}

} // namespace

std::vector<MetricsReport>
ParseCsv (std::string_view text)
{
  std::vector<MetricsReport> out;
  std::size_t line_no = 0;
  while (!text.empty ())
    {
      std::size_t eol = text.find ('\n');
      std::string_view line = text.substr (0, eol);
      text = eol == std::string_view::npos ? std::string_view{} : text.substr (eol + 1);
      ++line_no;
      if (line_no == 1)
        {
          if (line != kCsvHeader)
            {
              throw std::invalid_argument ("unexpected CSV header");
            }
          continue;
        }
      if (line.empty ())
        {
          continue;
        }
      std::vector<std::string_view> f;
      std::size_t start = 0;
      while (true)
        {
          std::size_t comma = line.find (',', start);
          f.push_back (line.substr (start, comma - start));
          if (comma == std::string_view::npos)
            {
              break;
            }
          start = comma + 1;
        }
      if (f.size () != 13)
        {
          throw std::invalid_argument ("expected 13 CSV fields on line " + std::to_string (line_no));
        }
      MetricsReport r;
      r.protocol = f[0];
      r.node_count = ParseNumber<std::uint32_t> (f[1], line_no);
      r.seed = ParseNumber<std::uint64_t> (f[2], line_no);
      r.pdr = ParseNumber<double> (f[3], line_no);
      r.avg_delay = ParseNumber<double> (f[4], line_no);
      r.drop_rate = ParseNumber<double> (f[5], line_no);
      r.generated = ParseNumber<std::uint64_t> (f[6], line_no);
      r.delivered = ParseNumber<std::uint64_t> (f[7], line_no);
      r.dropped = ParseNumber<std::uint64_t> (f[8], line_no);
      r.drops_queue = ParseNumber<std::uint64_t> (f[9], line_no);
      r.drops_link = ParseNumber<std::uint64_t> (f[10], line_no);
      r.drops_dead = ParseNumber<std::uint64_t> (f[11], line_no);
      r.drops_noroute = ParseNumber<std::uint64_t> (f[12], line_no);
      out.push_back (std::move (r));
    }
  return out;
}

} // namespace dbmf
