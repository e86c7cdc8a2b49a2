#include "dbmf/engine.h"
#include "dbmf/linklife.h"
#include "dbmf/matrix.h"
#include "dbmf/mobility.h"
#include "dbmf/model.h"
#include "dbmf/report.h"
#include "dbmf/routing.h"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;

namespace
{

py::dict
ReportDict (const dbmf::MetricsReport &r)
{
  py::dict d;
  d["protocol"] = r.protocol;
  d["node_count"] = r.node_count;
  d["seed"] = r.seed;
  d["pdr"] = r.pdr;
  d["avg_delay_ms"] = r.avg_delay;
  d["drop_rate_pps"] = r.drop_rate;
  d["generated"] = r.generated;
  d["delivered"] = r.delivered;
  d["dropped"] = r.dropped;
  d["drops_queue"] = r.drops_queue;
  d["drops_link"] = r.drops_link;
  d["drops_dead"] = r.drops_dead;
  d["drops_noroute"] = r.drops_noroute;
  d["wall_time"] = r.wall_time;
  return d;
}

dbmf::LabelScale
ScaleFromString (const std::string &name)
{
  if (name == "lpm")
    return dbmf::LabelScale::Lpm;
  if (name == "lpe")
    return dbmf::LabelScale::Lpe;
  if (name == "dpr")
    return dbmf::LabelScale::Dpr;
  if (name == "link_life")
    return dbmf::LabelScale::LinkLife;
  throw py::value_error ("scale must be lpm, lpe, dpr or link_life");
}

char
Label (dbmf::FuzzyLabel l)
{
  return dbmf::ToChar (l);
}

} // namespace

PYBIND11_MODULE (_dbmf, m)
{
  m.doc () = "Deterministic MANET simulator core";

  py::register_exception<dbmf::InvalidConfig> (m, "InvalidConfig", PyExc_ValueError);

  m.def ("validate", [] (const std::string &scenario) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto &v : dbmf::CheckConfig (dbmf::ParseScenario (scenario)))
      {
        out.emplace_back (v.field, v.constraint);
      }
    return out;
  }, py::arg ("scenario_json"), "List of (field, constraint) violations; empty when valid.");

  m.def ("run", [] (const std::string &scenario, bool trace) {
    auto cfg = dbmf::ParseScenario (scenario);
    dbmf::RunResult r;
    {
      py::gil_scoped_release release;
      r = dbmf::Run (cfg, trace ? dbmf::TraceMode::Text : dbmf::TraceMode::Hash);
    }
    py::dict d = ReportDict (r.report);
    d["in_flight"] = r.in_flight;
    d["trace_hash"] = r.trace_hash;
    if (trace)
      {
        d["trace"] = r.trace;
      }
    return d;
  }, py::arg ("scenario_json"), py::arg ("trace") = false);

  m.def ("run_matrix", [] (const std::string &matrix, std::uint32_t parallelism, const std::string &base_dir) {
    auto spec = dbmf::ParseMatrix (matrix, base_dir);
    py::gil_scoped_release release;
    return dbmf::RunMatrix (spec, parallelism);
  }, py::arg ("matrix_json"), py::arg ("parallelism") = 1, py::arg ("base_dir") = ".");

  m.def ("squash", &dbmf::Squash, py::arg ("x"));
  m.def ("link_prediction", &dbmf::LinkPrediction, py::arg ("rad_rng"), py::arg ("current_distance"),
         py::arg ("avg_rel_mob"), py::arg ("lp_cap"));
  m.def ("drop_ratio", &dbmf::DropRatio, py::arg ("arrived_total"), py::arg ("departed_plus_queued"));

  m.def ("rss_at", [] (double distance, double trans_pow, double k, int q) {
    return dbmf::RssAt ({trans_pow, k, q, 0.0}, distance);
  }, py::arg ("distance"), py::arg ("trans_pow") = 1.0, py::arg ("k") = 1.0, py::arg ("q") = 2);
  m.def ("distance_from_rss", [] (double rec_pow, double trans_pow, double k, int q) {
    return dbmf::DistanceFromRss ({trans_pow, k, q, 0.0}, rec_pow);
  }, py::arg ("rec_pow"), py::arg ("trans_pow") = 1.0, py::arg ("k") = 1.0, py::arg ("q") = 2);

  m.def ("label_of", [] (double value, const std::string &scale) {
    return Label (dbmf::LabelOf (value, ScaleFromString (scale)));
  }, py::arg ("value"), py::arg ("scale"));
  m.def ("combine_tm", [] (char lpm, char lpe) {
    return Label (dbmf::CombineTm (dbmf::LabelFromChar (lpm), dbmf::LabelFromChar (lpe)));
  }, py::arg ("lpm"), py::arg ("lpe"));
  m.def ("combine_link_life", [] (char tm, char dpr) {
    return Label (dbmf::CombineLinkLife (dbmf::LabelFromChar (tm), dbmf::LabelFromChar (dpr)));
  }, py::arg ("tm"), py::arg ("dpr"));
  m.def ("rule_tables", &dbmf::RuleTablesText);

  m.def ("partition", [] (std::uint64_t total, const std::vector<double> &delays) {
    return dbmf::Partition (total, delays);
  }, py::arg ("total"), py::arg ("delays"));
  m.def ("select_link_disjoint", [] (const std::vector<std::vector<dbmf::NodeId>> &paths) {
    std::vector<dbmf::Path> in;
    for (const auto &p : paths)
      {
        in.push_back (dbmf::MakePath (p));
      }
    std::vector<std::vector<dbmf::NodeId>> out;
    for (const auto &p : dbmf::SelectLinkDisjoint (in))
      {
        out.push_back (p.nodes);
      }
    return out;
  }, py::arg ("paths"));

  m.def ("csv_header", [] { return std::string (dbmf::kCsvHeader); });
}
