// dbmfsim: command-line front end for scenario runs and sweeps.
//
//   dbmfsim validate <scenario>
//   dbmfsim run <scenario> [--seed n] [--out file]
//   dbmfsim trace <scenario> [--seed n] [--out file]
//   dbmfsim matrix <matrix> [--parallelism n] [--out file]
//
// Exit status: 0 success, 1 configuration error, 2 runtime failure.

#include "dbmf/engine.h"
#include "dbmf/matrix.h"
#include "dbmf/model.h"
#include "dbmf/report.h"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace
{

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct ConfigError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

void
PrintViolations (const dbmf::InvalidConfig &e)
{
  for (const auto &v : e.Violations ())
    {
      std::cerr << "invalid " << v.field << ": " << v.constraint << "\n";
    }
}

/// Writes text to path, or to stdout when path is empty.
void
Emit (const std::string &path, const std::string &text)
{
  if (path.empty ())
    {
      std::cout << text;
      return;
    }
  std::ofstream out (path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text))
    {
      throw std::runtime_error ("cannot write " + path);
    }
}

dbmf::ScenarioConfig
Load (const std::string &path, std::optional<std::uint64_t> seed)
{
  dbmf::ScenarioConfig cfg;
  try
    {
      cfg = dbmf::LoadScenario (path);
    }
  catch (const dbmf::InvalidConfig &)
    {
      throw;
    }
  catch (const std::exception &e)
    {
      throw ConfigError (e.what ());
    }
  if (seed)
    {
      cfg.seed = *seed;
    }
  return dbmf::ValidateConfig (cfg);
}

} // namespace

int
main (int argc, char **argv)
{
  CLI::App app{"Packet-level MANET simulator with fuzzy link-life multipath routing"};
  app.require_subcommand (1);

  std::string input;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> parallelism;

  auto *validate = app.add_subcommand ("validate", "Check a scenario file");
  validate->add_option ("scenario", input, "Scenario JSON")->required ();

  auto *run = app.add_subcommand ("run", "Run one scenario and print its metrics row");
  run->add_option ("scenario", input, "Scenario JSON")->required ();
  run->add_option ("--seed", seed, "Override the scenario seed");
  run->add_option ("--out", out, "Write the CSV here instead of stdout");

  auto *trace = app.add_subcommand ("trace", "Run one scenario and dump the event trace");
  trace->add_option ("scenario", input, "Scenario JSON")->required ();
  trace->add_option ("--seed", seed, "Override the scenario seed");
  trace->add_option ("--out", out, "Write the trace here instead of stdout");

  auto *matrix = app.add_subcommand ("matrix", "Run a sweep and write one CSV row per run");
  matrix->add_option ("matrix", input, "Matrix JSON")->required ();
  matrix->add_option ("--parallelism", parallelism, "Worker threads")->check (CLI::PositiveNumber);
  matrix->add_option ("--out", out, "CSV path; overrides the matrix file");

  try
    {
      app.parse (argc, argv);
    }
  catch (const CLI::ParseError &e)
    {
      int code = app.exit (e);
      return code == 0 ? 0 : kExitConfig;
    }

  try
    {
      if (validate->parsed ())
        {
          Load (input, std::nullopt);
          std::cout << "OK\n";
        }
      else if (run->parsed ())
        {
          auto cfg = Load (input, seed);
          auto result = dbmf::Run (cfg);
          Emit (out, dbmf::ToCsv ({result.report}));
        }
      else if (trace->parsed ())
        {
          auto cfg = Load (input, seed);
          std::ofstream file;
          std::ostream *sink = &std::cout;
          if (!out.empty ())
            {
              file.open (out, std::ios::binary | std::ios::trunc);
              if (!file)
                {
                  throw std::runtime_error ("cannot write " + out);
                }
              sink = &file;
            }
          dbmf::Simulator sim (cfg, dbmf::TraceMode::Hash);
          sim.SetTraceListener ([sink] (std::string_view line) { *sink << line << '\n'; });
          sim.Run ();
          std::cerr << "trace hash " << std::hex << sim.Result ().trace_hash << std::dec << "\n";
        }
      else if (matrix->parsed ())
        {
          dbmf::MatrixSpec spec;
          try
            {
              spec = dbmf::LoadMatrix (input);
            }
          catch (const dbmf::InvalidConfig &)
            {
              throw;
            }
          catch (const std::exception &e)
            {
              throw ConfigError (e.what ());
            }
          auto scenarios = dbmf::ExpandMatrix (spec);
          std::uint32_t workers = parallelism.value_or (spec.parallelism);
          std::cerr << scenarios.size () << " runs on " << workers << " workers\n";
          auto csv = dbmf::ToCsv (dbmf::RunScenarios (scenarios, workers));
          Emit (out.empty () ? spec.out : out, csv);
        }
    }
  catch (const dbmf::InvalidConfig &e)
    {
      PrintViolations (e);
      return kExitConfig;
    }
  catch (const ConfigError &e)
    {
      std::cerr << "error: " << e.what () << "\n";
      return kExitConfig;
    }
  catch (const std::exception &e)
    {
      std::cerr << "error: " << e.what () << "\n";
      return kExitRuntime;
    }
  return 0;
}
