#include "dbmf/matrix.h"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace dbmf;

namespace
{

const char *kSmallBase = R"({"node_count": 10, "area_width": 150, "area_height": 150, "sim_duration": 20,
  "flows": [{"src": 0, "dst": 9, "total_packets": 100, "offered_rate": 10}]})";

struct Outcome
{
  int code;
  std::string out;
};

Outcome
Cli (const std::string &args)
{
  std::string cmd = std::string (DBMF_CLI) + " " + args + " 2>&1";
  FILE *pipe = popen (cmd.c_str (), "r");
  REQUIRE (pipe != nullptr);
  std::string out;
  char buf[512];
  while (std::fgets (buf, sizeof (buf), pipe))
    {
      out += buf;
    }
  int status = pclose (pipe);
  return {WIFEXITED (status) ? WEXITSTATUS (status) : -1, out};
}

std::filesystem::path
TempFile (const std::string &name, const std::string &text)
{
  auto dir = std::filesystem::temp_directory_path () / "dbmf_test_matrix";
  std::filesystem::create_directories (dir);
  auto p = dir / name;
  std::ofstream (p) << text;
  return p;
}

} // namespace

TEST_CASE ("expansion is the full product in a fixed order")
{
  auto spec = ParseMatrix (std::string (R"({"base": )") + kSmallBase + R"(,
    "protocols": ["dbmf", "single_path", "mmre", "zd"], "node_counts": [10, 20, 30, 40, 50],
    "seeds": [1,2,3,4,5,6,7,8,9,10]})");
  auto runs = ExpandMatrix (spec);
  REQUIRE (runs.size () == 200);
  CHECK (runs[0].protocol == Protocol::Dbmf);
  CHECK (runs[0].node_count == 10);
  CHECK (runs[0].seed == 1);
  CHECK (runs[9].seed == 10);
  CHECK (runs[10].node_count == 20);
  CHECK (runs[50].protocol == Protocol::SinglePath);
  for (const auto &r : runs)
    {
      REQUIRE (r.flows.size () == 1);
      CHECK (r.flows[0].src == 0);
      CHECK (r.flows[0].dst == r.node_count - 1);
      CHECK (r.flows[0].total_packets == 100);
    }
}

TEST_CASE ("speeds set both bounds; omitted lists keep the base")
{
  auto spec = ParseMatrix (std::string (R"({"base": )") + kSmallBase + R"(, "speeds": [2, 5]})");
  auto runs = ExpandMatrix (spec);
  REQUIRE (runs.size () == 2);
  CHECK (runs[1].speed_min == 5.0);
  CHECK (runs[1].speed_max == 5.0);
  CHECK (runs[0].protocol == Protocol::Dbmf);
  CHECK (runs[0].node_count == 10);
}

TEST_CASE ("random flow placement is seeded and never self-addressed")
{
  auto spec = ParseMatrix (std::string (R"({"base": )") + kSmallBase
                           + R"(, "flows": "random", "flows_per_node": 0.2, "node_counts": [10, 50], "seeds": [1, 2]})");
  auto a = ExpandMatrix (spec);
  auto b = ExpandMatrix (spec);
  REQUIRE (a.size () == 4);
  CHECK (a[0].flows.size () == 2);
  CHECK (a[2].flows.size () == 10);
  for (std::size_t i = 0; i < a.size (); ++i)
    {
      CHECK (a[i].flows == b[i].flows);
      for (const auto &f : a[i].flows)
        {
          CHECK (f.src != f.dst);
          CHECK (f.dst < a[i].node_count);
        }
    }
  CHECK (a[0].flows != a[1].flows);
}

TEST_CASE ("bad matrix documents name the offending key")
{
  auto names = [] (const std::string &doc, const char *field) {
    try
      {
        ParseMatrix (doc);
      }
    catch (const InvalidConfig &e)
      {
        return e.Names (field);
      }
    return false;
  };
  CHECK (names (R"({"seeds": [1]})", "base"));
  CHECK (names (std::string (R"({"base": )") + kSmallBase + R"(, "seeds": []})", "seeds"));
  CHECK (names (std::string (R"({"base": )") + kSmallBase + R"(, "colour": 1})", "colour"));
  CHECK (names (std::string (R"({"base": )") + kSmallBase + R"(, "protocols": ["aodv"]})", "protocols"));
  CHECK (names (std::string (R"({"base": )") + kSmallBase + R"(, "flows": "all"})", "flows"));
  CHECK (names (std::string (R"({"base": )") + kSmallBase + R"(, "parallelism": 0})", "parallelism"));
  // a cell that breaks a scenario constraint is refused before anything runs
  auto spec = ParseMatrix (std::string (R"({"base": )") + kSmallBase + R"(, "node_counts": [1]})");
  CHECK_THROWS_AS (ExpandMatrix (spec), InvalidConfig);
}

TEST_CASE ("matrix output does not depend on the worker count")
{
  auto spec = ParseMatrix (std::string (R"({"base": )") + kSmallBase
                           + R"(, "protocols": ["dbmf", "zd"], "node_counts": [10, 15], "seeds": [1, 2, 3]})");
  auto one = RunMatrix (spec, 1);
  CHECK (RunMatrix (spec, 4) == one);
  CHECK (RunMatrix (spec, 16) == one);
  auto rows = ParseCsv (one);
  REQUIRE (rows.size () == 12);
  for (std::size_t i = 1; i < rows.size (); ++i)
    {
      CHECK (std::tie (rows[i - 1].protocol, rows[i - 1].node_count, rows[i - 1].seed)
             < std::tie (rows[i].protocol, rows[i].node_count, rows[i].seed));
    }
}

TEST_CASE ("base may be a path relative to the matrix file")
{
  TempFile ("base.json", kSmallBase);
  auto m = TempFile ("m.json", R"({"base": "base.json", "seeds": [4]})");
  auto spec = LoadMatrix (m.string ());
  CHECK (spec.base.node_count == 10);
  CHECK (spec.seeds == std::vector<std::uint64_t>{4});
}

TEST_CASE ("CLI exit codes and messages")
{
  std::string good = std::string (DBMF_SCENARIO_DIR) + "/basic.json";
  auto v = Cli ("validate " + good);
  CHECK (v.code == 0);
  CHECK (v.out == "OK\n");

  auto bad = TempFile ("bad.json", R"({"friis_q": 4})");
  auto b = Cli ("validate " + bad.string ());
  CHECK (b.code == 1);
  CHECK (b.out.find ("friis_q") != std::string::npos);

  CHECK (Cli ("validate /nonexistent/x.json").code == 1);
  CHECK (Cli ("frobnicate").code == 1);

  auto small = TempFile ("small.json", kSmallBase);
  auto r1 = Cli ("run " + small.string () + " --seed 3");
  CHECK (r1.code == 0);
  CHECK (r1.out.rfind (std::string (kCsvHeader) + "\n", 0) == 0);
  CHECK (r1.out.find ("\ndbmf,10,3,") != std::string::npos);
  CHECK (Cli ("run " + small.string () + " --seed 3").out == r1.out);

  auto m = TempFile ("cli_matrix.json", R"({"base": "small.json", "seeds": [1, 2], "protocols": ["dbmf", "mmre"]})");
  auto csv1 = std::filesystem::temp_directory_path () / "dbmf_test_matrix" / "p1.csv";
  auto csv3 = std::filesystem::temp_directory_path () / "dbmf_test_matrix" / "p3.csv";
  CHECK (Cli ("matrix " + m.string () + " --parallelism 1 --out " + csv1.string ()).code == 0);
  CHECK (Cli ("matrix " + m.string () + " --parallelism 3 --out " + csv3.string ()).code == 0);
  std::ifstream f1 (csv1), f3 (csv3);
  std::string t1 ((std::istreambuf_iterator<char> (f1)), {}), t3 ((std::istreambuf_iterator<char> (f3)), {});
  CHECK (!t1.empty ());
  CHECK (t1 == t3);
  CHECK (Cli ("matrix " + m.string () + " --parallelism 0").code == 1);

  auto t = Cli ("trace " + small.string ());
  CHECK (t.code == 0);
  CHECK (t.out.find ("|SimEnd|") != std::string::npos);
}
