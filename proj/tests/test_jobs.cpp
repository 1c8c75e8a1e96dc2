#include "cutlocus/jobs.hpp"
#include "cutlocus/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cutlocus;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cutlocus_jobs_" + name);
  fs::remove_all(p);
  return p;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const json& doc, const fs::path& out, std::string* err = nullptr, RunSettings s = {}) {
  JobSpec job = parse_job(doc);
  job.out_dir = out.string();
  std::ostringstream o, e;
  const int code = run_job_guarded(job, s, o, e);
  if (err) *err = e.str();
  return code;
}

}  // namespace

TEST(Parse, RejectsUnknownKeys) {
  EXPECT_THROW(parse_job(json{{"command", "d4-roots"}, {"colour", "red"}}), ConfigError);
  EXPECT_THROW(parse_job(json{{"command", "teleport"}}), ConfigError);
  EXPECT_THROW(parse_job(json{{"command", "d4-roots"}, {"params", 3}}), ConfigError);
  const JobSpec j = parse_job(json{{"command", "d4-roots"}, {"params", {{"a", 0.1}}}});
  EXPECT_EQ(j.command, "d4-roots");
  EXPECT_TRUE(j.manifold.is_null());
  EXPECT_EQ(job_commands().size(), 8u);
}

TEST(Parse, LoadsFromFile) {
  const fs::path dir = scratch("load");
  fs::create_directories(dir);
  write_text_file((dir / "job.json").string(), R"({"command": "d4-roots", "out": "x"})");
  EXPECT_EQ(load_job((dir / "job.json").string()).out_dir, "x");
  write_text_file((dir / "broken.json").string(), "{");
  EXPECT_THROW(load_job((dir / "broken.json").string()), ConfigError);
}

TEST(BoundaryDataJson, Kinds) {
  EXPECT_EQ(boundary_data_from_json(json{{"kind", "zero"}}, 2).value(1, 0.4), 0.0);
  const BoundaryData c = boundary_data_from_json(json{{"kind", "constants"}, {"a", {0.3, -0.1}}}, 2);
  EXPECT_DOUBLE_EQ(c.value(0, 1.0), 0.3);
  EXPECT_DOUBLE_EQ(c.value(1, 2.0), -0.1);
  EXPECT_THROW(boundary_data_from_json(json{{"kind", "constants"}, {"a", {0.3}}}, 2), ConfigError);

  const json f = {{"kind", "fourier"}, {"components", {{{"mean", 0.2}, {"cos", {0.1}}, {"sin", {0.0, 0.05}}}}}};
  const BoundaryData b = boundary_data_from_json(f, 1);
  const double s = 0.7;
  EXPECT_NEAR(b.value(0, s), 0.2 + 0.1 * std::cos(s) + 0.05 * std::sin(2 * s), 1e-15);
  EXPECT_NEAR(b.derivative(0, s), -0.1 * std::sin(s) + 0.1 * std::cos(2 * s), 1e-15);
  EXPECT_THROW(boundary_data_from_json(json{{"kind", "spline"}}, 1), ConfigError);
  EXPECT_THROW(boundary_data_from_json(json{{"kind", "fourier"}, {"components", {{{"tan", {1}}}}}}, 1),
               ConfigError);
}

TEST(Run, D4Roots) {
  const fs::path dir = scratch("d4");
  ASSERT_EQ(run(json{{"command", "d4-roots"}, {"params", {{"kind", "minus"}, {"a", 0}, {"b", 0}}}}, dir), 0);
  const json r = read_json(dir / "d4_roots.json");
  ASSERT_EQ(r["roots"].size(), 3u);
  EXPECT_NEAR(r["roots"][0].get<double>(), -std::sqrt(3.0), 1e-9);
  EXPECT_NEAR(r["roots"][2].get<double>(), std::sqrt(3.0), 1e-9);
}

TEST(Run, GeodesicLeavesTheAnnulus) {
  const fs::path dir = scratch("geo");
  const json doc = {{"command", "geodesic"},
                    {"manifold", {{"kind", "annulus"}, {"r_inner", 1}, {"r_outer", 2}}},
                    {"params", {{"start", {1.5, 0}}, {"velocity", {0, 1}}, {"t_end", 3}}}};
  ASSERT_EQ(run(doc, dir), 0);
  const json g = read_json(dir / "geodesic.json");
  EXPECT_TRUE(g["exited"].get<bool>());
  EXPECT_NEAR(g["t_end"].get<double>(), std::sqrt(1.75), 1e-8);
  EXPECT_TRUE(fs::exists(dir / "geodesic.csv"));
  EXPECT_TRUE(fs::exists(dir / "geodesic.svg"));
}

TEST(Run, ConfigErrorsExitWithTwo) {
  std::string err;
  EXPECT_EQ(run(json{{"command", "d4-roots"}, {"params", {{"bogus", 1}}}}, scratch("e1"), &err), 2);
  EXPECT_NE(err.find("bogus"), std::string::npos);
  // outside the admissible chamber
  EXPECT_EQ(run(json{{"command", "d4-roots"}, {"params", {{"a", 0.9}, {"b", 0.9}}}}, scratch("e2")), 2);
  EXPECT_EQ(run(json{{"command", "geodesic"}, {"params", {{"start", {0, 0}}}}}, scratch("e3")), 2);
  const json neg = {{"command", "geodesic"},
                    {"manifold", {{"kind", "disk"}, {"radius", 1}}},
                    {"params", {{"start", {0, 0}}, {"velocity", {1, 0}}, {"tol", -1e-8}}}};
  EXPECT_EQ(run(neg, scratch("e4")), 2);
  RunSettings s;
  s.tol = -1;
  EXPECT_EQ(run(json{{"command", "d4-roots"}}, scratch("e5"), nullptr, s), 2);
}

TEST(Run, IncompatibleDataExitsWithTwo) {
  const json doc = {{"command", "solve-hjbvp"},
                    {"manifold", {{"kind", "disk"}, {"radius", 1}}},
                    {"data", {{"kind", "fourier"}, {"components", {{{"sin", {1.5}}}}}}},
                    {"params", {{"grid", 16}}}};
  std::string err;
  EXPECT_EQ(run(doc, scratch("compat"), &err), 2);
  EXPECT_NE(err.find("K ="), std::string::npos);
}

TEST(Run, NumericalFailureWritesADiagnostic) {
  const fs::path dir = scratch("num");
  const json doc = {{"command", "trace-cdc"}, {"params", {{"model", "A2"}, {"start", {0, 0.5}}, {"retort", true}}}};
  ASSERT_EQ(run(doc, dir), 3);
  const json d = read_json(dir / "diagnostic.json");
  EXPECT_EQ(d["error"], "numerical");
  EXPECT_EQ(d["command"], "trace-cdc");
}

TEST(Run, OutputIsDeterministic) {
  const json doc = {{"command", "split-family"},
                    {"params", {{"family", "torus"}, {"b", {0.1, 0.07}}, {"grid", 64}}}};
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  RunSettings one, three;
  one.threads = 1;
  three.threads = 3;
  ASSERT_EQ(run(doc, a, nullptr, one), 0);
  ASSERT_EQ(run(doc, b, nullptr, three), 0);
  for (const char* f : {"split_locus.json", "split_locus.svg"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Run, TraceArtifacts) {
  const fs::path dir = scratch("cdc");
  ASSERT_EQ(run(json{{"command", "trace-cdc"}, {"params", {{"model", "A3"}, {"start", {-0.5, 0.75}}}}}, dir), 0);
  for (const char* f : {"cdc.csv", "cdc.json", "join.json", "retort.csv", "cdc.svg"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_EQ(read_json(dir / "join.json")["type"], "A3_I");
}
