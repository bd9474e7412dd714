// Drives the qpt binary end to end; the binary path arrives as argv[1].
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "cqpt/serialize.hpp"

namespace {

std::string g_binary;
std::filesystem::path g_dir;

int run(const std::string& args) {
  const std::string cmd = g_binary + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string run_capture(const std::string& args) {
  const std::string out_path = (g_dir / "stdout.txt").string();
  const std::string cmd = g_binary + " " + args + " > " + out_path + " 2>/dev/null";
  if (std::system(cmd.c_str()) != 0) return "";
  return cqpt::read_text_file(out_path);
}

std::string path(const std::string& name) { return (g_dir / name).string(); }

}  // namespace

using namespace cqpt;

TEST_CASE("simulate writes a deterministic 576-record dataset") {
  write_text_file(path("cz091.json"),
                  scenario_to_json(ScenarioConfig{}).dump(2) + "\n");

  const std::string cmd = "simulate --scenario " + path("cz091.json") +
                          " --shots 2000 --seed 7 --out " + path("data.json");
  REQUIRE(run(cmd) == 0);
  const Dataset data =
      dataset_from_json(Json::parse(read_text_file(path("data.json"))));
  CHECK(data.records.size() == 576);
  CHECK(data.seed == 7);
  CHECK(data.basis == "gate:CZ");

  const std::string first = read_text_file(path("data.json"));
  REQUIRE(run("simulate --scenario " + path("cz091.json") +
              " --shots 2000 --seed 7 --out " + path("data2.json")) == 0);
  CHECK(read_text_file(path("data2.json")) == first);  // byte identical
}

TEST_CASE("reconstruct from a named selection and from the full set") {
  REQUIRE(run("reconstruct --data " + path("data.json") +
              " --select table1:HVDR-RI-IR --basis gate:CZ --out " +
              path("chi32.json")) == 0);
  const RecoveryResult chi32 =
      result_from_json(Json::parse(read_text_file(path("chi32.json"))));
  CHECK(chi32.converged);
  CHECK(chi32.chi_star.basis->tag == "gate:CZ");
  CHECK(chi32.epsilon > 0);

  REQUIRE(run("reconstruct --data " + path("data.json") +
              " --select all --method ls --out " + path("chifull.json")) == 0);
  const RecoveryResult full =
      result_from_json(Json::parse(read_text_file(path("chifull.json"))));
  CHECK(full.converged);
  CHECK(process_fidelity(full.chi_star, chi32.chi_star) > 0.8);

  REQUIRE(run("reconstruct --data " + path("data.json") +
              " --select random:18:3 --epsilon 0.05 --out " +
              path("chi18.json")) == 0);
  const RecoveryResult chi18 =
      result_from_json(Json::parse(read_text_file(path("chi18.json"))));
  CHECK(chi18.epsilon == 0.05);
}

TEST_CASE("analyze spectrum and fidelity") {
  REQUIRE(run("analyze spectrum --chi " + path("chi32.json") +
              " --thresholds 0.01,0.02 --out " + path("spec.csv")) == 0);
  const std::string csv = read_text_file(path("spec.csv"));
  CHECK(csv.rfind("index,relative_magnitude\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 257);

  const std::string out = run_capture("analyze fidelity --chi " +
                                      path("chi32.json") + " --against ideal:CZ");
  CHECK(out.find("fidelity ") != std::string::npos);
  CHECK(out.find("purity ") != std::string::npos);
  const double f = std::stod(out.substr(out.find("fidelity ") + 9));
  CHECK(f >= 0.0);
  CHECK(f <= 1.0);

  REQUIRE(run("analyze fidelity --chi " + path("chi32.json") +
              " --against file:" + path("chifull.json")) == 0);

  REQUIRE(run("analyze bound --chi " + path("chifull.json") +
              " --s 30 --delta 0.1 --epsilon 0.02 --out " +
              path("bound.json")) == 0);
  const Json bound = Json::parse(read_text_file(path("bound.json")));
  CHECK(bound.at("bound_value").get<double>() > 0);
}

TEST_CASE("report convergence produces rows") {
  REQUIRE(run("report convergence --scenario " + path("cz091.json") +
              " --m 8,16 --trials 2 --shots 2000 --seed 5 --out " +
              path("conv.json")) == 0);
  const ExperimentReport rep =
      report_from_json(Json::parse(read_text_file(path("conv.json"))));
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].m == 8);
  CHECK(rep.rows[1].m == 16);
  CHECK(rep.rows[0].trials == 2);
}

TEST_CASE("exit codes for usage, io and data errors") {
  CHECK(run("simulate --scenario " + path("cz091.json")) == 2);  // missing --out
  CHECK(run("nonsense") == 2);
  CHECK(run("reconstruct --data /nonexistent.json --out " + path("x.json")) == 3);
  CHECK(run("simulate --scenario " + path("data.json") + " --out " +
            path("x.json")) == 2);  // dataset is not a scenario config
  CHECK(run("reconstruct --data " + path("data.json") +
            " --select bogus --out " + path("x.json")) == 2);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <path-to-qpt-binary>\n");
    return 1;
  }
  g_binary = argv[1];
  g_dir = std::filesystem::temp_directory_path() / "cqpt_cli_test";
  std::filesystem::create_directories(g_dir);
  doctest::Context ctx;
  const int rc = ctx.run();
  std::filesystem::remove_all(g_dir);
  return rc;
}
