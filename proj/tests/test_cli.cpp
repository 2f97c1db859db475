#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "eulerlab/cli.hpp"

using eulerlab::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "eulerlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"forms-verify", "--bogus"}).code == 2);
  CHECK(invoke({"no-such-command"}).code == 2);
  CHECK(invoke({"flux-scan", "--grid", "7x40"}).code == 2);
  CHECK(invoke({"flux-scan", "--grid", "abc"}).code == 2);
  CHECK(invoke({"forms-verify", "--format", "xml"}).code == 2);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("forms-verify") {
  const Result ok = invoke({"forms-verify", "--samples", "200"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("FAIL") == std::string::npos);
  CHECK(invoke({"forms-verify", "--samples", "200", "--tol", "1e-30"}).code == 1);
}

TEST_CASE("descent-verify") {
  CHECK(invoke({"descent-verify", "--samples", "20"}).code == 0);
  CHECK(invoke({"descent-verify", "--samples", "20", "--broken-field"}).code == 1);
  CHECK(invoke({"descent-verify", "--gamma", "1:0"}).code == 2);
  const Result csv = invoke({"descent-verify", "--samples", "5", "--format", "csv"});
  CHECK(parse_csv(csv.out).size() == 126);  // header + 125 elements
}

TEST_CASE("orbit-scan CSV") {
  const Result r = invoke({"orbit-scan", "--u-values", "0.5,0.25,0.1,0.05", "--format", "csv"});
  CHECK(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0][0] == "u");
  CHECK(rows[0][3] == "length");
  double prev = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double len = std::stod(rows[i][3]);
    CHECK(len > prev);
    prev = len;
  }
  const Result half = invoke({"orbit-scan", "--u-values", "1.5707963267948966", "--format", "csv"});
  CHECK(std::abs(std::stod(parse_csv(half.out)[1][1]) - std::numbers::pi) < 1e-6);
  CHECK(invoke({"orbit-scan", "--u-values", "0.5,0.0001"}).code == 2);
  CHECK(invoke({"orbit-scan", "--u-values", "0.5,0", "--allow-bad-set"}).code == 0);
}

TEST_CASE("flux-scan") {
  const Result r = invoke({"flux-scan", "--s-interval", "0.5:0.05", "--grid", "200x400", "--format",
                           "json"});
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  const double nf = j["rows"][0]["normalized_flux"];
  CHECK(std::abs(nf - 2 * std::numbers::pi) / (2 * std::numbers::pi) < 0.05);

  const Result d = invoke({"flux-scan", "--s-interval", "0.3:0.3", "--grid", "4x8", "--format", "json"});
  CHECK(d.code == 0);
  CHECK(nlohmann::json::parse(d.out)["rows"][0]["flux"] == 0.0);

  const Result ref = invoke({"flux-scan", "--s-interval", "0.5:0.35", "--grid", "10x20", "--refine",
                             "--format", "json"});
  CHECK(ref.code == 0);
  CHECK(nlohmann::json::parse(ref.out)["rows"][0]["refinement_ratio"].get<double>() >= 3.0);
}

TEST_CASE("adapted-check reports without judging unless gated") {
  const Result r = invoke({"adapted-check", "--samples", "50"});
  CHECK(r.code == 0);
  CHECK(r.out.find("necessary condition FAILED") != std::string::npos);
  CHECK(r.out.find("hopf: necessary conditions only") != std::string::npos);
  CHECK(invoke({"adapted-check", "--samples", "50", "--as-gate"}).code == 1);
}

TEST_CASE("wadsley-demo") {
  CHECK(invoke({"wadsley-demo", "--samples", "40"}).code == 0);
  CHECK(invoke({"wadsley-demo", "--samples", "40", "--quad-nodes", "4"}).code == 1);
  const Result round = invoke({"wadsley-demo", "--samples", "40", "--metric", "round"});
  CHECK(round.code == 0);
  CHECK(round.out.find("idempotent") != std::string::npos);
  CHECK(invoke({"wadsley-demo", "--quad-nodes", "0"}).code == 2);
}

TEST_CASE("outputs are deterministic and floats round-trip") {
  const std::vector<std::string> args{"orbit-scan", "--u-values", "0.7,0.3", "--format", "json"};
  const Result a = invoke(args);
  const Result b = invoke(args);
  CHECK(a.out == b.out);
  const auto j = nlohmann::json::parse(a.out);
  for (const auto& check : j["checks"]) {
    CHECK(check.contains("anchor"));
    CHECK_FALSE(check["anchor"].get<std::string>().empty());
  }
  const Result csv = invoke({"orbit-scan", "--u-values", "0.7", "--format", "csv"});
  const std::string period = parse_csv(csv.out)[1][1];
  // 17 significant digits: re-printing the parsed value gives the same text
  CHECK(fmt::format("{:.17g}", std::stod(period)) == period);
}

TEST_CASE("config file precedence") {
  const std::string path = "eulerlab_test.cfg";
  {
    std::ofstream f(path);
    f << "samples=7\nseed=3\n";
  }
  const Result from_file = invoke({"descent-verify", "--config", path, "--format", "json"});
  CHECK(nlohmann::json::parse(from_file.out)["seed"] == 3);
  const Result flag = invoke({"descent-verify", "--config", path, "--seed", "9", "--format", "json"});
  CHECK(nlohmann::json::parse(flag.out)["seed"] == 9);
  std::remove(path.c_str());
}

TEST_CASE("--out writes the data file") {
  const std::string path = "eulerlab_test_out.json";
  const Result r = invoke({"descent-verify", "--samples", "5", "--out", path});
  CHECK(r.code == 0);
  CHECK(r.out.find("descent-verify: PASS") != std::string::npos);
  std::ifstream f(path);
  const auto j = nlohmann::json::parse(f);
  CHECK(j["command"] == "descent-verify");
  std::remove(path.c_str());
}
