#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "diolab/csvio.hpp"
#include "doctest.h"
#include "json.hpp"
#include "proc.hpp"

using nlohmann::json;

namespace {

const std::string kCli = DIOLAB_CLI_PATH;
const std::string kEpochPin = "SOURCE_DATE_EPOCH=1700000000 ";

std::string fresh_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("diolab_cli_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string write_config(const std::string& dir, const json& cfg) {
  const std::string path = dir + "/config.json";
  diolab::write_file(path, cfg.dump(2) + "\n");
  return path;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      out.push_back(text.substr(pos));
      break;
    }
    out.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> out;
  size_t pos = 0;
  for (;;) {
    const size_t c = line.find(',', pos);
    if (c == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, c - pos));
    pos = c + 1;
  }
}

json golden_search_config() {
  return json{{"m", 1},
              {"n", 1},
              {"theta", {{"mode", "inline"}, {"rows", {{0.41421356237309515}}}}},
              {"psi", {{"kind", "power"}, {"c", 1.0}, {"delta", 1.0}, {"x0", 1.0}}},
              {"q_max", 30}};
}

}  // namespace

TEST_CASE("search reproduces the golden convergent table") {
  const std::string dir = fresh_dir("search");
  const std::string cfg = write_config(dir, golden_search_config());
  const proc::RunResult run =
      proc::run(kCli + " search --config " + cfg + " --out " + dir);
  CHECK(run.status == 0);
  CHECK(run.output.find("solutions=16") != std::string::npos);

  const std::vector<std::string> lines = split_lines(diolab::read_file(dir + "/search.csv"));
  REQUIRE(lines.size() == 17);
  CHECK(lines[0] == "qnorm,scale,residual,q1,p1");
  CHECK(lines[1] == "1,1,0.41421356237309515,-1,0");
  std::vector<long long> qs;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_cells(lines[i]);
    REQUIRE(cells.size() == 5);
    qs.push_back(std::stoll(cells[3]));
  }
  for (long long q : {1LL, 2LL, 5LL, 12LL, 29LL}) {
    CHECK(std::count(qs.begin(), qs.end(), q) == 1);
    CHECK(std::count(qs.begin(), qs.end(), -q) == 1);
  }

  const json manifest = json::parse(diolab::read_file(dir + "/search.manifest.json"));
  CHECK(manifest.at("artifact_version") == "1.0.0");
  CHECK(manifest.at("command") == "search");
  CHECK(manifest.at("config_hash").get<std::string>().size() == 16);
  CHECK(manifest.at("format") == "csv");
  REQUIRE(manifest.at("outputs").size() == 1);
  CHECK(manifest.at("outputs")[0].at("file") == "search.csv");
  CHECK(manifest.at("outputs")[0].at("rows") == 16);
}

TEST_CASE("json format mirrors the csv table") {
  const std::string dir = fresh_dir("jsonfmt");
  const std::string cfg = write_config(dir, golden_search_config());
  const proc::RunResult run =
      proc::run(kCli + " search --config " + cfg + " --out " + dir + " --format json");
  CHECK(run.status == 0);
  const json table = json::parse(diolab::read_file(dir + "/search.json"));
  CHECK(table.at("columns") ==
        json::array({"qnorm", "scale", "residual", "q1", "p1"}));
  REQUIRE(table.at("rows").size() == 16);
  CHECK(table.at("rows")[0] == json::array({"1", "1", "0.41421356237309515", "-1", "0"}));
}

TEST_CASE("outputs are byte-identical across worker counts") {
  json cfg{{"m", 1},
           {"n", 1},
           {"classes", {{{"moduli", {2, 2}}, {"residues", {1, 1}}}}},
           {"psi", {{"kind", "power"}, {"c", 1.0}, {"delta", 1.0}, {"x0", 1.0}}},
           {"campaign", "growth"},
           {"samples", 6},
           {"seed", 11},
           {"q_grid", {50, 500}}};
  const std::string dir = fresh_dir("det");
  const std::string ca = write_config(dir, cfg);
  const proc::RunResult ra = proc::run("OMP_NUM_THREADS=1 " + kEpochPin + kCli +
                                       " campaign --config " + ca + " --out " + dir);
  CHECK(ra.status == 0);
  const std::string csv_a = diolab::read_file(dir + "/campaign_growth.csv");
  const std::string man_a = diolab::read_file(dir + "/campaign.manifest.json");
  const proc::RunResult rb = proc::run("OMP_NUM_THREADS=4 " + kEpochPin + kCli +
                                       " campaign --config " + ca + " --out " + dir);
  CHECK(rb.status == 0);
  CHECK(csv_a == diolab::read_file(dir + "/campaign_growth.csv"));
  CHECK(man_a == diolab::read_file(dir + "/campaign.manifest.json"));
}

TEST_CASE("seed flag overrides the config seed") {
  json base{{"m", 1},
            {"n", 1},
            {"classes", {{{"moduli", {2, 2}}, {"residues", {1, 1}}}}},
            {"campaign", "growth"},
            {"samples", 2},
            {"seed", 1},
            {"q_grid", {50}}};
  const std::string da = fresh_dir("seed_a");
  const std::string db = fresh_dir("seed_b");
  const std::string ca = write_config(da, base);
  json direct = base;
  direct["seed"] = 5;
  const std::string cb = write_config(db, direct);
  const proc::RunResult ra =
      proc::run(kCli + " campaign --config " + ca + " --out " + da + " --seed 5");
  const proc::RunResult rb = proc::run(kCli + " campaign --config " + cb + " --out " + db);
  CHECK(ra.status == 0);
  CHECK(rb.status == 0);
  CHECK(diolab::read_file(da + "/campaign_growth.csv") ==
        diolab::read_file(db + "/campaign_growth.csv"));
}

TEST_CASE("validation failures exit with code 2") {
  const std::string dir = fresh_dir("invalid");
  SUBCASE("unknown config key") {
    json cfg = golden_search_config();
    cfg["zap"] = 1;
    const std::string path = write_config(dir, cfg);
    const proc::RunResult run = proc::run(kCli + " search --config " + path + " --out " + dir);
    CHECK(run.status == 2);
    CHECK(run.output.find("zap") != std::string::npos);
  }
  SUBCASE("class without primitive vectors") {
    json cfg = golden_search_config();
    cfg["classes"] = {{{"moduli", {3, 3}}, {"residues", {0, 0}}}};
    const std::string path = write_config(dir, cfg);
    const proc::RunResult run = proc::run(kCli + " search --config " + path + " --out " + dir);
    CHECK(run.status == 2);
  }
  SUBCASE("missing config file") {
    const proc::RunResult run =
        proc::run(kCli + " search --config " + dir + "/nope.json --out " + dir);
    CHECK(run.status == 2);
  }
  SUBCASE("no subcommand") {
    const proc::RunResult run = proc::run(kCli);
    CHECK(run.status == 2);
  }
  SUBCASE("malformed json") {
    const std::string path = dir + "/broken.json";
    diolab::write_file(path, "{ not json");
    const proc::RunResult run = proc::run(kCli + " search --config " + path + " --out " + dir);
    CHECK(run.status == 2);
  }
}

TEST_CASE("budget exhaustion exits with code 3") {
  const std::string dir = fresh_dir("budget");
  json cfg = golden_search_config();
  cfg["q_max"] = 1000;
  const std::string path = write_config(dir, cfg);
  const proc::RunResult run =
      proc::run(kCli + " search --config " + path + " --out " + dir + " --budget 2");
  CHECK(run.status == 3);
}

TEST_CASE("crosscheck corollary batch reports zero failures") {
  const std::string dir = fresh_dir("crosscheck");
  const json cfg{{"m", 1},
                 {"n", 1},
                 {"classes", {{{"moduli", {2, 2}}, {"residues", {1, 0}}}}},
                 {"samples", 4},
                 {"seed", 7},
                 {"eps", 0.4},
                 {"t_list", {0.5, 1.0, 1.5}},
                 {"check", "corollary"}};
  const std::string path = write_config(dir, cfg);
  const proc::RunResult run =
      proc::run(kCli + " crosscheck --config " + path + " --out " + dir);
  CHECK(run.status == 0);
  CHECK(run.output.find("fail=0") != std::string::npos);
  const std::vector<std::string> lines =
      split_lines(diolab::read_file(dir + "/crosscheck.csv"));
  REQUIRE(lines.size() == 13);  // header + 4 samples x 3 times
  const auto header = split_cells(lines[0]);
  REQUIRE(header.size() >= 6);
  CHECK(header[3] == "fired");
  CHECK(header[5] == "pass");
  for (size_t i = 1; i < lines.size(); ++i) {
    CHECK(split_cells(lines[i])[5] == "1");
  }
}

TEST_CASE("crosscheck dani mode emits crossing and solution tables") {
  const std::string dir = fresh_dir("dani_check");
  const json cfg{{"m", 1},
                 {"n", 1},
                 {"theta", {{"mode", "inline"}, {"rows", {{0.41421356237309515}}}}},
                 {"psi", {{"kind", "power"}, {"c", 1.0}, {"delta", 1.0}, {"x0", 1.0}}},
                 {"t_horizon", 6.0},
                 {"check", "dani"}};
  const std::string path = write_config(dir, cfg);
  const proc::RunResult run =
      proc::run(kCli + " crosscheck --config " + path + " --out " + dir);
  CHECK(run.status == 0);
  CHECK(run.output.find("fail=0") != std::string::npos);
  CHECK(std::filesystem::exists(dir + "/crosscheck_crossings.csv"));
  CHECK(std::filesystem::exists(dir + "/crosscheck_solutions.csv"));
  const json manifest = json::parse(diolab::read_file(dir + "/crosscheck.manifest.json"));
  CHECK(manifest.at("outputs").size() == 2);
}

TEST_CASE("dani subcommand solves the matching equation on a grid") {
  const std::string dir = fresh_dir("dani");
  const json cfg{{"m", 1},
                 {"n", 1},
                 {"psi", {{"kind", "power"}, {"c", 1.0}, {"delta", 1.0}, {"x0", 1.0}}},
                 {"t_horizon", 10.0}};
  const std::string path = write_config(dir, cfg);
  const proc::RunResult run = proc::run(kCli + " dani --config " + path + " --out " + dir);
  CHECK(run.status == 0);
  CHECK(run.output.find("grid_points=201") != std::string::npos);

  const std::vector<std::string> lines = split_lines(diolab::read_file(dir + "/dani.csv"));
  CHECK(lines[0] == "t,r,lambda,L,residual");
  REQUIRE(lines.size() == 202);
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_cells(lines[i]);
    CHECK(std::abs(std::stod(cells[1])) < 1e-9);      // r = 0 for the Dirichlet law
    CHECK(std::abs(std::stod(cells[4])) < 1e-9);      // matching residual
  }
}

TEST_CASE("orbit at theta = 0 walks straight up the cusp") {
  const std::string dir = fresh_dir("orbit");
  const json cfg{{"m", 1},
                 {"n", 1},
                 {"theta", {{"mode", "inline"}, {"rows", {{0.0}}}}},
                 {"t_horizon", 3.0},
                 {"dt", 0.5}};
  const std::string path = write_config(dir, cfg);
  const proc::RunResult run = proc::run(kCli + " orbit --config " + path + " --out " + dir);
  CHECK(run.status == 0);
  CHECK(diolab::read_file(dir + "/orbit.csv") ==
        "t,delta\n0,-0\n0.5,0.5\n1,1\n1.5,1.5\n2,2\n2.5,2.5\n3,3\n");
}

TEST_CASE("cusp profile is monotone in the threshold and fits a slope") {
  const std::string dir = fresh_dir("cusp");
  const json cfg{{"m", 1},
                 {"n", 1},
                 {"samples", 4},
                 {"seed", 11},
                 {"thresholds", {1.0, 1.5, 2.0}},
                 {"t_horizon", 60.0},
                 {"dt", 0.1}};
  const std::string path = write_config(dir, cfg);
  const proc::RunResult run = proc::run(kCli + " cusp --config " + path + " --out " + dir);
  CHECK(run.status == 0);
  CHECK(run.output.find("slope_fit: estimate ~ exp(-b T), b=") != std::string::npos);
  const std::vector<std::string> lines = split_lines(diolab::read_file(dir + "/cusp.csv"));
  CHECK(lines[0] == "T,eps,estimate,monotone_ok");
  REQUIRE(lines.size() == 4);
  double prev = 2.0;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_cells(lines[i]);
    const double est = std::stod(cells[2]);
    CHECK(est <= prev);
    CHECK(cells[3] == "1");
    prev = est;
  }
}

TEST_CASE("joint reports the indicator product alongside the marginals") {
  const std::string dir = fresh_dir("joint");
  const json cfg{{"m", 1},
                 {"n", 1},
                 {"classes",
                  {{{"moduli", {2, 2}}, {"residues", {1, 1}}},
                   {{"moduli", {3, 3}}, {"residues", {1, 2}}}}},
                 {"kappa", {1.0, 1.5}},
                 {"eps", 0.36787944117144233},
                 {"t_horizon", 100.0},
                 {"seed", 3}};
  const std::string path = write_config(dir, cfg);
  const proc::RunResult run = proc::run(kCli + " joint --config " + path + " --out " + dir);
  CHECK(run.status == 0);
  const std::vector<std::string> lines = split_lines(diolab::read_file(dir + "/joint.csv"));
  CHECK(lines[0] ==
        "horizon,grid_points,joint,marginal1,marginal2,product,abs_diff,order_warning");
  REQUIRE(lines.size() == 2);
  const auto cells = split_cells(lines[1]);
  const double joint = std::stod(cells[2]);
  const double m1 = std::stod(cells[3]);
  const double m2 = std::stod(cells[4]);
  const double product = std::stod(cells[5]);
  CHECK(joint >= 0.0);
  CHECK(joint <= std::min(m1, m2) + 1e-12);
  CHECK(product == doctest::Approx(m1 * m2).epsilon(1e-12));
  CHECK(std::abs(std::stod(cells[6]) - std::abs(joint - product)) < 1e-12);
  CHECK(cells[7] == "0");
}

TEST_CASE("manifest hash is stable for a config and moves with it") {
  const std::string dir = fresh_dir("hash");
  const json cfg = golden_search_config();
  const std::string ca = write_config(dir, cfg);
  CHECK(proc::run(kEpochPin + kCli + " search --config " + ca + " --out " + dir).status == 0);
  const std::string ma = diolab::read_file(dir + "/search.manifest.json");
  CHECK(proc::run(kEpochPin + kCli + " search --config " + ca + " --out " + dir).status == 0);
  CHECK(ma == diolab::read_file(dir + "/search.manifest.json"));

  json other = cfg;
  other["q_max"] = 31;
  const std::string cc = write_config(dir, other);
  CHECK(proc::run(kEpochPin + kCli + " search --config " + cc + " --out " + dir).status == 0);
  const json ja = json::parse(ma);
  const json jc = json::parse(diolab::read_file(dir + "/search.manifest.json"));
  CHECK(ja.at("config_hash") != jc.at("config_hash"));
}

TEST_CASE("config reference page names every key") {
  const proc::RunResult run = proc::run(kCli + " --config-reference");
  CHECK(run.status == 0);
  for (const char* key : {"m", "n", "classes", "psi", "theta", "q_max", "seed", "format"}) {
    CHECK(run.output.find(key) != std::string::npos);
  }
  CHECK(run.output.find("unknown keys rejected") != std::string::npos);
}
