#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "nigar/nigar.hpp"

using namespace nigar;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "nigar_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p);
  f << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NIGAR_CLI_PATH) + " " + args +
                          " >/dev/null 2>&1";
  const int ret = std::system(cmd.c_str());
  return WIFEXITED(ret) ? WEXITSTATUS(ret) : -1;
}

}  // namespace

TEST_CASE("csv reader") {
  const auto dir = temp_dir();
  {
    write_file(dir / "plain.csv", "1.5\n2.5\n-3\n");
    const auto csv = read_series_csv((dir / "plain.csv").string());
    REQUIRE(csv.series.values == std::vector<double>{1.5, 2.5, -3.0});
    REQUIRE_FALSE(csv.had_header);
  }
  {
    write_file(dir / "dated.csv",
               "date,adj_close\n2010-03-04,100.5\n2010-03-05,101.25\n");
    const auto csv = read_series_csv((dir / "dated.csv").string());
    REQUIRE(csv.had_header);
    REQUIRE(csv.series.values == std::vector<double>{100.5, 101.25});
    REQUIRE(csv.labels == std::vector<std::string>{"2010-03-04", "2010-03-05"});
  }
  {
    write_file(dir / "bad.csv", "1.0\n2.0\noops\n4.0\n");
    REQUIRE_THROWS_WITH(read_series_csv((dir / "bad.csv").string()),
                        Catch::Matchers::ContainsSubstring(":3:"));
  }
  {
    write_file(dir / "empty.csv", "");
    REQUIRE_THROWS_AS(read_series_csv((dir / "empty.csv").string()),
                      ParseError);
  }
  REQUIRE_THROWS_AS(read_series_csv((dir / "missing.csv").string()), IoError);
}

TEST_CASE("fit record JSON round trip is idempotent") {
  const ArNigModel truth({0.6}, NigParams(1, 0, 0, 2));
  const auto rep = em_fit(simulate(truth, 400, 500, 5), 1);
  const auto record = make_fit_record(rep);

  nlohmann::json j1 = record;
  FitRecord back = j1.get<FitRecord>();
  nlohmann::json j2 = back;
  REQUIRE(j1 == j2);
  REQUIRE(back.method == "EM");
  REQUIRE(back.rho == record.rho);
  REQUIRE(back.loglik_path == record.loglik_path);
}

TEST_CASE("cli simulate is deterministic and self-consistent") {
  const auto dir = temp_dir();
  const std::string base =
      "simulate --rho 0.5,0.3 --alpha 1 --beta 0 --mu 0 --delta 2 -n 200 "
      "--seed 99 --with-innovations --out ";
  REQUIRE(run_cli(base + (dir / "a.csv").string()) == 0);
  REQUIRE(run_cli(base + (dir / "b.csv").string()) == 0);
  REQUIRE(read_file(dir / "a.csv") == read_file(dir / "b.csv"));

  // the two columns satisfy the autoregression exactly
  const auto csv = read_series_csv((dir / "a.csv").string());
  std::vector<double> y, eps;
  {
    std::ifstream f(dir / "a.csv");
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
      const auto comma = line.find(',');
      y.push_back(std::stod(line.substr(0, comma)));
      eps.push_back(std::stod(line.substr(comma + 1)));
    }
  }
  REQUIRE(y.size() == 200);
  for (std::size_t t = 2; t < y.size(); ++t) {
    REQUIRE(y[t] == Catch::Approx(0.5 * y[t - 1] + 0.3 * y[t - 2] + eps[t])
                        .margin(1e-10));
  }
}

TEST_CASE("cli fit emits a parseable report") {
  const auto dir = temp_dir();
  REQUIRE(run_cli("simulate --rho 0.7 --alpha 1 --delta 2 -n 800 --seed 3 "
                  "--out " +
                  (dir / "fit_in.csv").string()) == 0);
  REQUIRE(run_cli("fit " + (dir / "fit_in.csv").string() +
                  " --order 1 --method em --out " +
                  (dir / "fit_out.json").string()) == 0);
  const auto j = read_json((dir / "fit_out.json").string());
  const auto rec = j.get<FitRecord>();
  REQUIRE(rec.method == "EM");
  REQUIRE(rec.schema_version == kSchemaVersion);
  REQUIRE(std::abs(rec.rho[0] - 0.7) < 0.1);
  REQUIRE(rec.converged);
  REQUIRE(rec.stationary);

  // yw and cls run too
  REQUIRE(run_cli("fit " + (dir / "fit_in.csv").string() +
                  " --order 1 --method yw --out " +
                  (dir / "fit_yw.json").string()) == 0);
  REQUIRE(read_json((dir / "fit_yw.json").string())["method"] == "YW");

  // statistical non-convergence is flagged in the output, not the exit code
  REQUIRE(run_cli("fit " + (dir / "fit_in.csv").string() +
                  " --order 1 --max-iter 1 --out " +
                  (dir / "fit_short.json").string()) == 0);
  REQUIRE(read_json((dir / "fit_short.json").string())["converged"] == false);
}

TEST_CASE("cli simulate single row") {
  const auto dir = temp_dir();
  REQUIRE(run_cli("simulate --rho 0.5 --alpha 1 --delta 2 -n 1 --seed 1 "
                  "--out " +
                  (dir / "one.csv").string()) == 0);
  const auto csv = read_series_csv((dir / "one.csv").string());
  REQUIRE(csv.series.size() == 1);
}

TEST_CASE("cli exit codes") {
  const auto dir = temp_dir();
  REQUIRE(run_cli("fit /definitely/not/here.csv --order 1") == 3);
  write_file(dir / "corrupt.csv", "1.0\nnot-a-number\n");
  REQUIRE(run_cli("fit " + (dir / "corrupt.csv").string() + " --order 1") == 2);
  REQUIRE(run_cli("fit " + (dir / "corrupt.csv").string()) == 2);  // missing --order
  REQUIRE(run_cli("simulate --rho 1.4 --out " + (dir / "x.csv").string()) == 2);

  // constant price series: the pipeline aborts at segmentation
  std::string constant = "price\n";
  for (int i = 0; i < 200; ++i) constant += "100\n";
  write_file(dir / "const.csv", constant);
  REQUIRE(run_cli("pipeline " + (dir / "const.csv").string() + " --out " +
                  (dir / "const_bundle").string()) == 2);
}

TEST_CASE("cli pacf and segment") {
  const auto dir = temp_dir();
  REQUIRE(run_cli("simulate --rho 0.9 --alpha 1 --delta 2 -n 1200 --seed 8 "
                  "--out " +
                  (dir / "pacf_in.csv").string()) == 0);
  REQUIRE(run_cli("pacf " + (dir / "pacf_in.csv").string() + " --out " +
                  (dir / "pacf.json").string()) == 0);
  const auto pj = read_json((dir / "pacf.json").string());
  REQUIRE(pj["order"] == 1);
  REQUIRE(pj["significant"] == true);

  // two-regime synthetic returns
  {
    Rng rng(4);
    std::string body;
    for (int i = 0; i < 1000; ++i) {
      body += std::to_string((i < 500 ? 1.0 : 3.0) * rng.normal()) + "\n";
    }
    write_file(dir / "seg_in.csv", body);
  }
  REQUIRE(run_cli("segment " + (dir / "seg_in.csv").string() +
                  " --input-kind return --out " + (dir / "seg.json").string() +
                  " --stat-out " + (dir / "stat.csv").string()) == 0);
  const auto sj = read_json((dir / "seg.json").string());
  REQUIRE(sj["breakpoints"].size() == 1);
  const long bp = sj["breakpoints"][0].get<long>();
  REQUIRE(std::abs(bp - 500) <= 25);
  REQUIRE(fs::exists(dir / "stat.csv"));
}

TEST_CASE("cli quantiles") {
  const auto dir = temp_dir();
  REQUIRE(run_cli("quantiles --rho 0.5 --alpha 1 --delta 2 --steps 50 "
                  "--paths 200 --seed 9 --out " +
                  (dir / "fan.csv").string()) == 0);
  std::ifstream f(dir / "fan.csv");
  std::string header;
  std::getline(f, header);
  REQUIRE(header == "t,q10,q20,q30,q40,q50,q60,q70,q80,q90");
  std::string line;
  int rows = 0;
  while (std::getline(f, line)) {
    ++rows;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    double prev = -1e300;
    while (std::getline(ss, cell, ',')) {
      const double v = std::stod(cell);
      REQUIRE(v >= prev);
      prev = v;
    }
  }
  REQUIRE(rows == 50);
}

TEST_CASE("cli experiment with config file") {
  const auto dir = temp_dir();
  write_file(dir / "exp.cfg",
             "# tiny smoke configuration\n"
             "case = custom\n"
             "rho = 0.6\n"
             "alpha = 1.0\n"
             "beta = 0\n"
             "mu = 0\n"
             "delta = 2.0\n"
             "n_trajectories = 4\n"
             "series_length = 200\n"
             "estimators = em,cls\n"
             "seed = 42\n");
  const std::string out1 = (dir / "exp1").string();
  const std::string out2 = (dir / "exp2").string();
  REQUIRE(run_cli("experiment --config " + (dir / "exp.cfg").string() +
                  " --out " + out1) == 0);
  REQUIRE(run_cli("experiment --config " + (dir / "exp.cfg").string() +
                  " --out " + out2) == 0);
  // deterministic given the seed: tables identical byte for byte
  REQUIRE(read_file(out1 + ".csv") == read_file(out2 + ".csv"));
  REQUIRE(read_file(out1 + "_raw.csv") == read_file(out2 + "_raw.csv"));

  const auto j = read_json(out1 + ".json");
  REQUIRE(j["case"] == "custom");
  REQUIRE(j["n_replications"] == 4);
  REQUIRE(j["series_length"] == 200);
  REQUIRE(j["tables"].size() == 2);
  REQUIRE(j["tables"][0]["method"] == "EM");
  REQUIRE(j["tables"][0]["parameters"][0]["parameter"] == "rho1");

  // single replication: spread fields are NaN -> null in JSON
  REQUIRE(run_cli("experiment --config " + (dir / "exp.cfg").string() +
                  " --trajectories 1 --out " + (dir / "one").string()) == 0);
  const auto j1 = read_json((dir / "one").string() + ".json");
  REQUIRE(j1["tables"][0]["parameters"][0]["std"].is_null());

  REQUIRE(run_cli("experiment --config " + (dir / "missing.cfg").string()) ==
          3);
}

TEST_CASE("cli pipeline bundle on the shipped fixture") {
  const auto dir = temp_dir();
  const std::string bundle = (dir / "bundle").string();
  REQUIRE(run_cli(std::string("pipeline ") + NIGAR_FIXTURE_PATH +
                  " --input-kind price --paths 24 --out " + bundle) == 0);
  const auto j = read_json(bundle + "/summary.json");
  REQUIRE(j["n_observations"] == 2517);
  REQUIRE(j["breakpoints"].size() == 1);
  REQUIRE(j["segments"].size() == 2);
  for (const auto& seg : j["segments"]) {
    REQUIRE(seg["errors"].empty());
    REQUIRE(seg["selected_order"] == 1);
    REQUIRE(seg["fit"]["converged"] == true);
  }
  for (const char* name :
       {"cusum.csv", "segmentation_input.csv", "seg1_detrend.csv",
        "seg1_pacf.csv", "seg1_fit.json", "seg1_residuals.csv",
        "seg1_kde.csv", "seg1_quantiles.csv", "seg2_fit.json",
        "seg2_quantiles.csv"}) {
    REQUIRE(fs::exists(fs::path(bundle) / name));
  }
}
