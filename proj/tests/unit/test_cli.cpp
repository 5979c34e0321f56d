#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>

#include "creditvol/manifest.hpp"
#include "json.hpp"
#include "pipeline.hpp"
#include "stats.hpp"

namespace fs = std::filesystem;
using testing::run_cli;

namespace {

const std::string kSolution = std::string(CREDITVOL_TEST_DATA) + "/table3_solution.txt";

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

std::set<std::string> tree(const fs::path& root) {
  std::set<std::string> s;
  for (const auto& e : fs::recursive_directory_iterator(root)) s.insert(fs::relative(e.path(), root).string());
  return s;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help and version") {
    const auto h = run_cli({"--help"});
    CHECK(h.code == 0);
    CHECK(h.out.find("estimate") != std::string::npos);
    CHECK(h.out.find("irf-decompose") != std::string::npos);
    const auto sh = run_cli({"lp", "--help"});
    CHECK(sh.code == 0);
    CHECK(sh.out.find("--regime") != std::string::npos);
    const auto v = run_cli({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out.find(creditvol::library_version()) != std::string::npos);
  }

  TEST_CASE("usage errors") {
    const auto none = run_cli({});
    CHECK(none.code == 2);
    const auto bad = run_cli({"filter", "--bogus"});
    CHECK(bad.code == 2);
    CHECK(bad.err.rfind("error: code=usage exit=2 msg=\"", 0) == 0);
    CHECK(std::count(bad.err.begin(), bad.err.end(), '\n') == 1);
    CHECK(run_cli({"estimate", "--data", "x.csv", "--out", "o", "--variant", "fancy"}).code == 2);
  }

  TEST_CASE("missing inputs") {
    testing::TempDir dir("cli-missing");
    const auto req = run_cli({"filter", "--out", (dir / "o").string()});
    CHECK(req.code == 3);
    CHECK(req.err.find("code=missing_input exit=3") != std::string::npos);
    const auto file = run_cli({"irf-decompose", "--solution", (dir / "absent.txt").string(), "--out",
                               (dir / "o").string()});
    CHECK(file.code == 3);
    CHECK(file.err.find("absent.txt") != std::string::npos);
    CHECK(run_cli({"simulate", "--out", (dir / "o").string()}).code == 3);
    CHECK(run_cli({"extract-shocks", "--out", (dir / "o").string()}).code == 3);
  }

  TEST_CASE("conflicting options") {
    testing::TempDir dir("cli-conflict");
    write_text(dir / "p.json", R"({"mu_h": 0, "phi_y": 0, "phi_h": 0.5, "tau": 0.2, "rho": 0})");
    const auto both = run_cli({"simulate", "--solution", kSolution, "--sv-params", (dir / "p.json").string(),
                               "--out", (dir / "o").string()});
    CHECK(both.code == 4);
    CHECK(both.err.find("code=config_conflict exit=4") != std::string::npos);
    const auto ex = run_cli({"extract-shocks", "--from", dir.path().string(), "--params",
                             (dir / "p.json").string(), "--out", (dir / "o").string()});
    CHECK(ex.code == 4);
    write_text(dir / "d.csv", "t,y\n2000Q1,1\n2000Q2,2\n");
    const auto st = run_cli({"lp", "--data", (dir / "d.csv").string(), "--outcome", "y", "--shock",
                             (dir / "d.csv").string(), "--regime", "state", "--out", (dir / "o").string()});
    CHECK(st.code == 4);
    const auto inv = run_cli({"estimate", "--data", (dir / "d.csv").string(), "--column", "y", "--burn-in",
                              "20", "--iterations", "10", "--out", (dir / "o").string()});
    CHECK(inv.code == 4);
    CHECK(inv.err.find("burn_in") != std::string::npos);
  }

  TEST_CASE("data errors") {
    testing::TempDir dir("cli-data");
    write_text(dir / "p.json", R"({"mu_h": 0, "phi_y": 0, "phi_h": 0.5, "tau": 0.2, "rho": 0})");
    write_text(dir / "d.csv", "t,value\n2000Q1,1\n2000Q2,oops\n2000Q3,2\n");
    const auto r = run_cli({"filter", "--data", (dir / "d.csv").string(), "--transform", "none", "--params",
                            (dir / "p.json").string(), "--out", (dir / "o").string()});
    CHECK(r.code == 5);
    CHECK(r.err.find("code=data exit=5") != std::string::npos);
    CHECK(r.err.find("row 3") != std::string::npos);
    write_text(dir / "bad_solution.txt", "states 1 k\nmatrix h_v 1 2\n0.5 1\n");
    const auto d = run_cli({"irf-decompose", "--solution", (dir / "bad_solution.txt").string(), "--out",
                            (dir / "o2").string()});
    CHECK(d.code == 5);
  }

  TEST_CASE("filter writes per-period output and a manifest") {
    testing::TempDir dir("cli-filter");
    write_text(dir / "p.json", R"({"mu_h": -1, "phi_y": 0.2, "phi_h": 0.9, "tau": 0.3, "rho": -0.3})");
    write_text(dir / "d.csv", "t,value\n2000Q1,0.1\n2000Q2,-0.4\n2000Q3,0.8\n2000Q4,0.05\n");
    const auto r = run_cli({"filter", "--data", (dir / "d.csv").string(), "--transform", "none", "--params",
                            (dir / "p.json").string(), "--particles", "50", "--dump", "--out",
                            (dir / "o").string()});
    REQUIRE(r.code == 0);
    const std::string f = testing::read_bytes(dir / "o" / "filter.csv");
    CHECK(f.rfind("t,loglik_contribution,ESS_t\n2000Q1,", 0) == 0);
    CHECK(fs::exists(dir / "o" / "particles.bin"));
    const auto m = creditvol::read_manifest(dir / "o");
    CHECK(m.command == "filter");
    CHECK(m.config.at("particles") == 50);
    CHECK(m.seeds.at("seed") == 1);
    CHECK(m.outputs.count("filter.csv") == 1);
    CHECK(m.outputs.count("particles.bin") == 1);
    CHECK(creditvol::verify_manifest(dir / "o").ok);
  }

  TEST_CASE("config file supplies defaults and flags override it") {
    testing::TempDir dir("cli-config");
    write_text(dir / "p.json", R"({"mu_h": -1, "phi_y": 0.2, "phi_h": 0.9, "tau": 0.3, "rho": -0.3})");
    write_text(dir / "d.csv", "t,value\n2000Q1,0.1\n2000Q2,-0.4\n2000Q3,0.8\n");
    write_text(dir / "run.toml", "[filter]\nparticles = 40\nseed = 5\n");
    const auto r = run_cli({"--config", (dir / "run.toml").string(), "filter", "--data",
                            (dir / "d.csv").string(), "--transform", "none", "--params",
                            (dir / "p.json").string(), "--seed", "9", "--out", (dir / "o").string()});
    REQUIRE(r.code == 0);
    const auto m = creditvol::read_manifest(dir / "o");
    CHECK(m.config.at("particles") == 40);
    CHECK(m.seeds.at("seed") == 9);
  }

  TEST_CASE("per-draw shocks use each stored draw") {
    testing::TempDir dir("cli-perdraw");
    write_text(dir / "p.json", R"({"mu_h": -1, "phi_y": 0.3, "phi_h": 0.9, "tau": 0.3, "rho": -0.4})");
    const std::string r = dir.path().string();
    REQUIRE(run_cli({"simulate", "--sv-params", r + "/p.json", "--T", "30", "--seed", "3", "--out", r + "/sim"})
                .code == 0);
    REQUIRE(run_cli({"estimate", "--data", r + "/sim/simulated.csv", "--column", "y", "--period-column", "t",
                     "--transform", "none", "--iterations", "140", "--burn-in", "40", "--particles", "20",
                     "--path-thin", "25", "--seed", "2", "--out", r + "/est"})
                .code == 0);
    CHECK(run_cli({"extract-shocks", "--per-draw", "--params", r + "/p.json", "--latent", r + "/x.csv", "--out",
                   r + "/bad"})
              .code == 4);
    const auto e = run_cli({"extract-shocks", "--from", r + "/est", "--per-draw", "--out", r + "/sh"});
    REQUIRE_MESSAGE(e.code == 0, e.err);
    const std::string body = testing::read_bytes(dir / "sh" / "shocks_per_draw.csv");
    CHECK(body.rfind("path,t,eps,eta,eta_star\n0,", 0) == 0);
    // 100 retained draws thinned by 25 leave 4 paths of 30 periods.
    CHECK(std::count(body.begin(), body.end(), '\n') == 1 + 4 * 30);
    CHECK(creditvol::verify_manifest(dir / "sh").ok);
  }

  TEST_CASE("logdiff transform is levels growth divided by 100") {
    testing::TempDir dir("cli-logdiff");
    write_text(dir / "p.json", R"({"mu_h": -9, "phi_y": 0.5, "phi_h": 0.9, "tau": 0.3, "rho": 0})");
    write_text(dir / "d.csv", "t,value\n2000Q1,100\n2000Q2,101\n2000Q3,103\n2000Q4,102.5\n2001Q1,104\n");
    const std::string r = dir.path().string();
    REQUIRE(run_cli({"filter", "--data", r + "/d.csv", "--transform", "logdiff", "--params", r + "/p.json",
                     "--out", r + "/a"})
                .code == 0);
    const std::string f = testing::read_bytes(dir / "a" / "filter.csv");
    CHECK(std::count(f.begin(), f.end(), '\n') == 1 + 4);
    CHECK(f.find("\n2000Q2,") != std::string::npos);
    CHECK(run_cli({"filter", "--data", r + "/d.csv", "--transform", "cubed", "--params", r + "/p.json", "--out",
                   r + "/b"})
              .code == 2);
  }

  TEST_CASE("irf-decompose reports the borrowing bound") {
    testing::TempDir dir("cli-decomp");
    const auto r = run_cli({"irf-decompose", "--solution", kSolution, "--out", (dir / "o").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("0.0602") != std::string::npos);
    const auto cal = nlohmann::json::parse(testing::read_bytes(dir / "o" / "calibration.json"));
    CHECK(cal.at("zeta_ss_bound").at("bound").get<double>() == doctest::Approx(0.061114).epsilon(1e-5));
    CHECK(cal.at("zeta_ss_bound").at("admissible") == true);
    const std::string csv = testing::read_bytes(dir / "o" / "decomposition.csv");
    CHECK(csv.find("consumption,-0.099,-0.081,") != std::string::npos);
  }

  TEST_CASE("full pipeline is reproducible and stays inside its output directories") {
    testing::TempDir a("cli-pipe-a");
    const auto before = tree(a.path());
    const auto first = testing::run_pipeline(a.path(), kSolution);
    for (const auto& [name, res] : first.steps) CHECK_MESSAGE(res.code == 0, name << ": " << res.err);
    REQUIRE(first.all_ok());

    const std::set<std::string> roots = {"params.json", "sim", "est", "shocks", "lp", "leadlag", "decomp", "irf"};
    for (const auto& p : tree(a.path())) {
      if (before.count(p)) continue;
      const std::string top = fs::path(p).begin()->string();
      CHECK_MESSAGE(roots.count(top) == 1, p);
    }
    for (const char* d : {"sim", "est", "shocks", "lp", "leadlag", "decomp", "irf"}) {
      CHECK_MESSAGE(creditvol::verify_manifest(a.path() / d).ok, d);
    }

    // Rerun in place after wiping the outputs.
    for (const char* d : {"sim", "est", "shocks", "lp", "leadlag", "decomp", "irf"}) fs::remove_all(a.path() / d);
    const auto second = testing::run_pipeline(a.path(), kSolution);
    REQUIRE(second.all_ok());
    REQUIRE(first.files.size() == second.files.size());
    for (const auto& [name, bytes] : first.files) {
      REQUIRE(second.files.count(name) == 1);
      if (fs::path(name).filename() == creditvol::kManifestName) {
        auto x = nlohmann::json::parse(bytes);
        auto y = nlohmann::json::parse(second.files.at(name));
        x.erase("duration_seconds");
        y.erase("duration_seconds");
        CHECK_MESSAGE(x == y, name);
      } else {
        CHECK_MESSAGE(bytes == second.files.at(name), name);
      }
    }
  }
}
