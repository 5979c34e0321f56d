#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "creditvol/csv.hpp"
#include "creditvol/errors.hpp"
#include "creditvol/manifest.hpp"
#include "creditvol/serialization.hpp"
#include "stats.hpp"

using namespace creditvol;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_SUITE("serialization") {
  TEST_CASE("csv number formatting round-trips exactly") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> d(0.0, 1e3);
    for (int i = 0; i < 2000; ++i) {
      const double v = d(gen) * std::pow(10.0, (i % 21) - 10);
      CHECK(csv::parse_number(csv::format_number(v), 1) == v);
    }
    CHECK(csv::format_number(0.1) == "0.1");
    CHECK(csv::format_number(-2.0) == "-2");
    CHECK_THROWS_AS(csv::parse_number("inf", 7), DataError);
    CHECK_THROWS_AS(csv::parse_number("", 7), DataError);
  }

  TEST_CASE("parameter JSON uses the model's names") {
    const SvParams p{-10.12, 0.83, 0.91, 0.25, 0.4};
    const json j = p;
    CHECK(j.at("mu_h") == -10.12);
    CHECK(j.at("phi_y") == 0.83);
    CHECK(j.at("phi_h") == 0.91);
    CHECK(j.at("tau") == 0.25);
    CHECK(j.at("rho") == 0.4);
    const SvParams back = j.get<SvParams>();
    CHECK(back.mu_h == p.mu_h);
    CHECK(back.rho == p.rho);
    json partial = j;
    partial.erase("tau");
    CHECK_THROWS_AS(partial.get<SvParams>(), ConfigError);
  }

  TEST_CASE("prior and calibration JSON") {
    const json b = PriorSpec::baseline();
    CHECK(b.at("variant") == "baseline");
    CHECK(b.at("a0") == 20.0);
    CHECK(b.at("b0") == 1.5);
    PriorSpec r = PriorSpec::robustness();
    r.tau_sd = 0.7;
    const PriorSpec rb = json(r).get<PriorSpec>();
    CHECK(rb.variant == PriorVariant::robustness);
    CHECK(rb.tau_sd == 0.7);
    const json flat = {{"variant", "flat"}};
    CHECK_THROWS_AS(flat.get<PriorSpec>(), ConfigError);

    RbcCalibration c;
    c.zeta_ss = 0.02;
    const json cj = c;
    CHECK(cj.at("beta") == 0.99);
    CHECK(cj.at("zeta_ss") == 0.02);
    CHECK(cj.at("h_bar") == -10.12);
    const json alpha_only = {{"alpha", 0.4}};
    const RbcCalibration partial = alpha_only.get<RbcCalibration>();
    CHECK(partial.alpha == 0.4);
    CHECK(partial.delta == 0.02);
  }

  TEST_CASE("shock CSV leaves the first volatility cells empty") {
    testing::TempDir dir("ser-shock");
    ShockSet s;
    s.eps = {0.5, -1.0, 2.0};
    s.eta = {0.25, -0.75};
    s.eta_star = {0.1, 0.2};
    const std::vector<Period> periods = {make_period(2000, 4), make_period(2001, 1), make_period(2001, 2)};
    write_shock_csv(dir / "shocks.csv", s, periods);
    const std::string text = slurp(dir / "shocks.csv");
    CHECK(text ==
          "t,eps,eta,eta_star\n"
          "2000Q4,0.5,,\n"
          "2001Q1,-1,0.25,0.1\n"
          "2001Q2,2,-0.75,0.2\n");
    const TimeSeries eta = read_shock_series(dir / "shocks.csv", "eta");
    REQUIRE(eta.size() == 2);
    CHECK(eta.first_period() == make_period(2001, 1));
    CHECK(eta[1] == -0.75);
    CHECK_THROWS_AS(read_shock_series(dir / "shocks.csv", "zeta"), DataError);

    write_shock_csv(dir / "plain.csv", s);
    CHECK(slurp(dir / "plain.csv").find("\n3,2,-0.75,0.2\n") != std::string::npos);
  }

  TEST_CASE("draws and latent paths round trip") {
    testing::TempDir dir("ser-draws");
    PosteriorDraws d;
    std::mt19937_64 gen(4);
    std::normal_distribution<double> n;
    for (std::size_t i = 0; i < 30; ++i) {
      d.params.push_back({n(gen), 0.5 * std::tanh(n(gen)), 0.9, std::exp(n(gen)), 0.1 * n(gen)});
      d.logliks.push_back(-300.0 + n(gen));
    }
    for (std::size_t k = 0; k < 3; ++k) {
      LatentPath p;
      for (int t = 0; t < 4; ++t) p.h.push_back(n(gen));
      d.latent_paths.push_back(p);
      d.path_draw_index.push_back(10 * k);
    }
    write_draws_csv(dir / "draws.csv", d);
    const PosteriorDraws back = read_draws_csv(dir / "draws.csv");
    REQUIRE(back.params.size() == 30);
    for (std::size_t i = 0; i < 30; ++i) {
      CHECK(back.params[i].mu_h == d.params[i].mu_h);
      CHECK(back.params[i].phi_y == d.params[i].phi_y);
      CHECK(back.params[i].tau == d.params[i].tau);
      CHECK(back.params[i].rho == d.params[i].rho);
      CHECK(back.logliks[i] == d.logliks[i]);
    }

    std::vector<Period> periods;
    for (int q = 1; q <= 4; ++q) periods.push_back(make_period(1990, q));
    write_latent_paths_csv(dir / "paths.csv", d, periods);
    CHECK(slurp(dir / "paths.csv").rfind("draw,1990Q1,1990Q2,1990Q3,1990Q4\n", 0) == 0);
    std::vector<std::size_t> idx;
    const auto paths = read_latent_paths_csv(dir / "paths.csv", &idx);
    REQUIRE(paths.size() == 3);
    CHECK(idx == std::vector<std::size_t>{0, 10, 20});
    CHECK(paths[2].h == d.latent_paths[2].h);

    write_volatility_csv(dir / "vol.csv", d, periods);
    const csv::Table t = csv::read(dir / "vol.csv");
    CHECK(t.header == std::vector<std::string>{"t", "vol_mean", "vol_p05", "vol_p95"});
    double m = 0.0;
    for (const auto& p : d.latent_paths) m += 100.0 * std::exp(p.h[0] / 2.0) / 3.0;
    CHECK(csv::parse_number(t.rows[0][1], 2) == doctest::Approx(m).epsilon(1e-14));
    CHECK(csv::parse_number(t.rows[0][2], 2) <= csv::parse_number(t.rows[0][3], 2));
  }

  TEST_CASE("summary JSON nulls the effective size of a constant parameter") {
    PosteriorSummary s;
    s.draws = 400;
    s.acceptance_rate = 0.3;
    for (auto& p : s.params) {
      p.mean = 1.0;
      p.sd = 0.5;
      p.q025 = 0.1;
      p.q975 = 1.9;
      p.iact = 4.0;
      p.ess = 100.0;
    }
    s.params[3].degenerate = true;
    const json j = summary_json(s);
    CHECK(j.at("draws") == 400);
    CHECK(j.at("parameters").at("mu_h").at("ess") == 100.0);
    CHECK(j.at("parameters").at("mu_h").at("ci95") == json::array({0.1, 1.9}));
    CHECK(j.at("parameters").at("tau").at("ess").is_null());
    CHECK(j.at("parameters").at("tau").at("degenerate") == true);
  }

  TEST_CASE("json files") {
    testing::TempDir dir("ser-json");
    write_json(dir / "a.json", json{{"k", 1}});
    CHECK(slurp(dir / "a.json") == "{\n  \"k\": 1\n}\n");
    CHECK(read_json(dir / "a.json").at("k") == 1);
    spit(dir / "bad.json", "{\"k\": ");
    CHECK_THROWS_AS(read_json(dir / "bad.json"), DataError);
    CHECK_THROWS_AS(read_json(dir / "none.json"), DataError);
  }

  TEST_CASE("sha256 digests") {
    CHECK(sha256_bytes("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_bytes("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    testing::TempDir dir("ser-sha");
    spit(dir / "abc.txt", "abc");
    CHECK(sha256_file(dir / "abc.txt") == sha256_bytes("abc"));
  }

  TEST_CASE("manifest records and verifies digests") {
    testing::TempDir dir("ser-manifest");
    spit(dir / "input.csv", "t,value\n1,2\n");
    const auto out = dir / "out";
    std::filesystem::create_directories(out);
    spit(out / "result.csv", "x\n1\n");

    RunManifest m;
    m.command = "filter";
    m.config = json{{"particles", 500}};
    m.seeds["seed"] = 42;
    m.add_input(dir / "input.csv");
    m.add_output(out, "result.csv");
    m.duration_seconds = 1.5;
    write_manifest(out, m);

    const RunManifest back = read_manifest(out);
    CHECK(back.command == "filter");
    CHECK(back.config == m.config);
    CHECK(back.seeds.at("seed") == 42);
    CHECK(back.outputs.at("result.csv") == sha256_bytes("x\n1\n"));
    CHECK(back.version == library_version());
    CHECK(verify_manifest(out).ok);

    spit(out / "result.csv", "x\n2\n");
    const ManifestCheck bad = verify_manifest(out);
    CHECK_FALSE(bad.ok);
    REQUIRE(bad.mismatches.size() == 1);
    CHECK(bad.mismatches[0].find("result.csv") != std::string::npos);

    spit(out / "result.csv", "x\n1\n");
    std::filesystem::remove(dir / "input.csv");
    CHECK_FALSE(verify_manifest(out).ok);
  }
}
