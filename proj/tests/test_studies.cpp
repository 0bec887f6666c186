#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pdeopt/studies.hpp"

using namespace pdeopt;

TEST_CASE("config json round trip") {
  StudyConfig cfg;
  cfg.seed = 424242;
  cfg.instance.beta = 5e-4;
  cfg.fe.m_list = {2, 4, 8};
  cfg.saga_rate.tau = 3.25;
  cfg.complexity.gamma = 1.0;

  const StudyConfig back = StudyConfig::from_json_text(cfg.to_json_text());
  CHECK(back.seed == cfg.seed);
  CHECK(back.instance.beta == cfg.instance.beta);
  CHECK(back.fe.m_list == cfg.fe.m_list);
  CHECK(back.saga_rate.tau == cfg.saga_rate.tau);
  CHECK(back.complexity.gamma == cfg.complexity.gamma);

  // Partial configs only override the mentioned fields.
  const StudyConfig partial = StudyConfig::from_json_text(R"({"saga_rate": {"tau": 9.5}})");
  CHECK(partial.saga_rate.tau == 9.5);
  CHECK(partial.saga_rate.repetitions == StudyConfig{}.saga_rate.repetitions);
  CHECK(partial.instance.name == "transport");
}

TEST_CASE("fnv1a reference vectors") {
  CHECK(fnv1a_hash("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a_hash("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a_hash("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("calibrated model formulas") {
  CalibratedModel m;
  m.e1 = 3.0;
  m.e2 = 10.43;
  m.s = 3.697;
  m.e3 = 2.96;
  m.eps0 = 1.0;  // saturation off
  m.parameter_dim = 5;

  CHECK(m.q_of_tol(1e-2) == 2);
  CHECK(m.m_of_tol(1e-2) == 14);
  CHECK(m.eps_of_q(2) == doctest::Approx(1.0 / 64.0));
  CHECK(m.kmax_of_tol(1e-2) == 655);

  // Saturated rate takes over when the fitted ceiling is lower.
  m.eps0 = 1e-4;
  CHECK(m.eps_of_q(2) == doctest::Approx(1e-4));

  // Monotone refinement as the tolerance shrinks.
  m.eps0 = 1.0;
  double prev_tol = 1.0;
  int pq = 0, pm = 0;
  long pk = 0;
  for (double tol : {3.162e-1, 1e-1, 3.162e-2, 1e-2, 3.162e-3, 1e-3}) {
    REQUIRE(tol < prev_tol);
    CHECK(m.q_of_tol(tol) >= pq);
    CHECK(m.m_of_tol(tol) >= pm);
    CHECK(m.kmax_of_tol(tol) >= pk);
    pq = m.q_of_tol(tol);
    pm = m.m_of_tol(tol);
    pk = m.kmax_of_tol(tol);
    prev_tol = tol;

    // Balanced terms stay within a constant multiple of tol^2.
    CHECK(m.predicted_mse(tol) <= 3.0 * tol * tol);
  }
}

TEST_CASE("error-at-budget is a step function") {
  IterTrace t;
  t.rows.push_back({1, 0.5, 0, 0, 10, 0});
  t.rows.push_back({2, 0.25, 0, 0, 20, 0});
  t.rows.push_back({3, 0.1, 0, 0, 30, 0});
  CHECK(VsCgStudyResult::err_at_budget(t, 1.0, 5) == 1.0);
  CHECK(VsCgStudyResult::err_at_budget(t, 1.0, 10) == 0.5);
  CHECK(VsCgStudyResult::err_at_budget(t, 1.0, 29) == 0.25);
  CHECK(VsCgStudyResult::err_at_budget(t, 1.0, 1000) == 0.1);
}

TEST_CASE("small fe and quadrature studies behave") {
  StudyConfig cfg;
  cfg.fe.m_list = {2, 4};
  cfg.fe.m_ref = 16;
  cfg.fe.q = 1;
  const FeStudyResult fe = run_fe_study(cfg);
  REQUIRE(fe.err_sq.size() == 2);
  CHECK(fe.err_sq[0] > fe.err_sq[1]);
  const double ratio = fe.err_sq[0] / fe.err_sq[1];
  CHECK(ratio > 8.0);
  CHECK(ratio < 30.0);
  CHECK(fe.e3 > 0.0);

  StudyConfig qcfg;
  qcfg.quadrature.q_list = {1, 2};
  qcfg.quadrature.q_ref = 3;
  qcfg.quadrature.mesh_m = 4;
  const QuadStudyResult quad = run_quadrature_study(qcfg);
  REQUIRE(quad.err_sq.size() == 2);
  const double dec = std::log10(quad.err_sq[0] / quad.err_sq[1]);
  CHECK(dec > 3.0);
  CHECK(dec < 5.0);
  CHECK(quad.s > 0.0);

  // Reference must stay strictly finer.
  StudyConfig bad = qcfg;
  bad.quadrature.q_ref = 2;
  CHECK_THROWS(run_quadrature_study(bad));
}

TEST_CASE("ensemble studies are deterministic across thread counts") {
  StudyConfig cfg;
  cfg.saga_rate.q_list = {2};
  cfg.saga_rate.repetitions = 4;
  cfg.saga_rate.iterations = 400;
  cfg.threads = 1;
  const RateStudyResult serial = run_saga_rate_study(cfg);
  cfg.threads = 3;
  const RateStudyResult parallel = run_saga_rate_study(cfg);
  REQUIRE(serial.rows.size() == parallel.rows.size());
  CHECK(serial.rows[0].eps_est == parallel.rows[0].eps_est);
  CHECK(serial.rows[0].e1 == parallel.rows[0].e1);
  CHECK(serial.rows[0].r2 == parallel.rows[0].r2);
}

TEST_CASE("study csv and manifest output") {
  const auto dir = std::filesystem::temp_directory_path() / "pdeopt_test_studies";
  std::filesystem::remove_all(dir);

  QuadStudyResult quad;
  quad.q = {1, 2};
  quad.err_sq = {1e-3, 1e-7};
  quad.e2 = 12.5;
  quad.s = 4.0;
  write_quad_csv(dir.string(), quad);

  StudyConfig cfg;
  write_manifest(dir.string(), cfg, {"quadrature_error.csv"});

  CHECK(std::filesystem::exists(dir / "quadrature_error.csv"));
  CHECK(std::filesystem::exists(dir / "manifest.json"));

  std::ifstream is(dir / "manifest.json");
  const auto j = nlohmann::json::parse(is);
  char expect[32];
  std::snprintf(expect, sizeof(expect), "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(cfg.to_json_text())));
  CHECK(j.at("config_hash").get<std::string>() == expect);
  CHECK(j.at("outputs").size() == 1);
  CHECK(j.at("master_seed").get<std::uint64_t>() == cfg.seed);

  std::filesystem::remove_all(dir);
}

TEST_CASE("studies reproduce identical csv output from the same config") {
  StudyConfig cfg;
  cfg.quadrature.q_list = {1, 2};
  cfg.quadrature.q_ref = 3;
  cfg.quadrature.mesh_m = 4;
  const auto base = std::filesystem::temp_directory_path() / "pdeopt_test_repro";
  std::filesystem::remove_all(base);
  for (const char* sub : {"a", "b"}) write_quad_csv((base / sub).string(), run_quadrature_study(cfg));
  std::ifstream a(base / "a" / "quadrature_error.csv"), b(base / "b" / "quadrature_error.csv");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(!sa.str().empty());
  std::filesystem::remove_all(base);
}

TEST_CASE("complexity driver reports infeasible tolerances") {
  StudyConfig cfg;
  cfg.complexity.tolerances = {1e-9};
  CalibratedModel m;  // defaults: q(1e-9) and 1/h(1e-9) blow past the caps
  CHECK_THROWS(run_complexity_study(cfg, m));
}
