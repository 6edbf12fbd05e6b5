#include "doctest.h"

#include "nmfident/generators.hpp"
#include "nmfident/harness.hpp"
#include "nmfident/matcore.hpp"

#include <cmath>
#include <sstream>

using namespace nmfident;

namespace {

BenchConfig small_table2(std::vector<std::string> methods) {
  set_warning_sink(nullptr);
  BenchConfig c = default_config(Experiment::Table2);
  c.M = 20;
  c.N = 40;
  c.trials = 2;
  c.methods = std::move(methods);
  c.threads = 2;
  return c;
}

const RunRecord& find(const RunReport& r, const std::string& m, int c, int trial) {
  for (const auto& x : r.records)
    if (x.method == m && x.case_id == c && x.trial == trial) return x;
  throw std::runtime_error("record not found");
}

}  // namespace

TEST_CASE("config parsing") {
  std::istringstream in(
      "# comment\n"
      "experiment = table2\n"
      "M = 30   # trailing comment\n"
      "methods = spa, hals\n"
      "cases = 1,3\n"
      "snr_db = 20\n"
      "variant = colsum\n"
      "\n");
  const BenchConfig c = parse_bench_config(in);
  CHECK(c.experiment == Experiment::Table2);
  CHECK(c.M == 30);
  CHECK(c.N == 200);
  CHECK(c.methods == std::vector<std::string>{"spa", "hals"});
  CHECK(c.cases == std::vector<int>{1, 3});
  REQUIRE(c.noise_snr_db);
  CHECK(*c.noise_snr_db == 20.0);
  CHECK(c.method_options.variant == DetVariant::ColSum);

  std::istringstream t("density_levels = 4\nR_grid = 2\n");
  const BenchConfig tc = parse_bench_config(t, Experiment::Transition);
  CHECK(tc.N == 100);
  CHECK(tc.trials == 20);
  CHECK(tc.density_grid == std::vector<double>{0.25, 0.5, 0.75, 1.0});
  CHECK(tc.R_grid == std::vector<Index>{2});

  for (const char* bad : {"bogus = 1\n", "M = x\n", "s = 0\n", "s = 1.5\n", "cases = 4\n", "methods = nope\n",
                          "no equals sign\n", "trials = 0\n", "experiment = other\n", "variant = x\n"}) {
    std::istringstream b(bad);
    CHECK_THROWS_AS(parse_bench_config(b), Error);
  }
  std::istringstream g("experiment = transition\ndensity_grid = \n");
  CHECK_THROWS_AS(parse_bench_config(g), Error);
}

TEST_CASE("method runner") {
  set_warning_sink(nullptr);
  const auto p = gen_table2_case(1, 20, 40, 3, 0.65, 1);
  for (const auto& m : method_names()) {
    if (m == "symnmf" || m == "trifactor") continue;
    const MethodOutput o = run_method(m, p.X, 3, 2);
    CHECK(o.pair.W.rows() == 20);
    CHECK(o.pair.H.rows() == 40);
    CHECK(o.pair.rank() == 3);
  }
  const Mat S = p.W * p.W.transpose();
  CHECK(run_method("symnmf", S, 3, 0).pair.W.minCoeff() >= 0.0);
  CHECK(run_method("trifactor", S, 3, 0).E.rows() == 3);
  CHECK_THROWS_AS(run_method("nope", p.X, 3, 0), Error);
  CHECK(method_needs_nonneg("hals"));
  CHECK_FALSE(method_needs_nonneg("spa"));
}

TEST_CASE("table2 benchmark on the separable case") {
  BenchConfig c = small_table2({"spa"});
  c.M = 50;
  c.N = 200;
  c.cases = {1};
  c.trials = 3;
  const RunReport r = run_benchmark(c);
  const auto means = r.means();
  REQUIRE(means.size() == 1);
  CHECK(means[0].n_ok == 3);
  CHECK(means[0].mse <= 1e-15);
}

TEST_CASE("table2 benchmark with the column-sum ALP on case 3") {
  BenchConfig c = small_table2({"detmin-alp"});
  c.M = 50;
  c.N = 200;
  c.cases = {3};
  c.trials = 3;
  const auto means = run_benchmark(c).means();
  REQUIRE(means.size() == 1);
  CHECK(means[0].mse <= 1e-8);
}

TEST_CASE("method order does not change results") {
  const RunReport a = run_benchmark(small_table2({"spa", "hals", "volmin-sca"}));
  const RunReport b = run_benchmark(small_table2({"volmin-sca", "spa", "hals"}));
  REQUIRE(a.records.size() == b.records.size());
  for (const auto& x : a.records) {
    const RunRecord& y = find(b, x.method, x.case_id, x.trial);
    CHECK(x.ok == y.ok);
    CHECK(x.mse == y.mse);
    CHECK(x.iterations == y.iterations);
    CHECK(x.objective_final == y.objective_final);
  }
  BenchConfig one = small_table2({"spa", "hals", "volmin-sca"});
  one.threads = 1;
  const RunReport s = run_benchmark(one);
  for (std::size_t i = 0; i < s.records.size(); ++i) CHECK(s.records[i].mse == a.records[i].mse);
}

TEST_CASE("failures are recorded, not thrown") {
  BenchConfig c = small_table2({"spa", "symnmf"});
  c.cases = {2};
  const RunReport r = run_benchmark(c);
  int failed = 0;
  for (const auto& x : r.records) {
    if (x.method == "symnmf") {
      CHECK_FALSE(x.ok);
      CHECK(x.error.find("square") != std::string::npos);
      ++failed;
    } else {
      CHECK(x.ok);
    }
  }
  CHECK(failed == 2);
  for (const auto& m : r.means())
    if (m.method == "symnmf") CHECK(m.n_failed == 2);
}

TEST_CASE("reports round-trip through json") {
  BenchConfig c = small_table2({"spa", "symnmf"});
  c.cases = {1};
  RunReport r = run_benchmark(c);
  r.records[0].tv_emission = 0.125;
  r.records[0].tv_transition = 1.0 / 3.0;
  r.transition.push_back({3, 0.1, 0.05});
  const RunReport back = report_from_json(report_to_json(r));
  REQUIRE(back.records.size() == r.records.size());
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& x = r.records[i];
    const auto& y = back.records[i];
    CHECK(x.method == y.method);
    CHECK(x.ok == y.ok);
    CHECK(x.mse == y.mse);
    CHECK(x.residual == y.residual);
    CHECK(x.runtime_ms == y.runtime_ms);
    CHECK(x.objective_final == y.objective_final);
    CHECK(x.tv_emission == y.tv_emission);
    CHECK(x.tv_transition == y.tv_transition);
    CHECK(x.error == y.error);
  }
  REQUIRE(back.transition.size() == 1);
  CHECK(back.transition[0].failure_frequency == 0.05);
  CHECK_THROWS_AS(report_from_json("{"), Error);
}

TEST_CASE("csv outputs") {
  BenchConfig c = small_table2({"spa"});
  c.cases = {1};
  const RunReport r = run_benchmark(c);
  std::ostringstream runs, means;
  write_records_csv(runs, r);
  write_means_csv(means, r);
  std::istringstream a(runs.str()), b(means.str());
  std::string line;
  std::getline(a, line);
  CHECK(line == "method,case,R,trial,ok,mse,residual,runtime_ms,iterations,objective_final,tv_emission,tv_transition,error");
  int n = 0;
  while (std::getline(a, line)) ++n;
  CHECK(n == 2);
  std::getline(b, line);
  CHECK(line.rfind("method,case,R,n_ok", 0) == 0);

  BenchConfig t = default_config(Experiment::Transition);
  t.N = 30;
  t.R_grid = {2};
  t.density_grid = {0.5, 1.0};
  t.trials = 3;
  const RunReport tr = run_benchmark(t);
  std::ostringstream via_report, direct;
  write_transition_csv(via_report, tr.transition);
  write_transition_csv(direct, transition_experiment(30, {2}, {0.5, 1.0}, 3, t.seed, 1));
  CHECK(via_report.str() == direct.str());
}

TEST_CASE("hmm benchmark") {
  BenchConfig c = default_config(Experiment::Hmm);
  c.M = 10;
  c.states = 2;
  c.tokens = 5000;
  c.trials = 2;
  c.hmm_iters = 200;
  const RunReport r = run_benchmark(c);
  REQUIRE(r.records.size() == 4);
  for (const auto& x : r.records) {
    CHECK(x.ok);
    REQUIRE(x.tv_emission);
    CHECK(*x.tv_emission >= 0.0);
    CHECK(*x.tv_emission <= 1.0);
    REQUIRE(x.tv_transition);
  }
  CHECK(r.means().size() == 2);
}
