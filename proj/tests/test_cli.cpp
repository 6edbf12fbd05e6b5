#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nmfident/generators.hpp"
#include "nmfident/io.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace nmfident;

namespace {

const fs::path kWork = fs::temp_directory_path() / "nmfident_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(NMFIDENT_CLI) + " " + args + " >" + (kWork / "stdout.txt").string() + " 2>" +
                          (kWork / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct Workdir {
  Workdir() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
};

}  // namespace

TEST_CASE("factor writes the factors and a summary") {
  Workdir w;
  const auto p = gen_table2_case(1, 20, 40, 3, 0.65, 0);
  io::write_matrix((kWork / "X.mtx").string(), p.X);
  CHECK(run("factor --input " + (kWork / "X.mtx").string() + " --rank 3 --method spa --seed 1 --out " +
            (kWork / "spa").string()) == 0);
  const Mat H = io::read_matrix((kWork / "spa" / "H.csv").string());
  CHECK(H.rows() == 40);
  const auto s = nlohmann::json::parse(slurp(kWork / "spa" / "summary.json"));
  CHECK(s.at("method") == "spa");
  CHECK(s.at("anchors").size() == 3);
  CHECK(s.at("residual_rel").get<double>() <= 1e-12);

  CHECK(run("factor --input " + (kWork / "X.mtx").string() +
            " --rank 3 --method detmin-alp --variant colsum --rho 2 --iters 50 --out " + (kWork / "alp").string()) == 0);
  const Mat Ha = io::read_matrix((kWork / "alp" / "H.csv").string());
  CHECK((Ha.colwise().sum().array() - 2.0).abs().maxCoeff() <= 1e-8);
}

TEST_CASE("exit codes") {
  Workdir w;
  const auto p = gen_table2_case(2, 10, 12, 2, 0.65, 0);
  io::write_matrix((kWork / "X.csv").string(), p.X);
  const std::string X = (kWork / "X.csv").string(), out = (kWork / "o").string();
  CHECK(run("factor --input " + (kWork / "missing.csv").string() + " --rank 2 --method spa --out " + out) == 2);
  CHECK(run("factor --input " + X + " --rank 2 --method nope --out " + out) == 2);
  CHECK(run("factor --input " + X + " --method spa --out " + out) == 2);
  CHECK(run("factor --input " + X + " --rank 2 --method symnmf --out " + out) == 2);
  CHECK(run("") == 2);
  // A rank the data cannot support is a numerical failure.
  io::write_matrix((kWork / "R1.csv").string(), Vec::LinSpaced(4, 1, 4) * Vec::Ones(5).transpose());
  CHECK(run("factor --input " + (kWork / "R1.csv").string() + " --rank 2 --method spa --out " + out) == 3);
}

TEST_CASE("check-ssc prints a certificate") {
  Workdir w;
  io::write_matrix((kWork / "I.csv").string(), Mat::Identity(3, 3));
  CHECK(run("check-ssc --input " + (kWork / "I.csv").string() + " --restarts 6 --seed 2") == 0);
  const auto j = nlohmann::json::parse(slurp(kWork / "stdout.txt"));
  CHECK(j.at("verdict") == "scattered");
  CHECK(j.at("restarts_used") == 6);
  io::write_matrix((kWork / "ones.csv").string(), Mat::Ones(5, 3));
  CHECK(run("check-ssc --input " + (kWork / "ones.csv").string()) == 0);
  CHECK(nlohmann::json::parse(slurp(kWork / "stdout.txt")).at("verdict") == "not_scattered");
  Mat neg = Mat::Identity(3, 3);
  neg(0, 1) = -1.0;
  io::write_matrix((kWork / "neg.csv").string(), neg);
  CHECK(run("check-ssc --input " + (kWork / "neg.csv").string()) == 2);
}

TEST_CASE("bench writes reports") {
  Workdir w;
  {
    std::ofstream f(kWork / "t2.cfg");
    f << "M = 20\nN = 40\ntrials = 2\nmethods = spa, detmin-alp\ncases = 1\n";
  }
  CHECK(run("bench --experiment table2 --config " + (kWork / "t2.cfg").string() + " --out " + (kWork / "t2").string()) == 0);
  for (const char* f : {"runs.csv", "means.csv", "report.json"}) CHECK(fs::exists(kWork / "t2" / f));
  CHECK(nlohmann::json::parse(slurp(kWork / "t2" / "report.json")).at("records").size() == 4);

  {
    std::ofstream f(kWork / "tr.cfg");
    f << "N = 30\nR_grid = 2\ndensity_grid = 0.5, 1.0\ntrials = 2\n";
  }
  CHECK(run("bench --experiment transition --config " + (kWork / "tr.cfg").string() + " --out " + (kWork / "tr").string()) == 0);
  const std::string csv = slurp(kWork / "tr" / "transition.csv");
  CHECK(csv.rfind("R,density,failure_frequency\n", 0) == 0);

  {
    std::ofstream f(kWork / "bad.cfg");
    f << "trials = -3\n";
  }
  CHECK(run("bench --config " + (kWork / "bad.cfg").string() + " --out " + (kWork / "bad").string()) == 2);
}

TEST_CASE("hmm estimates from a token file") {
  Workdir w;
  const auto h = gen_hmm(8, 2, 0.25, 4000, 1);
  {
    std::ofstream f(kWork / "tokens.txt");
    for (int t : h.tokens) f << t << '\n';
  }
  CHECK(run("hmm --tokens " + (kWork / "tokens.txt").string() + " --states 2 --lam 0.01 --iters 300 --out " +
            (kWork / "hmm").string()) == 0);
  const Mat M = io::read_matrix((kWork / "hmm" / "emission.csv").string());
  CHECK(M.cols() == 2);
  CHECK((M.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-8);
  const Mat T = io::read_matrix((kWork / "hmm" / "transition.csv").string());
  CHECK((T.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-8);
  {
    std::ofstream f(kWork / "bad.txt");
    f << "1\nx\n";
  }
  CHECK(run("hmm --tokens " + (kWork / "bad.txt").string() + " --states 2 --out " + (kWork / "h2").string()) == 2);
}
