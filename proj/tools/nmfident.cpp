#include "nmfident/geomcheck.hpp"
#include "nmfident/harness.hpp"
#include "nmfident/io.hpp"
#include "nmfident/matcore.hpp"
#include "nmfident/symnmf.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <set>

namespace fs = std::filesystem;
using namespace nmfident;
using nlohmann::json;

namespace {

constexpr int kInputError = 2;
constexpr int kNumericalError = 3;

// Benchmarks repeat the same warning for every instance.
void warn_once(const std::string& message) {
  static std::mutex mu;
  static std::set<std::string> seen;
  const std::lock_guard<std::mutex> lock(mu);
  if (seen.insert(message).second) std::cerr << "warning: " << message << '\n';
}

json vec_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json trace_json(const Trace& t) {
  json a = json::array();
  for (double v : t) a.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  return a;
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory " + dir + ": " + ec.message());
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream f(p);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + p.string());
  f << j.dump(2) << '\n';
}

struct FactorArgs {
  std::string input, method, out, variant;
  Index rank = 0;
  std::uint64_t seed = 0;
  double lam = -1.0, eps = -1.0, rho = 1.0;
  int iters = 0;
};

int cmd_factor(const FactorArgs& a) {
  const Mat X = io::read_matrix(a.input);
  MethodOptions o;
  o.lam = a.lam;
  o.eps = a.eps;
  o.rho = a.rho;
  o.iters = a.iters;
  if (a.variant == "volmin") o.variant = DetVariant::VolMin;
  if (a.variant == "colsum") o.variant = DetVariant::ColSum;
  const Mat Xm = method_needs_nonneg(a.method) ? Mat(X.cwiseMax(0.0)) : X;
  if (method_needs_nonneg(a.method) && X.minCoeff() < 0.0) warn("negative entries clipped to 0 for " + a.method);
  const MethodOutput r = run_method(a.method, Xm, a.rank, a.seed, o);

  make_dir(a.out);
  const fs::path dir(a.out);
  io::write_matrix((dir / "W.csv").string(), r.pair.W);
  io::write_matrix((dir / "H.csv").string(), r.pair.H);
  if (r.E.size() > 0) io::write_matrix((dir / "E.csv").string(), r.E);
  json s{{"method", a.method},
         {"rank", a.rank},
         {"seed", a.seed},
         {"iterations", r.iterations},
         {"objective", r.objective},
         {"residual_rel", X.norm() > 0.0 ? residual_rel(X, r.pair) : 0.0},
         {"trace", trace_json(r.trace)}};
  if (!r.anchors.empty()) s["anchors"] = r.anchors;
  write_json(dir / "summary.json", s);
  std::cout << a.method << " rank " << a.rank << ": objective " << io::format_double(r.objective) << ", "
            << r.iterations << " iterations, output in " << a.out << '\n';
  return 0;
}

int cmd_check_ssc(const std::string& input, int restarts, std::uint64_t seed) {
  const Mat H = io::read_matrix(input);
  const SscCertificate c = check_ssc(H, restarts, seed);
  json j{{"verdict", to_string(c.verdict)},
         {"witness", vec_json(c.witness)},
         {"witness_norm", c.witness_norm},
         {"restarts_used", c.restarts_used},
         {"regularity_assumed", c.regularity_assumed}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_bench(const std::string& experiment, const std::string& config, const std::string& out, unsigned threads) {
  std::optional<Experiment> forced;
  if (!experiment.empty()) forced = parse_experiment(experiment);
  BenchConfig cfg;
  if (config.empty()) {
    cfg = default_config(forced.value_or(Experiment::Table2));
  } else {
    std::ifstream f(config);
    if (!f) throw Error(ErrorKind::Io, "cannot open '" + config + "'");
    cfg = parse_bench_config(f, forced);
  }
  if (threads > 0) cfg.threads = threads;
  const RunReport rep = run_benchmark(cfg);
  write_report(rep, out);
  if (cfg.experiment == Experiment::Transition) {
    write_transition_csv(std::cout, rep.transition);
  } else {
    write_means_csv(std::cout, rep);
  }
  return 0;
}

int cmd_hmm(const std::string& tokens_path, Index states, double lam, const std::string& out, Index observed,
            int iters, std::uint64_t seed) {
  const std::vector<Index> raw = io::read_tokens(tokens_path);
  Index M = observed;
  Index top = 0;
  for (Index t : raw) top = std::max(top, t);
  if (M <= 0) M = top + 1;
  if (top >= M) throw Error(ErrorKind::InvalidArgument, "a token exceeds --observed");
  if (top >= std::numeric_limits<int>::max()) throw Error(ErrorKind::InvalidArgument, "token value too large");
  const std::vector<int> tokens(raw.begin(), raw.end());
  const Mat Om = cooccurrence(tokens, M);
  const HmmEstimate e = hmm_estimate(Om, states, lam, iters, seed);

  make_dir(out);
  const fs::path dir(out);
  io::write_matrix((dir / "emission.csv").string(), e.M_emit);
  io::write_matrix((dir / "theta.csv").string(), e.Theta);
  io::write_matrix((dir / "transition.csv").string(), e.Transition);
  write_json(dir / "summary.json", json{{"observed", M},
                                        {"states", states},
                                        {"tokens", raw.size()},
                                        {"iterations", e.iterations},
                                        {"objective", e.trace.back()},
                                        {"trace_length", e.trace.size()}});
  std::cout << "hmm: " << states << " states over " << M << " symbols, objective " << io::format_double(e.trace.back())
            << ", " << e.iterations << " iterations, output in " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  set_warning_sink(warn_once);
  CLI::App app{"Identifiable nonnegative matrix factorization"};
  app.require_subcommand(1);

  FactorArgs fa;
  auto* factor = app.add_subcommand("factor", "Factorize a matrix");
  factor->add_option("--input", fa.input, "Matrix file (.mtx or headerless CSV)")->required();
  factor->add_option("--rank", fa.rank, "Rank R")->required()->check(CLI::PositiveNumber);
  factor->add_option("--method", fa.method, "Method")->required()->check(CLI::IsMember(method_names()));
  factor->add_option("--seed", fa.seed, "Seed");
  factor->add_option("--out", fa.out, "Output directory")->required();
  factor->add_option("--lam", fa.lam, "Regularization weight");
  factor->add_option("--eps", fa.eps, "Log-det guard");
  factor->add_option("--iters", fa.iters, "Iteration budget")->check(CLI::NonNegativeNumber);
  factor->add_option("--variant", fa.variant, "ALP variant")->check(CLI::IsMember({"volmin", "colsum"}));
  factor->add_option("--rho", fa.rho, "Column sum for the colsum variant");

  std::string ssc_input;
  int restarts = 0;
  std::uint64_t ssc_seed = 0;
  auto* ssc = app.add_subcommand("check-ssc", "Check the sufficiently scattered condition");
  ssc->add_option("--input", ssc_input, "H as .mtx or headerless CSV (N x R)")->required();
  ssc->add_option("--restarts", restarts, "Restarts (0 = 5R)")->check(CLI::NonNegativeNumber);
  ssc->add_option("--seed", ssc_seed, "Seed");

  std::string experiment, config, bench_out;
  unsigned threads = 0;
  auto* bench = app.add_subcommand("bench", "Run a synthetic benchmark");
  bench->add_option("--experiment", experiment, "Experiment")
      ->check(CLI::IsMember({"table2", "transition", "hmm", "custom"}));
  bench->add_option("--config", config, "key=value config file");
  bench->add_option("--out", bench_out, "Output directory")->required();
  bench->add_option("--threads", threads, "Worker threads (0 = all cores)");

  std::string tokens, hmm_out;
  Index states = 0, observed = 0;
  double lam = -1.0;
  int hmm_iters = 20000;
  std::uint64_t hmm_seed = 0;
  auto* hmm = app.add_subcommand("hmm", "Estimate HMM parameters from a token stream");
  hmm->add_option("--tokens", tokens, "One integer token per line")->required();
  hmm->add_option("--states", states, "Hidden states R")->required()->check(CLI::PositiveNumber);
  hmm->add_option("--lam", lam, "Determinant weight (negative = 0.1 ||Omega||_F)");
  hmm->add_option("--out", hmm_out, "Output directory")->required();
  hmm->add_option("--observed", observed, "Number of symbols (default: largest token + 1)");
  hmm->add_option("--iters", hmm_iters, "Iteration budget")->check(CLI::PositiveNumber);
  hmm->add_option("--seed", hmm_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  try {
    if (*factor) return cmd_factor(fa);
    if (*ssc) return cmd_check_ssc(ssc_input, restarts, ssc_seed);
    if (*bench) return cmd_bench(experiment, config, bench_out, threads);
    if (*hmm) return cmd_hmm(tokens, states, lam, hmm_out, observed, hmm_iters, hmm_seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_input_error() ? kInputError : kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalError;
  }
  return 0;
}
