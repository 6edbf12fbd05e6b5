#pragma once

#include "nmfident/core.hpp"
#include "nmfident/detnmf.hpp"
#include "nmfident/geomcheck.hpp"
#include "nmfident/sepnmf.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nmfident {

// ------------------------------------------------------------ method runner

/// Names accepted by run_method, in CLI order.
const std::vector<std::string>& method_names();

/// True for methods that reject negative data (hals, mu, bcd).
bool method_needs_nonneg(const std::string& method);

struct MethodOptions {
  double lam = -1.0;  // minvol-reg; trifactor uses the regularized mode when lam > 0
  double eps = -1.0;
  double rho = 1.0;
  int iters = 0;  // 0 keeps each method's default
  std::optional<DetVariant> variant;  // overrides the ALP variant
  int restarts = 5;  // hals, mu, bcd and symnmf
};

struct MethodOutput {
  FactorPair pair;  // trifactor: W = C, H = C E^T
  Mat E;            // trifactor only
  AnchorSet anchors;
  Trace trace;
  int iterations = 0;
  double objective = 0.0;  // final value of the method's own objective
};

/// Runs one named method at rank R. Throws InvalidArgument for an unknown name.
MethodOutput run_method(const std::string& method, const Mat& X, Index R, std::uint64_t seed,
                        const MethodOptions& opts = {});

// --------------------------------------------------------------- benchmarks

enum class Experiment { Table2, Transition, Hmm, Custom };
const char* to_string(Experiment e) noexcept;
/// Throws InvalidArgument for an unknown name.
Experiment parse_experiment(const std::string& name);

/// table2: methods on gen_table2_case instances for every case and trial.
/// custom: methods on gen_separable instances (reported as case 0).
/// transition: transition_experiment over R_grid x density_grid.
/// hmm: hmm_estimate with lam = 0 ("hmm-plain") and lam ("hmm-det").
struct BenchConfig {
  Experiment experiment = Experiment::Table2;
  Index M = 50;
  Index N = 200;
  Index R = 3;
  double s = 0.65;
  std::optional<double> noise_snr_db;
  std::vector<std::string> methods{"spa", "hals", "volmin-sca", "detmin-alp"};
  std::vector<int> cases{1, 2, 3};
  int trials = 10;
  std::uint64_t seed = 0;
  std::string output;
  unsigned threads = 0;  // 0 = hardware concurrency
  MethodOptions method_options;
  // transition
  std::vector<Index> R_grid{3, 5};
  std::vector<double> density_grid;
  // hmm
  Index states = 5;
  double zeros_frac = 0.5;
  Index tokens = 200000;
  double hmm_lam = -1.0;
  int hmm_iters = 20000;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

/// Defaults of one experiment (transition: N = 100, 20 trials, 20 density
/// levels 0.05..1; hmm: M = 30).
BenchConfig default_config(Experiment e);

/// Flat "key = value" lines; '#' starts a comment. Lists are comma separated.
/// Keys: experiment, M, N, R, s, snr_db, methods, cases, trials, seed,
/// output, threads, lam, eps, rho, iters, restarts, variant, R_grid,
/// density_grid, density_levels, states, zeros_frac, tokens, hmm_lam,
/// hmm_iters. Defaults come from default_config of the experiment, which is
/// `forced` when given, else the file's "experiment" key, else table2.
/// Throws InvalidArgument for unknown keys or malformed values.
BenchConfig parse_bench_config(std::istream& in, std::optional<Experiment> forced = std::nullopt);

struct RunRecord {
  std::string method;
  int case_id = 0;
  Index R = 0;
  int trial = 0;
  bool ok = true;
  double mse = 0.0;
  double residual = 0.0;
  double runtime_ms = 0.0;
  int iterations = 0;
  double objective_final = 0.0;
  std::optional<double> tv_emission;    // hmm only
  std::optional<double> tv_transition;  // hmm only
  std::string error;
};

struct MeanRecord {
  std::string method;
  int case_id = 0;
  Index R = 0;
  int n_ok = 0;
  int n_failed = 0;
  double mse = 0.0;
  double residual = 0.0;
  double runtime_ms = 0.0;
  double iterations = 0.0;
  double objective_final = 0.0;
  std::optional<double> tv_emission;
  std::optional<double> tv_transition;
};

struct RunReport {
  Experiment experiment = Experiment::Table2;
  std::vector<RunRecord> records;  // ordered by (case, trial, method)
  std::vector<TransitionRow> transition;

  /// Means over successful records per (method, case, R), in first-seen order.
  std::vector<MeanRecord> means() const;
};

/// Runs the experiment. Per-method failures are recorded, never thrown.
/// Seeds depend on (seed, case, trial) for data and additionally on the
/// method name for the method, so the method list order does not matter.
RunReport run_benchmark(const BenchConfig& cfg);

void write_records_csv(std::ostream& out, const RunReport& r);
void write_means_csv(std::ostream& out, const RunReport& r);
std::string report_to_json(const RunReport& r);
/// Inverse of report_to_json. Throws InvalidArgument on malformed input.
RunReport report_from_json(const std::string& text);

/// Writes runs.csv, means.csv and report.json (plus transition.csv for the
/// transition experiment) into `dir`, creating it if needed.
void write_report(const RunReport& r, const std::string& dir);

}  // namespace nmfident
