#include "nmfident/harness.hpp"

#include "nmfident/generators.hpp"
#include "nmfident/io.hpp"
#include "nmfident/matcore.hpp"
#include "nmfident/plainnmf.hpp"
#include "nmfident/random.hpp"
#include "nmfident/symnmf.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace nmfident {

namespace {

Error bad(const std::string& msg) { return Error(ErrorKind::InvalidArgument, msg); }

/// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t name_tag(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

// ------------------------------------------------------------ method runner

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"spa",        "sdsomp",     "selfdict",   "er",     "hals",
                                              "mu",         "bcd",        "volmin-sca", "volmin-alp",
                                              "detmin-alp", "minvol-reg", "symnmf",     "trifactor"};
  return names;
}

bool method_needs_nonneg(const std::string& m) { return m == "hals" || m == "mu" || m == "bcd"; }

MethodOutput run_method(const std::string& method, const Mat& X, Index R, std::uint64_t seed,
                        const MethodOptions& opts) {
  MethodOutput out;
  auto separable = [&](SeparableMethod sm) {
    out.pair = separable_factor(X, R, sm, &out.anchors);
    out.objective = (X - out.pair.W * out.pair.H.transpose()).squaredNorm();
  };
  auto plain = [&](FitResult (*fit)(const Mat&, const FitConfig&)) {
    FitConfig c;
    c.rank = R;
    c.seed = seed;
    if (opts.iters > 0) c.max_iters = opts.iters;
    const FitResult r = best_of_restarts(fit, X, c, std::max(1, opts.restarts));
    out.pair = r.pair;
    out.trace = r.trace;
    out.iterations = r.iterations;
    out.objective = r.trace.back();
  };
  auto det = [&](DetVariant v, DetFitResult (*fit)(const Mat&, const DetFitConfig&)) {
    DetFitConfig c;
    c.rank = R;
    c.variant = opts.variant.value_or(v);
    c.rho = opts.rho;
    c.lam = opts.lam;
    c.eps = opts.eps;
    c.seed = seed;
    if (opts.iters > 0) c.iters = opts.iters;
    const DetFitResult r = fit(X, c);
    out.pair = r.pair;
    out.trace = r.trace;
    out.iterations = r.iterations;
    out.objective = r.trace.empty() ? 0.0 : r.trace.back();
  };

  if (method == "spa") {
    separable(SeparableMethod::Spa);
  } else if (method == "sdsomp") {
    separable(SeparableMethod::SdSomp);
  } else if (method == "selfdict") {
    separable(SeparableMethod::SelfDict);
  } else if (method == "er") {
    separable(SeparableMethod::Er);
  } else if (method == "hals") {
    plain(hals_fit);
  } else if (method == "mu") {
    plain(mu_fit);
  } else if (method == "bcd") {
    plain(bcd_exact_fit);
  } else if (method == "volmin-sca") {
    det(DetVariant::VolMin, volmin_sca_fit);
  } else if (method == "volmin-alp") {
    det(DetVariant::VolMin, alp_fit);
  } else if (method == "detmin-alp") {
    det(DetVariant::ColSum, alp_fit);
  } else if (method == "minvol-reg") {
    det(DetVariant::VolMin, minvol_reg_fit);
  } else if (method == "symnmf") {
    const SymNmfResult r = symnmf_procrustes(X, R, opts.iters > 0 ? opts.iters : 1000, seed, std::max(1, opts.restarts));
    out.pair.W = r.W;
    out.pair.H = r.W;
    out.pair.nonneg_w = out.pair.nonneg_h = true;
    out.trace = r.trace;
    out.iterations = r.iterations;
    out.objective = r.trace.back();
  } else if (method == "trifactor") {
    const bool reg = opts.lam > 0.0;
    const TriFactor t = trifactor_fit(X, R, reg ? TriMode::Regularized : TriMode::ExactSubspace, reg ? opts.lam : 0.0,
                                      opts.iters > 0 ? opts.iters : (reg ? 2000 : 500));
    out.pair.W = t.C;
    out.pair.H = t.C * t.E.transpose();
    out.E = t.E;
    out.trace = t.trace;
    out.iterations = t.iterations;
    out.objective = (X - t.C * t.E * t.C.transpose()).squaredNorm();
  } else {
    throw bad("unknown method '" + method + "'");
  }
  return out;
}

// --------------------------------------------------------------- benchmarks

const char* to_string(Experiment e) noexcept {
  switch (e) {
    case Experiment::Table2: return "table2";
    case Experiment::Transition: return "transition";
    case Experiment::Hmm: return "hmm";
    case Experiment::Custom: return "custom";
  }
  return "unknown";
}

Experiment parse_experiment(const std::string& name) {
  for (Experiment e : {Experiment::Table2, Experiment::Transition, Experiment::Hmm, Experiment::Custom})
    if (name == to_string(e)) return e;
  throw bad("unknown experiment '" + name + "'");
}

void BenchConfig::validate() const {
  if (M < 1 || N < 1 || R < 1) throw bad("M, N and R must be positive");
  if (!(s > 0.0 && s <= 1.0)) throw bad("s must lie in (0, 1]");
  if (trials < 1) throw bad("trials must be >= 1");
  switch (experiment) {
    case Experiment::Table2:
    case Experiment::Custom:
      if (methods.empty()) throw bad("methods must be nonempty");
      for (const auto& m : methods)
        if (std::find(method_names().begin(), method_names().end(), m) == method_names().end())
          throw bad("unknown method '" + m + "'");
      if (experiment == Experiment::Table2) {
        if (cases.empty()) throw bad("cases must be nonempty");
        for (int c : cases)
          if (c < 1 || c > 3) throw bad("cases must be 1, 2 or 3");
      }
      if (R > std::min(M, N)) throw bad("R must not exceed min(M, N)");
      break;
    case Experiment::Transition:
      if (R_grid.empty() || density_grid.empty()) throw bad("R_grid and density_grid must be nonempty");
      for (double d : density_grid)
        if (!(d > 0.0 && d <= 1.0)) throw bad("densities must lie in (0, 1]");
      for (Index r : R_grid)
        if (r < 1) throw bad("R_grid entries must be positive");
      break;
    case Experiment::Hmm:
      if (states < 1 || states > M) throw bad("states must lie in [1, M]");
      if (!(zeros_frac >= 0.0 && zeros_frac < 1.0)) throw bad("zeros_frac must lie in [0, 1)");
      if (tokens < 2) throw bad("tokens must be >= 2");
      if (hmm_iters < 1) throw bad("hmm_iters must be >= 1");
      break;
  }
}

namespace {

std::vector<double> density_levels(int k) {
  if (k < 1) throw bad("density_levels must be >= 1");
  std::vector<double> d;
  for (int i = 1; i <= k; ++i) d.push_back(static_cast<double>(i) / k);
  return d;
}

}  // namespace

BenchConfig default_config(Experiment e) {
  BenchConfig c;
  c.experiment = e;
  c.density_grid = density_levels(20);
  if (e == Experiment::Transition) {
    c.N = 100;
    c.trials = 20;
  } else if (e == Experiment::Hmm) {
    c.M = 30;
  } else if (e == Experiment::Custom) {
    c.methods = {"spa", "sdsomp", "selfdict", "er"};
  }
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw bad("key '" + key + "': '" + v + "' is not a number");
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw bad("key '" + key + "': '" + v + "' is not an integer");
}

void apply(BenchConfig& c, const std::string& k, const std::string& v) {
  auto ints = [&] {
    std::vector<long long> out;
    for (const auto& x : split_list(v)) out.push_back(to_int(k, x));
    return out;
  };
  if (k == "experiment") {
    // handled by the caller
  } else if (k == "M") {
    c.M = to_int(k, v);
  } else if (k == "N") {
    c.N = to_int(k, v);
  } else if (k == "R") {
    c.R = to_int(k, v);
  } else if (k == "s" || k == "density") {
    c.s = to_double(k, v);
  } else if (k == "snr_db") {
    if (v == "inf" || v.empty()) c.noise_snr_db.reset();
    else c.noise_snr_db = to_double(k, v);
  } else if (k == "methods") {
    c.methods = split_list(v);
  } else if (k == "cases") {
    c.cases.clear();
    for (long long x : ints()) c.cases.push_back(static_cast<int>(x));
  } else if (k == "trials") {
    c.trials = static_cast<int>(to_int(k, v));
  } else if (k == "seed") {
    const long long s = to_int(k, v);
    if (s < 0) throw bad("seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (k == "output") {
    c.output = v;
  } else if (k == "threads") {
    const long long t = to_int(k, v);
    if (t < 0) throw bad("threads must be nonnegative");
    c.threads = static_cast<unsigned>(t);
  } else if (k == "lam") {
    c.method_options.lam = to_double(k, v);
  } else if (k == "eps") {
    c.method_options.eps = to_double(k, v);
  } else if (k == "rho") {
    c.method_options.rho = to_double(k, v);
  } else if (k == "iters") {
    c.method_options.iters = static_cast<int>(to_int(k, v));
  } else if (k == "restarts") {
    c.method_options.restarts = static_cast<int>(to_int(k, v));
  } else if (k == "variant") {
    if (v == "volmin") c.method_options.variant = DetVariant::VolMin;
    else if (v == "colsum") c.method_options.variant = DetVariant::ColSum;
    else throw bad("variant must be volmin or colsum");
  } else if (k == "R_grid") {
    c.R_grid.clear();
    for (long long x : ints()) c.R_grid.push_back(static_cast<Index>(x));
  } else if (k == "density_grid") {
    c.density_grid.clear();
    for (const auto& x : split_list(v)) c.density_grid.push_back(to_double(k, x));
  } else if (k == "density_levels") {
    c.density_grid = density_levels(static_cast<int>(to_int(k, v)));
  } else if (k == "states") {
    c.states = to_int(k, v);
  } else if (k == "zeros_frac") {
    c.zeros_frac = to_double(k, v);
  } else if (k == "tokens") {
    c.tokens = to_int(k, v);
  } else if (k == "hmm_lam") {
    c.hmm_lam = to_double(k, v);
  } else if (k == "hmm_iters") {
    c.hmm_iters = static_cast<int>(to_int(k, v));
  } else {
    throw bad("unknown config key '" + k + "'");
  }
}

}  // namespace

BenchConfig parse_bench_config(std::istream& in, std::optional<Experiment> forced) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  std::optional<Experiment> from_file;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw bad("config line " + std::to_string(lineno) + " has no '='");
    const std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
    if (k.empty()) throw bad("config line " + std::to_string(lineno) + " has an empty key");
    if (k == "experiment") from_file = parse_experiment(v);
    kv.emplace_back(k, v);
  }
  BenchConfig c = default_config(forced.value_or(from_file.value_or(Experiment::Table2)));
  for (const auto& [k, v] : kv) apply(c, k, v);
  c.validate();
  return c;
}

std::vector<MeanRecord> RunReport::means() const {
  std::vector<MeanRecord> out;
  std::map<std::tuple<std::string, int, Index>, std::size_t> slot;
  std::vector<int> tv_n;
  for (const auto& r : records) {
    const auto key = std::make_tuple(r.method, r.case_id, r.R);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, out.size()).first;
      MeanRecord m;
      m.method = r.method;
      m.case_id = r.case_id;
      m.R = r.R;
      out.push_back(m);
      tv_n.push_back(0);
    }
    MeanRecord& m = out[it->second];
    if (!r.ok) {
      ++m.n_failed;
      continue;
    }
    ++m.n_ok;
    m.mse += r.mse;
    m.residual += r.residual;
    m.runtime_ms += r.runtime_ms;
    m.iterations += r.iterations;
    m.objective_final += r.objective_final;
    if (r.tv_emission) {
      m.tv_emission = m.tv_emission.value_or(0.0) + *r.tv_emission;
      m.tv_transition = m.tv_transition.value_or(0.0) + r.tv_transition.value_or(0.0);
      ++tv_n[it->second];
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    MeanRecord& m = out[i];
    if (m.n_ok > 0) {
      const double n = m.n_ok;
      m.mse /= n;
      m.residual /= n;
      m.runtime_ms /= n;
      m.iterations /= n;
      m.objective_final /= n;
    }
    if (tv_n[i] > 0) {
      *m.tv_emission /= tv_n[i];
      *m.tv_transition /= tv_n[i];
    }
  }
  return out;
}

namespace {

/// Runs jobs 0..n-1 on a pool of `threads` workers (0 = hardware concurrency).
template <class F>
void parallel_for(std::size_t n, unsigned threads, const F& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t j = next++; j < n; j = next++) job(j);
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void run_factor_bench(const BenchConfig& cfg, RunReport& rep) {
  const bool custom = cfg.experiment == Experiment::Custom;
  const std::vector<int> cases = custom ? std::vector<int>{0} : cfg.cases;
  const std::size_t nm = cfg.methods.size();
  const std::size_t ninst = cases.size() * static_cast<std::size_t>(cfg.trials);
  rep.records.resize(ninst * nm);

  // One job per instance; the instance is generated once and shared by the methods.
  parallel_for(ninst, cfg.threads, [&](std::size_t i) {
    const int c = cases[i / static_cast<std::size_t>(cfg.trials)];
    const int trial = static_cast<int>(i % static_cast<std::size_t>(cfg.trials));
    const std::uint64_t data_seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(trial)});
    PlantedInstance p;
    Mat X;
    if (custom) {
      p = gen_separable(cfg.M, cfg.N, cfg.R, cfg.noise_snr_db.value_or(std::numeric_limits<double>::infinity()), data_seed);
      X = p.X;
    } else {
      p = gen_table2_case(c, cfg.M, cfg.N, cfg.R, cfg.s, data_seed);
      X = cfg.noise_snr_db ? add_noise_snr(p.X, *cfg.noise_snr_db, data_seed, false) : p.X;
    }
    for (std::size_t k = 0; k < nm; ++k) {
      const std::string& m = cfg.methods[k];
      RunRecord& r = rep.records[i * nm + k];
      r.method = m;
      r.case_id = c;
      r.R = cfg.R;
      r.trial = trial;
      const Mat Xm = method_needs_nonneg(m) ? Mat(X.cwiseMax(0.0)) : X;
      const std::uint64_t ms = derive_seed(cfg.seed, {name_tag(m), static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(trial)});
      try {
        const auto t0 = std::chrono::steady_clock::now();
        const MethodOutput o = run_method(m, Xm, cfg.R, ms, cfg.method_options);
        r.runtime_ms = elapsed_ms(t0);
        r.mse = match_and_mse(p.H, o.pair.H).mse;
        r.residual = residual_rel(X, o.pair);
        r.iterations = o.iterations;
        r.objective_final = o.objective;
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
      }
    }
  });
}

void run_hmm_bench(const BenchConfig& cfg, RunReport& rep) {
  rep.records.resize(2 * static_cast<std::size_t>(cfg.trials));
  parallel_for(static_cast<std::size_t>(cfg.trials), cfg.threads, [&](std::size_t i) {
    const int trial = static_cast<int>(i);
    const std::uint64_t data_seed = derive_seed(cfg.seed, {0x4a4a, static_cast<std::uint64_t>(trial)});
    std::optional<HmmInstance> h;
    Mat Om;
    std::string gen_error;
    try {
      h = gen_hmm(cfg.M, cfg.states, cfg.zeros_frac, cfg.tokens, data_seed);
      Om = cooccurrence(h->tokens, cfg.M);
    } catch (const std::exception& e) {
      gen_error = e.what();
    }
    for (int k = 0; k < 2; ++k) {
      RunRecord& r = rep.records[2 * i + static_cast<std::size_t>(k)];
      r.method = k == 0 ? "hmm-plain" : "hmm-det";
      r.R = cfg.states;
      r.trial = trial;
      if (!h) {
        r.ok = false;
        r.error = gen_error;
        continue;
      }
      try {
        const auto t0 = std::chrono::steady_clock::now();
        const HmmEstimate e = hmm_estimate(Om, cfg.states, k == 0 ? 0.0 : cfg.hmm_lam, cfg.hmm_iters,
                                           derive_seed(cfg.seed, {name_tag(r.method), static_cast<std::uint64_t>(trial)}));
        r.runtime_ms = elapsed_ms(t0);
        r.mse = match_and_mse(h->emission, e.M_emit).mse;
        r.residual = (Om - e.M_emit * e.Theta * e.M_emit.transpose()).norm() / Om.norm();
        r.iterations = e.iterations;
        r.objective_final = e.trace.back();
        r.tv_emission = tv_distance_matched(h->emission, e.M_emit);
        // Transition rows follow the emission matching.
        const IndexList perm = match_and_mse(h->emission, e.M_emit).perm;
        Mat T(cfg.states, cfg.states);
        for (Index a = 0; a < cfg.states; ++a)
          for (Index b = 0; b < cfg.states; ++b)
            T(a, b) = e.Transition(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
        r.tv_transition = (h->transition - T).lpNorm<1>() / (2.0 * static_cast<double>(cfg.states));
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
      }
    }
  });
}

}  // namespace

RunReport run_benchmark(const BenchConfig& cfg) {
  cfg.validate();
  RunReport rep;
  rep.experiment = cfg.experiment;
  switch (cfg.experiment) {
    case Experiment::Table2:
    case Experiment::Custom: run_factor_bench(cfg, rep); break;
    case Experiment::Hmm: run_hmm_bench(cfg, rep); break;
    case Experiment::Transition:
      rep.transition = transition_experiment(cfg.N, cfg.R_grid, cfg.density_grid, cfg.trials, cfg.seed, cfg.threads);
      break;
  }
  return rep;
}

// ------------------------------------------------------------ serialization

namespace {

std::string opt(const std::optional<double>& v) { return v ? io::format_double(*v) : ""; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

using nlohmann::json;

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
json num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

double get_num(const json& j, const char* key) {
  const json& v = j.at(key);
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return v.get<double>();
}
std::optional<double> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

void write_records_csv(std::ostream& out, const RunReport& r) {
  out << "method,case,R,trial,ok,mse,residual,runtime_ms,iterations,objective_final,tv_emission,tv_transition,error\n";
  for (const auto& x : r.records) {
    out << csv_field(x.method) << ',' << x.case_id << ',' << x.R << ',' << x.trial << ',' << (x.ok ? 1 : 0) << ',';
    if (x.ok) {
      out << io::format_double(x.mse) << ',' << io::format_double(x.residual) << ',' << io::format_double(x.runtime_ms)
          << ',' << x.iterations << ',' << io::format_double(x.objective_final);
    } else {
      out << ",,,,";
    }
    out << ',' << opt(x.tv_emission) << ',' << opt(x.tv_transition) << ',' << csv_field(x.error) << '\n';
  }
}

void write_means_csv(std::ostream& out, const RunReport& r) {
  out << "method,case,R,n_ok,n_failed,mse,residual,runtime_ms,iterations,objective_final,tv_emission,tv_transition\n";
  for (const auto& m : r.means()) {
    out << csv_field(m.method) << ',' << m.case_id << ',' << m.R << ',' << m.n_ok << ',' << m.n_failed << ','
        << io::format_double(m.mse) << ',' << io::format_double(m.residual) << ',' << io::format_double(m.runtime_ms) << ','
        << io::format_double(m.iterations) << ',' << io::format_double(m.objective_final) << ',' << opt(m.tv_emission)
        << ',' << opt(m.tv_transition) << '\n';
  }
}

std::string report_to_json(const RunReport& r) {
  json j;
  j["experiment"] = to_string(r.experiment);
  j["records"] = json::array();
  for (const auto& x : r.records) {
    j["records"].push_back({{"method", x.method},
                            {"case", x.case_id},
                            {"R", x.R},
                            {"trial", x.trial},
                            {"ok", x.ok},
                            {"mse", num(x.mse)},
                            {"residual", num(x.residual)},
                            {"runtime_ms", num(x.runtime_ms)},
                            {"iterations", x.iterations},
                            {"objective_final", num(x.objective_final)},
                            {"tv_emission", num(x.tv_emission)},
                            {"tv_transition", num(x.tv_transition)},
                            {"error", x.error}});
  }
  j["means"] = json::array();
  for (const auto& m : r.means()) {
    j["means"].push_back({{"method", m.method},
                          {"case", m.case_id},
                          {"R", m.R},
                          {"n_ok", m.n_ok},
                          {"n_failed", m.n_failed},
                          {"mse", num(m.mse)},
                          {"residual", num(m.residual)},
                          {"runtime_ms", num(m.runtime_ms)},
                          {"iterations", num(m.iterations)},
                          {"objective_final", num(m.objective_final)},
                          {"tv_emission", num(m.tv_emission)},
                          {"tv_transition", num(m.tv_transition)}});
  }
  j["transition"] = json::array();
  for (const auto& t : r.transition)
    j["transition"].push_back({{"R", t.R}, {"density", t.density}, {"failure_frequency", t.failure_frequency}});
  return j.dump(2);
}

RunReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunReport r;
    r.experiment = parse_experiment(j.at("experiment").get<std::string>());
    for (const auto& x : j.at("records")) {
      RunRecord rec;
      rec.method = x.at("method").get<std::string>();
      rec.case_id = x.at("case").get<int>();
      rec.R = x.at("R").get<Index>();
      rec.trial = x.at("trial").get<int>();
      rec.ok = x.at("ok").get<bool>();
      rec.mse = get_num(x, "mse");
      rec.residual = get_num(x, "residual");
      rec.runtime_ms = get_num(x, "runtime_ms");
      rec.iterations = x.at("iterations").get<int>();
      rec.objective_final = get_num(x, "objective_final");
      rec.tv_emission = get_opt(x, "tv_emission");
      rec.tv_transition = get_opt(x, "tv_transition");
      rec.error = x.at("error").get<std::string>();
      r.records.push_back(std::move(rec));
    }
    for (const auto& t : j.at("transition"))
      r.transition.push_back({t.at("R").get<Index>(), t.at("density").get<double>(), t.at("failure_frequency").get<double>()});
    return r;
  } catch (const json::exception& e) {
    throw bad(std::string("malformed report: ") + e.what());
  }
}

void write_report(const RunReport& r, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory " + dir + ": " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream f(fs::path(dir) / name);
    if (!f) throw Error(ErrorKind::Io, std::string("cannot write ") + (fs::path(dir) / name).string());
    return f;
  };
  {
    auto f = open("runs.csv");
    write_records_csv(f, r);
  }
  {
    auto f = open("means.csv");
    write_means_csv(f, r);
  }
  {
    auto f = open("report.json");
    f << report_to_json(r) << '\n';
  }
  if (r.experiment == Experiment::Transition) {
    auto f = open("transition.csv");
    write_transition_csv(f, r.transition);
  }
}

}  // namespace nmfident
