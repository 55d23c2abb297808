#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "qrt/channels.hpp"
#include "qrt/config.hpp"
#include "qrt/metrics.hpp"
#include "qrt/readout.hpp"
#include "qrt/reservoir.hpp"
#include "qrt/spectral.hpp"

namespace qrt {

enum class Command { tomography, memory, spectral, switch_, entangler, bell };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::tomography: return "tomography";
    case Command::memory: return "memory";
    case Command::spectral: return "spectral";
    case Command::switch_: return "switch";
    case Command::entangler: return "entangler";
    case Command::bell: return "bell";
  }
  return "?";
}

/// Checks everything that can be checked before any simulation starts.
inline void validate(const ExperimentConfig& c, Command cmd) {
  const auto& k = c.task.kind;
  switch (cmd) {
    case Command::tomography:
      if (k == MapKind::quantum_switch || k == MapKind::entangler || k == MapKind::bell_creator)
        throw ValidationError("task.kind", "use the " + std::string(k == MapKind::quantum_switch ? "switch"
                                                                   : k == MapKind::entangler    ? "entangler"
                                                                                                : "bell") +
                                               " subcommand for " + to_string(k));
      break;
    case Command::switch_:
      if (k != MapKind::quantum_switch) throw ValidationError("task.kind", "switch expects kind quantum_switch");
      break;
    case Command::entangler:
      if (k != MapKind::entangler) throw ValidationError("task.kind", "entangler expects kind entangler");
      break;
    case Command::bell:
      if (k != MapKind::bell_creator) throw ValidationError("task.kind", "bell expects kind bell_creator");
      break;
    case Command::memory:
    case Command::spectral:
      break;
  }
  if (cmd == Command::spectral && c.baseline) throw ValidationError("baseline", "not applicable to spectral");
  if (cmd != Command::memory && cmd != Command::spectral) c.task.validate();
  if (c.stream.seeds.empty()) throw ValidationError("stream.seeds", "need at least one seed");
  if (c.stream.hold_steps < 1) throw ValidationError("stream.hold_steps", "must be >= 1");
  if (!(c.ridge >= 0.0)) throw ValidationError("ridge", "must be >= 0");
  if (cmd != Command::spectral) {
    const auto& s = c.stream.split;
    if (s.washout < 1 || s.train < 1 || s.eval < 1)
      throw ValidationError("stream", "washout, train and eval must all be >= 1");
    const int need = cmd == Command::memory ? c.d_max : c.task.max_delay();
    if (s.washout < static_cast<std::size_t>(std::max(need, 0)))
      throw ValidationError("stream.washout", "must be >= the largest delay (" + std::to_string(need) + ")");
  }
  if (cmd == Command::memory) {
    if (c.d_max < 0) throw ValidationError("memory.d_max", "must be >= 0");
    if (static_cast<std::size_t>(c.d_max) >= std::min(c.stream.split.train, c.stream.split.eval))
      throw ValidationError("memory.d_max", "must be smaller than the train and eval lengths");
  }
  if (cmd == Command::spectral) {
    if (c.spectral.ensemble < 1) throw ValidationError("spectral.ensemble", "must be >= 1");
    if (c.spectral.convergence_steps < 0) throw ValidationError("spectral.convergence_steps", "must be >= 0");
    if (c.spectral.convergence_pairs < 1) throw ValidationError("spectral.convergence_pairs", "must be >= 1");
  }
  for (const auto& p : c.sweep.expand(c.reservoir)) {
    try {
      p.to_config().validate();
    } catch (const ValidationError& e) {
      throw ValidationError(c.sweep.expand(c.reservoir).size() > 1 ? "sweep" : e.field(), e.what());
    }
    if (!(p.b_field > 0.0)) throw ValidationError("reservoir.b_field", "must be > 0");
    if (cmd == Command::spectral && p.n_m > kMaxSpectralQubits)
      throw ValidationError("reservoir.n_m", "spectral analysis supports n_m <= " + std::to_string(kMaxSpectralQubits));
    if ((cmd == Command::entangler || cmd == Command::bell) && p.n_e != 1)
      throw ValidationError("reservoir.n_e", to_string(cmd) + " needs single-qubit inputs (n_e = 1)");
  }
}

/// Runs fn(0..n-1) on a small thread pool; results must go to index-owned slots.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct StepRecord {
  std::size_t step = 0;
  double fidelity = 0.0;
  double negativity_target = 0.0;
  double negativity_pred = 0.0;
};

struct RunResult {
  std::size_t point = 0;
  ReservoirParams params;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  double rmsf = 0.0;
  double error = 0.0;
  double negativity_rmse = 0.0;
  double wall_seconds = 0.0;
};

inline bool tracks_negativity(MapKind k) { return k == MapKind::entangler || k == MapKind::bell_creator; }

/// Everything a tomography run draws from its seed: the task (with any random
/// entangler parameters), the input stream, and the targets from the washout on.
struct TaskData {
  TemporalMapSpec task;
  InputStream stream;
  std::vector<DensityMatrix> targets;  ///< steps washout .. washout + train + eval - 1
};

inline TaskData draw_task(const ExperimentConfig& c, const ReservoirParams& params, PrngStream& rng) {
  TaskData t;
  t.task = c.task;
  if (t.task.kind == MapKind::entangler && c.entangler_random)
    t.task.entangler = EntanglerParams::random(rng, t.task.entangler.t);
  const Split& split = c.stream.split;
  const std::size_t total = split.total();
  t.stream = t.task.kind == MapKind::bell_creator
                 ? generate_bit_stream(total, rng)
                 : generate_input_stream(total, params.n_e, c.stream.hold_steps, rng, {}, c.stream.encoding);
  t.targets.reserve(split.train + split.eval);
  for (std::size_t n = split.washout; n < total; ++n) t.targets.push_back(apply_temporal_map(t.task, t.stream, n));
  return t;
}

/// One (grid point, seed) tomography run.
inline RunResult run_single(const ExperimentConfig& c, const ReservoirParams& params, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  PrngStream rng(seed);
  const Split& split = c.stream.split;
  const TaskData data = draw_task(c, params, rng);
  const TemporalMapSpec& task = data.task;
  const InputStream& stream = data.stream;
  const std::vector<DensityMatrix>& targets = data.targets;

  FeatureMatrix features;
  if (c.baseline) {
    features = baseline_features(stream.beta);
  } else {
    const Reservoir res(params.to_config());
    features = res.run_sequence(stream.beta, res.initial_state(c.stream.initial_state, &rng)).features;
  }
  const std::vector<DensityMatrix> train_targets(targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(split.train));
  const std::vector<DensityMatrix> eval_targets(targets.begin() + static_cast<std::ptrdiff_t>(split.train), targets.end());

  const auto w0 = static_cast<Eigen::Index>(split.washout);
  const auto ntr = static_cast<Eigen::Index>(split.train);
  const ReadoutModel model = fit_ridge(features.rows_range(w0, ntr), train_targets, c.ridge);
  const auto pred = predict_states(model, features.rows_range(w0 + ntr, static_cast<Eigen::Index>(split.eval)));

  RunResult r;
  r.params = params;
  r.seed = seed;
  const bool neg = tracks_negativity(task.kind);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    StepRecord s;
    s.step = split.washout + split.train + i;
    s.fidelity = fidelity(eval_targets[i], pred[i]);
    if (neg) {
      s.negativity_target = negativity(eval_targets[i], 2);
      s.negativity_pred = negativity(pred[i], 2);
    }
    r.steps.push_back(s);
  }
  r.rmsf = rmsf(eval_targets, pred);
  r.error = 1.0 - r.rmsf;
  if (neg) r.negativity_rmse = negativity_rmse(eval_targets, pred, 2);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// All grid points x seeds, ordered by (point, seed position).
inline std::vector<RunResult> run_tomography(const ExperimentConfig& c) {
  const auto points = c.sweep.expand(c.reservoir);
  const std::size_t ns = c.stream.seeds.size();
  std::vector<RunResult> out(points.size() * ns);
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = run_single(c, points[i / ns], c.stream.seeds[i % ns]);
    out[i].point = i / ns;
  });
  return out;
}

struct MemoryRun {
  std::size_t point = 0;
  ReservoirParams params;
  std::uint64_t seed = 0;
  MemoryProfile profile;
};

inline MemoryRun run_memory_single(const ExperimentConfig& c, const ReservoirParams& params, std::uint64_t seed) {
  PrngStream rng(seed);
  const Split& split = c.stream.split;
  const InputStream stream = generate_input_stream(split.total(), params.n_e, c.stream.hold_steps, rng, {}, c.stream.encoding);
  FeatureMatrix features;
  if (c.baseline) {
    features = baseline_features(stream.beta);
  } else {
    const Reservoir res(params.to_config());
    features = res.run_sequence(stream.beta, res.initial_state(c.stream.initial_state, &rng)).features;
  }
  return {0, params, seed, memory_profile(features, stream.beta, split, c.d_max, c.ridge)};
}

inline std::vector<MemoryRun> run_memory_sweep(const ExperimentConfig& c) {
  const auto points = c.sweep.expand(c.reservoir);
  const std::size_t ns = c.stream.seeds.size();
  std::vector<MemoryRun> out(points.size() * ns);
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = run_memory_single(c, points[i / ns], c.stream.seeds[i % ns]);
    out[i].point = i / ns;
  });
  return out;
}

struct SpectralPoint {
  std::size_t point = 0;
  ReservoirParams params;
  std::vector<SpectralReport> reports;  ///< seed-major, ensemble-minor
  std::vector<double> convergence;      ///< one per seed when enabled
};

inline SpectralPoint run_spectral_point(const ExperimentConfig& c, const ReservoirParams& params) {
  SpectralPoint sp;
  sp.params = params;
  const ReservoirConfig cfg = params.to_config();
  const Reservoir res(cfg);
  for (std::uint64_t seed : c.stream.seeds) {
    PrngStream rng(seed);
    for (int k = 0; k < c.spectral.ensemble; ++k)
      sp.reports.push_back(spectral_report(build_superoperator(res, haar_random_pure(res.dim_e(), rng))));
    if (c.spectral.convergence_steps > 0)
      sp.convergence.push_back(convergence_ratio(cfg, c.spectral.convergence_steps, c.spectral.convergence_pairs, rng));
  }
  return sp;
}

inline std::vector<SpectralPoint> run_spectral_sweep(const ExperimentConfig& c) {
  const auto points = c.sweep.expand(c.reservoir);
  std::vector<SpectralPoint> out(points.size());
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = run_spectral_point(c, points[i]);
    out[i].point = i;
  });
  return out;
}

// ---------------------------------------------------------------- statistics

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1); 0 for a single value.
inline double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// ---------------------------------------------------------------- emission

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) : path_(path), out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << header << '\n';
  }
  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }
  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed for " + path_.string());
  }

 private:
  static std::string cell(double x) { return fmt(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I, std::enable_if_t<std::is_integral_v<I>, int> = 0>
  static std::string cell(I i) { return std::to_string(i); }

  std::filesystem::path path_;
  std::ofstream out_;
};

inline const char* kPointHeader = "point,tau_b,alpha,j_over_b,n_m,n_e,multiplexity,observables";

inline std::string point_cells(std::size_t point, const ReservoirParams& p) {
  return std::to_string(point) + "," + fmt(p.tau_b) + "," + fmt(p.alpha) + "," + fmt(p.j_over_b) + "," +
         std::to_string(p.n_m) + "," + std::to_string(p.n_e) + "," + std::to_string(p.multiplexity) + "," +
         to_string(p.observables);
}

inline std::filesystem::path prepare_dir(const std::string& out) {
  std::filesystem::path dir(out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw std::runtime_error("cannot create output directory " + out);
  return dir;
}

inline void write_sidecar(const std::filesystem::path& dir, Command cmd, const ExperimentConfig& c,
                          const std::vector<std::string>& files) {
  json j = {{"library", "qrt"},
            {"version", kVersion},
            {"prng", PrngStream::kAlgorithm},
            {"command", to_string(cmd)},
            {"seeds", c.stream.seeds},
            {"config", to_json(c)},
            {"files", files}};
  const auto path = dir / "run.json";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

/// steps.csv, summary.csv, aggregate.csv and run.json.
inline std::vector<std::string> emit_tomography(const std::vector<RunResult>& results, const ExperimentConfig& c,
                                                Command cmd, const std::filesystem::path& dir) {
  const bool neg = tracks_negativity(c.task.kind);
  {
    CsvWriter w(dir / "steps.csv",
                std::string("point,seed,step,fidelity") + (neg ? ",negativity_target,negativity_pred" : ""));
    for (const auto& r : results)
      for (const auto& s : r.steps) {
        if (neg) w.row(r.point, r.seed, s.step, s.fidelity, s.negativity_target, s.negativity_pred);
        else w.row(r.point, r.seed, s.step, s.fidelity);
      }
    w.close();
  }
  {
    CsvWriter w(dir / "summary.csv",
                std::string(kPointHeader) + ",seed,rmsf,error" + (neg ? ",negativity_rmse" : ""));
    for (const auto& r : results) {
      if (neg) w.row(point_cells(r.point, r.params), r.seed, r.rmsf, r.error, r.negativity_rmse);
      else w.row(point_cells(r.point, r.params), r.seed, r.rmsf, r.error);
    }
    w.close();
  }
  {
    CsvWriter w(dir / "aggregate.csv", std::string(kPointHeader) + ",n_seeds,rmsf_mean,rmsf_sd,error_mean,error_sd" +
                                           (neg ? ",negativity_rmse_mean,negativity_rmse_sd" : ""));
    std::size_t i = 0;
    while (i < results.size()) {
      std::size_t j = i;
      std::vector<double> rm, er, ng;
      while (j < results.size() && results[j].point == results[i].point) {
        rm.push_back(results[j].rmsf);
        er.push_back(results[j].error);
        ng.push_back(results[j].negativity_rmse);
        ++j;
      }
      if (neg)
        w.row(point_cells(results[i].point, results[i].params), rm.size(), mean_of(rm), sd_of(rm), mean_of(er),
              sd_of(er), mean_of(ng), sd_of(ng));
      else
        w.row(point_cells(results[i].point, results[i].params), rm.size(), mean_of(rm), sd_of(rm), mean_of(er), sd_of(er));
      i = j;
    }
    w.close();
  }
  std::vector<std::string> files{"steps.csv", "summary.csv", "aggregate.csv"};
  write_sidecar(dir, cmd, c, files);
  return files;
}

/// r2.csv (per delay), qmc.csv (per point), trials.csv (per seed) and run.json.
inline std::vector<std::string> emit_memory(const std::vector<MemoryRun>& runs, const ExperimentConfig& c,
                                            const std::filesystem::path& dir) {
  {
    CsvWriter w(dir / "trials.csv", std::string(kPointHeader) + ",seed,qmc");
    for (const auto& r : runs) w.row(point_cells(r.point, r.params), r.seed, r.profile.qmc);
    w.close();
  }
  CsvWriter wr(dir / "r2.csv", std::string(kPointHeader) + ",delay,r2_mean,r2_sd");
  CsvWriter wq(dir / "qmc.csv", std::string(kPointHeader) + ",n_trials,qmc_mean,qmc_sd");
  std::size_t i = 0;
  while (i < runs.size()) {
    std::size_t j = i;
    while (j < runs.size() && runs[j].point == runs[i].point) ++j;
    const std::string pc = point_cells(runs[i].point, runs[i].params);
    for (int d = 0; d <= c.d_max; ++d) {
      std::vector<double> v;
      for (std::size_t k = i; k < j; ++k) v.push_back(runs[k].profile.r2[static_cast<std::size_t>(d)]);
      wr.row(pc, d, mean_of(v), sd_of(v));
    }
    std::vector<double> q;
    for (std::size_t k = i; k < j; ++k) q.push_back(runs[k].profile.qmc);
    wq.row(pc, j - i, mean_of(q), sd_of(q));
    i = j;
  }
  wr.close();
  wq.close();
  std::vector<std::string> files{"trials.csv", "r2.csv", "qmc.csv"};
  write_sidecar(dir, Command::memory, c, files);
  return files;
}

/// spectral.csv, optional eigenvalues.csv, and run.json.
inline std::vector<std::string> emit_spectral(const std::vector<SpectralPoint>& pts, const ExperimentConfig& c,
                                              const std::filesystem::path& dir) {
  std::vector<std::string> files{"spectral.csv"};
  {
    CsvWriter w(dir / "spectral.csv", std::string(kPointHeader) +
                                          ",n_maps,inv_lambda2_median,inv_lambda2_sd,ratio_mean_median,ratio_mean_sd,"
                                          "ratio_mean_mean,convergence_ratio_mean");
    for (const auto& p : pts) {
      std::vector<double> inv, rat;
      for (const auto& r : p.reports) {
        inv.push_back(r.inv_lambda2);
        rat.push_back(r.ratio_mean);
      }
      w.row(point_cells(p.point, p.params), p.reports.size(), median_of(inv), sd_of(inv), median_of(rat), sd_of(rat),
            mean_of(rat), mean_of(p.convergence));
    }
    w.close();
  }
  if (c.spectral.dump_eigenvalues) {
    CsvWriter w(dir / "eigenvalues.csv", "point,map,k,re,im,modulus");
    for (const auto& p : pts)
      for (std::size_t m = 0; m < p.reports.size(); ++m)
        for (std::size_t k = 0; k < p.reports[m].eigenvalues.size(); ++k) {
          const Complex z = p.reports[m].eigenvalues[k];
          w.row(p.point, m, k, z.real(), z.imag(), std::abs(z));
        }
    w.close();
    files.push_back("eigenvalues.csv");
  }
  write_sidecar(dir, Command::spectral, c, files);
  return files;
}

/// Validates, runs and writes all outputs for one subcommand into `out_dir`.
inline std::vector<std::string> run_command(Command cmd, const ExperimentConfig& c, const std::string& out_dir) {
  validate(c, cmd);
  const auto dir = prepare_dir(out_dir);
  switch (cmd) {
    case Command::memory: return emit_memory(run_memory_sweep(c), c, dir);
    case Command::spectral: return emit_spectral(run_spectral_sweep(c), c, dir);
    default: return emit_tomography(run_tomography(c), c, cmd, dir);
  }
}

}  // namespace qrt
