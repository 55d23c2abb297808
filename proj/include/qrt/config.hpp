#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qrt/channels.hpp"
#include "qrt/metrics.hpp"
#include "qrt/readout.hpp"
#include "qrt/reservoir.hpp"

namespace qrt {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

/// Reservoir parameters as they appear in config files (energies in units of B).
struct ReservoirParams {
  int n_m = 5;
  int n_e = 1;
  double alpha = 1.0;
  double j_over_b = 1.0;
  double b_field = 1.0;
  double tau_b = 10.0;
  int multiplexity = 5;
  ObservableSet observables = ObservableSet::z_zz;

  ReservoirConfig to_config() const {
    ReservoirConfig c;
    c.n_m = n_m;
    c.n_e = n_e;
    c.alpha = alpha;
    c.j_strength = j_over_b * b_field;
    c.b_field = b_field;
    c.tau = b_field != 0.0 ? tau_b / b_field : 0.0;
    c.multiplexity = multiplexity;
    c.observables = observables;
    return c;
  }
};

struct StreamConfig {
  Split split;
  int hold_steps = 1;
  std::vector<std::uint64_t> seeds{1};
  InitialState initial_state = InitialState::zero;
  InputEncoding encoding = InputEncoding::haar;
};

/// Optional cartesian grid; an empty axis keeps the base value.
struct SweepGrid {
  std::vector<double> tau_b;
  std::vector<double> alpha;
  std::vector<double> j_over_b;
  std::vector<int> n_m;
  std::vector<int> n_e;
  std::vector<int> multiplexity;
  std::vector<ObservableSet> observables;

  std::vector<ReservoirParams> expand(const ReservoirParams& base) const {
    std::vector<ReservoirParams> pts{base};
    auto axis = [&pts](const auto& values, auto setter) {
      if (values.empty()) return;
      std::vector<ReservoirParams> next;
      for (const auto& p : pts)
        for (const auto& v : values) {
          ReservoirParams q = p;
          setter(q, v);
          next.push_back(q);
        }
      pts = std::move(next);
    };
    axis(n_e, [](ReservoirParams& p, int v) { p.n_e = v; });
    axis(n_m, [](ReservoirParams& p, int v) { p.n_m = v; });
    axis(multiplexity, [](ReservoirParams& p, int v) { p.multiplexity = v; });
    axis(observables, [](ReservoirParams& p, ObservableSet v) { p.observables = v; });
    axis(alpha, [](ReservoirParams& p, double v) { p.alpha = v; });
    axis(j_over_b, [](ReservoirParams& p, double v) { p.j_over_b = v; });
    axis(tau_b, [](ReservoirParams& p, double v) { p.tau_b = v; });
    return pts;
  }
};

struct SpectralOptions {
  int ensemble = 100;
  bool dump_eigenvalues = false;
  int convergence_steps = 0;  ///< 0 disables the convergence-ratio column
  int convergence_pairs = 10;
};

struct ExperimentConfig {
  TemporalMapSpec task;
  bool entangler_random = true;
  ReservoirParams reservoir;
  StreamConfig stream;
  double ridge = kDefaultRidge;
  bool baseline = false;
  int d_max = 10;
  SpectralOptions spectral;
  SweepGrid sweep;
  std::string output_path = "out";
};

namespace cfgio {

inline void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ValidationError(path.empty() ? "<root>" : path, "expected a JSON object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw ValidationError(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
  }
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline double num(const json& obj, const std::string& path, const char* key, double def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(join(path, key), "expected a number");
  return v.get<double>();
}

inline long long integer(const json& obj, const std::string& path, const char* key, long long def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ValidationError(join(path, key), "expected an integer");
  return v.get<long long>();
}

inline bool boolean(const json& obj, const std::string& path, const char* key, bool def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ValidationError(join(path, key), "expected true or false");
  return v.get<bool>();
}

inline std::string text(const json& obj, const std::string& path, const char* key, const std::string& def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ValidationError(join(path, key), "expected a string");
  return v.get<std::string>();
}

template <class T, class F>
std::vector<T> list(const json& obj, const std::string& path, const char* key, F convert) {
  std::vector<T> out;
  if (!obj.contains(key)) return out;
  const json& v = obj.at(key);
  if (!v.is_array()) throw ValidationError(join(path, key), "expected an array");
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(convert(v[i], join(path, key) + "[" + std::to_string(i) + "]"));
  return out;
}

inline double as_num(const json& v, const std::string& where) {
  if (!v.is_number()) throw ValidationError(where, "expected a number");
  return v.get<double>();
}

inline int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ValidationError(where, "expected an integer");
  return v.get<int>();
}

inline std::uint64_t as_seed(const json& v, const std::string& where) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
    throw ValidationError(where, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

inline ObservableSet as_obs(const json& v, const std::string& where) {
  if (!v.is_string()) throw ValidationError(where, "expected \"z\" or \"z+zz\"");
  try {
    return parse_observable_set(v.get<std::string>());
  } catch (const ValidationError& e) {
    throw ValidationError(where, e.what());
  }
}

inline std::size_t count(const json& obj, const std::string& path, const char* key, std::size_t def) {
  const long long v = integer(obj, path, key, static_cast<long long>(def));
  if (v < 0) throw ValidationError(join(path, key), "must be >= 0");
  return static_cast<std::size_t>(v);
}

}  // namespace cfgio

inline std::string initial_state_name(InitialState s) { return s == InitialState::zero ? "zero" : "haar"; }

/// Strict reader: unknown keys and wrongly typed values are ValidationErrors.
inline ExperimentConfig parse_config(const json& root) {
  using namespace cfgio;
  check_keys(root, "", {"task", "reservoir", "stream", "ridge", "baseline", "memory", "spectral", "sweep", "output_path"});
  ExperimentConfig c;

  if (root.contains("task")) {
    const json& t = root.at("task");
    check_keys(t, "task", {"kind", "delays", "weights", "entangler"});
    c.task.kind = parse_map_kind(text(t, "task", "kind", "delayed"));
    if (t.contains("delays")) c.task.delays = list<int>(t, "task", "delays", as_int);
    c.task.weights = list<double>(t, "task", "weights", as_num);
    if (t.contains("entangler")) {
      const json& e = t.at("entangler");
      check_keys(e, "task.entangler", {"t", "h12", "g1", "g2"});
      c.task.entangler.t = num(e, "task.entangler", "t", 10.0);
      const int given = static_cast<int>(e.contains("h12")) + static_cast<int>(e.contains("g1")) +
                        static_cast<int>(e.contains("g2"));
      if (given != 0 && given != 3)
        throw ValidationError("task.entangler", "give all of h12, g1, g2 or none (random draw)");
      if (given == 3) {
        c.entangler_random = false;
        c.task.entangler.h12 = num(e, "task.entangler", "h12", 0.0);
        c.task.entangler.g1 = num(e, "task.entangler", "g1", 0.0);
        c.task.entangler.g2 = num(e, "task.entangler", "g2", 0.0);
      }
    }
  }

  if (root.contains("reservoir")) {
    const json& r = root.at("reservoir");
    const std::string p = "reservoir";
    check_keys(r, p, {"n_m", "n_e", "alpha", "j_over_b", "b_field", "tau_b", "multiplexity", "observables"});
    c.reservoir.n_m = static_cast<int>(integer(r, p, "n_m", c.reservoir.n_m));
    c.reservoir.n_e = static_cast<int>(integer(r, p, "n_e", c.reservoir.n_e));
    c.reservoir.alpha = num(r, p, "alpha", c.reservoir.alpha);
    c.reservoir.j_over_b = num(r, p, "j_over_b", c.reservoir.j_over_b);
    c.reservoir.b_field = num(r, p, "b_field", c.reservoir.b_field);
    c.reservoir.tau_b = num(r, p, "tau_b", c.reservoir.tau_b);
    c.reservoir.multiplexity = static_cast<int>(integer(r, p, "multiplexity", c.reservoir.multiplexity));
    if (r.contains("observables")) c.reservoir.observables = as_obs(r.at("observables"), "reservoir.observables");
  }

  if (root.contains("stream")) {
    const json& s = root.at("stream");
    const std::string p = "stream";
    check_keys(s, p, {"washout", "train", "eval", "hold_steps", "seeds", "initial_state", "input_encoding"});
    c.stream.split.washout = count(s, p, "washout", c.stream.split.washout);
    c.stream.split.train = count(s, p, "train", c.stream.split.train);
    c.stream.split.eval = count(s, p, "eval", c.stream.split.eval);
    c.stream.hold_steps = static_cast<int>(integer(s, p, "hold_steps", c.stream.hold_steps));
    if (s.contains("seeds")) c.stream.seeds = list<std::uint64_t>(s, p, "seeds", as_seed);
    const std::string init = text(s, p, "initial_state", "zero");
    if (init == "zero") c.stream.initial_state = InitialState::zero;
    else if (init == "haar") c.stream.initial_state = InitialState::haar;
    else throw ValidationError("stream.initial_state", "expected \"zero\" or \"haar\"");
    c.stream.encoding = parse_input_encoding(text(s, p, "input_encoding", "haar"));
  }

  c.ridge = num(root, "", "ridge", c.ridge);
  c.baseline = boolean(root, "", "baseline", c.baseline);

  if (root.contains("memory")) {
    const json& m = root.at("memory");
    check_keys(m, "memory", {"d_max"});
    c.d_max = static_cast<int>(integer(m, "memory", "d_max", c.d_max));
  }

  if (root.contains("spectral")) {
    const json& s = root.at("spectral");
    const std::string p = "spectral";
    check_keys(s, p, {"ensemble", "dump_eigenvalues", "convergence_steps", "convergence_pairs"});
    c.spectral.ensemble = static_cast<int>(integer(s, p, "ensemble", c.spectral.ensemble));
    c.spectral.dump_eigenvalues = boolean(s, p, "dump_eigenvalues", c.spectral.dump_eigenvalues);
    c.spectral.convergence_steps = static_cast<int>(integer(s, p, "convergence_steps", c.spectral.convergence_steps));
    c.spectral.convergence_pairs = static_cast<int>(integer(s, p, "convergence_pairs", c.spectral.convergence_pairs));
  }

  if (root.contains("sweep")) {
    const json& g = root.at("sweep");
    const std::string p = "sweep";
    check_keys(g, p, {"tau_b", "alpha", "j_over_b", "n_m", "n_e", "multiplexity", "observables"});
    c.sweep.tau_b = list<double>(g, p, "tau_b", as_num);
    c.sweep.alpha = list<double>(g, p, "alpha", as_num);
    c.sweep.j_over_b = list<double>(g, p, "j_over_b", as_num);
    c.sweep.n_m = list<int>(g, p, "n_m", as_int);
    c.sweep.n_e = list<int>(g, p, "n_e", as_int);
    c.sweep.multiplexity = list<int>(g, p, "multiplexity", as_int);
    c.sweep.observables = list<ObservableSet>(g, p, "observables", as_obs);
  }

  c.output_path = text(root, "", "output_path", c.output_path);
  return c;
}

/// Full, normalized echo of the effective configuration.
inline json to_json(const ExperimentConfig& c) {
  json task = {{"kind", to_string(c.task.kind)}, {"delays", c.task.delays}, {"weights", c.task.weights}};
  if (c.task.kind == MapKind::entangler) {
    json e = {{"t", c.task.entangler.t}};
    if (!c.entangler_random) {
      e["h12"] = c.task.entangler.h12;
      e["g1"] = c.task.entangler.g1;
      e["g2"] = c.task.entangler.g2;
    }
    task["entangler"] = e;
  }
  const auto& r = c.reservoir;
  std::vector<std::string> obs;
  for (auto o : c.sweep.observables) obs.push_back(to_string(o));
  json sweep = json::object();
  auto put = [&sweep](const char* k, const auto& v) {
    if (!v.empty()) sweep[k] = v;
  };
  put("tau_b", c.sweep.tau_b);
  put("alpha", c.sweep.alpha);
  put("j_over_b", c.sweep.j_over_b);
  put("n_m", c.sweep.n_m);
  put("n_e", c.sweep.n_e);
  put("multiplexity", c.sweep.multiplexity);
  put("observables", obs);
  return {
      {"task", task},
      {"reservoir",
       {{"n_m", r.n_m},
        {"n_e", r.n_e},
        {"alpha", r.alpha},
        {"j_over_b", r.j_over_b},
        {"b_field", r.b_field},
        {"tau_b", r.tau_b},
        {"multiplexity", r.multiplexity},
        {"observables", to_string(r.observables)}}},
      {"stream",
       {{"washout", c.stream.split.washout},
        {"train", c.stream.split.train},
        {"eval", c.stream.split.eval},
        {"hold_steps", c.stream.hold_steps},
        {"seeds", c.stream.seeds},
        {"initial_state", initial_state_name(c.stream.initial_state)},
        {"input_encoding", to_string(c.stream.encoding)}}},
      {"ridge", c.ridge},
      {"baseline", c.baseline},
      {"memory", {{"d_max", c.d_max}}},
      {"spectral",
       {{"ensemble", c.spectral.ensemble},
        {"dump_eigenvalues", c.spectral.dump_eigenvalues},
        {"convergence_steps", c.spectral.convergence_steps},
        {"convergence_pairs", c.spectral.convergence_pairs}}},
      {"sweep", sweep},
      {"output_path", c.output_path},
  };
}

/// Flat layout: {"format", "feature_dim", "output_width", "d_out", "ridge", "weights" (row-major)}.
inline json readout_to_json(const ReadoutModel& m) {
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(m.weights.size()));
  for (Eigen::Index i = 0; i < m.weights.rows(); ++i)
    for (Eigen::Index j = 0; j < m.weights.cols(); ++j) w.push_back(m.weights(i, j));
  return {{"format", "qrt-readout-v1"}, {"feature_dim", m.weights.rows()}, {"output_width", m.weights.cols()},
          {"d_out", m.d_out},          {"ridge", m.ridge},                 {"weights", w}};
}

inline ReadoutModel readout_from_json(const json& j) {
  cfgio::check_keys(j, "readout", {"format", "feature_dim", "output_width", "d_out", "ridge", "weights"});
  if (cfgio::text(j, "readout", "format", "") != "qrt-readout-v1")
    throw ValidationError("readout.format", "expected \"qrt-readout-v1\"");
  const auto rows = static_cast<Eigen::Index>(cfgio::integer(j, "readout", "feature_dim", 0));
  const auto cols = static_cast<Eigen::Index>(cfgio::integer(j, "readout", "output_width", 0));
  ReadoutModel m;
  m.d_out = static_cast<Eigen::Index>(cfgio::integer(j, "readout", "d_out", 0));
  m.ridge = cfgio::num(j, "readout", "ridge", kDefaultRidge);
  if (cols != 2 * m.d_out * m.d_out) throw ValidationError("readout.output_width", "must equal 2 * d_out^2");
  const auto w = cfgio::list<double>(j, "readout", "weights", cfgio::as_num);
  if (static_cast<Eigen::Index>(w.size()) != rows * cols)
    throw ValidationError("readout.weights", "expected feature_dim * output_width values");
  m.weights.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m.weights(i, k) = w[static_cast<std::size_t>(i * cols + k)];
  return m;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("<config>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(root);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("--config", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace qrt
