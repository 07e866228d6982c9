#pragma once

// Run configuration: schema, parsing, validation, and model construction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "app/io.hpp"
#include "nonmarkov/nonmarkov.hpp"

namespace nonmarkov::app {

struct ParamSpec {
  std::string name;
  std::string type;
  std::string description;
};

struct ModelSpec {
  std::string kind;
  std::string summary;
  std::vector<ParamSpec> params;
};

/// Parameters accepted under "model" for each kind (besides "kind" itself).
inline const std::vector<ModelSpec>& model_specs() {
  static const std::vector<ModelSpec> specs = {
      {"toy",
       "two-state classical toy model: divisibility fails after t = pi while the trace "
       "distance never grows (bound non-Markovian)",
       {{"kappa", "real in (0, 0.5)", "amplitude of the transition functions (default 0.4)"}}},
      {"qubit",
       "qubit map with populations x0, x1 and coherence factor gamma; CP iff |gamma|^2 <= x0 x1",
       {{"family", "\"exponential\" | \"toy\" | \"tabulated\"", "parametric family (default exponential)"},
        {"alpha0", "real in [0, 1]", "exponential: asymptotic loss of x0 (default 0.5)"},
        {"alpha1", "real in [0, 1]", "exponential: asymptotic loss of x1 (default 0.5)"},
        {"u0", "real >= 0", "exponential: relaxation rate of x0 (default 1)"},
        {"u1", "real >= 0", "exponential: relaxation rate of x1 (default 1)"},
        {"kappa", "real in (0, 0.5)", "toy: amplitude of the embedded toy model (default 0.4)"},
        {"v", "real >= 0", "coherence decay rate (default 0)"},
        {"w", "real", "coherence rotation frequency (default 0)"},
        {"beta", "real in [0, 1]", "coherence modulation depth (default 0)"},
        {"omega", "real", "coherence modulation frequency (default 0)"},
        {"times", "array of reals", "tabulated: sample times starting at 0"},
        {"x0", "array of reals", "tabulated: x0 samples"},
        {"x1", "array of reals", "tabulated: x1 samples"},
        {"gamma", "array of [re, im]", "tabulated: gamma samples"},
        {"dx0", "array of reals", "tabulated: dx0/dt samples"},
        {"dx1", "array of reals", "tabulated: dx1/dt samples"},
        {"dgamma", "array of [re, im]", "tabulated: dgamma/dt samples"}}},
      {"integro",
       "qubit memory-kernel master equation with exponential kernel gamma exp(-gamma t) and a "
       "thermal amplitude-damping generator",
       {{"gamma", "real >= 0", "memory kernel rate (default 0.014)"},
        {"gamma0", "real >= 0", "coupling rate (default 0.0014)"},
        {"nbar", "real >= 0", "mean thermal occupation (default 0.5)"}}},
      {"semigroup",
       "time-independent generator, Lambda(t) = exp(t L); divisible by construction",
       {{"rates", "real d x d matrix", "classical Kolmogorov generator (column sums 0)"},
        {"hamiltonian", "complex d x d matrix", "quantum: Hamiltonian"},
        {"jumps", "array of complex d x d matrices", "quantum: Lindblad jump operators"}}},
  };
  return specs;
}

inline const std::vector<std::string>& known_analyses() {
  static const std::vector<std::string> a = {"g_trace", "sigma_trace", "sigma_tilde_trace", "rhp",
                                             "blp",     "helstrom",    "classify",          "discrimination"};
  return a;
}

struct StatePair {
  ComplexMatrix rho1, rho2;
};

struct HelstromSpec {
  double p = 0.5;
  ComplexMatrix rho1, rho2;
};

struct RunConfig {
  json model;
  std::string kind;
  double t_max = 1.0;
  double h = 0.1;
  std::vector<std::string> analyses;  // sorted, unique
  SearchOptions search;
  Index ancilla_dim = 0;  // 0: system dimension
  std::uint64_t seed = 0;
  std::optional<StatePair> pair;
  std::optional<HelstromSpec> helstrom;
  std::string output_dir = "out";
  json echo;

  bool wants(const std::string& a) const {
    return std::find(analyses.begin(), analyses.end(), a) != analyses.end();
  }
};

namespace detail {

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ValidationError(where + ": unknown key \"" + it.key() + "\"");
  }
}

inline double number(const json& obj, const std::string& key, const std::string& where,
                     std::optional<double> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ValidationError(where + ": missing \"" + key + "\"");
  }
  const json& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(where + "." + key + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(where + "." + key + ": must be finite");
  return x;
}

/// A time value: a number, or a string "<c>pi" / "<c>*pi" / "pi".
inline double time_value(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    static const std::regex re(R"(^\s*([0-9]*\.?[0-9]*(?:[eE][-+]?[0-9]+)?)\s*\*?\s*pi\s*$)");
    std::smatch m;
    const std::string s = v.get<std::string>();
    if (std::regex_match(s, m, re)) {
      const double c = m[1].str().empty() ? 1.0 : std::stod(m[1].str());
      return c * std::numbers::pi;
    }
  }
  throw ValidationError(where + ": expected a number or a multiple of pi such as \"3pi\"");
}

inline std::size_t count(const json& obj, const std::string& key, const std::string& where,
                         std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ValidationError(where + "." + key + ": expected a non-negative integer");
  }
  return static_cast<std::size_t>(v.get<long long>());
}

inline std::vector<double> real_array(const json& obj, const std::string& key,
                                      const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_array()) {
    throw ValidationError(where + ": \"" + key + "\" must be an array");
  }
  std::vector<double> out;
  for (const auto& x : obj.at(key)) {
    if (!x.is_number()) throw ValidationError(where + "." + key + ": expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline std::vector<Complex> complex_array(const json& obj, const std::string& key,
                                          const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_array()) {
    throw ValidationError(where + ": \"" + key + "\" must be an array");
  }
  std::vector<Complex> out;
  for (const auto& x : obj.at(key)) out.push_back(complex_from_json(x, where + "." + key));
  return out;
}

inline ComplexMatrix density_from_json(const json& v, const std::string& where) {
  const ComplexMatrix m = matrix_from_json(v, where);
  try {
    return DensityMatrix(m).matrix();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

}  // namespace detail

inline models::QubitModelParams qubit_params(const json& m) {
  const std::string where = "model";
  models::QubitModelParams p;
  const std::string family = m.value("family", std::string("exponential"));
  if (family == "exponential") {
    p.family = models::QubitModelParams::Family::exponential;
  } else if (family == "toy") {
    p.family = models::QubitModelParams::Family::toy;
  } else if (family == "tabulated") {
    p.family = models::QubitModelParams::Family::tabulated;
  } else {
    throw ValidationError("model.family: unknown family \"" + family + "\"");
  }
  p.alpha0 = detail::number(m, "alpha0", where, p.alpha0);
  p.alpha1 = detail::number(m, "alpha1", where, p.alpha1);
  p.u0 = detail::number(m, "u0", where, p.u0);
  p.u1 = detail::number(m, "u1", where, p.u1);
  p.kappa = detail::number(m, "kappa", where, p.kappa);
  p.v = detail::number(m, "v", where, p.v);
  p.w = detail::number(m, "w", where, p.w);
  p.beta = detail::number(m, "beta", where, p.beta);
  p.omega = detail::number(m, "omega", where, p.omega);
  if (p.family == models::QubitModelParams::Family::tabulated) {
    p.times = detail::real_array(m, "times", where);
    const auto x0 = detail::real_array(m, "x0", where), x1 = detail::real_array(m, "x1", where);
    const auto dx0 = detail::real_array(m, "dx0", where), dx1 = detail::real_array(m, "dx1", where);
    const auto g = detail::complex_array(m, "gamma", where);
    const auto dg = detail::complex_array(m, "dgamma", where);
    const std::size_t n = p.times.size();
    if (x0.size() != n || x1.size() != n || dx0.size() != n || dx1.size() != n || g.size() != n ||
        dg.size() != n) {
      throw ValidationError("model: tabulated arrays must all have the length of \"times\"");
    }
    for (std::size_t i = 0; i < n; ++i) p.table.push_back({x0[i], x1[i], g[i], dx0[i], dx1[i], dg[i]});
  }
  return p;
}

inline RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ValidationError("config: top level must be an object");
  detail::reject_unknown(j,
                         {"model", "grid", "analyses", "optimizer", "ancilla_dim", "seed", "pair",
                          "helstrom", "output_dir"},
                         "config");
  RunConfig c;
  c.echo = j;

  if (!j.contains("model") || !j.at("model").is_object()) {
    throw ValidationError("config: \"model\" object is required");
  }
  c.model = j.at("model");
  if (!c.model.contains("kind") || !c.model.at("kind").is_string()) {
    throw ValidationError("model: \"kind\" is required");
  }
  c.kind = c.model.at("kind").get<std::string>();
  const auto& specs = model_specs();
  const auto spec = std::find_if(specs.begin(), specs.end(),
                                 [&](const ModelSpec& s) { return s.kind == c.kind; });
  if (spec == specs.end()) throw ValidationError("model: unknown kind \"" + c.kind + "\"");
  std::set<std::string> allowed{"kind"};
  for (const auto& p : spec->params) allowed.insert(p.name);
  detail::reject_unknown(c.model, allowed, "model");

  if (!j.contains("grid") || !j.at("grid").is_object()) {
    throw ValidationError("config: \"grid\" object with t_max and h is required");
  }
  const json& g = j.at("grid");
  detail::reject_unknown(g, {"t_max", "h"}, "grid");
  if (!g.contains("t_max") || !g.contains("h")) throw ValidationError("grid: t_max and h are required");
  c.t_max = detail::time_value(g.at("t_max"), "grid.t_max");
  c.h = detail::time_value(g.at("h"), "grid.h");
  if (!(c.t_max > 0.0) || !std::isfinite(c.t_max)) throw ValidationError("grid.t_max must be > 0");
  if (!(c.h > 0.0)) throw ValidationError("grid.h must be > 0");
  if (c.h > c.t_max / 10.0 * (1.0 + 1e-12)) {
    throw ValidationError("grid.h must be <= t_max / 10 (degenerate grid)");
  }

  if (!j.contains("analyses") || !j.at("analyses").is_array()) {
    throw ValidationError("config: \"analyses\" array is required");
  }
  for (const auto& a : j.at("analyses")) {
    if (!a.is_string()) throw ValidationError("analyses: entries must be strings");
    const std::string name = a.get<std::string>();
    const auto& known = known_analyses();
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw ValidationError("analyses: unknown analysis \"" + name + "\"");
    }
    c.analyses.push_back(name);
  }
  std::sort(c.analyses.begin(), c.analyses.end());
  c.analyses.erase(std::unique(c.analyses.begin(), c.analyses.end()), c.analyses.end());

  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ValidationError("seed: expected a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.search.seed = c.seed;
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    if (!o.is_object()) throw ValidationError("optimizer: expected an object");
    detail::reject_unknown(o, {"budget", "starts", "max_evals_per_start"}, "optimizer");
    c.search.budget = detail::count(o, "budget", "optimizer", c.search.budget);
    c.search.starts = detail::count(o, "starts", "optimizer", c.search.starts);
    c.search.max_evals_per_start =
        detail::count(o, "max_evals_per_start", "optimizer", c.search.max_evals_per_start);
    if (c.search.starts == 0) throw ValidationError("optimizer.starts must be >= 1");
  }
  if (j.contains("ancilla_dim")) {
    c.ancilla_dim = static_cast<Index>(detail::count(j, "ancilla_dim", "config", 0));
    if (c.ancilla_dim < 1) throw ValidationError("ancilla_dim must be >= 1");
  }
  if (j.contains("pair")) {
    const json& p = j.at("pair");
    if (!p.is_object()) throw ValidationError("pair: expected an object");
    detail::reject_unknown(p, {"rho1", "rho2"}, "pair");
    if (!p.contains("rho1") || !p.contains("rho2")) throw ValidationError("pair: rho1 and rho2 are required");
    c.pair = StatePair{detail::density_from_json(p.at("rho1"), "pair.rho1"),
                       detail::density_from_json(p.at("rho2"), "pair.rho2")};
  }
  if (j.contains("helstrom")) {
    const json& hs = j.at("helstrom");
    if (!hs.is_object()) throw ValidationError("helstrom: expected an object");
    detail::reject_unknown(hs, {"p", "rho1", "rho2", "preset"}, "helstrom");
    HelstromSpec spec;
    if (hs.contains("preset")) {
      if (hs.at("preset") != "reference") {
        throw ValidationError("helstrom.preset: only \"reference\" is defined");
      }
      const auto refs = models::reference_helstrom_states();
      spec = {refs.p, refs.rho1.matrix(), refs.rho2.matrix()};
    } else {
      if (!hs.contains("rho1") || !hs.contains("rho2")) {
        throw ValidationError("helstrom: give rho1 and rho2, or preset");
      }
      spec.rho1 = detail::density_from_json(hs.at("rho1"), "helstrom.rho1");
      spec.rho2 = detail::density_from_json(hs.at("rho2"), "helstrom.rho2");
    }
    spec.p = detail::number(hs, "p", "helstrom", spec.p);
    if (!(spec.p >= 0.0 && spec.p <= 1.0)) throw ValidationError("helstrom.p must lie in [0, 1]");
    if (spec.rho1.rows() != spec.rho2.rows()) {
      throw ValidationError("helstrom: rho1 and rho2 have different dimensions");
    }
    c.helstrom = spec;
  }
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ValidationError("output_dir: expected a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }

  if (c.wants("sigma_tilde_trace") && !c.helstrom) {
    throw ValidationError("sigma_tilde_trace needs a \"helstrom\" block");
  }
  if (c.wants("discrimination") && !c.helstrom) {
    throw ValidationError("discrimination needs a \"helstrom\" block");
  }
  return c;
}

inline MapTrajectory build_trajectory(const RunConfig& c) {
  const TimeGrid grid(c.t_max, c.h);
  const json& m = c.model;
  try {
    if (c.kind == "toy") {
      return models::toy_trajectory({detail::number(m, "kappa", "model", 0.4)}, grid);
    }
    if (c.kind == "qubit") return models::qubit_trajectory(qubit_params(m), grid);
    if (c.kind == "integro") {
      models::IntegroDiffParams p;
      p.gamma = detail::number(m, "gamma", "model", p.gamma);
      p.gamma0 = detail::number(m, "gamma0", "model", p.gamma0);
      p.nbar = detail::number(m, "nbar", "model", p.nbar);
      return models::integro_diff_trajectory(p, grid);
    }
    // semigroup
    if (m.contains("rates")) {
      if (m.contains("hamiltonian") || m.contains("jumps")) {
        throw ValidationError("model: give either classical rates or hamiltonian/jumps");
      }
      const ComplexMatrix r = matrix_from_json(m.at("rates"), "model.rates");
      if (r.rows() != r.cols() || r.imag().cwiseAbs().maxCoeff() != 0.0) {
        throw ValidationError("model.rates: expected a real square matrix");
      }
      if (!kolmogorov_check(r.real()).ok) {
        throw ValidationError("model.rates: not a Kolmogorov generator");
      }
      return models::classical_semigroup_trajectory(r.real(), grid);
    }
    if (!m.contains("hamiltonian") && !m.contains("jumps")) {
      throw ValidationError("model: semigroup needs rates, or hamiltonian and/or jumps");
    }
    Index d = 0;
    std::optional<ComplexMatrix> h;
    if (m.contains("hamiltonian")) {
      h = matrix_from_json(m.at("hamiltonian"), "model.hamiltonian");
      if (h->rows() != h->cols() || !is_hermitian(*h, 1e-12)) {
        throw ValidationError("model.hamiltonian: expected a Hermitian square matrix");
      }
      d = h->rows();
    }
    std::vector<ComplexMatrix> jumps;
    if (m.contains("jumps")) {
      if (!m.at("jumps").is_array()) throw ValidationError("model.jumps: expected an array of matrices");
      for (std::size_t i = 0; i < m.at("jumps").size(); ++i) {
        jumps.push_back(matrix_from_json(m.at("jumps")[i], "model.jumps[" + std::to_string(i) + "]"));
        if (d == 0) d = jumps.back().rows();
        if (jumps.back().rows() != d || jumps.back().cols() != d) {
          throw ValidationError("model.jumps: dimension mismatch");
        }
      }
    }
    if (d < 2) throw ValidationError("model: semigroup dimension must be >= 2");
    Superoperator l(ComplexMatrix::Zero(d * d, d * d));
    if (h) l = commutator_generator(*h);
    for (const auto& jmp : jumps) l = l + dissipator(jmp);
    return models::semigroup_trajectory(l, grid);
  } catch (const InvalidModel& e) {
    throw ValidationError(e.what());
  }
}

}  // namespace nonmarkov::app
