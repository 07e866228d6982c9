#pragma once

// Executes a RunConfig: builds the trajectory, runs the requested analyses
// and writes report.json, CSV traces and SVG plots into the output directory.
// Wall-clock timings go to timing.json so that report.json depends only on
// the configuration.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "app/config.hpp"
#include "app/io.hpp"
#include "nonmarkov/nonmarkov.hpp"

namespace nonmarkov::app {

inline constexpr const char* kToolName = "nonmarkov";
inline constexpr const char* kToolVersion = "0.1.0";

namespace detail {

inline json intervals_json(const std::vector<std::pair<double, double>>& iv) {
  json out = json::array();
  for (const auto& [a, b] : iv) out.push_back({a, b});
  return out;
}

inline json measure_json(const MeasureResult& m) {
  json j;
  j["name"] = to_string(m.name);
  j["value"] = m.value;
  j["horizon"] = m.horizon;
  if (m.name == MeasureName::RHP) {
    j["integral"] = m.integral;
    j["divergent"] = m.divergent;
    j["quadrature"] = "composite Simpson on g_trace.csv (3/8 rule on the last three intervals for an even sample count)";
    return j;
  }
  j["budget"] = m.budget;
  j["evaluations"] = m.evaluations;
  j["discarded_evaluations"] = m.discarded;
  j["seed"] = m.seed;
  j["lower_bound"] = true;
  if (m.name == MeasureName::HELSTROM) j["ancilla_dim"] = m.ancilla_dim;
  if (m.value > 0.0) {
    json w;
    if (m.rho1) w["rho1"] = to_json(*m.rho1);
    if (m.rho2) w["rho2"] = to_json(*m.rho2);
    if (m.prior) w["p"] = *m.prior;
    if (m.delta) w["delta"] = to_json(*m.delta);
    w["positive_intervals"] = intervals_json(m.intervals);
    j["witness"] = w;
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

struct Context {
  const RunConfig& config;
  const MapTrajectory& traj;
  std::filesystem::path out;
  Index ancilla;
};

inline void emit_trace(const Context& ctx, const std::string& name, const std::vector<double>& t,
                       const std::vector<double>& v, const std::string& label) {
  write_csv((ctx.out / (name + ".csv")).string(), t, v);
  write_svg((ctx.out / (name + ".svg")).string(), t, v, name, label);
}

inline json run_g_trace(const Context& ctx) {
  const GTrace g = g_trace(ctx.traj);
  emit_trace(ctx, "g_trace", g.t, g.g, "g(t)");
  std::size_t arg = 0;
  for (std::size_t i = 0; i < g.g.size(); ++i) {
    if (g.g[i] > g.g[arg]) arg = i;
  }
  json j;
  j["file"] = "g_trace.csv";
  j["max"] = g.g[arg];
  j["argmax"] = g.t[arg];
  j["degraded_nodes"] = g.degraded;
  return j;
}

inline json run_rhp(const Context& ctx) {
  const GTrace g = g_trace(ctx.traj);
  emit_trace(ctx, "g_trace", g.t, g.g, "g(t)");
  json j = measure_json(n_rhp_from_trace(g, ctx.traj.grid().step()));
  j["trace"] = "g_trace.csv";
  return j;
}

inline json flow_json(const FlowTrace& f) {
  json j;
  j["positive_intervals"] = intervals_json(f.intervals);
  j["positive_integral"] = f.positive_integral;
  j["max_rate"] = f.max_rate;
  j["argmax_rate"] = f.argmax_rate;
  return j;
}

inline json run_sigma_trace(const Context& ctx) {
  const Index d = ctx.traj.dim();
  ComplexMatrix r1, r2;
  if (ctx.config.pair) {
    r1 = ctx.config.pair->rho1;
    r2 = ctx.config.pair->rho2;
    if (r1.rows() != d || r2.rows() != d) {
      throw ValidationError("pair: states must have the system dimension " + std::to_string(d));
    }
  } else {
    r1 = ComplexMatrix::Zero(d, d);
    r2 = ComplexMatrix::Zero(d, d);
    r1(0, 0) = 1.0;
    r2(d - 1, d - 1) = 1.0;
  }
  const FlowEvaluator eval(ctx.traj, 1);
  const FlowTrace f = flow_trace(eval, 0.5 * (r1 - r2));
  emit_trace(ctx, "distance_trace", f.t, f.values, "D(t)");
  emit_trace(ctx, "sigma_trace", f.t, f.rates, "sigma(t)");
  json j = flow_json(f);
  j["files"] = {"distance_trace.csv", "sigma_trace.csv"};
  j["rho1"] = to_json(r1);
  j["rho2"] = to_json(r2);
  return j;
}

inline ComplexMatrix configured_delta(const Context& ctx) {
  const auto& h = *ctx.config.helstrom;
  return (1.0 - h.p) * h.rho1 - h.p * h.rho2;
}

inline json run_sigma_tilde_trace(const Context& ctx) {
  const ComplexMatrix delta = configured_delta(ctx);
  const FlowEvaluator eval(ctx.traj, ctx.ancilla);
  if (delta.rows() != eval.total_dim()) {
    throw ValidationError("helstrom: states must have dimension ancilla_dim * d = " +
                          std::to_string(eval.total_dim()));
  }
  const FlowTrace f = flow_trace(eval, delta);
  emit_trace(ctx, "helstrom_norm_trace", f.t, f.values, "||Delta(t)||_1");
  emit_trace(ctx, "sigma_tilde_trace", f.t, f.rates, "sigma~(t)");
  json j = flow_json(f);
  j["files"] = {"helstrom_norm_trace.csv", "sigma_tilde_trace.csv"};
  j["p"] = ctx.config.helstrom->p;
  j["trace_delta"] = delta.trace().real();
  j["ancilla_dim"] = ctx.ancilla;
  return j;
}

inline std::uint64_t derive_seed_for(const Context& ctx, const char* tag) {
  return numerics::derive_seed(ctx.config.seed, tag, 0);
}

inline json run_blp(const Context& ctx) {
  SearchOptions opt = ctx.config.search;
  opt.seed = derive_seed_for(ctx, "blp");
  return measure_json(n_blp(ctx.traj, opt));
}

inline json run_helstrom(const Context& ctx) {
  SearchOptions opt = ctx.config.search;
  opt.seed = derive_seed_for(ctx, "helstrom");
  std::vector<ComplexMatrix> seeds;
  if (ctx.config.helstrom && ctx.config.helstrom->rho1.rows() == ctx.ancilla * ctx.traj.dim()) {
    seeds.push_back(configured_delta(ctx));
  }
  json j = measure_json(n_helstrom(ctx.traj, ctx.ancilla, opt, seeds));
  SearchOptions wopt = ctx.config.search;
  wopt.seed = derive_seed_for(ctx, "witness");
  const auto w = find_backflow_witness(ctx.traj, ctx.ancilla, wopt, seeds);
  if (w) {
    j["backflow_witness"] = {{"delta", to_json(w->delta.matrix())},
                             {"t", w->t},
                             {"sigma_tilde", w->sigma_tilde},
                             {"ancilla_dim", w->ancilla_dim}};
  } else {
    j["backflow_witness"] = nullptr;
  }
  return j;
}

inline json run_classify(const Context& ctx) {
  ClassifyOptions opt;
  opt.search = ctx.config.search;
  opt.search.seed = derive_seed_for(ctx, "classify");
  const DivisibilityReport rep = classify(ctx.traj, opt);
  json j;
  j["label"] = to_string(rep.label);
  j["cp_divisible"] = rep.cp_divisible;
  j["p_divisible"] = rep.p_divisible;
  j["p_divisibility_test"] = ctx.traj.is_classical() ? "Kolmogorov conditions at every node"
                                                     : "sampled dissipativity condition at every node";
  j["max_g"] = rep.max_g;
  j["g_tolerance"] = opt.g_tolerance;
  j["rhp"] = measure_json(rep.rhp);
  j["blp"] = measure_json(rep.blp);
  return j;
}

inline json run_discrimination(const Context& ctx) {
  const auto& h = *ctx.config.helstrom;
  const DensityMatrix r1(h.rho1), r2(h.rho2);
  const HelstromMatrix hm(h.p, r1, r2);
  json j;
  j["p"] = h.p;
  j["trace_norm"] = hm.trace_norm();
  j["trace_delta"] = hm.delta().trace();
  j["min_error"] = min_error_probability(h.p, r1, r2);
  j["brute_force_min_error"] =
      min_error_brute_force(h.p, r1, r2, 2000, derive_seed_for(ctx, "discrimination"));
  return j;
}

}  // namespace detail

struct RunOutcome {
  json report;
  json timing;
};

inline RunOutcome execute(const RunConfig& config, const std::string& output_dir, bool parallel) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const MapTrajectory traj = build_trajectory(config);
  const double build_seconds = std::chrono::duration<double>(clock::now() - start).count();

  std::filesystem::create_directories(output_dir);
  const Index ancilla = config.ancilla_dim > 0 ? config.ancilla_dim : traj.dim();
  const detail::Context ctx{config, traj, output_dir, ancilla};

  using Runner = std::function<json(const detail::Context&)>;
  const std::map<std::string, Runner> runners = {
      {"g_trace", detail::run_g_trace},     {"rhp", detail::run_rhp},
      {"sigma_trace", detail::run_sigma_trace}, {"sigma_tilde_trace", detail::run_sigma_tilde_trace},
      {"blp", detail::run_blp},             {"helstrom", detail::run_helstrom},
      {"classify", detail::run_classify},   {"discrimination", detail::run_discrimination},
  };

  // "rhp" rewrites g_trace.csv with identical content; run it after g_trace
  // rather than concurrently with it.
  std::vector<std::string> names = config.analyses;
  struct Timed {
    json result;
    double seconds;
  };
  auto timed = [&](const std::string& name) {
    const auto t0 = clock::now();
    json r = runners.at(name)(ctx);
    return Timed{std::move(r), std::chrono::duration<double>(clock::now() - t0).count()};
  };

  std::map<std::string, Timed> results;
  if (parallel) {
    std::vector<std::pair<std::string, std::future<Timed>>> jobs;
    for (const auto& n : names) {
      if (n == "rhp" && config.wants("g_trace")) continue;
      jobs.emplace_back(n, std::async(std::launch::async, timed, n));
    }
    for (auto& [n, f] : jobs) results.emplace(n, f.get());
    if (config.wants("rhp") && config.wants("g_trace")) results.emplace("rhp", timed("rhp"));
  } else {
    for (const auto& n : names) results.emplace(n, timed(n));
  }

  RunOutcome out;
  json& rep = out.report;
  rep["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  rep["config"] = config.echo;
  rep["model"] = {{"kind", config.kind},
                  {"dim", traj.dim()},
                  {"map_kind", to_string(traj.kind())},
                  {"provenance", to_string(traj.provenance())}};
  rep["grid"] = {{"t_max", traj.grid().t_max()},
                 {"h", traj.grid().step()},
                 {"steps", traj.grid().steps()}};
  rep["ancilla_dim"] = ancilla;
  json analyses = json::object();
  for (const auto& [n, r] : results) analyses[n] = r.result;
  rep["analyses"] = analyses;
  if (results.count("classify")) rep["classification"] = results.at("classify").result.at("label");

  out.timing["build_seconds"] = build_seconds;
  for (const auto& [n, r] : results) out.timing["analyses"][n] = r.seconds;
  out.timing["total_seconds"] = std::chrono::duration<double>(clock::now() - start).count();
  out.timing["parallel"] = parallel;

  std::ofstream(std::filesystem::path(output_dir) / "report.json", std::ios::binary)
      << rep.dump(2) << '\n';
  std::ofstream(std::filesystem::path(output_dir) / "timing.json", std::ios::binary)
      << out.timing.dump(2) << '\n';
  return out;
}

}  // namespace nonmarkov::app
