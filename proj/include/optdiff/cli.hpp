#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "optdiff/errors.hpp"
#include "optdiff/fem.hpp"
#include "optdiff/homog.hpp"
#include "optdiff/io.hpp"
#include "optdiff/optimize.hpp"
#include "optdiff/parallel.hpp"
#include "optdiff/potential.hpp"
#include "optdiff/sampler.hpp"

namespace optdiff::cli {

inline constexpr const char* kVersion = "optdiff 1.0.0";

/// Bad command-line usage detected after parsing (exit code 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using json = nlohmann::json;
namespace fs = std::filesystem;

struct PresetRun {
  std::string name;               // subdirectory of the preset output directory
  std::vector<std::string> args;  // argv without the program name
};

namespace detail {

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
    if (ec != std::errc() || ptr != item.data() + item.size()) throw UsageError("bad number '" + item + "' in list");
    out.push_back(x);
  }
  if (out.empty()) throw UsageError("empty list '" + s + "'");
  return out;
}

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (double x : parse_list(s)) {
    if (x != std::floor(x)) throw UsageError("expected integers in '" + s + "'");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

inline std::string fmt(double x) { return format_double(x); }

struct Model {
  std::string potential = "sinsin";
  int freq = 1;
  int n_cells = 1000;
  double p = 2.0;
};

struct Output {
  std::string out;
  bool force = false;
  int threads = 0;
  std::uint64_t seed = 20240607;
  std::string config;
};

struct Context {
  fs::path dir;
  std::vector<std::string> files;
  json results = json::object();

  fs::path file(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
};

inline void prepare_dir(const std::string& out, bool force) {
  if (out.empty()) throw UsageError("--out is required");
  const fs::path p(out);
  if (fs::exists(p) && !force) throw UsageError("output directory '" + out + "' exists (use --force)");
  fs::create_directories(p);
}

inline void add_model(CLI::App* sub, Model& m) {
  sub->add_option("--potential", m.potential, "cos:<m>, sinsin, zero or table:<path.csv>");
  sub->add_option("--freq", m.freq, "periodization frequency k")->check(CLI::PositiveNumber);
  sub->add_option("--n-cells", m.n_cells, "number of mesh cells N")->check(CLI::Range(3, 100000000));
  sub->add_option("--p", m.p, "exponent of the weighted norm constraint")->check(CLI::Range(1.0, 1e6));
}

inline void add_output(CLI::App* sub, Output& o, bool with_seed) {
  sub->add_option("--out", o.out, "output directory")->required();
  sub->add_flag("--force", o.force, "allow writing into an existing directory");
  sub->add_option("--threads", o.threads, "worker threads (default: OPTDIFF_THREADS or all cores)");
  sub->add_option("--config", o.config, "key=value file; command-line flags take precedence");
  if (with_seed) sub->add_option("--seed", o.seed, "random seed");
}

inline Potential make_potential(const Model& m) { return parse_potential(m.potential, m.freq); }

inline json report_json(const OptimReport& r, const ConstraintSet& cs) {
  json j;
  j["objective"] = r.objective;
  j["sigma2"] = r.sigma2;
  j["sigma3"] = r.sigma3;
  j["sigma4"] = r.sigma4;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["stop_reason"] = r.stop_reason;
  j["constraint_activity"] = {{"pnorm_saturated", r.constraint_activity.pnorm_saturated},
                              {"n_lower_active", r.constraint_activity.n_lower_active},
                              {"n_upper_active", r.constraint_activity.n_upper_active}};
  j["min_d"] = r.min_d;
  j["alpha"] = r.alpha;
  j["pnorm_value"] = cs.pnorm_value(r.d_star);
  j["constraint_violation"] = cs.violation(r.d_star);
  j["d_star"] = to_json(r.d_star);
  return j;
}

inline DiffusionField make_field(const std::string& spec, const Potential& pot, const Model& m) {
  if (spec == "const") {
    const Assembly a = assemble(pot, Mesh(m.n_cells), m.p);
    return DiffusionField::constant(d_constant(a)[0]);
  }
  if (spec == "hom") return DiffusionField::exp_v(pot);
  if (spec.rfind("file:", 0) == 0) return DiffusionField::nodal(read_diffusion_csv(spec.substr(5)));
  throw UsageError("unknown --diffusion '" + spec + "' (expected const, hom or file:<diffusion.csv>)");
}

inline json field_json(const std::string& spec, const DiffusionField& f, double dt) {
  return {{"diffusion", spec}, {"max_d", f.max_value()}, {"proposal_too_wide", proposal_too_wide(f, dt)}};
}

inline void warn_width(const DiffusionField& f, double dt) {
  if (proposal_too_wide(f, dt))
    std::cerr << "warning: proposal standard deviation exceeds half the torus at dt=" << dt << "\n";
}

// ---- commands --------------------------------------------------------------

struct OptimizeArgs {
  double a = 0.0, b = 0.0, alpha = 0.0, tol = 1e-15;
  std::string init = "hom";
  int max_iter = 1000;
  int n_eigs = 10;
  bool dump = false;
};

inline void cmd_optimize(const Model& m, const OptimizeArgs& o, Context& ctx) {
  const Potential pot = make_potential(m);
  const Assembly a = assemble(pot, Mesh(m.n_cells), m.p);
  const ConstraintSet cs = make_constraints(a, o.a, o.b);
  OptimConfig cfg;
  cfg.max_iter = o.max_iter;
  cfg.grad_tol = o.tol;
  cfg.alpha = o.alpha;
  if (o.init == "hom") {
    cfg.init = InitKind::HomProxy;
  } else if (o.init == "const") {
    cfg.init = InitKind::Constant;
  } else if (o.init.rfind("file:", 0) == 0) {
    cfg.init = InitKind::Given;
    cfg.init_vector = read_diffusion_csv(o.init.substr(5));
  } else {
    throw UsageError("unknown --init '" + o.init + "' (expected hom, const or file:<diffusion.csv>)");
  }
  const OptimReport r = optimize(a, cs, cfg);
  write_diffusion_csv(ctx.file("diffusion.csv"), r.d_star);
  const CyclicTridiag am = stiffness(a, r.d_star);
  const int ne = std::min(o.n_eigs, a.n);
  const EigenSolution spec = solve_generalized(am, a.mass, ne);
  {
    CsvWriter w(ctx.file("spectrum.csv"), {"index", "sigma"});
    for (Eigen::Index i = 0; i < spec.sigmas.size(); ++i) w.row(static_cast<std::int64_t>(i + 1), spec.sigmas[i]);
  }
  if (o.dump) {
    for (const auto& [name, mat] : {std::pair{"matrix_A.csv", am}, std::pair{"matrix_B.csv", a.mass}}) {
      CsvWriter w(ctx.file(name), {"row", "col", "value"});
      for (const auto& [i, j, v] : triplets(mat)) w.row(i, j, v);
    }
  }
  json rep = report_json(r, cs);
  rep["potential"] = m.potential;
  rep["freq"] = m.freq;
  rep["n_cells"] = m.n_cells;
  rep["p"] = m.p;
  rep["lower_a"] = o.a;
  rep["upper_b"] = o.b;
  write_json_atomic(ctx.file("report.json"), rep);
  ctx.results = {{"objective", r.objective}, {"sigma2", r.sigma2}, {"sigma3", r.sigma3},
                 {"sigma4", r.sigma4},       {"iterations", r.iterations}, {"converged", r.converged},
                 {"min_d", r.min_d}};
}

inline void cmd_homogenize(const Model& m, Context& ctx) {
  const Potential pot = make_potential(m);
  const Assembly a = assemble(pot, Mesh(m.n_cells), m.p);
  const DiffusionVector dh = d_hom_star(a);
  const DiffusionVector dc = d_constant(a);
  const double z = partition_constant(pot, 100000);
  const double dbar = effective_diffusion_1d(pot, [&](double q) { return std::exp(pot(q)); });
  const double dbar_const = effective_diffusion_1d(pot, [&](double) { return dc[0]; });
  const double lambda_hom = 4.0 * std::numbers::pi * std::numbers::pi * dbar;
  const double s_hom = solve_generalized(stiffness(a, dh), a.mass, 3).sigmas[1];
  const double s_const = solve_generalized(stiffness(a, dc), a.mass, 3).sigmas[1];
  write_diffusion_csv(ctx.file("diffusion.csv"), dh);
  json rep = {{"potential", m.potential}, {"freq", m.freq},       {"n_cells", m.n_cells},
              {"p", m.p},                 {"Z", z},               {"d_bar_hom", dbar},
              {"lambda_hom", lambda_hom}, {"d_bar_const", dbar_const}, {"gamma_const", dc[0]},
              {"sigma2_hom", s_hom},      {"sigma2_const", s_const},
              {"d_bar_hom_discrete", effective_diffusion_1d(a, dh)}};
  write_json_atomic(ctx.file("report.json"), rep);
  ctx.results = {{"d_bar_hom", dbar}, {"lambda_hom", lambda_hom}, {"sigma2_hom", s_hom}, {"sigma2_const", s_const}};
}

struct EtaArgs {
  std::string alphas = "1,2,3,4,5,6,7";
  double a = 0.0, b = 0.0;
  int max_iter = 1000;
  bool reconstruct = false;
  std::string eta = "fit";
};

inline void cmd_eta(const Model& m, const EtaArgs& o, Context& ctx) {
  const Potential pot = make_potential(m);
  const Assembly a = assemble(pot, Mesh(m.n_cells), m.p);
  const ConstraintSet cs = make_constraints(a, o.a, o.b);
  OptimConfig cfg;
  cfg.max_iter = o.max_iter;
  const std::vector<double> alphas = parse_list(o.alphas);
  for (double al : alphas)
    if (!(al > 0.0)) throw UsageError("alphas must be > 0");
  const auto sweep = alpha_sweep(a, cs, alphas, cfg);
  const EtaFit fit = fit_sweep(sweep);
  {
    CsvWriter w(ctx.file("eta_fit.csv"), {"alpha", "sigma2", "sigma3", "scaled_gap"});
    for (std::size_t i = 0; i < sweep.size(); ++i)
      w.row(sweep[i].alpha, sweep[i].report.sigma2, sweep[i].report.sigma3, fit.gaps3minus2[i]);
  }
  json runs = json::array();
  for (const auto& sp : sweep)
    runs.push_back({{"alpha", sp.alpha},
                    {"objective", sp.report.objective},
                    {"sigma2", sp.report.sigma2},
                    {"sigma3", sp.report.sigma3},
                    {"iterations", sp.report.iterations},
                    {"converged", sp.report.converged}});
  json rep = {{"potential", m.potential},
              {"n_cells", m.n_cells},
              {"fit", {{"K", fit.K}, {"eta", fit.eta}, {"residual", fit.residual},
                       {"zero_regime", fit.zero_regime}, {"in_range", fit.in_range}}},
              {"eta_star", eta_star()},
              {"runs", runs}};
  ctx.results = {{"eta", fit.eta}, {"K", fit.K}, {"zero_regime", fit.zero_regime}};
  if (o.reconstruct) {
    double eta = 0.0;
    if (o.eta == "fit") eta = std::max(0.0, fit.eta);
    else if (o.eta == "star") eta = eta_star();
    else eta = parse_list(o.eta).at(0);
    const OptimReport opt = maximize_spectral_gap(a, cs, cfg);
    Eigen::VectorXd u2 = opt.eig.vectors.col(1), u3 = opt.eig.vectors.col(2);
    const bool degenerate = opt.sigma3 - opt.sigma2 <= 1e-4 * opt.sigma2;
    if (degenerate) std::tie(u2, u3) = align_pair(u2, u3, a.mass, sweep.back().report.eig.vectors.col(1));
    const DiffusionVector dinf = d_star_infty(a, u2, u3, eta);
    const double dev = (dinf - opt.d_star).cwiseAbs().maxCoeff() / opt.d_star.cwiseAbs().maxCoeff();
    CsvWriter w(ctx.file("reconstruction.csv"), {"cell_index", "q_left", "d_star", "d_star_infty"});
    for (int n = 0; n < a.n; ++n) w.row(n, a.q_left[n], opt.d_star[n], dinf[n]);
    rep["reconstruction"] = {{"eta", eta},          {"eta_weight", eta_weight(eta)},
                             {"aligned", degenerate}, {"sup_rel_deviation", dev},
                             {"sigma2_opt", opt.sigma2}, {"sigma3_opt", opt.sigma3}};
    ctx.results["reconstruction_deviation"] = dev;
  }
  write_json_atomic(ctx.file("report.json"), rep);
}

struct PeriodizeArgs {
  std::string k_list = "1,2,3,5,8";
  double a = 0.0, b = 0.0;
  int max_iter = 1000;
};

inline void cmd_periodize(const Model& m, const PeriodizeArgs& o, int threads, Context& ctx) {
  const Potential pot = make_potential(m);
  OptimConfig cfg;
  cfg.max_iter = o.max_iter;
  const auto recs = periodized_study(pot, parse_int_list(o.k_list), m.p, o.a, o.b, cfg, threads);
  CsvWriter conv(ctx.file("convergence.csv"), {"k", "sigma2", "target"});
  json ks = json::array();
  for (const auto& r : recs) {
    conv.row(r.k, r.sigma2_opt, r.target);
    CsvWriter w(ctx.file("profile_k" + std::to_string(r.k) + ".csv"), {"q", "d_value", "d_hom"});
    const Assembly a1 = assemble(pot.with_frequency(r.k), Mesh(r.n_cells), m.p);
    for (int c = 0; c < kCellsPerPeriod; ++c) w.row(r.q_profile[c], r.d_profile[c], std::exp(a1.v_left[c]));
    ks.push_back({{"k", r.k},
                  {"n_cells", r.n_cells},
                  {"sigma2", r.sigma2_opt},
                  {"target", r.target},
                  {"relative_gap", (r.sigma2_opt - r.target) / r.target},
                  {"periodicity_deviation", r.periodicity_deviation},
                  {"hom_deviation", r.hom_deviation},
                  {"converged", r.report.converged},
                  {"iterations", r.report.iterations}});
  }
  write_json_atomic(ctx.file("report.json"), {{"potential", m.potential}, {"records", ks}});
  ctx.results = {{"records", ks}};
}

struct SampleArgs {
  std::string diffusion = "hom";
  double dt = 1e-4;
  std::int64_t n_steps = 100000;
  double q0 = 0.0;
  std::int64_t stride = 1;
};

inline void cmd_sample(const Model& m, const SampleArgs& o, std::uint64_t seed, Context& ctx) {
  const Potential pot = make_potential(m);
  const DiffusionField f = make_field(o.diffusion, pot, m);
  warn_width(f, o.dt);
  SamplerConfig c;
  c.dt = o.dt;
  c.n_steps = o.n_steps;
  c.seed = seed;
  c.q0 = o.q0;
  c.record_stride = o.stride;
  const ChainRun run = run_chain(pot, f, c);
  {
    CsvWriter w(ctx.file("trajectory.csv"), {"step", "time", "q_unfolded", "accepted"});
    for (std::size_t i = 0; i < run.positions.size(); ++i)
      w.row(run.steps[i], static_cast<double>(run.steps[i]) * o.dt, run.positions[i], static_cast<int>(run.accepted[i]));
  }
  json rep = field_json(o.diffusion, f, o.dt);
  rep["acceptance"] = run.acceptance();
  rep["rejection"] = run.rejection();
  rep["n_accepted"] = run.n_accepted;
  rep["n_proposed"] = run.n_proposed;
  write_json_atomic(ctx.file("report.json"), rep);
  ctx.results = {{"rejection", run.rejection()}, {"final_q", run.positions.back()}};
}

struct MsdArgs {
  std::string diffusion = "hom";
  double dt = 1e-4;
  int n_sim = 1000;
  double T = 10.0;
  std::int64_t stride = 1000;
  std::string window;
  double q0 = 0.0;
};

inline void cmd_msd(const Model& m, const MsdArgs& o, std::uint64_t seed, int threads, Context& ctx) {
  const Potential pot = make_potential(m);
  const DiffusionField f = make_field(o.diffusion, pot, m);
  warn_width(f, o.dt);
  double lo = 0.5 * o.T, hi = o.T;
  if (!o.window.empty()) {
    const auto w = parse_list(o.window);
    if (w.size() != 2) throw UsageError("--window expects lo,hi");
    lo = w[0];
    hi = w[1];
  }
  const MsdResult res = msd_curve(pot, f, o.n_sim, o.T, o.dt, o.stride, seed, o.q0, threads);
  {
    CsvWriter w(ctx.file("msd.csv"), {"t", "msd", "ci95"});
    for (const auto& p : res.curve) w.row(p.t, p.msd, p.ci95);
  }
  const double deff = effective_diffusion_estimate(res.curve, lo, hi);
  json rep = field_json(o.diffusion, f, o.dt);
  rep["Deff"] = deff;
  rep["window"] = {lo, hi};
  rep["dt"] = o.dt;
  rep["n_sim"] = o.n_sim;
  rep["acceptance"] = res.acceptance;
  write_json_atomic(ctx.file("report.json"), rep);
  ctx.results = {{"Deff", deff}};
}

struct Chi2Args {
  std::string diffusion = "hom";
  double dt = 1e-6;
  int n_samples = 10000;
  int n_bins = 50;
  std::int64_t n_steps = 100000;
  std::int64_t stride = 1000;
  std::string init = "uniform";
};

inline void cmd_chi2(const Model& m, const Chi2Args& o, std::uint64_t seed, int threads, Context& ctx) {
  const Potential pot = make_potential(m);
  const DiffusionField f = make_field(o.diffusion, pot, m);
  warn_width(f, o.dt);
  Chi2Init init;
  if (o.init == "uniform") init = Chi2Init::Uniform;
  else if (o.init == "gibbs") init = Chi2Init::Gibbs;
  else throw UsageError("--init expects uniform or gibbs");
  const auto curve = chi2_curve(pot, f, o.n_samples, o.n_bins, o.dt, o.n_steps, o.stride, seed, threads, init);
  {
    CsvWriter w(ctx.file("chi2.csv"), {"t", "chi2"});
    for (const auto& p : curve) w.row(p.t, p.chi2);
  }
  const double rate = chi2_decay_rate(curve, 0.0, curve.back().t);
  json rep = field_json(o.diffusion, f, o.dt);
  rep["decay_rate"] = rate;
  rep["noise_floor"] = std::sqrt(static_cast<double>(o.n_bins) / o.n_samples);
  write_json_atomic(ctx.file("report.json"), rep);
  ctx.results = {{"decay_rate", rate}, {"final_chi2", curve.back().chi2}};
}

struct TransitionArgs {
  std::string diffusion = "hom";
  double x0 = 0.36544;
  double dt = 5e-5;
  int n = 2000;
};

inline void cmd_transitions(const Model& m, const TransitionArgs& o, std::uint64_t seed, int threads, Context& ctx) {
  const Potential pot = make_potential(m);
  const DiffusionField f = make_field(o.diffusion, pot, m);
  warn_width(f, o.dt);
  const TransitionResult r = mean_transition_time(pot, f, o.x0, o.dt, o.n, seed, threads);
  json rep = field_json(o.diffusion, f, o.dt);
  rep["mean"] = r.mean;
  rep["ci95"] = r.ci95;
  rep["n"] = r.n;
  rep["rejection"] = r.rejection;
  rep["x0"] = o.x0;
  rep["dt"] = o.dt;
  write_json_atomic(ctx.file("report.json"), rep);
  ctx.results = {{"mean", r.mean}, {"ci95", r.ci95}, {"n", r.n}};
}

struct RejectArgs {
  std::string diffusion = "hom";
  double dt = 0.01;
  int grid = 1000;
  int n_proposals = 100000;
};

inline void cmd_rejectmap(const Model& m, const RejectArgs& o, std::uint64_t seed, int threads, Context& ctx) {
  const Potential pot = make_potential(m);
  const DiffusionField f = make_field(o.diffusion, pot, m);
  warn_width(f, o.dt);
  const auto map = rejection_probability_map(pot, f, o.dt, o.grid, o.n_proposals, seed, threads);
  {
    CsvWriter w(ctx.file("rejectmap.csv"), {"q", "reject_prob"});
    for (const auto& p : map) w.row(p.q, p.reject_prob);
  }
  const double mean = mean_rejection(map);
  json rep = field_json(o.diffusion, f, o.dt);
  rep["mean_rejection"] = mean;
  rep["dt"] = o.dt;
  write_json_atomic(ctx.file("report.json"), rep);
  ctx.results = {{"mean_rejection", mean}};
}

// Injects key=value lines of --config files right after the subcommand name.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  if (args.size() < 2) return args;
  std::vector<std::string> injected;
  for (std::size_t i = 2; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    if (path.empty()) continue;
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path + "'");
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      if (eq == std::string::npos) {
        if (!trim(line).empty()) throw UsageError("config line without '=': " + line);
        continue;
      }
      std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
      if (key.rfind("--", 0) == 0) key = key.substr(2);
      if (key == "config") continue;
      injected.push_back("--" + key + "=" + value);
    }
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

inline json collect_flags(const CLI::App* sub) {
  json flags = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    const bool is_flag = opt->get_expected_max() == 0;
    if (opt->count() > 0) flags[name] = is_flag ? std::string("true") : opt->as<std::string>();
    else flags[name] = is_flag ? std::string("false") : opt->get_default_str();
  }
  return flags;
}

}  // namespace detail

/// Expands a named paper replication into the runs it consists of.
inline std::vector<PresetRun> preset(const std::string& name, const std::string& out_dir) {
  auto opt = [](const std::string& pot, std::vector<std::string> extra = {}) {
    std::vector<std::string> a = {"optimize", "--potential", pot, "--n-cells", "1000"};
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  const std::string opt_file = "file:" + (fs::path(out_dir) / "opt" / "diffusion.csv").string();
  const std::vector<std::pair<std::string, std::string>> fields = {{"const", "const"}, {"hom", "hom"}, {"opt", opt_file}};
  std::vector<PresetRun> runs;
  if (name == "fig2" || name == "fig3") {
    const std::string pot = name == "fig2" ? "cos:1" : "cos:2";
    runs.push_back({"opt", opt(pot)});
    runs.push_back({"smoothmin", opt(pot, {"--alpha", "1"})});
    runs.push_back({"hom", {"homogenize", "--potential", pot}});
    runs.push_back({"eta", {"eta", "--potential", pot, "--alphas", "1,2,3,4,5,6,7", "--reconstruct", "--eta",
                            name == "fig2" ? "fit" : "star"}});
  } else if (name == "fig5") {
    runs.push_back({"opt", opt("sinsin")});
    runs.push_back({"hom", {"homogenize", "--potential", "sinsin"}});
  } else if (name == "table1") {
    for (const char* a : {"0", "0.2", "0.4", "0.6", "0.8", "1"})
      runs.push_back({std::string("a") + a, opt("sinsin", {"--lower-a", a})});
  } else if (name == "table2") {
    runs.push_back({"opt", opt("sinsin")});
    for (const auto& [n, f] : fields)
      runs.push_back({"sample_" + n, {"sample", "--potential", "sinsin", "--diffusion", f, "--dt", "1e-4",
                                      "--n-steps", "100000", "--stride", "100"}});
  } else if (name == "fig10") {
    runs.push_back({"opt", opt("sinsin")});
    for (const char* dt : {"1e-5", "1e-3", "1e-1"}) {
      const std::int64_t stride = std::max<std::int64_t>(1, std::llround(0.01 / std::stod(dt)));
      for (const auto& [n, f] : fields)
        runs.push_back({"msd_" + n + "_dt" + dt, {"msd", "--potential", "sinsin", "--diffusion", f, "--dt", dt,
                                                  "--n-sim", "2000", "--T", "10", "--stride", std::to_string(stride),
                                                  "--window", "5,10"}});
    }
  } else if (name == "fig11") {
    runs.push_back({"opt", opt("sinsin")});
    for (const auto& [n, f] : fields)
      runs.push_back({"chi2_" + n, {"chi2", "--potential", "sinsin", "--diffusion", f, "--dt", "1e-6",
                                    "--n-samples", "10000", "--n-bins", "50", "--n-steps", "100000",
                                    "--stride", "1000"}});
  } else if (name == "fig12") {
    runs.push_back({"opt", opt("sinsin")});
    runs.push_back({"opt_a0.2", opt("sinsin", {"--lower-a", "0.2"})});
    auto all = fields;
    all.emplace_back("opt_a0.2", "file:" + (fs::path(out_dir) / "opt_a0.2" / "diffusion.csv").string());
    for (const char* dt : {"1e-5", "1e-4", "1e-3", "1e-2"})
      for (const auto& [n, f] : all)
        runs.push_back({"rejectmap_" + n + "_dt" + dt, {"rejectmap", "--potential", "sinsin", "--diffusion", f,
                                                        "--dt", dt, "--grid-size", "1000", "--n-proposals", "10000"}});
  } else if (name == "fig13") {
    runs.push_back({"opt", opt("sinsin")});
    for (const auto& [n, f] : fields)
      runs.push_back({"transitions_" + n, {"transitions", "--potential", "sinsin", "--diffusion", f, "--x0",
                                           "0.36544", "--dt", "5e-5", "--n-transitions", "2000"}});
  } else if (name == "homog-fig8") {
    runs.push_back({"sinsin", {"periodize", "--potential", "sinsin", "--k-list", "1,2,3,5"}});
    runs.push_back({"cos2", {"periodize", "--potential", "cos:2", "--k-list", "1,2,3,5"}});
  } else {
    throw UnknownPreset("unknown preset '" + name +
                        "' (known: fig2, fig3, fig5, table1, table2, fig10, fig11, fig12, fig13, homog-fig8)");
  }
  for (auto& r : runs) {
    r.args.push_back("--out");
    r.args.push_back((fs::path(out_dir) / r.name).string());
  }
  return runs;
}

int run(const std::vector<std::string>& args_in);

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args);
}

inline int run(const std::vector<std::string>& args_in) {
  using namespace detail;
  const auto t0 = std::chrono::steady_clock::now();
  CLI::App app{"Spectral-gap optimal diffusions for overdamped Langevin dynamics on the torus", "optdiff"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Model model;
  Output output;

  auto* s_opt = app.add_subcommand("optimize", "maximize the spectral gap or its smooth-min surrogate");
  OptimizeArgs oa;
  add_model(s_opt, model);
  add_output(s_opt, output, false);
  s_opt->add_option("--lower-a", oa.a, "lower bound factor a");
  s_opt->add_option("--upper-b", oa.b, "upper bound factor b (0 = none)");
  s_opt->add_option("--alpha", oa.alpha, "smooth-min parameter (enables the surrogate)");
  s_opt->add_option("--init", oa.init, "hom, const or file:<diffusion.csv>");
  s_opt->add_option("--max-iter", oa.max_iter)->check(CLI::PositiveNumber);
  s_opt->add_option("--tol", oa.tol, "projected-gradient tolerance")->check(CLI::PositiveNumber);
  s_opt->add_option("--n-eigs", oa.n_eigs, "eigenvalues written to spectrum.csv")->check(CLI::PositiveNumber);
  s_opt->add_flag("--dump-matrices", oa.dump, "write A(D*) and B as (row, col, value) triplets");

  auto* s_hom = app.add_subcommand("homogenize", "closed-form homogenized diffusion and effective quantities");
  add_model(s_hom, model);
  add_output(s_hom, output, false);

  auto* s_eta = app.add_subcommand("eta", "alpha sweep of the smooth-min optimum and eta fit");
  EtaArgs ea;
  add_model(s_eta, model);
  add_output(s_eta, output, false);
  s_eta->add_option("--alphas", ea.alphas, "comma-separated alpha grid");
  s_eta->add_option("--lower-a", ea.a);
  s_eta->add_option("--upper-b", ea.b);
  s_eta->add_option("--max-iter", ea.max_iter)->check(CLI::PositiveNumber);
  s_eta->add_flag("--reconstruct", ea.reconstruct, "also build D*,inf from the optimum's eigenvectors");
  s_eta->add_option("--eta", ea.eta, "eta used for the reconstruction: fit, star or a number");

  auto* s_per = app.add_subcommand("periodize", "optimum for V(kq) with N = 200k against 4 pi^2 / Z");
  PeriodizeArgs pa;
  add_model(s_per, model);
  add_output(s_per, output, false);
  s_per->add_option("--k-list", pa.k_list, "comma-separated frequencies");
  s_per->add_option("--lower-a", pa.a);
  s_per->add_option("--upper-b", pa.b);
  s_per->add_option("--max-iter", pa.max_iter)->check(CLI::PositiveNumber);

  const char* diff_help = "const, hom or file:<diffusion.csv>";
  auto* s_sample = app.add_subcommand("sample", "single RWMH trajectory");
  SampleArgs sa;
  add_model(s_sample, model);
  add_output(s_sample, output, true);
  s_sample->add_option("--diffusion", sa.diffusion, diff_help);
  s_sample->add_option("--dt", sa.dt)->check(CLI::PositiveNumber);
  s_sample->add_option("--n-steps", sa.n_steps)->check(CLI::NonNegativeNumber);
  s_sample->add_option("--q0", sa.q0);
  s_sample->add_option("--stride", sa.stride)->check(CLI::PositiveNumber);

  auto* s_msd = app.add_subcommand("msd", "mean squared displacement and effective diffusion");
  MsdArgs ma;
  add_model(s_msd, model);
  add_output(s_msd, output, true);
  s_msd->add_option("--diffusion", ma.diffusion, diff_help);
  s_msd->add_option("--dt", ma.dt)->check(CLI::PositiveNumber);
  s_msd->add_option("--n-sim", ma.n_sim)->check(CLI::Range(2, 1 << 30));
  s_msd->add_option("--T", ma.T)->check(CLI::PositiveNumber);
  s_msd->add_option("--stride", ma.stride)->check(CLI::PositiveNumber);
  s_msd->add_option("--window", ma.window, "regression window lo,hi (default T/2,T)");
  s_msd->add_option("--q0", ma.q0);

  auto* s_chi = app.add_subcommand("chi2", "binned chi-square distance to the Gibbs density over time");
  Chi2Args ca;
  add_model(s_chi, model);
  add_output(s_chi, output, true);
  s_chi->add_option("--diffusion", ca.diffusion, diff_help);
  s_chi->add_option("--dt", ca.dt)->check(CLI::PositiveNumber);
  s_chi->add_option("--n-samples", ca.n_samples)->check(CLI::PositiveNumber);
  s_chi->add_option("--n-bins", ca.n_bins)->check(CLI::Range(2, 1 << 30));
  s_chi->add_option("--n-steps", ca.n_steps)->check(CLI::NonNegativeNumber);
  s_chi->add_option("--stride", ca.stride)->check(CLI::PositiveNumber);
  s_chi->add_option("--init", ca.init, "uniform or gibbs");

  auto* s_tr = app.add_subcommand("transitions", "mean time to move one period away from x0");
  TransitionArgs ta;
  add_model(s_tr, model);
  add_output(s_tr, output, true);
  s_tr->add_option("--diffusion", ta.diffusion, diff_help);
  s_tr->add_option("--x0", ta.x0);
  s_tr->add_option("--dt", ta.dt)->check(CLI::PositiveNumber);
  s_tr->add_option("--n-transitions", ta.n)->check(CLI::PositiveNumber);

  auto* s_rej = app.add_subcommand("rejectmap", "rejection probability of single proposals on a grid");
  RejectArgs ra;
  add_model(s_rej, model);
  add_output(s_rej, output, true);
  s_rej->add_option("--diffusion", ra.diffusion, diff_help);
  s_rej->add_option("--dt", ra.dt)->check(CLI::PositiveNumber);
  s_rej->add_option("--grid-size", ra.grid)->check(CLI::PositiveNumber);
  s_rej->add_option("--n-proposals", ra.n_proposals)->check(CLI::PositiveNumber);

  auto* s_pre = app.add_subcommand("preset", "run a named paper replication");
  std::string preset_name;
  bool preset_print = false;
  s_pre->add_option("name", preset_name, "fig2, fig3, fig5, table1, table2, fig10, fig11, fig12, fig13, homog-fig8")
      ->required();
  s_pre->add_option("--out", output.out, "output directory")->required();
  s_pre->add_flag("--force", output.force);
  s_pre->add_option("--threads", output.threads);
  s_pre->add_flag("--print", preset_print, "list the expanded runs without executing them");

  try {
    std::vector<std::string> args = expand_config(args_in);
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);  // CLI11 consumes a reversed vector
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const int threads = resolve_threads(output.threads);
    if (sub == s_pre) {
      const auto runs = preset(preset_name, output.out);
      if (preset_print) {
        for (const auto& r : runs) {
          std::cout << "optdiff";
          for (const auto& a : r.args) std::cout << ' ' << a;
          std::cout << '\n';
        }
        return 0;
      }
      prepare_dir(output.out, output.force);
      for (const auto& r : runs) {
        std::vector<std::string> argv = {"optdiff"};
        argv.insert(argv.end(), r.args.begin(), r.args.end());
        if (output.force) argv.push_back("--force");
        argv.push_back("--threads");
        argv.push_back(std::to_string(threads));
        std::cerr << "[preset " << preset_name << "] " << r.name << "\n";
        const int rc = run(argv);
        if (rc != 0) return rc;
      }
      return 0;
    }
    prepare_dir(output.out, output.force);
    Context ctx;
    ctx.dir = output.out;
    const std::uint64_t seed = output.seed;
    if (sub == s_opt) cmd_optimize(model, oa, ctx);
    else if (sub == s_hom) cmd_homogenize(model, ctx);
    else if (sub == s_eta) cmd_eta(model, ea, ctx);
    else if (sub == s_per) cmd_periodize(model, pa, threads, ctx);
    else if (sub == s_sample) cmd_sample(model, sa, seed, ctx);
    else if (sub == s_msd) cmd_msd(model, ma, seed, threads, ctx);
    else if (sub == s_chi) cmd_chi2(model, ca, seed, threads, ctx);
    else if (sub == s_tr) cmd_transitions(model, ta, seed, threads, ctx);
    else if (sub == s_rej) cmd_rejectmap(model, ra, seed, threads, ctx);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest;
    manifest["command"] = sub->get_name();
    manifest["argv"] = std::vector<std::string>(args_in.begin() + 1, args_in.end());
    manifest["flags"] = collect_flags(sub);
    manifest["seed"] = seed;
    manifest["version"] = kVersion;
    manifest["wall_time_s"] = wall;
    ctx.files.push_back("manifest.json");
    manifest["outputs"] = ctx.files;
    manifest["results"] = ctx.results;
    write_json_atomic(ctx.dir / "manifest.json", manifest);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace optdiff::cli
