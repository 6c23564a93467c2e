// lipvar: batch front end. Commands: verify, run <config.json>, graph gen|inspect.
// Exit codes: 0 success, 1 invariant failure, 2 configuration or usage error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "lipvar/lipvar.hpp"
#include "lipvar/verify.hpp"

namespace fs = std::filesystem;
using namespace lipvar;
using cli::ConfigError;
using cli::json;
using cli::RunConfig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitConfig = 2;

struct Outputs {
  fs::path dir;
  std::vector<std::string> files;

  std::ofstream open(const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw Error("cannot write '" + (dir / name).string() + "'");
    files.push_back(name);
    return out;
  }
};

io::ResultRow base_row(const RunConfig& rc, const std::string& experiment, double h) {
  io::ResultRow r;
  r.experiment = experiment;
  r.graph = geometry::detail::kind_name(rc.exp.graph.kind);
  r.lip = harness::graph_lip(rc.exp.graph);
  r.kernel = rc.exp.kernel;
  r.rho = rc.exp.rho;
  r.p = rc.exp.p;
  r.h = h;
  r.stability_factor = 1.0;
  return r;
}

std::string point_label(const geometry::DiscreteMeasure& mu, std::size_t i) {
  std::string s = "x=";
  const auto p = mu.point(i);
  for (std::size_t k = 0; k < p.size(); ++k) s += (k ? ";" : "") + io::fmt(p[k]);
  return s;
}

variation::WindowSpec windows_for(const RunConfig& rc) {
  if (!rc.exp.window_boundaries.empty()) return variation::WindowSpec(rc.exp.window_boundaries);
  return variation::WindowSpec::dyadic(rc.exp.eps.eps_max, rc.exp.eps.eps_min);
}

// ---- experiments; each returns true when every checked invariant held

bool run_transform(const RunConfig& rc, Outputs& out, std::vector<io::ResultRow>& rows, int jobs) {
  const double h = rc.exp.resolutions.front();
  const auto mu = harness::build_measure(rc.exp, h);
  const auto kernel = harness::make_kernel(rc.exp.kernel, mu.n(), mu.d());
  const auto grid = rc.exp.eps.build();
  const auto f = harness::test_function(mu, rc.test_functions.front(), rc.exp.test_cube, rc.exp.seed);
  const auto pts = harness::evaluation_points(mu, rc.exp.eval_window, rc.exp.eval_points);
  std::vector<transforms::SampledFamily> fams(pts.size());
  parallel_for(
      pts.size(),
      [&](std::size_t k) {
        fams[k] = transforms::sample_family(kernel, mu, f, mu.point(pts[k].index), grid, transforms::Mode::smooth);
      },
      jobs);
  std::vector<double> maximal(pts.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "family_%03zu.csv", k);
    auto os = out.open(name);
    io::write_family_csv(os, fams[k]);
    maximal[k] = transforms::maximal(fams[k]);
    if (maximal[k] > maximal[best]) best = k;
  }
  auto row = base_row(rc, "transform:maximal_ratio", h);
  row.ratio = harness::weighted_lp(maximal, pts, rc.exp.p) / harness::lp_norm(mu, f, rc.exp.p);
  row.witness = point_label(mu, pts[best].index);
  rows.push_back(row);
  return true;
}

bool run_variation(const RunConfig& rc, Outputs& out, std::vector<io::ResultRow>& rows, int jobs) {
  const double h = rc.exp.resolutions.front();
  const auto mu = harness::build_measure(rc.exp, h);
  const auto kernel = harness::make_kernel(rc.exp.kernel, mu.n(), mu.d());
  const auto grid = rc.exp.eps.build();
  const auto windows = windows_for(rc);
  const auto f = harness::test_function(mu, rc.test_functions.front(), rc.exp.test_cube, rc.exp.seed);
  const auto pts = harness::evaluation_points(mu, rc.exp.eval_window, rc.exp.eval_points);
  std::vector<transforms::SampledFamily> fams(pts.size());
  parallel_for(
      pts.size(),
      [&](std::size_t k) {
        fams[k] = transforms::sample_family(kernel, mu, f, mu.point(pts[k].index), grid, transforms::Mode::smooth);
      },
      jobs);
  auto os = out.open("variation.csv");
  for (int i = 1; i <= mu.d(); ++i) os << (i > 1 ? "," : "") << "x" << i;
  os << ",v_rho,v2,oscillation,short\n";
  harness::FamilyInequalityReport ineq;
  std::vector<double> vr(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto& fam = fams[k];
    vr[k] = variation::rho_variation(fam, rc.exp.rho).value;
    for (double v : mu.point(pts[k].index)) os << io::fmt(v) << ",";
    os << io::fmt(vr[k]) << "," << io::fmt(variation::rho_variation(fam, 2.0).value) << ","
       << io::fmt(variation::oscillation(fam, windows)) << "," << io::fmt(variation::short_variation(fam)) << "\n";
    harness::check_family_inequalities(fam.values, grid.values(), windows, 1e-9, ineq);
  }
  auto row = base_row(rc, "variation:operator_ratio", h);
  row.ratio = harness::weighted_lp(vr, pts, rc.exp.p) / harness::lp_norm(mu, f, rc.exp.p);
  row.witness = "inequalities_checked=" + std::to_string(ineq.checked) + ";violations=" + std::to_string(ineq.violations);
  rows.push_back(row);
  if (ineq.violations > 0) {
    std::cerr << "invariant failure: " << ineq.violations << " pointwise inequality violations (worst "
              << ineq.worst_name << " by " << io::fmt(ineq.worst) << ")\n";
  }
  return ineq.violations == 0;
}

coefficients::PackingOptions packing_options(const RunConfig& rc, int jobs) {
  coefficients::PackingOptions po;
  po.max_depth = rc.coeffs.max_depth;
  po.alpha = rc.coeffs.alpha;
  po.beta_window = rc.coeffs.beta_window;
  po.jobs = jobs;
  return po;
}

bool run_coeffs(const RunConfig& rc, Outputs& out, std::vector<io::ResultRow>& rows, int jobs, bool packing) {
  const double h = rc.exp.resolutions.front();
  const auto mu = harness::build_measure(rc.exp, h);
  const auto res = coefficients::packing_sum(mu, rc.coeffs.root, packing_options(rc, jobs));
  auto os = out.open("coefficients.csv");
  io::write_coefficients_csv(os, res.cubes, mu.n());
  const double m = geometry::mass(mu, rc.coeffs.root);
  if (packing) {
    auto ps = out.open("packing.csv");
    ps << "gen,subtotal\n";
    double decay = 0.0;
    for (std::size_t g = 0; g < res.per_generation.size(); ++g) {
      ps << g << "," << io::fmt(res.per_generation[g]) << "\n";
      if (g > 0 && res.per_generation[g - 1] > 0.0) {
        decay = std::max(decay, res.per_generation[g] / res.per_generation[g - 1]);
      }
    }
    auto row = base_row(rc, "packing:sum_per_mass", h);
    row.ratio = m > 0.0 ? res.sum / m : 0.0;
    row.stability_factor = decay;
    row.witness = "max_generation_ratio";
    rows.push_back(row);
  } else {
    double worst_alpha = 0.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < res.cubes.size(); ++i) {
      if (res.cubes[i].alpha > worst_alpha) {
        worst_alpha = res.cubes[i].alpha;
        arg = i;
      }
    }
    auto row = base_row(rc, "coeffs:max_alpha", h);
    row.ratio = worst_alpha;
    if (!res.cubes.empty()) row.witness = "cube=" + std::to_string(arg);
    rows.push_back(row);
  }
  return true;
}

bool run_martingale(const RunConfig& rc, Outputs& out, std::vector<io::ResultRow>& rows, int jobs) {
  std::vector<double> lep;
  for (std::size_t hi = 0; hi < rc.exp.resolutions.size(); ++hi) {
    const double h = rc.exp.resolutions[hi];
    const auto mu = harness::build_measure(rc.exp, h);
    const auto kernel = harness::make_kernel(rc.exp.kernel, mu.n(), mu.d());
    const martingale::MartingaleEngine engine(mu, kernel, jobs);
    if (hi == 0) {
      const auto pts = harness::evaluation_points(mu, rc.exp.eval_window, rc.exp.eval_points);
      std::vector<martingale::WProfile> profs(pts.size());
      parallel_for(
          pts.size(),
          [&](std::size_t k) { profs[k] = martingale::w_diagnostic(engine, mu.point(pts[k].index), rc.mart.config); },
          jobs);
      std::vector<io::MartingaleRow> mrows;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto x = mu.point(pts[k].index);
        for (const auto& e : profs[k].entries) {
          mrows.push_back(io::MartingaleRow{std::vector<double>(x.begin(), x.end()), e.m, e.em, e.partial});
        }
      }
      auto os = out.open("martingale.csv");
      io::write_martingale_csv(os, mrows, mu.d());
    }
    const auto rep = martingale::lepingle_ratio(engine, rc.mart.lepingle_cube, rc.mart.config, 3.0, std::nullopt, jobs);
    lep.push_back(rep.ratio);
    auto row = base_row(rc, "martingale:lepingle_ratio", h);
    row.ratio = rep.ratio;
    row.stability_factor = harness::stability_factor(lep);
    row.witness = "points=" + std::to_string(rep.points);
    rows.push_back(row);
  }
  return true;
}

bool run_sweep(const RunConfig& rc, Outputs&, std::vector<io::ResultRow>& rows, int jobs) {
  const auto res = harness::refinement_sweep(rc.exp, rc.test_functions, jobs);
  const std::size_t kinds = rc.test_functions.size();
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    const auto& rec = res.records[i];
    auto row = base_row(rc, "sweep:" + rec.function, rec.h);
    row.ratio = rec.ratio;
    row.stability_factor = res.stability[i % kinds];
    row.witness = "support_index=" + std::to_string(rec.witness);
    rows.push_back(row);
  }
  return true;
}

bool run_endpoints(const RunConfig& rc, Outputs&, std::vector<io::ResultRow>& rows, int jobs) {
  std::vector<double> atom, bmo, weak, jumps, cot;
  for (double h : rc.exp.resolutions) {
    const auto rep = harness::endpoint_diagnostics(rc.exp, h, jobs);
    const auto c = harness::cotlar_check(rc.exp, h, jobs);
    atom.push_back(rep.atom_integral);
    bmo.push_back(rep.bmo_oscillation);
    weak.push_back(rep.weak_l1_profile);
    jumps.push_back(rep.jump_norms.empty() ? 0.0 : *std::max_element(rep.jump_norms.begin(), rep.jump_norms.end()));
    cot.push_back(c.c0);
    auto add = [&](const std::string& name, const std::vector<double>& series, const std::string& witness) {
      auto row = base_row(rc, "endpoints:" + name, h);
      row.ratio = series.back();
      row.stability_factor = harness::stability_factor(series);
      row.witness = witness;
      rows.push_back(row);
    };
    add("atom_integral", atom, "");
    add("bmo_oscillation", bmo, "");
    add("weak_l1_profile", weak, "");
    add("max_jump_norm", jumps, "ladder=" + std::to_string(rep.jump_norms.size()));
    add("cotlar_c0", cot, "support_index=" + std::to_string(c.witness_point) + ";eps=" + io::fmt(c.witness_eps));
  }
  return true;
}

std::string iso_time() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

int cmd_run(const std::string& file, std::optional<std::uint64_t> seed, bool diagnostic, const fs::path& out_dir,
            int jobs) {
  RunConfig rc = cli::load_config(file);
  cli::finalize_config(rc, seed, diagnostic);
  fs::create_directories(out_dir);
  Outputs out{out_dir, {}};
  std::vector<io::ResultRow> rows;
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  const auto& e = rc.experiment;
  if (e == "transform") ok = run_transform(rc, out, rows, jobs);
  else if (e == "variation") ok = run_variation(rc, out, rows, jobs);
  else if (e == "coeffs") ok = run_coeffs(rc, out, rows, jobs, false);
  else if (e == "packing") ok = run_coeffs(rc, out, rows, jobs, true);
  else if (e == "martingale") ok = run_martingale(rc, out, rows, jobs);
  else if (e == "sweep") ok = run_sweep(rc, out, rows, jobs);
  else if (e == "endpoints") ok = run_endpoints(rc, out, rows, jobs);
  {
    auto os = out.open("results.csv");
    io::write_results_csv(os, rows);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest;
  manifest["tool"] = "lipvar";
  manifest["version"] = kVersion;
  manifest["schema_version"] = cli::kSchemaVersion;
  manifest["experiment"] = e;
  manifest["seed"] = rc.exp.seed;
  manifest["diagnostic"] = rc.exp.diagnostic;
  manifest["jobs"] = resolve_jobs(jobs);
  manifest["config"] = rc.snapshot;
  manifest["config_file"] = file;
  manifest["outputs"] = out.files;
  manifest["started"] = iso_time();
  manifest["seconds"] = seconds;
  manifest["invariants_ok"] = ok;
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << "\n";
  std::cout << "wrote " << out.files.size() + 1 << " files to " << out_dir.string() << "\n";
  return ok ? kExitOk : kExitInvariant;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const fs::path& out_dir, int jobs,
               const std::string& fault) {
  if (suite != "fast" && suite != "full") throw ConfigError("verify: suite must be 'fast' or 'full'");
  verify::Options opt;
  opt.full = suite == "full";
  opt.seed = seed;
  opt.jobs = jobs;
  try {
    opt.fault = verify::parse_fault(fault);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  const auto rep = verify::run(opt);
  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / ("verify_" + suite + ".csv"));
  verify::write_summary_csv(csv, rep);
  std::size_t failed = 0;
  for (const auto& c : rep.checks) {
    if (c.passed) continue;
    ++failed;
    std::cout << "FAIL " << c.module << "/" << c.op << " [" << c.invariant << "] seed=" << c.seed
              << " value=" << io::fmt(c.value) << " tol=" << io::fmt(c.tolerance)
              << (c.detail.empty() ? "" : " " + c.detail) << "\n";
  }
  std::cout << "verify " << suite << ": " << rep.checks.size() - failed << "/" << rep.checks.size()
            << " invariants hold; summary in " << (out_dir / ("verify_" + suite + ".csv")).string() << "\n";
  return failed == 0 ? kExitOk : kExitInvariant;
}

geometry::FamilySpec family_from_flags(const std::string& family, double slope, double period, double corner_at,
                                       double lip, std::uint64_t graph_seed, int levels) {
  geometry::FamilySpec g;
  g.kind = cli::parse_family(family, "--family");
  if (g.kind == geometry::FamilyKind::from_samples) throw ConfigError("--family: use 'graph inspect FILE' for samples");
  g.slope = slope;
  g.period = period;
  g.corner_at = corner_at;
  g.lip = lip;
  g.seed = graph_seed;
  g.levels = levels;
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lipvar: variation of singular integrals on Lipschitz graphs"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.set_version_flag("--version", std::string(kVersion));

  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::string out_dir = "out";
  bool diagnostic = false;
  std::string fault;
  app.add_option("--seed", seed, "Seed overriding the configuration");
  app.add_option("--jobs", jobs, "Worker threads (default: logical cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out_dir, "Output directory");
  app.add_flag("--diagnostic", diagnostic, "Allow rho <= 2 (diagnostic runs)");
  app.add_option("--inject-fault", fault)->group("");

  auto* verify_cmd = app.add_subcommand("verify", "Run the invariant suite");
  std::string suite = "fast";
  verify_cmd->add_option("suite", suite, "fast | full");

  auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a JSON config");
  std::string config_file;
  run_cmd->add_option("config", config_file, "Config file")->required();

  auto* graph_cmd = app.add_subcommand("graph", "Generate or inspect graph samples");
  graph_cmd->require_subcommand(1);
  std::string family = "flat";
  double slope = 1.0, period = 0.25, corner_at = 0.0, lip = 1.0, lo = 0.0, hi = 1.0;
  std::uint64_t graph_seed = 0;
  int levels = 4, count = 257;
  std::string output;
  auto add_family = [&](CLI::App* c) {
    c->add_option("--family", family, "flat | sawtooth | corner | multiscale");
    c->add_option("--slope", slope);
    c->add_option("--period", period);
    c->add_option("--corner-at", corner_at);
    c->add_option("--lip", lip);
    c->add_option("--graph-seed", graph_seed);
    c->add_option("--levels", levels);
    c->add_option("--lo", lo, "Left end of the base interval");
    c->add_option("--hi", hi, "Right end of the base interval");
  };
  auto* gen_cmd = graph_cmd->add_subcommand("gen", "Write x1,a1 samples of a built-in graph");
  add_family(gen_cmd);
  gen_cmd->add_option("--count", count, "Number of samples")->check(CLI::Range(2, 100000000));
  gen_cmd->add_option("-o,--output", output, "Output file (default: stdout)");
  auto* inspect_cmd = graph_cmd->add_subcommand("inspect", "Report lip estimate, mass and extent");
  add_family(inspect_cmd);
  std::string inspect_file;
  inspect_cmd->add_option("file", inspect_file, "Graph sample CSV (default: the --family graph)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  default_jobs().store(jobs);

  try {
    if (verify_cmd->parsed()) return cmd_verify(suite, seed.value_or(1), out_dir, jobs, fault);
    if (run_cmd->parsed()) return cmd_run(config_file, seed, diagnostic, out_dir, jobs);
    if (gen_cmd->parsed()) {
      if (!(hi > lo)) throw ConfigError("graph gen: need --hi > --lo");
      const auto g = geometry::build_graph(family_from_flags(family, slope, period, corner_at, lip, graph_seed, levels));
      const auto table = io::sample_graph(g, lo, hi, count);
      if (output.empty()) {
        io::write_graph_csv(std::cout, table);
      } else {
        std::ofstream os(output);
        if (!os) throw Error("cannot write '" + output + "'");
        io::write_graph_csv(os, table);
      }
      return kExitOk;
    }
    if (inspect_cmd->parsed()) {
      geometry::FamilySpec spec;
      if (!inspect_file.empty()) {
        std::ifstream in(inspect_file);
        if (!in) throw ConfigError("graph inspect: cannot open '" + inspect_file + "'");
        try {
          spec.table = io::read_graph_csv(in);
        } catch (const InvalidArgument& e) {
          throw ConfigError(std::string("graph inspect: ") + e.what());
        }
        spec.kind = geometry::FamilyKind::from_samples;
        spec.d = spec.table.n + spec.table.codim;
        lo = spec.table.rows.front()[0];
        hi = spec.table.rows.back()[0];
      } else {
        spec = family_from_flags(family, slope, period, corner_at, lip, graph_seed, levels);
      }
      if (!(hi > lo)) throw ConfigError("graph inspect: empty base interval");
      const auto g = geometry::build_graph(spec);
      const auto base = geometry::VCube::from_lower({lo}, hi - lo);
      // Tables report their exact maximal slope; built-in graphs are probed on a fine grid.
      const double estimate = inspect_file.empty() ? geometry::estimate_lip(g, base, 4096) : g.lip();
      const auto mu = geometry::sample_measure(g, base, (hi - lo) / 4096, geometry::unit_density());
      json rep;
      rep["family"] = g.family();
      rep["lip_estimate"] = estimate;
      rep["declared_lip"] = g.lip();
      rep["mass"] = mu.total_mass();
      rep["extent"] = {lo, hi};
      std::cout << rep.dump(2) << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitOk;
}
