#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fmmlu/driver.hpp"

using namespace fmmlu;

namespace {

struct Args {
  std::string geometry = "torus";
  std::vector<int> patches = {10, 5};
  int order = 4;
  double k = 0.97;
  double tol = 1e-6;
  double quad_tol = 0.0;
  int occupancy = 40;
  double rho = 1.5;
  double eta = 1.25;
  bool ppw = false;
  int angles = 64;
  unsigned seed = 1;
  std::string out;
  std::string compression = "proxy";
  bool separate_t = false;
  bool audit = false;
  int sources = 50;
  int targets = 50;
};

GeometryKind geometry_kind(const std::string& g) {
  if (g == "torus") return GeometryKind::Torus;
  if (g == "sphere") return GeometryKind::Sphere;
  return GeometryKind::Plate;
}

SolverOptions solver_options(const Args& a) {
  SolverOptions o;
  o.eps = a.tol;
  o.eps_q = a.quad_tol;
  o.eta = a.eta;
  o.occupancy = a.occupancy;
  o.proxy_rho = a.rho;
  o.separate_t = a.separate_t;
  o.audit_purity = a.audit;
  o.compression = a.compression == "dense" ? Compression::DenseFar : Compression::Proxy;
  return o;
}

std::vector<std::pair<int, int>> patch_rows(const Args& a) {
  if (a.patches.size() % 2) throw CLI::ValidationError("--patches", "expects pairs NU NV");
  std::vector<std::pair<int, int>> rows;
  for (size_t i = 0; i < a.patches.size(); i += 2) rows.emplace_back(a.patches[i], a.patches[i + 1]);
  return rows;
}

// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open " + path);
    }
  }
  std::ostream& stream() { return path_.empty() ? std::cout : file_; }
  void sidecar(const nlohmann::json& j) {
    if (path_.empty()) {
      std::cerr << j.dump(2) << "\n";
      return;
    }
    std::ofstream f(path_ + ".json");
    f << j.dump(2) << "\n";
  }

 private:
  std::string path_;
  std::ofstream file_;
};

nlohmann::json row_json(const ConvergenceRow& r) {
  return {{"p", r.p},     {"npatches", r.npatches}, {"n", r.n},   {"k", r.k},
          {"t_f", r.t_f}, {"t_s", r.t_s},           {"t_q", r.t_q}, {"m_f_bytes", r.m_f},
          {"n_0", r.n0},  {"eps_a", r.eps_a}};
}

int run_bvp(const Args& a) {
  const auto rows = patch_rows(a);
  const GeometryKind g = geometry_kind(a.geometry);
  const SurfaceDiscretization disc = make_geometry(g, rows[0].first, rows[0].second, a.order);
  BvpProblem prob;
  prob.disc = &disc;
  prob.geometry = g;
  prob.k = a.k;
  prob.sources = validation_sources(g, disc, a.sources, a.seed);
  prob.opts = solver_options(a);
  const ValidationReport rep = validate_point_sources(prob, a.targets, a.seed);
  Output out(a.out);
  write_rows_csv({rep.row}, out.stream());
  nlohmann::json j = row_json(rep.row);
  j["factorization"] = nlohmann::json::parse(rep.stats.to_json());
  j["max_target_error"] = rep.target_errors.maxCoeff();
  j["sigma_norm"] = rep.sigma_norm;
  out.sidecar(j);
  return 0;
}

int run_sweep(const Args& a) {
  SweepConfig c;
  c.geometry = geometry_kind(a.geometry);
  c.p = a.order;
  c.patches = patch_rows(a);
  c.k = a.k;
  c.ppw_mode = a.ppw;
  c.opts = solver_options(a);
  c.n_sources = a.sources;
  c.n_targets = a.targets;
  c.seed = a.seed;
  const SweepResult r = benchmark_sweep(c);
  Output out(a.out);
  write_rows_csv(r.rows, out.stream());
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const ConvergenceRow& row : r.rows) j["rows"].push_back(row_json(row));
  j["exponents"] = {{"t_f", r.exp_t_f}, {"t_s", r.exp_t_s}, {"t_q", r.exp_t_q}, {"m_f", r.exp_m_f},
                    {"n_0", r.exp_n0}};
  j["failures"] = r.failures;
  out.sidecar(j);
  for (const std::string& f : r.failures) std::cerr << "row failed: " << f << "\n";
  return r.failures.empty() ? 0 : 1;
}

int run_rcs(const Args& a) {
  const auto rows = patch_rows(a);
  const SurfaceDiscretization disc = make_geometry(geometry_kind(a.geometry), rows[0].first, rows[0].second, a.order);
  std::vector<double> phi;
  for (int i = 0; i < a.angles; ++i) phi.push_back(2.0 * std::numbers::pi * i / a.angles);
  FactorStats st;
  const std::vector<RcsSample> r = monostatic_rcs(disc, a.k, phi, solver_options(a), &st);
  Output out(a.out);
  out.stream() << "phi,re_R,im_R,abs_R\n";
  for (const RcsSample& s : r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.12g,%.12e,%.12e,%.12e\n", s.phi, s.R.real(), s.R.imag(), std::abs(s.R));
    out.stream() << buf;
  }
  nlohmann::json j = nlohmann::json::parse(st.to_json());
  j["angles"] = a.angles;
  j["k"] = a.k;
  out.sidecar(j);
  return 0;
}

int run_tree_stats(const Args& a) {
  const auto rows = patch_rows(a);
  const SurfaceDiscretization disc = make_geometry(geometry_kind(a.geometry), rows[0].first, rows[0].second, a.order);
  const Octree tree = enforce_level_restriction(build_tree(disc.nodes, a.occupancy));
  Output out(a.out);
  out.stream() << tree.stats_json() << "\n";
  return 0;
}

void add_common(CLI::App* app, Args& a) {
  app->add_option("--geometry", a.geometry)->check(CLI::IsMember({"torus", "sphere", "plate"}));
  app->add_option("--patches", a.patches, "NU NV (sphere: patches per cube edge; plate: NU = refine depth)")
      ->expected(2, 64);
  app->add_option("--order", a.order, "nodes per patch direction")->check(CLI::Range(2, 16));
  app->add_option("--wavenumber", a.k);
  app->add_option("--tol", a.tol)->check(CLI::PositiveNumber);
  app->add_option("--quad-tol", a.quad_tol, "near quadrature tolerance (default tol / 10)");
  app->add_option("--occupancy", a.occupancy)->check(CLI::PositiveNumber);
  app->add_option("--proxy-rho", a.rho);
  app->add_option("--near-eta", a.eta)->check(CLI::PositiveNumber);
  app->add_flag("--ppw-mode", a.ppw, "scale k with sqrt(npatches) across sweep rows");
  app->add_option("--angles", a.angles)->check(CLI::PositiveNumber);
  app->add_option("--seed", a.seed);
  app->add_option("--out", a.out, "output file; a .json sidecar is written next to it");
  app->add_option("--compression", a.compression)->check(CLI::IsMember({"proxy", "dense"}));
  app->add_flag("--separate-t", a.separate_t);
  app->add_flag("--audit", a.audit, "exhaustive purity audit (quadratic cost)");
  app->add_option("--sources", a.sources)->check(CLI::PositiveNumber);
  app->add_option("--targets", a.targets)->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FMM-LU direct solver for the exterior Helmholtz Dirichlet problem"};
  app.set_config("--config", "", "key = value file mirroring the flags; flags win");
  app.require_subcommand(1);
  app.fallthrough();
  Args a;
  add_common(&app, a);
  CLI::App* bvp = app.add_subcommand("bvp", "one solve with point-source validation");
  CLI::App* sweep = app.add_subcommand("sweep", "benchmark table over --patches rows");
  CLI::App* rcs = app.add_subcommand("rcs", "monostatic cross section over --angles azimuths");
  CLI::App* ts = app.add_subcommand("tree-stats", "octree statistics as JSON");
  CLI11_PARSE(app, argc, argv);
  try {
    if (*bvp) return run_bvp(a);
    if (*sweep) return run_sweep(a);
    if (*rcs) return run_rcs(a);
    return run_tree_stats(a);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
