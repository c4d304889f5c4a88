#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "volball/dem.hpp"
#include "volball/drivers.hpp"
#include "volball/fem.hpp"
#include "volball/mesh_io.hpp"
#include "volball/remesh.hpp"
#include "volball/report.hpp"
#include "volball/shapes.hpp"
#include "volball/stats.hpp"

namespace fs = std::filesystem;
using namespace volball;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverArgs {
  SolverConfig config;
  std::string population;
  std::string boundary;
  bool no_correction = false;
};

void add_solver_options(CLI::App* app, SolverArgs& a) {
  app->add_option("--dt", a.config.dt, "Time step");
  app->add_option("--eps", a.config.eps, "Stopping tolerance");
  app->add_option("--max-iter", a.config.n_max, "Maximum number of iterations");
  app->add_option("--kt", a.config.K_T, "Truncation threshold K_T");
  app->add_option("--c-residual", a.config.C, "Residual constant C");
  app->add_option("--alpha", a.config.alpha, "Weight of the geometric term (3ddeq)");
  app->add_option("--population", a.population, "uniform | volume | file:PATH");
  app->add_option("--boundary", a.boundary, "Boundary map: conformal | dem")
      ->check(CLI::IsMember({"conformal", "dem"}));
  app->add_option("--seed", a.config.seed, "Seed recorded in the report");
  app->add_flag("--no-correction", a.no_correction, "Disable the overlap correction");
}

SolverConfig finish_config(const SolverArgs& a) {
  SolverConfig c = a.config;
  if (a.boundary == "conformal") c.boundary_mode = BoundaryMode::conformal;
  if (a.boundary == "dem") c.boundary_mode = BoundaryMode::density_equalizing;
  c.correction = !a.no_correction;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

std::optional<PopulationInput> read_population(const std::string& spec, const TetMesh& mesh) {
  if (spec.empty()) return std::nullopt;
  PopulationInput p;
  if (spec == "uniform") {
    p.values.assign(mesh.num_tets(), 1.0);
  } else if (spec == "volume") {
    p.values = tet_volumes(mesh, mesh.vertices());
  } else if (spec.rfind("file:", 0) == 0) {
    PopulationData d = load_population_csv(spec.substr(5), mesh.num_tets(), mesh.num_vertices());
    p.values = std::move(d.values);
    p.vertex_density = d.kind == PopulationData::Kind::vertex_density;
  } else {
    throw UsageError("--population must be uniform, volume or file:PATH");
  }
  return p;
}

MeshFormat output_format(const fs::path& input) {
  const MeshFormat f = format_from_path(input);
  return f == MeshFormat::vtk ? MeshFormat::medit : f;
}

std::string extension(MeshFormat f) { return f == MeshFormat::gmsh2 ? ".msh" : ".mesh"; }

struct ParamArgs {
  SolverArgs solver;
  std::string method;
  std::string input;
  std::string outdir;
  std::string report;
  std::string trace;
  int resolution = kDefaultBallResolution;
};

RunResult run_method(const TetMesh& mesh, const ParamArgs& a, const SolverConfig& config) {
  if (a.method == "3dqc") return run_3dqc(mesh, config);
  const auto pop = read_population(a.solver.population, mesh);
  if (!pop) throw UsageError("--population is required for " + a.method);
  return a.method == "3ddem" ? run_3ddem(mesh, *pop, config) : run_3ddeq(mesh, *pop, config);
}

void write_run_outputs(const TetMesh& mesh, const ParamArgs& a, const RunResult& r, const Json& report) {
  const fs::path out(a.outdir);
  const MeshFormat fmt = output_format(a.input);
  save_mesh(out / ("result" + extension(fmt)), r.positions, mesh.tets(), fmt);
  save_mesh(out / "result.vtk", r.positions, mesh.tets(), MeshFormat::vtk, {{"K", r.K}});
  write_json(a.report.empty() ? out / "report.json" : fs::path(a.report), report);
  write_trace_csv(a.trace.empty() ? out / "trace.csv" : fs::path(a.trace), r.report);
  write_histogram_csv(out / "hist_K.csv", make_histogram(r.K));
  if (!r.rho_vertex.empty()) {
    const double mu = mean(r.rho_vertex);
    std::vector<double> rho_bar;
    for (double v : r.rho_vertex) rho_bar.push_back(v / mu);
    write_histogram_csv(out / "hist_rho.csv", make_histogram(rho_bar));
  }
}

int cmd_param(const ParamArgs& a) {
  const SolverConfig config = finish_config(a.solver);
  const TetMesh mesh = load_mesh(a.input);
  const RunResult r = run_method(mesh, a, config);
  write_run_outputs(mesh, a, r, report_to_json(r.report));
  std::cout << "method " << a.method << ": " << r.report.iterations.size() - 1 << " iterations, var_rho "
            << r.report.final.var_rho << ", mean K " << r.report.final.mean_K << ", folds " << r.report.final.folds
            << (r.report.converged ? ", converged\n" : ", stopped at max-iter\n");
  return r.report.converged ? 0 : 2;
}

int cmd_remesh(const ParamArgs& a) {
  const SolverConfig config = finish_config(a.solver);
  if (a.resolution < 1) throw UsageError("--resolution must be at least 1");
  const TetMesh mesh = load_mesh(a.input);
  RunResult r = run_method(mesh, a, config);
  const TetMesh templ = uniform_ball_mesh(a.resolution);
  const PullbackResult pb = pullback(mesh, r.positions, templ);
  const RemeshQuality q = quality_metrics(templ, pb.positions);
  r.report.final.delta_size = q.delta_size;
  r.report.final.delta_shape = q.delta_shape;
  write_run_outputs(mesh, a, r, report_to_json(r.report));

  const fs::path out(a.outdir);
  const MeshFormat fmt = output_format(a.input);
  const std::vector<double> K = distortion(templ, pb.positions);
  save_mesh(out / ("remeshed" + extension(fmt)), pb.positions, templ.tets(), fmt);
  save_mesh(out / "remeshed.vtk", pb.positions, templ.tets(), MeshFormat::vtk, {{"K", K}, {"R", q.regularity}});
  MetricsRow row;
  row.manifold = fs::path(a.input).stem().string();
  row.elements = templ.num_tets();
  row.mean_K = mean(K);
  row.sd_K = stddev(K);
  row.overlaps = count_folds(templ, pb.positions);
  row.delta_size = q.delta_size;
  row.delta_shape = q.delta_shape;
  Json m = metrics_to_json(row);
  m["snapped"] = pb.snapped;
  write_json(out / "remesh_metrics.json", m);
  std::cout << "remeshed " << templ.num_tets() << " tets: delta_size " << q.delta_size << ", delta_shape "
            << q.delta_shape << ", overlaps " << row.overlaps << ", snapped " << pb.snapped << '\n';
  return r.report.converged ? 0 : 2;
}

struct InitArgs {
  SolverArgs solver;
  std::string input;
  std::string output;
};

int cmd_init_ball(const InitArgs& a) {
  const SolverConfig config = finish_config(a.solver);
  const TetMesh mesh = load_mesh(a.input);
  const BoundaryMode mode = config.boundary_mode.value_or(BoundaryMode::conformal);
  std::vector<double> face_population;
  if (mode == BoundaryMode::density_equalizing) {
    const auto pop = read_population(a.solver.population.empty() ? "volume" : a.solver.population, mesh);
    if (pop->vertex_density) throw UsageError("init-ball takes per-tet populations");
    face_population = default_face_population(mesh, pop->values);
  }
  const BallInit b = initialize_ball(mesh, mode, face_population, config.K_T, config.correction);
  save_mesh(a.output, b.positions, mesh.tets());
  Json j;
  j["harmonic_folds"] = b.harmonic_folds;
  j["folds"] = count_folds(mesh, b.positions);
  j["mean_K"] = mean(distortion(mesh, b.positions));
  std::cout << j.dump(2) << '\n';
  return 0;
}

struct MetricsArgs {
  std::string rest;
  std::string mapped;
  std::string population;
  std::string name;
  std::string output;
};

int cmd_metrics(const MetricsArgs& a) {
  const RawMesh raw = load_raw_mesh(a.rest);
  const TetMesh mesh = load_mesh(a.rest);
  Points mapped = mesh.vertices();
  if (!a.mapped.empty()) {
    const RawMesh m = load_raw_mesh(a.mapped);
    if (m.tets != raw.tets || m.vertices.size() != raw.vertices.size())
      throw UsageError("mapped mesh connectivity differs from the rest mesh");
    mapped = m.vertices;
  }
  MetricsRow row;
  row.manifold = a.name.empty() ? fs::path(a.rest).stem().string() : a.name;
  row.elements = mesh.num_tets();
  const std::vector<double> K = distortion(mesh, mapped);
  row.mean_K = mean(K);
  row.sd_K = stddev(K);
  row.overlaps = count_folds(mesh, mapped);
  const RemeshQuality q = quality_metrics(mesh, mapped);
  row.delta_size = q.delta_size;
  row.delta_shape = q.delta_shape;
  if (const auto pop = read_population(a.population, mesh)) {
    row.initial_var_rho = initial_density_variance(mesh, *pop);
    if (row.overlaps == 0) {
      row.var_rho = normalized_variance(recouple_density(mesh, mapped, tet_population(mesh, *pop)).rho_vertex);
    }
  }
  const Json j = metrics_to_json(row);
  if (a.output.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_json(a.output, j);
  return 0;
}

struct ConvertArgs {
  std::string input;
  std::string output;
  std::string from;
  std::string to;
};

int cmd_convert(const ConvertArgs& a) {
  const MeshFormat in = a.from.empty() ? format_from_path(a.input) : parse_format(a.from);
  const MeshFormat out = a.to.empty() ? format_from_path(a.output) : parse_format(a.to);
  const RawMesh raw = load_raw_mesh(a.input, in);
  const TetMesh check(raw.vertices, raw.tets);
  save_mesh(a.output, raw.vertices, raw.tets, out);
  return 0;
}

struct GenerateArgs {
  std::string shape;
  std::string output;
  int resolution = kDefaultBallResolution;
  double stretch = 3.0;
  double jitter = 0.0;
  std::uint64_t seed = 1;
  std::string density;
  std::string density_out;
};

int cmd_generate(const GenerateArgs& a) {
  if (a.resolution < 1) throw UsageError("--resolution must be at least 1");
  TetMesh mesh = [&] {
    if (a.shape == "ball") return uniform_ball_mesh(a.resolution);
    if (a.shape == "cube") return cube_mesh(5 * a.resolution);
    if (a.shape == "ellipsoid") return ellipsoid_mesh(a.resolution, Vec3(2.0, 1.0, 1.0));
    if (a.shape == "graded-ellipsoid") return graded_ellipsoid_mesh(a.resolution);
    if (a.shape == "stretched-ball") return stretched_ball_mesh(a.resolution, a.stretch, a.jitter, a.seed);
    return u_shape_mesh(6 * a.resolution);
  }();
  save_mesh(a.output, mesh.vertices(), mesh.tets());
  if (!a.density.empty()) {
    if (a.density_out.empty()) throw UsageError("--density needs --density-out");
    save_population_csv(a.density_out, synthetic_population(mesh, parse_synthetic_density(a.density), a.seed));
  }
  std::cout << a.shape << ": " << mesh.num_vertices() << " vertices, " << mesh.num_tets() << " tets\n";
  return 0;
}

void apply_thread_limit() {
  const char* env = std::getenv("VOLBALL_THREADS");
  if (!env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) throw UsageError("VOLBALL_THREADS must be a positive integer");
  Eigen::setNbThreads(static_cast<int>(n));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bijective volumetric parameterization of tetrahedral solids onto the unit ball"};
  app.require_subcommand(1);
  const std::vector<std::string> methods{"3dqc", "3ddem", "3ddeq"};

  ParamArgs param;
  auto* p = app.add_subcommand("param", "Map a tet mesh onto the unit ball");
  p->add_option("--method", param.method, "3dqc | 3ddem | 3ddeq")->required()->check(CLI::IsMember(methods));
  p->add_option("--report", param.report, "Report JSON path (default OUTDIR/report.json)");
  p->add_option("--trace", param.trace, "Trace CSV path (default OUTDIR/trace.csv)");
  p->add_option("input", param.input, "Input mesh (.mesh, .msh)")->required();
  p->add_option("outdir", param.outdir, "Output directory")->required();
  add_solver_options(p, param.solver);

  ParamArgs remesh;
  auto* r = app.add_subcommand("remesh", "Parameterize, then pull a uniform ball mesh back onto the input");
  r->add_option("--method", remesh.method, "3dqc | 3ddem | 3ddeq")->required()->check(CLI::IsMember(methods));
  r->add_option("--resolution", remesh.resolution, "Template ball resolution");
  r->add_option("--report", remesh.report, "Report JSON path (default OUTDIR/report.json)");
  r->add_option("--trace", remesh.trace, "Trace CSV path (default OUTDIR/trace.csv)");
  r->add_option("input", remesh.input, "Input mesh")->required();
  r->add_option("outdir", remesh.outdir, "Output directory")->required();
  add_solver_options(r, remesh.solver);

  InitArgs init;
  auto* i = app.add_subcommand("init-ball", "Compute the initial ball map only");
  i->add_option("input", init.input, "Input mesh")->required();
  i->add_option("output", init.output, "Output mesh")->required();
  add_solver_options(i, init.solver);

  MetricsArgs metrics;
  auto* m = app.add_subcommand("metrics", "Distortion, density and quality metrics of a map");
  m->add_option("rest", metrics.rest, "Rest mesh")->required();
  m->add_option("mapped", metrics.mapped, "Mapped mesh with the same connectivity");
  m->add_option("--population", metrics.population, "uniform | volume | file:PATH");
  m->add_option("--name", metrics.name, "Row label");
  m->add_option("--output", metrics.output, "Write JSON here instead of stdout");

  ConvertArgs convert;
  auto* c = app.add_subcommand("convert", "Convert between mesh formats");
  c->add_option("input", convert.input, "Input mesh")->required();
  c->add_option("output", convert.output, "Output mesh")->required();
  c->add_option("--from", convert.from, "medit | gmsh2");
  c->add_option("--to", convert.to, "medit | gmsh2 | vtk");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic test mesh");
  g->add_option("shape", gen.shape, "Shape")
      ->required()
      ->check(CLI::IsMember({"ball", "cube", "ellipsoid", "graded-ellipsoid", "stretched-ball", "u-shape"}));
  g->add_option("output", gen.output, "Output mesh")->required();
  g->add_option("--resolution", gen.resolution, "Resolution");
  g->add_option("--stretch", gen.stretch, "Stretch factor (stretched-ball)");
  g->add_option("--jitter", gen.jitter, "Interior jitter in grid spacings (stretched-ball)");
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--density", gen.density, "hemisphere | smooth | regions | volume")
      ->check(CLI::IsMember({"hemisphere", "smooth", "regions", "volume"}));
  g->add_option("--density-out", gen.density_out, "Population CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    apply_thread_limit();
    if (p->parsed()) return cmd_param(param);
    if (r->parsed()) return cmd_remesh(remesh);
    if (i->parsed()) return cmd_init_ball(init);
    if (m->parsed()) return cmd_metrics(metrics);
    if (c->parsed()) return cmd_convert(convert);
    if (g->parsed()) return cmd_generate(gen);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
