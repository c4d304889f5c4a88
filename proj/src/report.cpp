#include "volball/report.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace volball {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

Json config_to_json(const SolverConfig& config) {
  Json j;
  j["dt"] = config.dt;
  j["eps"] = config.eps;
  j["n_max"] = config.n_max;
  j["K_T"] = config.K_T;
  j["C"] = config.C;
  j["alpha"] = config.alpha;
  if (config.boundary_mode)
    j["boundary_mode"] = *config.boundary_mode == BoundaryMode::conformal ? "conformal" : "density_equalizing";
  else
    j["boundary_mode"] = nullptr;
  j["correction"] = config.correction;
  j["seed"] = config.seed;
  return j;
}

Json report_to_json(const RunReport& report) {
  Json j;
  j["method"] = report.method;
  j["config"] = config_to_json(report.config);
  Json its = Json::array();
  for (const IterationRecord& r : report.iterations) {
    Json it;
    it["iteration"] = r.iteration;
    it["E_3DQC"] = r.energy.qc;
    it["E_3DDEM"] = r.energy.dem;
    it["E_3DDEQ"] = r.energy.deq;
    it["var_rho"] = r.var_rho;
    it["mean_K"] = r.mean_K;
    it["sd_K"] = r.sd_K;
    it["folds_pre"] = r.folds_pre;
    it["folds_post"] = r.folds_post;
    it["corrected"] = r.corrected;
    it["backtracked"] = r.backtracked;
    its.push_back(std::move(it));
  }
  j["iterations"] = std::move(its);
  const FinalStats& f = report.final;
  Json fin;
  fin["var_rho"] = f.var_rho;
  fin["mean_K"] = f.mean_K;
  fin["sd_K"] = f.sd_K;
  fin["folds"] = f.folds;
  if (f.delta_size) fin["delta_size"] = *f.delta_size;
  if (f.delta_shape) fin["delta_shape"] = *f.delta_shape;
  fin["initial_var_rho"] = f.initial_var_rho;
  fin["converged"] = report.converged;
  fin["harmonic_folds"] = report.harmonic_folds;
  fin["corrections"] = report.corrections;
  j["final"] = std::move(fin);
  return j;
}

void write_json(const std::filesystem::path& path, const Json& json) {
  std::ofstream out = open_output(path);
  out << json.dump(2) << '\n';
}

void write_trace_csv(const std::filesystem::path& path, const RunReport& report) {
  std::ofstream out = open_output(path);
  out << "iteration,E_3DQC,E_3DDEM,E_3DDEQ,var_rho,mean_K,sd_K,folds_pre,folds_post\n";
  for (const IterationRecord& r : report.iterations)
    out << r.iteration << ',' << r.energy.qc << ',' << r.energy.dem << ',' << r.energy.deq << ',' << r.var_rho << ','
        << r.mean_K << ',' << r.sd_K << ',' << r.folds_pre << ',' << r.folds_post << '\n';
}

Histogram make_histogram(std::span<const double> values, int bins) {
  if (bins < 1) throw std::invalid_argument("histogram needs at least one bin");
  Histogram h;
  h.counts.assign(bins, 0);
  double lo = 0.0, hi = 1.0;
  if (!values.empty()) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx > *mn ? *mx : *mn + 1.0;
  }
  for (int i = 0; i <= bins; ++i) h.edges.push_back(i == bins ? hi : lo + (hi - lo) * i / bins);
  for (double v : values) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    ++h.counts[std::clamp(b, 0, bins - 1)];
  }
  return h;
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& histogram) {
  std::ofstream out = open_output(path);
  out << "bin_left,bin_right,count\n";
  for (size_t i = 0; i < histogram.counts.size(); ++i)
    out << histogram.edges[i] << ',' << histogram.edges[i + 1] << ',' << histogram.counts[i] << '\n';
}

Json metrics_to_json(const MetricsRow& row) {
  Json j;
  j["Manifolds"] = row.manifold;
  j["# Elements"] = row.elements;
  if (row.initial_var_rho) j["Var(rho_bar_0)"] = *row.initial_var_rho;
  if (row.var_rho) j["Var(rho_bar)"] = *row.var_rho;
  j["mean(K)"] = row.mean_K;
  j["sd(K)"] = row.sd_K;
  j["# Overlaps"] = row.overlaps;
  if (row.delta_size) j["delta_size"] = *row.delta_size;
  if (row.delta_shape) j["delta_shape"] = *row.delta_shape;
  return j;
}

}  // namespace volball
