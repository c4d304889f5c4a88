#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "volball/drivers.hpp"

namespace volball {

using Json = nlohmann::ordered_json;

Json config_to_json(const SolverConfig& config);

/// {method, config, iterations[], final}. Key order and number formatting are fixed,
/// so identical runs serialize to identical bytes.
Json report_to_json(const RunReport& report);

void write_json(const std::filesystem::path& path, const Json& json);

/// Columns: iteration, E_3DQC, E_3DDEM, E_3DDEQ, var_rho, mean_K, sd_K, folds_pre, folds_post.
void write_trace_csv(const std::filesystem::path& path, const RunReport& report);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges over the data range
  std::vector<long> counts;
};

/// Equal-width bins over [min, max]; the maximum falls in the last bin.
Histogram make_histogram(std::span<const double> values, int bins = 50);

/// Columns: bin_left, bin_right, count.
void write_histogram_csv(const std::filesystem::path& path, const Histogram& histogram);

/// Row of the paper-style summary tables.
struct MetricsRow {
  std::string manifold;
  int elements = 0;
  std::optional<double> initial_var_rho;
  std::optional<double> var_rho;
  double mean_K = 0.0;
  double sd_K = 0.0;
  int overlaps = 0;
  std::optional<double> delta_size;
  std::optional<double> delta_shape;
};

/// Keys "Manifolds", "# Elements", "Var(rho_bar_0)", "Var(rho_bar)", "mean(K)", "sd(K)",
/// "# Overlaps", "delta_size", "delta_shape"; absent optionals are omitted.
Json metrics_to_json(const MetricsRow& row);

}  // namespace volball
