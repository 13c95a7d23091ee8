#ifndef QDISP_SWEEP_HPP
#define QDISP_SWEEP_HPP

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qdisp/analytic.hpp"
#include "qdisp/config.hpp"

namespace qdisp {

inline constexpr const char* kToolVersion = "1.0.0";

struct Axis {
  std::string name;
  std::vector<double> values;
};

struct SweepResult {
  std::optional<Axis> outer;  ///< parameter axis; absent for a single run
  Axis inner;                 ///< time axis, or a second parameter axis
  bool inner_is_time = true;
  Eigen::MatrixXd concurrence;                   ///< rows: outer, cols: inner
  std::optional<Eigen::MatrixXd> linear_entropy; ///< single-atom linear entropy
  std::vector<std::vector<EsdInterval>> esd;     ///< per row; empty unless inner is time
  std::vector<std::optional<double>> asymptotic; ///< per row, when decay > 0
  std::vector<std::pair<std::string, std::string>> metadata;

  Eigen::Index rows() const { return concurrence.rows(); }
  Eigen::Index cols() const { return concurrence.cols(); }
};

/// One evaluation point of a grid.
struct GridPoint {
  SystemParams sys;
  EwlParams ewl;
  double t = 0.0;
};

/// Evaluates every (outer, inner) point on a worker pool; results are stored
/// by index so the outcome does not depend on `threads`.
SweepResult evaluate_grid(std::optional<Axis> outer, Axis inner, bool inner_is_time,
                          const std::function<GridPoint(double outer, double inner)>& point,
                          bool with_entropy, unsigned threads = 0);

SweepResult run_sweep(const RunConfig& cfg, unsigned threads = 0);

enum class Figure { Fig2, Fig3, Fig4, Fig5, Fig6, Fig7 };

std::optional<Figure> parse_figure(std::string_view name);
std::string_view to_string(Figure f);

struct FigurePanel {
  std::string name;  ///< file stem, e.g. "fig5_long"
  SweepResult result;
};

std::vector<FigurePanel> run_figure(Figure fig, unsigned threads = 0);

class CsvError : public Error { using Error::Error; };

/// Throws CsvError naming the first non-finite grid point.
std::string to_csv(const SweepResult& result, bool deterministic);
void emit_csv(const SweepResult& result, const std::filesystem::path& path, bool deterministic);
/// gnuplot companion script for a CSV written by emit_csv.
std::string plot_script(const SweepResult& result, const std::string& csv_name);

/// Human-readable summary: C(0), ESD intervals, C(inf) and the threshold
/// time at the default level, one block per sweep row.
std::string report(const RunConfig& cfg, const SweepResult& result);

struct OracleComparison {
  double max_density_deviation = 0.0;
  double max_concurrence_deviation = 0.0;
  std::size_t samples = 0;
  int truncation = 0;
  double dt = 0.0;
};

/// Two-copy Lindblad run against the closed form for a single-run config.
OracleComparison compare_with_oracle(const RunConfig& cfg, std::size_t max_samples = 50);

inline constexpr double kOracleTolerance = 1e-5;

}  // namespace qdisp

#endif  // QDISP_SWEEP_HPP
