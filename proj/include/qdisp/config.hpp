#ifndef QDISP_CONFIG_HPP
#define QDISP_CONFIG_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qdisp/analytic.hpp"

namespace qdisp {

class ConfigError : public Error { using Error::Error; };
/// Malformed document or wrongly typed field; message carries the line.
class ParseError : public ConfigError { using ConfigError::ConfigError; };
/// Well-formed document whose values break an invariant.
class ValidationError : public ConfigError { using ConfigError::ConfigError; };

enum class TimeScale { OmegaT, KT };

struct TimeGrid {
  TimeScale scale = TimeScale::OmegaT;
  double start = 0.0;
  double stop = 15.0;
  int count = 301;

  /// Grid in the dimensionless unit of `scale`.
  std::vector<double> values() const;
  /// Physical time of a dimensionless grid value.
  double to_time(double value, const SystemParams& sys) const;
};

enum class SweepParam { OmegaEff, Decay, Alpha, Purity };

struct SweepAxis {
  SweepParam param = SweepParam::Decay;
  double start = 0.0;
  double stop = 1.0;
  int count = 2;

  std::vector<double> values() const;
};

struct OracleSettings {
  bool enabled = false;
  int truncation = 16;
  std::optional<double> dt;  ///< absolute time step; default 1e-3 / omega_eff
};

struct OutputSettings {
  std::string csv;  ///< empty writes to stdout
  bool plots = false;
  bool deterministic = false;
};

struct RunConfig {
  SystemParams sys;
  EwlParams ewl;
  TimeGrid grid;
  std::optional<SweepAxis> sweep;
  OracleSettings oracle;
  OutputSettings output;

  /// Throws ValidationError.
  void validate() const;
};

std::string_view to_string(TimeScale s);
std::string_view to_string(SweepParam p);
std::string_view to_string(Family f);

/// Parses the YAML run configuration. Missing mu/nu default to 1/sqrt(2).
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Applies one sweep value to copies of the parameters.
void apply_sweep_value(SweepParam param, double value, SystemParams& sys, EwlParams& ewl);

}  // namespace qdisp

#endif  // QDISP_CONFIG_HPP
