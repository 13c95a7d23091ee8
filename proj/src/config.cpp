#include "qdisp/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qdisp {

namespace {

std::vector<double> linspace(double start, double stop, int count) {
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    v[static_cast<std::size_t>(i)] =
        i == count - 1 ? stop : start + (stop - start) * static_cast<double>(i) / (count - 1);
  return v;
}

std::string where(const YAML::Node& node, std::string_view field) {
  std::ostringstream os;
  os << "line " << node.Mark().line + 1 << ", field '" << field << "'";
  return os.str();
}

void check_keys(const YAML::Node& map, std::string_view section,
                const std::set<std::string>& allowed) {
  if (!map.IsMap()) throw ParseError(where(map, section) + ": expected a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      const std::string full = section.empty() ? key : std::string(section) + "." + key;
      throw ParseError(where(kv.first, full) + ": unknown key");
    }
  }
}

template <typename T>
T read(const YAML::Node& node, std::string_view field) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError(where(node, field) + ": cannot read value '" +
                     (node.IsScalar() ? node.Scalar() : std::string("<non-scalar>")) + "'");
  }
}

// scalar, [re, im] or {re: , im: }
Complex read_complex(const YAML::Node& node, std::string_view field) {
  if (node.IsScalar()) return {read<double>(node, field), 0.0};
  if (node.IsSequence() && node.size() == 2)
    return {read<double>(node[0], field), read<double>(node[1], field)};
  if (node.IsMap()) {
    check_keys(node, field, {"re", "im"});
    return {node["re"] ? read<double>(node["re"], field) : 0.0,
            node["im"] ? read<double>(node["im"], field) : 0.0};
  }
  throw ParseError(where(node, field) + ": expected a number, [re, im] or {re, im}");
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

std::vector<double> TimeGrid::values() const { return linspace(start, stop, count); }

double TimeGrid::to_time(double value, const SystemParams& sys) const {
  return scale == TimeScale::OmegaT ? value / sys.omega_eff : value / sys.decay;
}

std::vector<double> SweepAxis::values() const { return linspace(start, stop, count); }

std::string_view to_string(TimeScale s) { return s == TimeScale::OmegaT ? "omega_t" : "k_t"; }

std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::OmegaEff: return "omega_eff";
    case SweepParam::Decay: return "decay";
    case SweepParam::Alpha: return "alpha";
    case SweepParam::Purity: return "p";
  }
  return "?";
}

std::string_view to_string(Family f) { return f == Family::Phi ? "phi" : "psi"; }

void apply_sweep_value(SweepParam param, double value, SystemParams& sys, EwlParams& ewl) {
  switch (param) {
    case SweepParam::OmegaEff: sys.omega_eff = value; break;
    case SweepParam::Decay: sys.decay = value; break;
    case SweepParam::Alpha: {
      // keep the configured phase, replace the modulus
      const double mag = std::abs(sys.alpha);
      const Complex phase = mag > 0.0 ? sys.alpha / mag : Complex(1.0, 0.0);
      sys.alpha = value * phase;
      break;
    }
    case SweepParam::Purity: ewl.purity = value; break;
  }
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError(msg); };
  try {
    sys.validate();
  } catch (const DomainError& e) {
    fail(e.what());
  }
  try {
    ewl.validate();
  } catch (const DomainError& e) {
    fail(e.what());
  }
  if (grid.count < 2) fail("grid.count must be >= 2");
  if (!finite(grid.start) || !finite(grid.stop)) fail("grid range must be finite");
  if (grid.start < 0.0) fail("grid.start must be >= 0");
  if (!(grid.stop > grid.start)) fail("grid.stop must exceed grid.start");

  std::vector<double> omegas{sys.omega_eff}, decays{sys.decay};
  if (sweep) {
    if (sweep->count < 2) fail("sweep.count must be >= 2");
    if (!finite(sweep->start) || !finite(sweep->stop)) fail("sweep range must be finite");
    SystemParams s = sys;
    EwlParams e = ewl;
    for (double v : {sweep->start, sweep->stop}) {
      apply_sweep_value(sweep->param, v, s, e);
      try {
        s.validate();
        e.validate();
      } catch (const DomainError& err) {
        fail(std::string("sweep value out of range: ") + err.what());
      }
      if (sweep->param == SweepParam::Alpha && v < 0.0) fail("sweep over alpha must be >= 0");
    }
    if (sweep->param == SweepParam::Decay) decays = {sweep->start, sweep->stop};
  }
  if (grid.scale == TimeScale::KT)
    for (double k : decays)
      if (!(k > 0.0)) fail("grid.scale k_t needs decay > 0 at every sweep point");

  if (oracle.truncation < 2) fail("oracle.truncation must be >= 2");
  if (oracle.dt && !(*oracle.dt > 0.0 && finite(*oracle.dt))) fail("oracle.dt must be > 0");
}

RunConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ParseError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ParseError("config must be a YAML mapping");
  check_keys(root, "", {"omega_eff", "decay", "alpha", "p", "mu", "nu", "family", "grid",
                        "sweep", "oracle", "output"});

  RunConfig cfg;
  auto require = [&](const char* key) {
    if (!root[key]) throw ParseError(std::string("missing required field '") + key + "'");
    return root[key];
  };
  cfg.sys.omega_eff = read<double>(require("omega_eff"), "omega_eff");
  cfg.sys.decay = read<double>(require("decay"), "decay");
  cfg.sys.alpha = read_complex(require("alpha"), "alpha");
  cfg.ewl.purity = read<double>(require("p"), "p");

  const bool has_mu = static_cast<bool>(root["mu"]);
  const bool has_nu = static_cast<bool>(root["nu"]);
  if (has_mu != has_nu) throw ParseError("mu and nu must be given together (or both omitted)");
  if (has_mu) {
    cfg.ewl.mu = read_complex(root["mu"], "mu");
    cfg.ewl.nu = read_complex(root["nu"], "nu");
  }
  if (root["family"]) {
    auto fam = read<std::string>(root["family"], "family");
    std::transform(fam.begin(), fam.end(), fam.begin(), ::tolower);
    if (fam == "phi")
      cfg.ewl.family = Family::Phi;
    else if (fam == "psi")
      cfg.ewl.family = Family::Psi;
    else
      throw ParseError(where(root["family"], "family") + ": expected phi or psi");
  }

  const YAML::Node grid = require("grid");
  check_keys(grid, "grid", {"scale", "start", "stop", "count"});
  if (grid["scale"]) {
    const auto s = read<std::string>(grid["scale"], "grid.scale");
    if (s == "omega_t")
      cfg.grid.scale = TimeScale::OmegaT;
    else if (s == "k_t")
      cfg.grid.scale = TimeScale::KT;
    else
      throw ParseError(where(grid["scale"], "grid.scale") + ": expected omega_t or k_t");
  }
  if (grid["start"]) cfg.grid.start = read<double>(grid["start"], "grid.start");
  if (!grid["stop"]) throw ParseError(where(grid, "grid") + ": missing 'stop'");
  cfg.grid.stop = read<double>(grid["stop"], "grid.stop");
  if (grid["count"]) cfg.grid.count = read<int>(grid["count"], "grid.count");

  if (const YAML::Node sw = root["sweep"]) {
    check_keys(sw, "sweep", {"param", "start", "stop", "count"});
    SweepAxis ax;
    for (const char* key : {"param", "start", "stop"})
      if (!sw[key]) throw ParseError(where(sw, "sweep") + ": missing '" + key + "'");
    const auto name = read<std::string>(sw["param"], "sweep.param");
    if (name == "omega_eff")
      ax.param = SweepParam::OmegaEff;
    else if (name == "decay")
      ax.param = SweepParam::Decay;
    else if (name == "alpha")
      ax.param = SweepParam::Alpha;
    else if (name == "p")
      ax.param = SweepParam::Purity;
    else
      throw ParseError(where(sw["param"], "sweep.param") +
                       ": expected omega_eff, decay, alpha or p");
    ax.start = read<double>(sw["start"], "sweep.start");
    ax.stop = read<double>(sw["stop"], "sweep.stop");
    ax.count = sw["count"] ? read<int>(sw["count"], "sweep.count") : 101;
    cfg.sweep = ax;
  }

  if (const YAML::Node o = root["oracle"]) {
    check_keys(o, "oracle", {"enabled", "truncation", "dt"});
    if (o["enabled"]) cfg.oracle.enabled = read<bool>(o["enabled"], "oracle.enabled");
    if (o["truncation"]) cfg.oracle.truncation = read<int>(o["truncation"], "oracle.truncation");
    if (o["dt"]) cfg.oracle.dt = read<double>(o["dt"], "oracle.dt");
  }
  if (const YAML::Node out = root["output"]) {
    check_keys(out, "output", {"csv", "plots", "deterministic"});
    if (out["csv"]) cfg.output.csv = read<std::string>(out["csv"], "output.csv");
    if (out["plots"]) cfg.output.plots = read<bool>(out["plots"], "output.plots");
    if (out["deterministic"])
      cfg.output.deterministic = read<bool>(out["deterministic"], "output.deterministic");
  }

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace qdisp
