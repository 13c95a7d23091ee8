#include "qdisp/sweep.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "qdisp/lindblad.hpp"

namespace qdisp {

namespace {

std::vector<double> linspace(double start, double stop, int count) {
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    v[static_cast<std::size_t>(i)] =
        i == count - 1 ? stop : start + (stop - start) * static_cast<double>(i) / (count - 1);
  return v;
}

std::string num(double x) { return fmt::format("{:.17g}", x); }

std::string complex_str(Complex z) {
  if (z.imag() == 0.0) return fmt::format("{:g}", z.real());
  return fmt::format("{:g}{:+g}i", z.real(), z.imag());
}

// Runs fn(row) for every row on up to `threads` workers.
void parallel_rows(Eigen::Index rows, unsigned threads, const std::function<void(Eigen::Index)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<Eigen::Index>(threads, std::max<Eigen::Index>(rows, 1)));
  if (threads <= 1) {
    for (Eigen::Index r = 0; r < rows; ++r) fn(r);
    return;
  }
  std::atomic<Eigen::Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (Eigen::Index r = next++; r < rows; r = next++) {
        try {
          fn(r);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double single_atom_entropy(const SystemParams& sys, const EwlParams& ewl, double t) {
  const XStateDensity rho = evolve_two_atom(ewl_state(ewl), channel(sys, t));
  return linear_entropy(ComplexMatrix(reduced_atom(rho, Atom::First)));
}

SystemParams make_sys(double omega, double k, double alpha) {
  SystemParams s;
  s.omega_eff = omega;
  s.decay = k;
  s.alpha = {alpha, 0.0};
  return s;
}

EwlParams make_ewl(double p) {
  EwlParams e;
  e.purity = p;
  return e;
}

}  // namespace

SweepResult evaluate_grid(std::optional<Axis> outer, Axis inner, bool inner_is_time,
                          const std::function<GridPoint(double, double)>& point, bool with_entropy,
                          unsigned threads) {
  if (inner.values.empty()) throw EmptyGrid("evaluate_grid: inner axis is empty");
  SweepResult res;
  const Eigen::Index rows = outer ? static_cast<Eigen::Index>(outer->values.size()) : 1;
  const auto cols = static_cast<Eigen::Index>(inner.values.size());
  res.concurrence.resize(rows, cols);
  if (with_entropy) res.linear_entropy = Eigen::MatrixXd(rows, cols);
  res.esd.resize(static_cast<std::size_t>(inner_is_time ? rows : 0));
  res.asymptotic.resize(static_cast<std::size_t>(inner_is_time ? rows : 0));

  parallel_rows(rows, threads, [&](Eigen::Index r) {
    const double ov = outer ? outer->values[static_cast<std::size_t>(r)] : 0.0;
    std::vector<double> times(static_cast<std::size_t>(cols));
    GridPoint first;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const GridPoint pt = point(ov, inner.values[static_cast<std::size_t>(c)]);
      if (c == 0) first = pt;
      times[static_cast<std::size_t>(c)] = pt.t;
      res.concurrence(r, c) = concurrence_ewl(pt.sys, pt.ewl, pt.t);
      if (with_entropy) (*res.linear_entropy)(r, c) = single_atom_entropy(pt.sys, pt.ewl, pt.t);
    }
    if (inner_is_time) {
      const auto ur = static_cast<std::size_t>(r);
      res.esd[ur] = esd_intervals(first.sys, first.ewl, times);
      if (first.sys.decay > 0.0) res.asymptotic[ur] = asymptotic_concurrence(first.sys, first.ewl);
    }
  });

  res.outer = std::move(outer);
  res.inner = std::move(inner);
  res.inner_is_time = inner_is_time;
  return res;
}

SweepResult run_sweep(const RunConfig& cfg, unsigned threads) {
  cfg.validate();
  std::optional<Axis> outer;
  if (cfg.sweep) outer = Axis{std::string(to_string(cfg.sweep->param)), cfg.sweep->values()};
  Axis inner{std::string(to_string(cfg.grid.scale)), cfg.grid.values()};
  const bool swept = cfg.sweep.has_value();
  const SweepParam param = swept ? cfg.sweep->param : SweepParam::Decay;

  SweepResult res = evaluate_grid(
      std::move(outer), std::move(inner), true,
      [&](double ov, double iv) {
        GridPoint pt{cfg.sys, cfg.ewl, 0.0};
        if (swept) apply_sweep_value(param, ov, pt.sys, pt.ewl);
        pt.t = cfg.grid.to_time(iv, pt.sys);
        return pt;
      },
      true, threads);

  res.metadata = {{"tool", std::string("qdisp ") + kToolVersion},
                  {"omega_eff", num(cfg.sys.omega_eff)},
                  {"decay", num(cfg.sys.decay)},
                  {"alpha", complex_str(cfg.sys.alpha)},
                  {"p", num(cfg.ewl.purity)},
                  {"mu", complex_str(cfg.ewl.mu)},
                  {"nu", complex_str(cfg.ewl.nu)},
                  {"family", std::string(to_string(cfg.ewl.family))}};
  return res;
}

std::optional<Figure> parse_figure(std::string_view name) {
  static constexpr std::pair<std::string_view, Figure> names[] = {
      {"fig2", Figure::Fig2}, {"fig3", Figure::Fig3}, {"fig4", Figure::Fig4},
      {"fig5", Figure::Fig5}, {"fig6", Figure::Fig6}, {"fig7", Figure::Fig7}};
  for (const auto& [n, f] : names)
    if (n == name) return f;
  return std::nullopt;
}

std::string_view to_string(Figure f) {
  switch (f) {
    case Figure::Fig2: return "fig2";
    case Figure::Fig3: return "fig3";
    case Figure::Fig4: return "fig4";
    case Figure::Fig5: return "fig5";
    case Figure::Fig6: return "fig6";
    case Figure::Fig7: return "fig7";
  }
  return "?";
}

std::vector<FigurePanel> run_figure(Figure fig, unsigned threads) {
  constexpr int kTimePoints = 301;
  constexpr int kParamPoints = 101;
  std::vector<FigurePanel> panels;
  const std::string stem(to_string(fig));

  auto tag = [&](SweepResult& r, std::vector<std::pair<std::string, std::string>> extra) {
    r.metadata = {{"tool", std::string("qdisp ") + kToolVersion}, {"figure", stem}};
    for (auto& kv : extra) r.metadata.push_back(std::move(kv));
  };

  switch (fig) {
    case Figure::Fig2:
    case Figure::Fig3: {
      // concurrence over (Omega t, k/Omega), alpha = 1, mu = nu = 1/sqrt2
      const double p = fig == Figure::Fig2 ? 0.8 : 0.6;
      auto r = evaluate_grid(
          Axis{"k_over_omega", linspace(0.0, 0.2, kParamPoints)},
          Axis{"omega_t", linspace(0.0, 15.0, kTimePoints)}, true,
          [p](double k, double wt) { return GridPoint{make_sys(1.0, k, 1.0), make_ewl(p), wt}; },
          false, threads);
      tag(r, {{"alpha", "1"}, {"p", num(p)}});
      panels.push_back({stem, std::move(r)});
      break;
    }
    case Figure::Fig4:
    case Figure::Fig5: {
      const bool by_p = fig == Figure::Fig4;
      const std::vector<double> curves =
          by_p ? std::vector<double>{0.8, 0.6, 0.5} : std::vector<double>{0.5, 1.0, 2.0};
      for (const auto& [suffix, stop] : {std::pair{"_short", 30.0}, std::pair{"_long", 500.0}}) {
        auto r = evaluate_grid(
            Axis{by_p ? "p" : "alpha", curves}, Axis{"omega_t", linspace(0.0, stop, kTimePoints)},
            true,
            [by_p](double v, double wt) {
              return by_p ? GridPoint{make_sys(1.0, 0.01, 0.5), make_ewl(v), wt}
                          : GridPoint{make_sys(1.0, 0.01, v), make_ewl(0.9), wt};
            },
            false, threads);
        if (by_p)
          tag(r, {{"k_over_omega", "0.01"}, {"alpha", "0.5"}});
        else
          tag(r, {{"k_over_omega", "0.01"}, {"p", "0.9"}});
        panels.push_back({stem + suffix, std::move(r)});
      }
      break;
    }
    case Figure::Fig6: {
      // kt with k = 1, so Omega equals Omega/k
      auto r = evaluate_grid(
          Axis{"omega_over_k", linspace(1.0, 20.0, kParamPoints)},
          Axis{"k_t", linspace(0.0, 10.0, kTimePoints)}, true,
          [](double w, double kt) { return GridPoint{make_sys(w, 1.0, 1.0), make_ewl(0.8), kt}; },
          false, threads);
      tag(r, {{"alpha", "1"}, {"p", "0.8"}});
      panels.push_back({stem, std::move(r)});
      break;
    }
    case Figure::Fig7: {
      auto r = evaluate_grid(
          Axis{"alpha", linspace(0.0, 2.0, kParamPoints)}, Axis{"p", linspace(0.0, 1.0, kParamPoints)},
          false,
          [](double a, double p) { return GridPoint{make_sys(1.0, 0.01, a), make_ewl(p), 500.0}; },
          false, threads);
      tag(r, {{"omega_eff", "1"}, {"decay", "0.01"}, {"t", "500"}});
      panels.push_back({stem, std::move(r)});
      break;
    }
  }
  return panels;
}

std::string to_csv(const SweepResult& result, bool deterministic) {
  const Eigen::Index rows = result.rows();
  const Eigen::Index cols = result.cols();
  auto outer_value = [&](Eigen::Index r) {
    return result.outer ? result.outer->values[static_cast<std::size_t>(r)] : 0.0;
  };
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const bool bad = !std::isfinite(result.concurrence(r, c)) ||
                       (result.linear_entropy && !std::isfinite((*result.linear_entropy)(r, c)));
      if (bad) {
        std::string at = fmt::format("{} = {:g} (column {})", result.inner.name,
                                     result.inner.values[static_cast<std::size_t>(c)], c);
        if (result.outer)
          at = fmt::format("{} = {:g} (row {}), ", result.outer->name, outer_value(r), r) + at;
        throw CsvError("refusing to write CSV: non-finite value at " + at);
      }
    }

  std::string out;
  if (!deterministic)
    out += fmt::format("# generated {:%Y-%m-%dT%H:%M:%S}\n",
                       fmt::gmtime(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now())));
  for (const auto& [k, v] : result.metadata) out += "# " + k + ": " + v + "\n";

  if (result.outer) out += result.outer->name + ",";
  out += result.inner.name + ",concurrence";
  if (result.linear_entropy) out += ",linear_entropy";
  out += "\n";
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (result.outer) out += num(outer_value(r)) + ",";
      out += num(result.inner.values[static_cast<std::size_t>(c)]) + "," +
             num(result.concurrence(r, c));
      if (result.linear_entropy) out += "," + num((*result.linear_entropy)(r, c));
      out += "\n";
    }
  return out;
}

void emit_csv(const SweepResult& result, const std::filesystem::path& path, bool deterministic) {
  const std::string text = to_csv(result, deterministic);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::ios_base::failure("write failed for " + path.string());
}

std::string plot_script(const SweepResult& result, const std::string& csv_name) {
  std::string s = "# companion gnuplot script; the CSV is the data of record\n";
  s += "set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n";
  s += "set xlabel '" + result.inner.name + "'\n";
  if (result.outer) {
    s += fmt::format("set ylabel '{}'\nset zlabel 'C'\nset dgrid3d {},{}\nset hidden3d\n",
                     result.outer->name, result.outer->values.size(), result.inner.values.size());
    s += "splot '" + csv_name + "' using 2:1:3 with lines notitle\n";
  } else {
    s += "set ylabel 'C'\nplot '" + csv_name + "' using 1:2 with lines\n";
  }
  s += "pause -1\n";
  return s;
}

std::string report(const RunConfig& cfg, const SweepResult& result) {
  std::ostringstream os;
  os << "qdisp " << kToolVersion << " report\n";
  os << fmt::format("omega_eff = {:g}, decay = {:g}, ", cfg.sys.omega_eff, cfg.sys.decay)
     << "alpha = " << complex_str(cfg.sys.alpha) << fmt::format(", p = {:g}", cfg.ewl.purity)
     << ", mu = " << complex_str(cfg.ewl.mu) << ", nu = " << complex_str(cfg.ewl.nu)
     << ", family = " << to_string(cfg.ewl.family) << "\n";

  const bool omega_scale = cfg.grid.scale == TimeScale::OmegaT;
  const char* unit = omega_scale ? "Ωt" : "kt";
  for (Eigen::Index r = 0; r < result.rows(); ++r) {
    SystemParams sys = cfg.sys;
    EwlParams ewl = cfg.ewl;
    if (result.outer) {
      const double v = result.outer->values[static_cast<std::size_t>(r)];
      apply_sweep_value(cfg.sweep->param, v, sys, ewl);
      os << "\n[" << result.outer->name << " = " << fmt::format("{:g}", v) << "]\n";
    }
    const double scale = omega_scale ? sys.omega_eff : sys.decay;
    const double c0 = concurrence_ewl(sys, ewl, 0.0);
    os << "C(0) = " << fmt::format("{:.6g}", c0) << "\n";
    if (c0 <= 0.0) {
      os << "C(t) = 0 for all t\n";
      continue;
    }
    const auto& esd = result.esd[static_cast<std::size_t>(r)];
    os << "ESD: ";
    if (esd.empty()) os << "none";
    for (std::size_t i = 0; i < esd.size(); ++i) {
      if (i > 0) os << ", ";
      os << fmt::format("{} in [{:.6g}, {:.6g}{}", unit, esd[i].t_start * scale,
                        esd[i].t_end * scale, esd[i].open_ended ? "+)" : "]");
    }
    os << "; ";
    const auto& asym = result.asymptotic[static_cast<std::size_t>(r)];
    if (!asym)
      os << "C(∞): undefined (no decay)\n";
    else if (*asym == 0.0)
      os << "C(∞) = 0\n";
    else
      os << fmt::format("C(∞) ≈ {:.3f}\n", *asym);

    try {
      const double level = default_threshold_level(sys, ewl);
      const double ktc = threshold_time(sys, ewl, level, 40.0 / sys.decay);
      os << fmt::format("kt_c ≈ {:.4g} (level c = {:.6g})\n", ktc, level);
    } catch (const Error& e) {
      os << "kt_c: n/a (" << e.what() << ")\n";
    }
  }
  return os.str();
}

OracleComparison compare_with_oracle(const RunConfig& cfg, std::size_t max_samples) {
  cfg.validate();
  if (cfg.sweep) throw ValidationError("the oracle check needs a single-run config (no sweep)");
  const FockSpace space = FockSpace::for_coherent(cfg.oracle.truncation, cfg.sys.alpha);
  const double t_end = cfg.grid.to_time(cfg.grid.stop, cfg.sys);
  TwoCopyOptions opt;
  opt.dt = cfg.oracle.dt.value_or(1e-3 / cfg.sys.omega_eff);
  opt.t_end = t_end;
  opt.sample_interval = t_end / static_cast<double>(std::max<std::size_t>(1, max_samples));
  const TwoCopyResult run = two_copy_oracle(cfg.ewl, cfg.sys, space, opt);

  OracleComparison cmp;
  cmp.truncation = space.truncation();
  cmp.dt = run.diagnostics.dt_used;
  cmp.samples = run.samples.size();
  const XStateDensity rho0 = ewl_state(cfg.ewl);
  for (const auto& s : run.samples) {
    const Matrix4c analytic = evolve_two_atom(rho0, channel(cfg.sys, s.t)).matrix();
    cmp.max_density_deviation =
        std::max(cmp.max_density_deviation, (analytic - s.rho).cwiseAbs().maxCoeff());
    const double c_oracle = concurrence_wootters(TwoQubitDensity(s.rho));
    cmp.max_concurrence_deviation =
        std::max(cmp.max_concurrence_deviation,
                 std::abs(c_oracle - concurrence_ewl(cfg.sys, cfg.ewl, s.t)));
  }
  return cmp;
}

}  // namespace qdisp
