#include "pllsync/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "config.hpp"
#include "pllsync/analysis.hpp"
#include "pllsync/errors.hpp"
#include "pllsync/math.hpp"
#include "pllsync/parallel.hpp"

namespace pllsync::cli {

namespace {

void apply_overrides(dynamics::IntegratorConfig& icfg,
                     const GlobalOptions& opts) {
  if (opts.dt) icfg.dt = *opts.dt;
  if (opts.t_end) icfg.t_end = *opts.t_end;
  icfg.validate();
}

std::filesystem::path resolve(const GlobalOptions& opts,
                              const std::string& name) {
  std::filesystem::create_directories(opts.out_dir);
  return opts.out_dir / name;
}

void write_json(const std::filesystem::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write '" + file.string() + "'");
  out << j.dump(2) << '\n';
}

std::string format17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Limiting equilibrium of a finished run: the nearest multiple of pi within
// tolerance, "saddle" for odd multiples, "diverged" otherwise.
json classify_limit(double delta_f, double omega_err_f) {
  if (!std::isfinite(delta_f) || !std::isfinite(omega_err_f))
    return json("diverged");
  const double n = std::round(delta_f / kPi);
  if (std::abs(delta_f - n * kPi) < 1e-3 && std::abs(omega_err_f) < 1e-2) {
    const auto h = static_cast<long long>(n);
    if (h % 2 == 0) return json(h);
    return json("saddle");
  }
  return json("diverged");
}

json bound_to_json(const analysis::UltimateBound& b) {
  json out;
  out["feasible"] = b.feasible;
  if (!b.feasible) {
    out["violated"] = b.violated;
    return out;
  }
  out["epsilon_star"] = b.epsilon_star;
  out["bound"] = b.bound;
  out["lambda_min_p"] = b.lambda_min_p;
  out["lambda_max_p"] = b.lambda_max_p;
  out["lambda_min_q"] = b.lambda_min_q;
  return out;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergedError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

void write_trajectory_csv(const std::filesystem::path& file,
                          const dynamics::Trajectory& traj) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write '" + file.string() + "'");
  const auto energy = analysis::trajectory_energy(
      traj, traj.config.family == pll::Family::gSrf ? analysis::EnergyKind::W1
                                                    : analysis::EnergyKind::W2);
  out << "t,delta,omega_hat,u_hat,y_tilde,energy\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << format17(traj.times[i]) << ',' << format17(traj.delta[i]) << ','
        << format17(traj.omega_hat[i]) << ',' << format17(traj.u_hat[i]) << ','
        << format17(traj.y_tilde[i]) << ',' << format17(energy[i]) << '\n';
  }
}

int cmd_simulate(const std::filesystem::path& config_file,
                 const GlobalOptions& opts) {
  return guarded([&] {
    const auto cfg_json = load_config(config_file);
    require_command(cfg_json, "simulate");
    auto cfg = parse_simulate(cfg_json);
    apply_overrides(cfg.integrator, opts);
    const auto traj = dynamics::simulate_closed_loop(
        cfg.grid, cfg.pll, cfg.representation, cfg.integrator, cfg.initial);
    write_trajectory_csv(resolve(opts, cfg.output), traj);
    return kExitOk;
  });
}

int cmd_portrait(const std::filesystem::path& config_file,
                 const GlobalOptions& opts) {
  return guarded([&] {
    const auto cfg_json = load_config(config_file);
    require_command(cfg_json, "portrait");
    auto cfg = parse_portrait(cfg_json);
    apply_overrides(cfg.integrator, opts);

    const auto axis_value = [](const AxisSpec& axis, int i) {
      if (axis.count == 1) return 0.5 * (axis.min + axis.max);
      return axis.min +
             (axis.max - axis.min) * static_cast<double>(i) /
                 static_cast<double>(axis.count - 1);
    };

    const std::size_t total =
        static_cast<std::size_t>(cfg.delta.count) *
        static_cast<std::size_t>(cfg.omega_err.count);
    std::vector<dynamics::Trajectory> runs(total);
    std::vector<json> outcomes(total);
    const double omega0 = cfg.grid.omega(0.0);

    parallel_for(total, opts.jobs, [&](std::size_t idx) {
      const int i = static_cast<int>(idx) % cfg.delta.count;
      const int j = static_cast<int>(idx) / cfg.delta.count;
      const double delta0 = axis_value(cfg.delta, i);
      const double werr0 = axis_value(cfg.omega_err, j);
      json entry;
      entry["delta0"] = delta0;
      entry["omega_err0"] = werr0;
      try {
        runs[idx] = dynamics::simulate_closed_loop(
            cfg.grid, cfg.pll, dynamics::Representation::Polar, cfg.integrator,
            {cfg.grid.theta(0.0) + delta0, omega0 + werr0});
        entry["limit"] = classify_limit(
            runs[idx].delta.back(), runs[idx].omega_hat.back() - omega0);
      } catch (const DivergedError&) {
        entry["limit"] = "diverged";
      }
      outcomes[idx] = entry;
    });

    json summary;
    summary["command"] = "portrait";
    summary["ics"] = outcomes;
    write_json(resolve(opts, cfg.summary), summary);

    if (cfg.write_trajectories) {
      for (std::size_t idx = 0; idx < total; ++idx) {
        if (runs[idx].size() == 0) continue;
        write_trajectory_csv(
            resolve(opts, cfg.output_prefix + "_" + std::to_string(idx) +
                              ".csv"),
            runs[idx]);
      }
    }
    return kExitOk;
  });
}

int cmd_roa(const std::filesystem::path& config_file,
            const GlobalOptions& opts) {
  return guarded([&] {
    const auto cfg_json = load_config(config_file);
    require_command(cfg_json, "roa");
    const auto cfg = parse_roa(cfg_json);

    const auto est = analysis::roa_inner_estimate(
        cfg.family, cfg.h, cfg.k_p, cfg.k_i, cfg.gamma_v,
        cfg.as_printed ? analysis::RoaKind::AsPrinted
                       : analysis::RoaKind::DerivedSublevel);
    json out;
    out["family"] = cfg.family == pll::Family::gSrf ? "srf" : "atan";
    out["h"] = cfg.h;
    out["kind"] = cfg.as_printed ? "as-printed" : "derived-sublevel";
    out["c_star"] = est.c_star;
    out["gamma_v"] = est.gamma_v;
    out["k_i"] = est.k_i;
    out["omega_extent"] = est.omega_extent();
    out["delta_extent"] = est.delta_extent();

    if (cfg.samples > 0) {
      const auto pll_cfg =
          cfg.family == pll::Family::gSrf
              ? pll::PllConfig::srf(cfg.k_p, cfg.k_i, cfg.gamma_v)
              : pll::PllConfig::atan(cfg.k_p, cfg.k_i, cfg.gamma_v);
      analysis::RoaValidationOptions vopts;
      vopts.omega0 = cfg.omega0;
      vopts.t_end = cfg.t_end;
      vopts.dt = cfg.dt;
      vopts.tol_delta = cfg.tol_delta;
      vopts.tol_omega = cfg.tol_omega;
      vopts.jobs = opts.jobs;
      const auto val = analysis::roa_validate(est, pll_cfg, cfg.samples,
                                              opts.seed, vopts);
      out["validation"] = {{"samples", val.n},
                           {"converged", val.converged},
                           {"fraction", val.fraction},
                           {"seed", opts.seed}};
    } else {
      out["validation"] = nullptr;
    }
    write_json(resolve(opts, cfg.output), out);
    return kExitOk;
  });
}

int cmd_bound(const std::filesystem::path& config_file,
              const GlobalOptions& opts) {
  return guarded([&] {
    const auto cfg_json = load_config(config_file);
    require_command(cfg_json, "bound");
    const auto cfg = parse_bound(cfg_json);

    json out;
    out["k_p"] = cfg.k_p;
    out["k_i"] = cfg.k_i;
    out["eta_max"] = cfg.eta_max;
    bool infeasible = false;
    analysis::UltimateBound derived;
    if (cfg.as_printed) {
      const auto b = analysis::ultimate_bound(cfg.k_p, cfg.k_i, cfg.eta_max,
                                              analysis::BoundVariant::AsPrinted);
      out["as_printed"] = bound_to_json(b);
      infeasible = infeasible || !b.feasible;
    }
    if (cfg.derived) {
      derived = analysis::ultimate_bound(cfg.k_p, cfg.k_i, cfg.eta_max,
                                         analysis::BoundVariant::DerivedKhalil);
      out["derived_khalil"] = bound_to_json(derived);
      infeasible = infeasible || !derived.feasible;
    }

    if (cfg.empirical && cfg.derived && derived.feasible) {
      auto scenario = scenarios::builtin_scenario("low-inertia-disturbance");
      apply_overrides(scenario.integrator, opts);
      const auto run = scenarios::run_scenario(scenario, opts.jobs);
      double limsup = 0.0;
      bool found = false;
      for (std::size_t i = 0; i < run.trajectories.size(); ++i) {
        if (run.report.labels[i].label != cfg.label) continue;
        found = true;
        const auto& traj = run.trajectories[i];
        for (std::size_t k = 0; k < traj.size(); ++k) {
          if (traj.times[k] < cfg.window_lo || traj.times[k] > cfg.window_hi)
            continue;
          const double werr = traj.omega_hat[k] - traj.omega[k];
          limsup = std::max(limsup,
                            std::hypot(traj.delta[k], werr / cfg.k_i));
        }
      }
      if (!found)
        throw ConfigError("empirical label '" + cfg.label +
                          "' not present in the scenario");
      out["empirical"] = {{"limsup", limsup},
                          {"window", {cfg.window_lo, cfg.window_hi}},
                          {"label", cfg.label},
                          {"sound", derived.bound >= limsup}};
    }
    write_json(resolve(opts, cfg.output), out);
    return infeasible ? kExitInfeasible : kExitOk;
  });
}

int cmd_scenario(const std::string& name_or_config, const GlobalOptions& opts) {
  return guarded([&] {
    scenarios::Scenario scenario;
    if (name_or_config.size() > 5 &&
        name_or_config.substr(name_or_config.size() - 5) == ".json") {
      const auto cfg_json = load_config(name_or_config);
      require_command(cfg_json, "scenario");
      scenario = parse_scenario(cfg_json);
    } else {
      scenario = scenarios::builtin_scenario(name_or_config);
    }
    apply_overrides(scenario.integrator, opts);
    const auto run = scenarios::run_scenario(scenario, opts.jobs);
    for (std::size_t i = 0; i < run.trajectories.size(); ++i) {
      write_trajectory_csv(
          resolve(opts, run.report.labels[i].label + ".csv"),
          run.trajectories[i]);
    }
    write_json(resolve(opts, "report.json"),
               scenario_report_to_json(run.report, scenario));
    return kExitOk;
  });
}

int cmd_validate_config(const std::filesystem::path& config_file) {
  return guarded([&] {
    validate_any(load_config(config_file));
    std::cout << "ok\n";
    return kExitOk;
  });
}

}  // namespace pllsync::cli
