#pragma once

// Command-line front end: design | verify | simulate | spectrum | sweep.
//
// Exit status: 0 success, 1 domain or numerical error, 2 usage error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "piezoamp/design.hpp"
#include "piezoamp/error.hpp"
#include "piezoamp/io.hpp"
#include "piezoamp/material.hpp"
#include "piezoamp/orfd.hpp"
#include "piezoamp/simulation.hpp"
#include "piezoamp/spectrum.hpp"

namespace piezoamp::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

struct MaterialSource {
  std::string preset = "table1";
  std::string config;

  void add_to(CLI::App* cmd) {
    auto* pre = cmd->add_option("--preset", preset, "built-in or $PIEZOAMP_PRESET_DIR preset");
    auto* cfg = cmd->add_option("--config", config, "key = value parameter file");
    pre->excludes(cfg);
  }

  [[nodiscard]] MaterialParams load() const {
    return config.empty() ? io::load_preset(preset) : io::load_config(config);
  }
};

struct GridSpec {
  double lo = -8.0;
  double hi = 12.0;
  int count = 25;
};

inline GridSpec parse_grid(const std::string& text) {
  GridSpec g;
  std::istringstream in(text);
  char c1 = 0, c2 = 0;
  if (!(in >> g.lo >> c1 >> g.hi >> c2 >> g.count) || c1 != ',' || c2 != ',' || g.count < 1)
    throw CLI::ValidationError("grid", "expected 'lo_exp,hi_exp,count', got '" + text + "'");
  return g;
}

inline void dump_matrices(const OrfdSystem& sys, const std::filesystem::path& dir,
                          std::vector<std::string>& outputs) {
  std::filesystem::create_directories(dir);
  auto dump = [&](const char* name, const Eigen::MatrixXd& A) {
    const auto path = dir / name;
    std::ofstream f(path);
    io::write_matrix(f, A);
    outputs.push_back(path.string());
  };
  dump("M.txt", sys.M_mat);
  dump("Ah.txt", sys.Ah_mat);
  dump("B.txt", sys.B_mat);
  dump("A_op.txt", sys.A_op);
}

class Stopwatch {
public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void finish(io::RunManifest& manifest, const std::string& primary_out,
                   const Stopwatch& clock) {
  if (primary_out.empty()) return;
  manifest.wall_time = clock.seconds();
  manifest.write(io::manifest_path_for(primary_out));
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw DomainError("cannot write " + path);
  f << text;
}

} // namespace detail

/// Parses argv and dispatches. Output goes to `out`, diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Boundary feedback amplifier design and ORFD verification for "
               "magnetizable piezoelectric beams"};
  app.require_subcommand(1);
  app.name(argc > 0 ? std::filesystem::path(argv[0]).filename().string() : "piezoamp");

  // design
  detail::MaterialSource design_src;
  double design_eps = 1.0;
  std::string design_out, emit_config;
  auto* design = app.add_subcommand("design", "amplifier intervals and guaranteed decay rate");
  design_src.add_to(design);
  design->add_option("--epsilon", design_eps, "Young-inequality parameter")->capture_default_str();
  design->add_option("--out", design_out, "write the JSON report here");
  design->add_option("--emit-config", emit_config, "write the resolved parameters as a config file");

  // verify
  detail::MaterialSource verify_src;
  double verify_eps = 1.0, verify_xi1 = 0.0, verify_xi2 = 0.0;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "check an amplifier pair against the design");
  verify_src.add_to(verify);
  verify->add_option("--xi1", verify_xi1, "strain amplifier")->required();
  verify->add_option("--xi2", verify_xi2, "charge amplifier")->required();
  verify->add_option("--epsilon", verify_eps)->capture_default_str();
  verify->add_option("--out", verify_out, "write the JSON report here");

  // simulate
  detail::MaterialSource sim_src;
  double sim_xi1 = 1e6, sim_xi2 = 1e9, sim_T = 0.1, sim_dt = 1e-6, sim_peak = 0.5;
  int sim_N = 80, sim_every = 1;
  std::string sim_out, sim_norm_out, sim_scheme = "modal", sim_dump;
  auto* simulate = app.add_subcommand("simulate", "time simulation with energy trace");
  sim_src.add_to(simulate);
  simulate->add_option("--xi1", sim_xi1)->capture_default_str();
  simulate->add_option("--xi2", sim_xi2)->capture_default_str();
  simulate->add_option("--N", sim_N, "interior nodes")->capture_default_str();
  simulate->add_option("--T", sim_T, "duration [s]")->capture_default_str();
  simulate->add_option("--dt", sim_dt, "step [s]")->capture_default_str();
  simulate->add_option("--peak-frac", sim_peak, "hat peak position")->capture_default_str();
  simulate->add_option("--scheme", sim_scheme)
      ->check(CLI::IsMember({"modal", "midpoint"}))
      ->capture_default_str();
  simulate->add_option("--record-every", sim_every, "steps between samples")->capture_default_str();
  simulate->add_option("--out", sim_out, "trace CSV: t,E,vdot_L,pdot_L");
  simulate->add_option("--normalized-out", sim_norm_out,
                       "CSV t,E_over_E0,envelope with the guaranteed envelope M exp(-sigma t)");
  simulate->add_option("--dump-matrices", sim_dump, "directory for M, A_h, B, A_op text dumps");

  // spectrum
  detail::MaterialSource spec_src;
  double spec_xi1 = 1e6, spec_xi2 = 1e9;
  int spec_N = 80, spec_checks = 10;
  bool spec_all = false;
  std::string spec_route = "extended", spec_out, spec_dump;
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of the first-order operator");
  spec_src.add_to(spectrum);
  spectrum->add_option("--xi1", spec_xi1)->capture_default_str();
  spectrum->add_option("--xi2", spec_xi2)->capture_default_str();
  spectrum->add_option("--N", spec_N)->capture_default_str();
  spectrum->add_option("--route", spec_route)
      ->check(CLI::IsMember({"extended", "balanced"}))
      ->capture_default_str();
  spectrum->add_option("--residual-checks", spec_checks)->capture_default_str();
  spectrum->add_flag("--all", spec_all, "include every eigenvalue in the report");
  spectrum->add_option("--out", spec_out, "write the JSON report here");
  spectrum->add_option("--dump-matrices", spec_dump, "directory for M, A_h, B, A_op text dumps");

  // sweep
  detail::MaterialSource sweep_src;
  std::string sweep_g1 = "-8,12,25", sweep_g2 = "-8,12,25", sweep_out;
  int sweep_N = 80;
  unsigned sweep_threads = 0;
  double sweep_eps = 1.0;
  bool sweep_reference = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "spectral abscissa over the amplifier plane");
  sweep_src.add_to(sweep_cmd);
  sweep_cmd->add_option("--xi1-grid", sweep_g1, "lo_exp,hi_exp,count")->capture_default_str();
  sweep_cmd->add_option("--xi2-grid", sweep_g2, "lo_exp,hi_exp,count")->capture_default_str();
  sweep_cmd->add_flag("--reference-grid", sweep_reference, "use the 7 x 6 reference amplifier grid");
  sweep_cmd->add_option("--N", sweep_N)->capture_default_str();
  sweep_cmd->add_option("--threads", sweep_threads, "cap on worker threads (0: all cores)");
  sweep_cmd->add_option("--epsilon", sweep_eps, "epsilon for the design-box annotation")
      ->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "CSV: xi1,xi2,max_real,in_design_box");

  if (argc <= 1) {
    err << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  const detail::Stopwatch clock;
  io::RunManifest manifest;
  try {
    if (*design) {
      const MaterialParams p = design_src.load();
      const DerivedConstants d = derive_constants(p);
      const Interval eb = epsilon_bounds(d, p);
      const FeedbackDesign fd = amplifier_intervals(design_eps, d, p);
      json report = io::design_json(fd, eb, d);
      report["params"] = io::params_json(p);
      report["derived"] = io::derived_json(d);
      manifest.command = "design";
      manifest.params = p;
      manifest.options = {{"epsilon", design_eps}};
      if (!emit_config.empty()) {
        std::ofstream f(emit_config);
        if (!f) throw DomainError("cannot write " + emit_config);
        io::write_config(f, p);
        manifest.outputs.push_back(emit_config);
      }
      if (!design_out.empty()) {
        detail::write_text(design_out, report.dump(2) + "\n");
        manifest.outputs.push_back(design_out);
        out << io::design_table(fd, eb, d);
      } else {
        out << report.dump(2) << "\n";
        err << io::design_table(fd, eb, d);
      }
      detail::finish(manifest, !design_out.empty() ? design_out : emit_config, clock);
      return kExitOk;
    }

    if (*verify) {
      const MaterialParams p = verify_src.load();
      const DerivedConstants d = derive_constants(p);
      const DesignReport r = verify_design(verify_xi1, verify_xi2, verify_eps, d, p);
      const json report = io::report_json(r);
      manifest.command = "verify";
      manifest.params = p;
      manifest.options = {{"xi1", verify_xi1}, {"xi2", verify_xi2}, {"epsilon", verify_eps}};
      if (!verify_out.empty()) {
        detail::write_text(verify_out, report.dump(2) + "\n");
        manifest.outputs.push_back(verify_out);
      }
      out << report.dump(2) << "\n";
      detail::finish(manifest, verify_out, clock);
      if (r.all_pass()) return kExitOk;
      if (r.zero_amplifier) err << "error: amplifiers must be strictly positive\n";
      if (!r.epsilon_ok) {
        const Interval eb = epsilon_bounds(d, p);
        err << "error: epsilon = " << verify_eps << " outside the admissible interval (" << eb.lo
            << ", " << eb.hi << ")\n";
      } else {
        if (!r.xi1_in_interval)
          err << "error: xi1 = " << verify_xi1 << " outside (c1-, c1+) = (" << r.c1.lo << ", "
              << r.c1.hi << ")\n";
        if (!r.xi2_in_interval)
          err << "error: xi2 = " << verify_xi2 << " outside (c2-, c2+) = (" << r.c2.lo << ", "
              << r.c2.hi << ")\n";
      }
      if (!r.f1_ok)
        err << "error: f1(xi1) = " << r.f1_val << " does not exceed 1/(2 eta) = " << r.threshold
            << "\n";
      if (!r.f2_ok)
        err << "error: f2(xi2) = " << r.f2_val << " does not exceed 1/(2 eta) = " << r.threshold
            << "\n";
      return kExitDomain;
    }

    if (*simulate) {
      const MaterialParams p = sim_src.load();
      const DerivedConstants d = derive_constants(p);
      const OrfdSystem sys = build_system(p, sim_xi1, sim_xi2, sim_N);
      manifest.command = "simulate";
      manifest.params = p;
      manifest.options = {{"xi1", sim_xi1}, {"xi2", sim_xi2}, {"N", sim_N},
                          {"T", sim_T},     {"dt", sim_dt},   {"peak_frac", sim_peak},
                          {"scheme", sim_scheme}, {"record_every", sim_every}};
      if (!sim_dump.empty()) detail::dump_matrices(sys, sim_dump, manifest.outputs);

      IntegrateOptions opt;
      opt.scheme = sim_scheme == "midpoint" ? Scheme::ImplicitMidpoint : Scheme::Modal;
      opt.record_every = sim_every;
      const EnergyTrace tr = integrate(sys, hat_initial_condition(sim_N, sim_peak), sim_T, sim_dt, opt);

      const double sigma = d.sigma_max;
      const double bigM = 3.0;
      const EnvelopeResult env = envelope_check(tr, sigma, bigM);
      json report = {{"xi1", sim_xi1},
                     {"xi2", sim_xi2},
                     {"N", sim_N},
                     {"T", sim_T},
                     {"dt", sim_dt},
                     {"scheme", scheme_name(opt.scheme)},
                     {"samples", tr.times.size()},
                     {"E0", tr.energies.front()},
                     {"E_final", tr.energies.back()},
                     {"energy_ratio", tr.energies.back() / tr.energies.front()},
                     {"spectral_radius_estimate", tr.spectral_radius},
                     {"fastest_mode_resolved", tr.fastest_mode_resolved},
                     {"sigma_max", d.sigma_max},
                     {"envelope",
                      {{"sigma", sigma}, {"bigM", bigM}, {"pass", env.pass},
                       {"min_margin", env.min_margin}, {"worst_time", env.worst_time}}}};
      try {
        const DecayFit fit = fit_decay(tr);
        report["fit"] = {{"sigma_fit", fit.sigma_fit}, {"r_squared", fit.r_squared},
                         {"window", {fit.t_start, fit.t_end}}, {"samples", fit.samples},
                         {"truncated", fit.truncated}};
      } catch (const DomainError& e) {
        report["fit"] = {{"error", e.what()}};
      }

      if (!sim_out.empty()) {
        std::ofstream f(sim_out);
        if (!f) throw DomainError("cannot write " + sim_out);
        io::CsvWriter csv(f, {"t", "E", "vdot_L", "pdot_L"});
        for (std::size_t k = 0; k < tr.times.size(); ++k)
          csv.row({tr.times[k], tr.energies[k], tr.boundary_v_dot[k], tr.boundary_p_dot[k]});
        manifest.outputs.push_back(sim_out);
      }
      if (!sim_norm_out.empty()) {
        std::ofstream f(sim_norm_out);
        if (!f) throw DomainError("cannot write " + sim_norm_out);
        io::CsvWriter csv(f, {"t", "E_over_E0", "envelope"});
        const double E0 = tr.energies.front();
        for (std::size_t k = 0; k < tr.times.size(); ++k)
          csv.row({tr.times[k], tr.energies[k] / E0, bigM * std::exp(-sigma * tr.times[k])});
        manifest.outputs.push_back(sim_norm_out);
      }
      out << report.dump(2) << "\n";
      detail::finish(manifest, !sim_out.empty() ? sim_out : sim_norm_out, clock);
      return kExitOk;
    }

    if (*spectrum) {
      const MaterialParams p = spec_src.load();
      const DerivedConstants d = derive_constants(p);
      const OrfdSystem sys = build_system(p, spec_xi1, spec_xi2, spec_N);
      manifest.command = "spectrum";
      manifest.params = p;
      manifest.options = {{"xi1", spec_xi1}, {"xi2", spec_xi2}, {"N", spec_N},
                          {"route", spec_route}, {"residual_checks", spec_checks}};
      if (!spec_dump.empty()) detail::dump_matrices(sys, spec_dump, manifest.outputs);
      SpectrumOptions opt;
      opt.route = spec_route == "balanced" ? EigenRoute::BalancedOperator : EigenRoute::EnergyExtended;
      opt.residual_checks = spec_checks;
      const SpectrumResult sr = eigenvalues(sys, opt);
      const FeedbackDesign fd = amplifier_intervals(1.0, d, p);
      json report = {{"xi1", spec_xi1},
                     {"xi2", spec_xi2},
                     {"N", spec_N},
                     {"route", spec_route},
                     {"count", sr.eigenvalues.size()},
                     {"max_real", sr.max_real},
                     {"residual_max", sr.residual_max},
                     {"op_norm", sr.op_norm},
                     {"in_design_box", fd.c1.contains(spec_xi1) && fd.c2.contains(spec_xi2)}};
      if (spec_all) {
        json eig = json::array();
        for (const auto& l : sr.eigenvalues) eig.push_back({l.real(), l.imag()});
        report["eigenvalues"] = eig;
      }
      if (!spec_out.empty()) {
        detail::write_text(spec_out, report.dump(2) + "\n");
        manifest.outputs.push_back(spec_out);
      }
      out << report.dump(2) << "\n";
      detail::finish(manifest, spec_out, clock);
      return kExitOk;
    }

    if (*sweep_cmd) {
      const MaterialParams p = sweep_src.load();
      std::vector<double> g1, g2;
      if (sweep_reference) {
        const ReferenceGrid ref;
        g1 = ref.xi1_axis();
        g2 = ref.xi2_axis();
      } else {
        const auto a = detail::parse_grid(sweep_g1);
        const auto b = detail::parse_grid(sweep_g2);
        g1 = log_grid(a.lo, a.hi, a.count);
        g2 = log_grid(b.lo, b.hi, b.count);
      }
      SweepOptions opt;
      opt.N = sweep_N;
      opt.threads = sweep_threads;
      opt.epsilon = sweep_eps;
      const SpectrumGrid grid = sweep(p, g1, g2, opt);
      manifest.command = "sweep";
      manifest.params = p;
      manifest.options = {{"N", sweep_N}, {"reference_grid", sweep_reference}, {"xi1_grid", sweep_g1},
                          {"xi2_grid", sweep_g2}, {"epsilon", sweep_eps},
                          {"threads", sweep_threads}};

      std::ostringstream csv_text;
      {
        io::CsvWriter csv(csv_text, {"xi1", "xi2", "max_real", "in_design_box"});
        for (std::size_t i = 0; i < g1.size(); ++i)
          for (std::size_t j = 0; j < g2.size(); ++j) {
            const std::size_t k = grid.index(i, j);
            csv.row_strings({io::format_number(g1[i]), io::format_number(g2[j]),
                             grid.failed[k] ? "nan" : io::format_number(grid.max_real[k]),
                             grid.in_design_box[k] ? "1" : "0"});
          }
      }
      if (!sweep_out.empty()) {
        detail::write_text(sweep_out, csv_text.str());
        manifest.outputs.push_back(sweep_out);
      } else {
        out << csv_text.str();
      }
      std::size_t failed = 0;
      for (bool f : grid.failed) failed += f ? 1 : 0;
      if (failed) err << "warning: " << failed << " cell(s) failed to converge\n";
      detail::finish(manifest, sweep_out, clock);
      return kExitOk;
    }
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  err << app.help();
  return kExitUsage;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace piezoamp::cli
