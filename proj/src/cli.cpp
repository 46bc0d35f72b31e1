#include "ionramp/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>

#include "ionramp/analysis.hpp"
#include "ionramp/config.hpp"
#include "ionramp/errors.hpp"
#include "ionramp/evolution.hpp"
#include "ionramp/io.hpp"
#include "ionramp/ramps.hpp"
#include "ionramp/spectrum.hpp"
#include "ionramp/trap_couplings.hpp"

namespace ionramp {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct GlobalFlags {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool piecewise = false;
  std::optional<int> dense_cap;
};

void write_json(const fs::path& path, const ordered_json& j) { write_file(path, j.dump(2) + "\n"); }

class Runner {
 public:
  Runner(const GlobalFlags& flags, const RunConfig& base) {
    cfg_ = flags.config_path.empty() ? base : load_run_config(flags.config_path, base);
    if (!flags.out.empty()) cfg_.output_dir = flags.out;
    if (flags.seed) cfg_.seed = *flags.seed;
    if (flags.piecewise) cfg_.piecewise = true;
    if (flags.dense_cap) cfg_.dense_cap = *flags.dense_cap;
    cfg_.validate();
    out_ = cfg_.output_dir;
    write_json(out_ / "run.json", to_json(cfg_));
  }

  const RunConfig& config() const { return cfg_; }
  const fs::path& out() const { return out_; }

  const CouplingMatrix& couplings() {
    if (!couplings_) couplings_ = resolve_couplings(cfg_);
    return *couplings_;
  }

  double b0() { return resolve_b0(cfg_, couplings()); }

  GapCurveOptions gap_options() const {
    GapCurveOptions o;
    o.grid = cfg_.gap_grid;
    o.states = cfg_.gap_states;
    o.threads = cfg_.threads;
    o.spectrum.dense_cap = cfg_.dense_cap;
    return o;
  }

  EvolutionOptions evolution_options() const {
    EvolutionOptions o;
    o.coherence_time_ms = cfg_.coherence_time_ms;
    return o;
  }

  GapCurve computed_gap(const CouplingMatrix& j, double b0) const { return gap_curve(j, b0, gap_options()); }

  /// Critical point for the piecewise model: given, or extrapolated from smaller chains.
  ordered_json piecewise_critical(double& bc, double& delta_c) {
    ordered_json info;
    if (cfg_.piecewise_bc_khz) {
      bc = *cfg_.piecewise_bc_khz;
      delta_c = *cfg_.piecewise_delta_c_khz;
      info["source"] = "configured";
    } else {
      if (cfg_.couplings) throw ConfigError("piecewise extrapolation needs trap synthesis, not an explicit matrix");
      std::vector<CriticalSample> samples;
      auto rows = ordered_json::array();
      for (int n : cfg_.extrapolate_from) {
        const CouplingMatrix jn = resolve_couplings(cfg_, n);
        const auto cp = critical_point(computed_gap(jn, resolve_b0(cfg_, jn)));
        samples.push_back({n, cp.field_khz, cp.gap_khz});
        rows.push_back({{"N", n}, {"B_c_kHz", cp.field_khz}, {"Delta_c_kHz", cp.gap_khz}});
      }
      const auto ex = extrapolate_critical(samples, cfg_.num_spins);
      bc = ex.field_khz;
      delta_c = ex.gap_khz;
      info["source"] = "extrapolated";
      info["model"] = ex.model;
      info["gap_prefactor_kHz"] = ex.gap_prefactor;
      info["gap_exponent"] = ex.gap_exponent;
      info["field_intercept_kHz"] = ex.field_intercept;
      info["field_slope_kHz"] = ex.field_slope;
      info["samples"] = rows;
    }
    info["B_c_kHz"] = bc;
    info["Delta_c_kHz"] = delta_c;
    return info;
  }

  /// Gap curve used for ramp design; also writes its description.
  const GapCurve& gap() {
    if (gap_) return *gap_;
    ordered_json j;
    j["num_spins"] = cfg_.num_spins;
    j["B0_kHz"] = b0();
    if (cfg_.piecewise) {
      double bc = 0.0, dc = 0.0;
      j["piecewise"] = piecewise_critical(bc, dc);
      gap_ = piecewise_gap(bc, dc, b0(), cfg_.gap_grid);
      gap_->extrapolated = !cfg_.piecewise_bc_khz.has_value();
    } else {
      gap_ = computed_gap(couplings(), b0());
    }
    const auto cp = critical_point(*gap_);
    j["source"] = cfg_.piecewise ? "piecewise" : "computed";
    j["extrapolated"] = gap_->extrapolated;
    j["critical"] = to_json(cp);
    j["epsilon"] = gap_->epsilon;
    write_file(out_ / "gap_curve.csv", gap_curve_csv(*gap_));
    write_json(out_ / "critical.json", j);
    return *gap_;
  }

  static bool needs_gap(RampFamily f) {
    return f == RampFamily::LocalAdiabatic || f == RampFamily::PiecewiseApproximate;
  }

  /// Gap curve for ramp construction; linear and exponential ramps only need B_0.
  GapCurve ramp_gap(std::span<const RampFamily> families) {
    for (auto f : families) {
      if (needs_gap(f)) return gap();
    }
    GapCurve g;
    g.b0_khz = b0();
    return g;
  }

  RampProfile profile(RampFamily family, double tf) {
    const std::array fam{family};
    return make_ramp(family, ramp_gap(fam), tf);
  }

  EvolutionResult evolve_final(RampFamily family, double tf) {
    std::vector<double> snaps(cfg_.snapshots);
    for (int k = 0; k < cfg_.snapshots; ++k) snaps[k] = tf * k / (cfg_.snapshots - 1);
    EvolutionOptions o = evolution_options();
    o.keep_states = false;
    return evolve(couplings(), profile(family, tf), snaps, o);
  }

 private:
  RunConfig cfg_;
  fs::path out_;
  std::optional<CouplingMatrix> couplings_;
  std::optional<GapCurve> gap_;
};

void cmd_couplings(Runner& r) {
  const auto& j = r.couplings();
  write_file(r.out() / "couplings.csv", couplings_csv(j));
  ordered_json meta;
  meta["num_spins"] = j.size();
  meta["source"] = r.config().couplings ? "explicit" : "trap";
  meta["J_max_kHz"] = j.max();
  meta["B0_kHz"] = r.b0();
  if (j.size() >= 3 && j.all_positive()) meta["fit"] = to_json(fit_alpha(j));
  if (auto trap = resolve_trap(r.config())) {
    meta["trap"] = {{"axial_MHz", trap->axial_mhz},     {"transverse_MHz", trap->transverse_mhz},
                    {"rabi_kHz", trap->rabi_khz},       {"detuning_kHz", trap->detuning_khz},
                    {"recoil_kHz", trap->recoil_khz},   {"guard_band_kHz", trap->guard_band_khz}};
    const auto modes = transverse_modes(*trap);
    meta["mode_frequencies_kHz"] = modes.frequencies_khz;
  }
  write_json(r.out() / "couplings.json", meta);
}

void cmd_spectrum(Runner& r, const std::vector<int>& sizes) {
  r.gap();
  if (sizes.empty()) return;
  CsvWriter w({"N", "B_c_kHz", "Delta_c_kHz", "alpha"});
  for (int n : sizes) {
    const CouplingMatrix j = resolve_couplings(r.config(), n);
    const auto cp = critical_point(r.computed_gap(j, resolve_b0(r.config(), j)));
    w.cell(n).cell(cp.field_khz).cell(cp.gap_khz);
    w.cell(n >= 3 && j.all_positive() ? fit_alpha(j).alpha : std::nan(""));
    w.end_row();
  }
  write_file(r.out() / "critical_points.csv", w.str());
}

void cmd_ramp(Runner& r) {
  const auto& cfg = r.config();
  const GapCurve& gap = r.gap();
  const RampProfile p = make_ramp(cfg.family, gap, cfg.tf_ms);
  write_file(r.out() / "ramp.csv", ramp_csv(p));
  const auto trace = adiabaticity_trace(p, gap);
  write_file(r.out() / "adiabaticity.csv", adiabaticity_csv(trace));
  ordered_json j;
  j["family"] = std::string(to_string(p.family()));
  j["B0_kHz"] = p.b0();
  j["tf_ms"] = p.duration();
  j["tau_ms"] = p.tau();
  j["gamma"] = p.gamma();
  j["end_residual_kHz"] = p.end_residual();
  j["t_c_ms"] = critical_time(p, gap);
  ordered_json thr;
  for (auto f : {RampFamily::Linear, RampFamily::Exponential, RampFamily::LocalAdiabatic}) {
    thr[std::string(to_string(f))] = {{"critical_ms", adiabatic_threshold(f, gap, GapConvention::Critical)},
                                      {"local_ms", adiabatic_threshold(f, gap, GapConvention::Local)}};
  }
  j["gamma_one_thresholds"] = thr;
  write_json(r.out() / "ramp.json", j);
}

void cmd_evolve(Runner& r) {
  const auto& cfg = r.config();
  const auto res = r.evolve_final(cfg.family, cfg.tf_ms);
  write_file(r.out() / "evolution.csv", evolution_csv(res));
  ordered_json j = to_json(res);
  j["family"] = std::string(to_string(cfg.family));
  j["num_spins"] = cfg.num_spins;
  j["mean_energy_imparted_kHz"] = mean_energy_imparted(r.couplings(), res.final_state);
  write_json(r.out() / "evolution.json", j);
  write_file(r.out() / "distribution.csv", distribution_csv(outcome_distribution(res.final_state)));
}

std::vector<SweepRow> run_sweep(Runner& r) {
  const auto& cfg = r.config();
  const auto grid = resolve_tf_grid(cfg);
  const GapCurve gap = r.ramp_gap(cfg.families);
  const auto rows = sweep_ramp_families(r.couplings(), gap, grid, cfg.families, r.evolution_options(), cfg.threads);
  write_file(r.out() / "sweep.csv", sweep_csv(rows));
  write_file(r.out() / "sweep_wide.csv", sweep_wide_csv(rows));
  return rows;
}

void write_prevalence(Runner& r, const OutcomeDistribution& dist, const CouplingMatrix& j, const StateVector& final) {
  const auto& cfg = r.config();
  const auto counts = sample_counts(dist, cfg.repetitions, cfg.seed);
  write_file(r.out() / "counts.csv", counts_csv(counts));
  const auto [a, b] = neel_indices(cfg.num_spins);
  ordered_json rep;
  rep["num_spins"] = cfg.num_spins;
  rep["neel_indices"] = {a, b};
  rep["P_neel_total"] = dist.probabilities[a] + dist.probabilities[b];
  rep["exact"] = to_json(most_prevalent(dist, 2));
  ordered_json sampled = to_json(most_prevalent(counts, 2));
  sampled["repetitions"] = cfg.repetitions;
  sampled["seed"] = cfg.seed;
  rep["sampled"] = sampled;
  rep["mean_energy_imparted_kHz"] = mean_energy_imparted(j, final);
  write_json(r.out() / "prevalence.json", rep);
}

void cmd_analyze(Runner& r) {
  const auto& cfg = r.config();
  const auto res = r.evolve_final(cfg.family, cfg.tf_ms);
  const auto dist = outcome_distribution(res.final_state);
  write_file(r.out() / "distribution.csv", distribution_csv(dist));
  write_prevalence(r, dist, r.couplings(), res.final_state);
}

void repro(Runner& r, const std::string& figure) {
  const auto& cfg = r.config();
  cmd_couplings(r);
  r.gap();
  if (figure == "fig3a") {
    for (auto f : cfg.families) {
      const RampProfile p = r.profile(f, cfg.tf_ms);
      std::string name(to_string(f));
      write_file(r.out() / ("ramp_" + name + ".csv"), ramp_csv(p));
    }
    const auto rows = run_sweep(r);
    write_file(r.out() / "fig3a.csv", sweep_wide_csv(rows));
    return;
  }
  if (figure == "fig4") {
    const auto grid = resolve_tf_grid(cfg);
    const std::size_t dim = std::size_t{1} << cfg.num_spins;
    std::vector<std::string> header{"tf_ms"};
    for (std::size_t b = 0; b < dim; ++b) header.push_back("p_" + std::to_string(b));
    CsvWriter w(header);
    EvolutionOptions o = r.evolution_options();
    o.keep_states = false;
    StateVector last = field_aligned_state(SpinCount(cfg.num_spins));
    for (double tf : grid) {
      const StateVector s = tf == 0.0 ? field_aligned_state(SpinCount(cfg.num_spins))
                                      : evolve(r.couplings(), r.profile(cfg.family, tf), {}, o).final_state;
      w.cell(tf);
      for (double p : outcome_distribution(s).probabilities) w.cell(p);
      w.end_row();
      last = s;
    }
    write_file(r.out() / "fig4.csv", w.str());
    const auto dist = outcome_distribution(last);
    write_file(r.out() / "distribution.csv", distribution_csv(dist));
    write_prevalence(r, dist, r.couplings(), last);
    return;
  }
  if (figure == "fig6b") {
    const RampProfile p = r.profile(cfg.family, cfg.tf_ms);
    write_file(r.out() / "ramp.csv", ramp_csv(p));
    EvolutionOptions o = r.evolution_options();
    o.keep_states = false;
    const auto res = evolve(r.couplings(), p, {}, o);
    const auto dist = outcome_distribution(res.final_state);
    write_file(r.out() / "distribution.csv", distribution_csv(dist));
    write_prevalence(r, dist, r.couplings(), res.final_state);
    return;
  }
  throw ConfigError("unknown figure '" + figure + "' (expected fig3a, fig4 or fig6b)");
}

RunConfig recipe_defaults(const std::string& figure) {
  RunConfig c;
  if (figure == "fig4") c.family = RampFamily::LocalAdiabatic;
  if (figure == "fig6b") {
    c.num_spins = 14;
    c.piecewise = true;
    c.family = RampFamily::PiecewiseApproximate;
  }
  return c;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Ramp design and simulation for a trapped-ion transverse-field Ising chain"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", flags.out, "Output directory (overrides output_dir)");
  app.add_option("--seed", flags.seed, "Sampling seed (overrides seed)");
  app.add_flag("--piecewise", flags.piecewise, "Use the piecewise gap model with extrapolated B_c, Delta_c");
  app.add_option("--dense-cap", flags.dense_cap, "Largest spin count diagonalized densely")->check(CLI::Range(0, kMaxSpins));

  auto* couplings = app.add_subcommand("couplings", "Trap couplings and fitted power law");
  auto* spectrum = app.add_subcommand("spectrum", "Gap curve and critical point");
  std::vector<int> sizes;
  spectrum->add_option("--sizes", sizes, "Also tabulate critical points for these chain lengths")->delimiter(',');
  auto* ramp = app.add_subcommand("ramp", "Field schedule and adiabaticity trace");
  auto* evolve_cmd = app.add_subcommand("evolve", "Integrate one ramp");
  auto* sweep = app.add_subcommand("sweep", "Final AFM probability over families and durations");
  auto* analyze = app.add_subcommand("analyze", "Outcome sampling and most-prevalent-state report");
  auto* repro_cmd = app.add_subcommand("repro", "Reproduce a figure recipe end to end");
  std::string figure;
  repro_cmd->add_option("figure", figure, "fig3a, fig4 or fig6b")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (repro_cmd->parsed()) {
      Runner r(flags, recipe_defaults(figure));
      repro(r, figure);
      return kExitOk;
    }
    Runner r(flags, RunConfig{});
    if (couplings->parsed()) cmd_couplings(r);
    if (spectrum->parsed()) cmd_spectrum(r, sizes);
    if (ramp->parsed()) cmd_ramp(r);
    if (evolve_cmd->parsed()) cmd_evolve(r);
    if (sweep->parsed()) run_sweep(r);
    if (analyze->parsed()) cmd_analyze(r);
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DimensionError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("ionramp");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace ionramp
