// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: ionramp_acceptance [--strict] [--only 1,4,10]
// Exit status is nonzero when a criterion could not be evaluated, and with
// --strict also when any criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "ionramp/analysis.hpp"
#include "ionramp/config.hpp"
#include "ionramp/evolution.hpp"
#include "ionramp/ramps.hpp"
#include "ionramp/spectrum.hpp"
#include "ionramp/trap_couplings.hpp"
#include "../oracles.hpp"

using namespace ionramp;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

// Shared state: couplings and gap curves at fixed trap voltages, computed once.
class Context {
 public:
  Context() : cfg_(parse_run_config(R"({"schema_version": 1})")) {}

  const RunConfig& config() const { return cfg_; }

  const CouplingMatrix& couplings(int n) {
    auto it = couplings_.find(n);
    if (it == couplings_.end()) it = couplings_.emplace(n, resolve_couplings(cfg_, n)).first;
    return it->second;
  }

  double b0(int n) { return resolve_b0(cfg_, couplings(n)); }

  const GapCurve& gap(int n) {
    auto it = gaps_.find(n);
    if (it == gaps_.end()) it = gaps_.emplace(n, gap_curve(couplings(n), b0(n))).first;
    return it->second;
  }

 private:
  RunConfig cfg_;
  std::map<int, CouplingMatrix> couplings_;
  std::map<int, GapCurve> gaps_;
};

double final_ideal(Context& ctx, int n, RampFamily f, double tf) {
  return final_overlap(ctx.couplings(n), ctx.gap(n), f, tf);
}

Verdict calibration(Context& ctx) {
  const auto& j = ctx.couplings(6);
  const double b0 = ctx.b0(6);
  const double alpha = fit_alpha(j).alpha;
  const double dc = critical_point(ctx.gap(6)).gap_khz;
  // 3.85 rounds half up to the reported 3.9.
  const bool ok = std::floor(b0 * 10.0 + 0.5 + 1e-9) == 39.0 && within(dc, 0.29, 0.15) && within(j.max(), 0.77, 1e-6) &&
                  within(alpha, 1.0, 1e-6);
  return {ok, fmt("J_max=%.4f kHz alpha=%.4f B0=%.4f kHz (3.9) Delta_c=%.4f kHz (0.29 +-15%%)", j.max(), alpha,
                  b0, dc)};
}

Verdict thresholds(Context& ctx) {
  const auto& g = ctx.gap(6);
  const double lin = adiabatic_threshold(RampFamily::Linear, g);
  const double exp = adiabatic_threshold(RampFamily::Exponential, g);
  const double la = adiabatic_threshold(RampFamily::LocalAdiabatic, g);
  const double exp_local = adiabatic_threshold(RampFamily::Exponential, g, GapConvention::Local);
  const double la_local = adiabatic_threshold(RampFamily::LocalAdiabatic, g, GapConvention::Local);
  const bool ok = within(lin, 46.0, 0.15) && within(exp, 14.5, 0.20) && within(la, 3.6, 0.20);
  return {ok, fmt("linear=%.2f ms (46 +-15%%) exponential=%.2f ms (14.5 +-20%%) local-adiabatic=%.2f ms "
                  "(3.6 +-20%%); worst local gap: exponential=%.2f local-adiabatic=%.2f",
                  lin, exp, la, exp_local, la_local)};
}

Verdict critical_times(Context& ctx) {
  const auto& g = ctx.gap(6);
  const double lin = critical_time(make_ramp(RampFamily::Linear, g, 2.4), g);
  const double exp = critical_time(make_ramp(RampFamily::Exponential, g, 2.4), g);
  const double la = critical_time(make_ramp(RampFamily::LocalAdiabatic, g, 2.4), g);
  const bool ok = within(lin, 2.3, 0.05) && within(exp, 1.2, 0.10) && within(la, 1.2, 0.10);
  return {ok, fmt("t_c linear=%.3f ms (2.3 +-5%%) exponential=%.3f ms local-adiabatic=%.3f ms (1.2 +-10%%)", lin,
                  exp, la)};
}

Verdict dominance(Context& ctx) {
  std::vector<double> grid(13);
  for (int i = 0; i < 13; ++i) grid[i] = 2.4 * i / 12;
  const std::vector<RampFamily> fams{RampFamily::LocalAdiabatic, RampFamily::Exponential, RampFamily::Linear};
  const auto rows = sweep_ramp_families(ctx.couplings(6), ctx.gap(6), grid, fams);
  bool ok = true;
  std::ostringstream bad;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double la = rows[i].overlap, ex = rows[13 + i].overlap, li = rows[26 + i].overlap;
    const bool point = grid[i] == 0.0 ? (la == ex && ex == li) : (la > ex && ex > li);
    if (!point) {
      ok = false;
      bad << fmt(" t_f=%.1f: LA=%.4f exp=%.4f lin=%.4f;", grid[i], la, ex, li);
    }
  }
  const double la_end = rows[12].overlap, ex_end = rows[25].overlap, li_end = rows[38].overlap;
  return {ok, fmt("at 2.4 ms LA=%.4f exp=%.4f lin=%.4f;", la_end, ex_end, li_end) +
                  (ok ? std::string(" ordering holds at all 13 points") : " violated at" + bad.str())};
}

Verdict time_to_match_factors(Context& ctx) {
  const auto& j = ctx.couplings(6);
  const auto& g = ctx.gap(6);
  const double target = final_ideal(ctx, 6, RampFamily::LocalAdiabatic, 2.4);
  const auto te = time_to_match(j, g, RampFamily::Exponential, target, 2.4, 60.0, 1e-3);
  const auto tl = time_to_match(j, g, RampFamily::Linear, target, 2.4, 120.0, 1e-3);
  if (!te || !tl) return {false, "target probability not reached"};
  const double fe = *te / 2.4, fl = *tl / 2.4;
  const bool ok = within(fe, 4.0, 0.30) && within(fl, 12.0, 0.30);
  return {ok, fmt("P_LA(2.4 ms)=%.4f; exponential %.3f ms (x%.2f, 4 +-30%%), linear %.3f ms (x%.2f, 12 +-30%%)",
                  target, *te, fe, *tl, fl)};
}

Verdict uniform_limit(Context& ctx) {
  double worst = 0.0;
  for (int n = 1; n <= 14; ++n) {
    const auto d = outcome_distribution(field_aligned_state(SpinCount(n)));
    for (double p : d.probabilities) worst = std::max(worst, std::abs(p - std::ldexp(1.0, -n)));
  }
  // Each family at t_f = 0 leaves the Neel superposition at 2 * 2^-n.
  const std::vector<double> grid{0.0};
  const std::vector<RampFamily> fams{RampFamily::LocalAdiabatic, RampFamily::Exponential, RampFamily::Linear};
  for (const auto& row : sweep_ramp_families(ctx.couplings(6), ctx.gap(6), grid, fams)) {
    worst = std::max(worst, std::abs(row.overlap - 2.0 / 64.0));
  }
  return {worst < 1e-10, fmt("max |p - 2^-n| = %.2e over n = 1..14 and all families at N = 6", worst)};
}

Verdict coupled_index(Context& ctx) {
  bool ok = true;
  std::ostringstream s;
  for (int n : {4, 6, 8}) {
    const auto& g = ctx.gap(n);
    const int first = g.points.front().coupled_index, last = g.points.back().coupled_index;
    ok = ok && first == 3 && last == n + 1;
    s << fmt("N=%d: %d -> %d (3 -> %d); ", n, first, last, n + 1);
  }
  return {ok, s.str()};
}

Verdict oracle_equivalence(Context& ctx) {
  // Matrix-free action against Kronecker-product matrices.
  double action = 0.0;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  for (int n = 2; n <= 8; ++n) {
    const auto& j = n >= 2 ? ctx.couplings(n) : ctx.couplings(2);
    const Hamiltonian h(j, TransverseField(1.7));
    const Eigen::MatrixXd m = oracle::measurement_basis_hamiltonian(j.to_dense(), 1.7);
    std::vector<Amplitude> v(h.dimension()), out(h.dimension());
    for (auto& a : v) a = {gauss(rng), gauss(rng)};
    h.apply(std::span<const Amplitude>(v), std::span<Amplitude>(out));
    const Eigen::VectorXcd ref = m * Eigen::Map<const Eigen::VectorXcd>(v.data(), v.size());
    for (std::size_t k = 0; k < v.size(); ++k) action = std::max(action, std::abs(out[k] - ref(k)));
  }

  // Iterative eigenvalues against full dense diagonalization.
  double eig = 0.0;
  SpectrumOptions iterative;
  iterative.dense_cap = 0;
  const auto& j8 = ctx.couplings(8);
  for (double b : {0.0, 0.05, 0.2, 1.0, ctx.b0(8)}) {
    const auto s = low_spectrum(Hamiltonian(j8, TransverseField(b)), 20, iterative);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(oracle::measurement_basis_hamiltonian(j8.to_dense(), b),
                                                       Eigen::EigenvaluesOnly);
    for (int i = 0; i < 20; ++i) eig = std::max(eig, std::abs(s.values[i] - ref.eigenvalues()(i)));
  }

  // Integrator against a fourth-order Magnus oracle with exact exponentials.
  double infid = 0.0, prob = 0.0, self = 0.0;
  for (int n : {2, 4, 6, 8}) {
    const auto& j = ctx.couplings(n);
    const auto r = make_ramp(RampFamily::LocalAdiabatic, ctx.gap(n), 2.4);
    const auto res = evolve(j, r);
    const Eigen::MatrixXd hi = oracle::measurement_basis_hamiltonian(j.to_dense(), 0.0);
    const Eigen::MatrixXd hy = oracle::field_operator(n);
    auto field = [&](double t) { return r.field_at(t); };
    const Eigen::VectorXcd ref = oracle::magnus4(hi, hy, field, 2.4, 3000, oracle::field_aligned(n));
    const Eigen::VectorXcd coarse = oracle::magnus4(hi, hy, field, 2.4, 1500, oracle::field_aligned(n));
    self = std::max(self, oracle::infidelity(ref, coarse));
    const Eigen::VectorXcd got =
        Eigen::Map<const Eigen::VectorXcd>(res.final_state.amplitudes.data(), res.final_state.dimension());
    infid = std::max(infid, oracle::infidelity(got, ref));
    for (Eigen::Index b = 0; b < ref.size(); ++b) prob = std::max(prob, std::abs(std::norm(got(b)) - std::norm(ref(b))));
  }
  const bool ok = action <= 1e-12 && eig <= 1e-9 && infid <= 1e-8 && prob <= 1e-8;
  return {ok, fmt("action %.1e (1e-12), eigenvalues %.1e (1e-9), evolution infidelity %.1e / probability %.1e "
                  "(1e-8; oracle self-check %.1e)",
                  action, eig, infid, prob, self)};
}

Verdict half_landau_zener_cap(Context&) {
  const double sudden = half_landau_zener(0.5, 1e9);
  bool monotone = true;
  double prev = 1.0, slowest = 0.0;
  for (int k = 0; k <= 36; ++k) {
    // Ramp time grows as the rate falls from 1e9 to 1e-3 kHz/ms.
    const double p = half_landau_zener(0.5, std::pow(10.0, 9.0 - k / 3.0));
    monotone = monotone && p < prev;
    prev = slowest = p;
  }
  const bool ok = std::abs(sudden - 0.5) <= 1e-3 && monotone;
  return {ok, fmt("sudden P=%.6f (0.5 +-1e-3); strictly decreasing over 37 rates: %s; slowest P=%.2e", sudden,
                  monotone ? "yes" : "no", slowest)};
}

std::vector<CriticalSample> scaling_samples(Context& ctx) {
  std::vector<CriticalSample> samples;
  for (int n = 3; n <= 10; ++n) {
    const auto cp = critical_point(ctx.gap(n));
    samples.push_back({n, cp.field_khz, cp.gap_khz});
  }
  return samples;
}

Verdict prevalence_at_scale(Context& ctx) {
  const auto ex = extrapolate_critical(scaling_samples(ctx), 14);
  const auto& j = ctx.couplings(14);
  const auto gap = piecewise_gap(ex.field_khz, ex.gap_khz, ctx.b0(14));
  const auto res = evolve(j, make_ramp(RampFamily::PiecewiseApproximate, gap, 2.4));
  const auto dist = outcome_distribution(res.final_state);
  const auto rep = most_prevalent(dist, 2);
  const auto [a, b] = neel_indices(14);
  const double neel = dist.probabilities[a] + dist.probabilities[b];
  const bool top2 = rep.top == std::vector<std::uint64_t>{a, b} && rep.margin > 0.0;
  const bool ok = top2 && neel > 0.0 && neel < 0.5 && neel >= 0.003 && neel <= 0.3;
  return {ok, fmt("B_c=%.4f Delta_c=%.4f kHz (extrapolated); top-2 = {%llu, %llu} (Neel {%llu, %llu}); "
                  "P_neel=%.4f (3%% to an order of magnitude); next=%.2e; n_rep=%llu",
                  ex.field_khz, ex.gap_khz, (unsigned long long)rep.top[0], (unsigned long long)rep.top[1],
                  (unsigned long long)a, (unsigned long long)b, neel, rep.p_excited,
                  (unsigned long long)rep.repetitions_needed.value_or(0))};
}

Verdict scaling(Context& ctx) {
  const auto samples = scaling_samples(ctx);
  bool gap_down = true, alpha_down = true;
  double prev_alpha = 1e9;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0 && !(samples[i].gap_khz < samples[i - 1].gap_khz)) gap_down = false;
    const double alpha = fit_alpha(ctx.couplings(samples[i].num_spins)).alpha;
    if (!(alpha < prev_alpha)) alpha_down = false;
    prev_alpha = alpha;
  }
  bool order = true;
  std::ostringstream bad;
  for (int n = 2; n <= 10; ++n) {
    const double la = final_ideal(ctx, n, RampFamily::LocalAdiabatic, 2.4);
    const double ex = final_ideal(ctx, n, RampFamily::Exponential, 2.4);
    const double li = final_ideal(ctx, n, RampFamily::Linear, 2.4);
    if (!(la >= ex && ex >= li)) {
      order = false;
      bad << fmt(" N=%d (%.3f %.3f %.3f)", n, la, ex, li);
    }
  }
  const double ratio = samples.front().gap_khz / samples.back().gap_khz;
  const bool ok = gap_down && alpha_down && order;
  return {ok, fmt("Delta_c decreasing N=3..10: %s (%.3f -> %.3f kHz, factor %.1f); alpha decreasing: %s "
                  "(%.3f -> %.3f); LA >= exp >= lin at 2.4 ms for N=2..10: %s",
                  gap_down ? "yes" : "no", samples.front().gap_khz, samples.back().gap_khz, ratio,
                  alpha_down ? "yes" : "no", fit_alpha(ctx.couplings(3)).alpha, fit_alpha(ctx.couplings(10)).alpha,
                  order ? "yes" : "no") +
              bad.str()};
}

Verdict repetitions(Context&) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int matched = 0;
  std::ostringstream s;
  for (int k = 0; k < 10; ++k) {
    double pg = u(rng), pe = u(rng) * pg;
    const long double x = (static_cast<long double>(pg) * pg + static_cast<long double>(pe) * pe) /
                          ((static_cast<long double>(pg) - pe) * (static_cast<long double>(pg) - pe));
    const auto expected = static_cast<std::uint64_t>(std::floor(x)) + 1;
    const auto got = required_repetitions(pg, pe);
    matched += got && *got == expected;
    if (k < 3) s << fmt("(%.3f, %.3f) -> %llu; ", pg, pe, (unsigned long long)expected);
  }
  return {matched == 10, fmt("%d/10 randomized pairs exact; ", matched) + s.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  bool strict = false;
  std::vector<int> only;
  app.add_flag("--strict", strict, "Exit nonzero if any criterion fails");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Verdict(Context&)>>> criteria{
      {"N=6 calibration consistency", calibration},
      {"adiabaticity thresholds", thresholds},
      {"critical-time check", critical_times},
      {"ramp-family dominance", dominance},
      {"time-to-match factors", time_to_match_factors},
      {"uniform-limit exactness", uniform_limit},
      {"coupled-index structure", coupled_index},
      {"oracle equivalence", oracle_equivalence},
      {"half-Landau-Zener cap", half_landau_zener_cap},
      {"prevalence at scale", prevalence_at_scale},
      {"N-scaling reproduction", scaling},
      {"repetition bound", repetitions},
  };
  const std::set<int> selected(only.begin(), only.end());

  Context ctx;
  int passed = 0, failed = 0, errors = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
      ++errors;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    (v.pass ? passed : failed) += 1;
    std::printf("criterion %2d %s  %s: %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("acceptance: %d passed, %d failed\n", passed, failed);
  if (errors > 0) return 2;
  return strict && failed > 0 ? 1 : 0;
}
