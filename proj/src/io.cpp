#include "ionramp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ionramp/errors.hpp"

namespace ionramp {

std::string format_number(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  if (x == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) {
  for (const auto& h : header) cell(h);
  end_row();
}

void CsvWriter::separator() {
  if (in_row_++ > 0) out_ += ',';
}

CsvWriter& CsvWriter::cell(double x) {
  separator();
  out_ += format_number(x);
  return *this;
}

CsvWriter& CsvWriter::cell(long long x) {
  separator();
  out_ += std::to_string(x);
  return *this;
}

CsvWriter& CsvWriter::cell(std::uint64_t x) {
  separator();
  out_ += std::to_string(x);
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  separator();
  out_ += s;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw DimensionError("CSV row has " + std::to_string(in_row_) + " cells, expected " +
                                                std::to_string(columns_));
  out_ += '\n';
  in_row_ = 0;
}

std::string couplings_csv(const CouplingMatrix& couplings) {
  CsvWriter w({"i", "j", "J_kHz"});
  for (int i = 0; i < couplings.size(); ++i) {
    for (int j = i + 1; j < couplings.size(); ++j) {
      w.cell(i).cell(j).cell(couplings(i, j));
      w.end_row();
    }
  }
  return w.str();
}

CouplingMatrix parse_couplings_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::map<std::pair<int, int>, double> entries;
  int max_index = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "i,j,J_kHz") throw ConfigError("couplings CSV line 1: expected header 'i,j,J_kHz'");
      continue;
    }
    std::istringstream row(line);
    std::string a, b, c;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c)) {
      throw ConfigError("couplings CSV line " + std::to_string(lineno) + ": expected three fields");
    }
    int i = 0, j = 0;
    double v = 0.0;
    auto bad = [&] { return ConfigError("couplings CSV line " + std::to_string(lineno) + ": malformed number"); };
    if (std::from_chars(a.data(), a.data() + a.size(), i).ec != std::errc{}) throw bad();
    if (std::from_chars(b.data(), b.data() + b.size(), j).ec != std::errc{}) throw bad();
    if (std::from_chars(c.data(), c.data() + c.size(), v).ec != std::errc{}) throw bad();
    if (i < 0 || j < 0 || i == j) {
      throw ConfigError("couplings CSV line " + std::to_string(lineno) + ": need distinct non-negative indices");
    }
    entries[{std::min(i, j), std::max(i, j)}] = v;
    max_index = std::max({max_index, i, j});
  }
  if (max_index < 1) throw ConfigError("couplings CSV has no rows");
  CouplingMatrix m(SpinCount(max_index + 1));
  for (const auto& [key, v] : entries) m.set(key.first, key.second, v);
  return m;
}

std::string gap_curve_csv(const GapCurve& curve) {
  CsvWriter w({"B_kHz", "Delta_kHz", "coupled_index"});
  for (const auto& p : curve.points) {
    w.cell(p.field_khz).cell(p.gap_khz).cell(p.coupled_index);
    w.end_row();
  }
  return w.str();
}

std::string ramp_csv(const RampProfile& profile, int samples) {
  CsvWriter w({"t_ms", "B_kHz"});
  for (const auto& [t, b] : profile.table(samples)) {
    w.cell(t).cell(b);
    w.end_row();
  }
  return w.str();
}

std::string adiabaticity_csv(std::span<const AdiabaticitySample> trace) {
  CsvWriter w({"t_ms", "inv_gamma", "slope_kHz_per_ms"});
  for (const auto& s : trace) {
    w.cell(s.t_ms).cell(s.inv_gamma).cell(s.slope_khz_per_ms);
    w.end_row();
  }
  return w.str();
}

std::string evolution_csv(const EvolutionResult& result) {
  CsvWriter w({"t_ms", "P_overlap", "P_pop", "P_decohered"});
  for (std::size_t k = 0; k < result.times_ms.size(); ++k) {
    w.cell(result.times_ms[k]).cell(result.overlap[k]).cell(result.population[k]).cell(result.decohered_overlap[k]);
    w.end_row();
  }
  return w.str();
}

std::string distribution_csv(const OutcomeDistribution& dist) {
  CsvWriter w({"bitstring_index", "probability"});
  for (std::size_t i = 0; i < dist.probabilities.size(); ++i) {
    w.cell(static_cast<std::uint64_t>(i)).cell(dist.probabilities[i]);
    w.end_row();
  }
  return w.str();
}

std::string counts_csv(const SampledCounts& counts) {
  CsvWriter w({"bitstring_index", "count"});
  for (std::size_t i = 0; i < counts.counts.size(); ++i) {
    w.cell(static_cast<std::uint64_t>(i)).cell(counts.counts[i]);
    w.end_row();
  }
  return w.str();
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  CsvWriter w({"family", "tf_ms", "P_overlap", "P_pop", "P_decohered"});
  for (const auto& r : rows) {
    w.cell(std::string(to_string(r.family))).cell(r.tf_ms).cell(r.overlap).cell(r.population).cell(r.decohered);
    w.end_row();
  }
  return w.str();
}

std::string sweep_wide_csv(std::span<const SweepRow> rows) {
  std::vector<RampFamily> families;
  std::vector<double> times;
  for (const auto& r : rows) {
    if (std::find(families.begin(), families.end(), r.family) == families.end()) families.push_back(r.family);
    if (std::find(times.begin(), times.end(), r.tf_ms) == times.end()) times.push_back(r.tf_ms);
  }
  std::vector<std::string> header{"tf_ms"};
  for (auto f : families) {
    std::string name(to_string(f));
    std::replace(name.begin(), name.end(), '-', '_');
    header.push_back("P_" + name);
  }
  CsvWriter w(header);
  for (double t : times) {
    w.cell(t);
    for (auto f : families) {
      auto it = std::find_if(rows.begin(), rows.end(), [&](const SweepRow& r) { return r.family == f && r.tf_ms == t; });
      if (it == rows.end()) throw DimensionError("sweep table is not rectangular");
      w.cell(it->overlap);
    }
    w.end_row();
  }
  return w.str();
}

nlohmann::ordered_json to_json(const PowerLawFit& fit) {
  return {{"J_max_kHz", fit.j_max_khz}, {"alpha", fit.alpha}, {"residual", fit.residual}};
}

nlohmann::ordered_json to_json(const CriticalPoint& cp) {
  return {{"B_c_kHz", cp.field_khz}, {"Delta_c_kHz", cp.gap_khz}, {"at_endpoint", cp.at_endpoint}};
}

nlohmann::ordered_json to_json(const EvolutionResult& result) {
  nlohmann::ordered_json j;
  j["tf_ms"] = result.duration_ms;
  j["t_d_ms"] = result.coherence_time_ms;
  j["t_d_note"] = "fitted assumption; decoherence applied at each reported time as p*exp(-t/t_d)";
  j["dt_ms"] = result.dt_ms;
  j["steps"] = result.steps;
  j["norm_drift"] = result.norm_drift;
  j["halvings"] = result.halvings;
  j["halving_infidelity"] = result.halving_infidelity;
  j["t_ms"] = result.times_ms;
  j["P_overlap"] = result.overlap;
  j["P_pop"] = result.population;
  j["P_overlap_decohered"] = result.decohered_overlap;
  j["P_pop_decohered"] = result.decohered_population;
  const auto final = afm_ground_probability(result.final_state);
  j["final"] = {{"P_overlap", final.overlap},
                {"P_pop", final.population},
                {"P_decohered", apply_decoherence(final.overlap, result.duration_ms, result.coherence_time_ms)}};
  return j;
}

nlohmann::ordered_json to_json(const PrevalenceReport& report, std::size_t max_ranked) {
  nlohmann::ordered_json j;
  j["top"] = report.top;
  j["P_g"] = report.p_ground;
  j["P_e"] = report.p_excited;
  j["margin"] = report.margin;
  if (report.repetitions_needed) {
    j["required_repetitions"] = *report.repetitions_needed;
  } else {
    j["required_repetitions"] = nullptr;
    j["identifiable"] = false;
  }
  auto ranked = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < std::min(max_ranked, report.ranked.size()); ++k) {
    ranked.push_back({{"bitstring_index", report.ranked[k].index}, {"probability", report.ranked[k].probability}});
  }
  j["ranked"] = ranked;
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("write to " + path.string() + " failed");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ionramp
