#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ionramp/analysis.hpp"
#include "ionramp/evolution.hpp"
#include "ionramp/ramps.hpp"
#include "ionramp/spectrum.hpp"
#include "ionramp/trap_couplings.hpp"

namespace ionramp {

/// Shortest decimal that round-trips to the same double.
std::string format_number(double x);

/// Minimal CSV builder: `,` delimiter, `.` decimal point, LF line endings.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);

  CsvWriter& cell(double x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(std::uint64_t x);
  CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(const std::string& s);
  void end_row();

  const std::string& str() const { return out_; }

 private:
  void separator();

  std::string out_;
  std::size_t columns_ = 0;
  std::size_t in_row_ = 0;
};

std::string couplings_csv(const CouplingMatrix& couplings);
/// Parses `i,j,J_kHz` rows; the spin count is inferred from the largest index.
CouplingMatrix parse_couplings_csv(const std::string& text);

std::string gap_curve_csv(const GapCurve& curve);
std::string ramp_csv(const RampProfile& profile, int samples = 1000);
std::string adiabaticity_csv(std::span<const AdiabaticitySample> trace);
std::string evolution_csv(const EvolutionResult& result);
std::string distribution_csv(const OutcomeDistribution& dist);
std::string counts_csv(const SampledCounts& counts);
/// Long format: one row per (family, t_f).
std::string sweep_csv(std::span<const SweepRow> rows);
/// Wide format: one row per t_f, one overlap column per family.
std::string sweep_wide_csv(std::span<const SweepRow> rows);

nlohmann::ordered_json to_json(const PowerLawFit& fit);
nlohmann::ordered_json to_json(const CriticalPoint& cp);
nlohmann::ordered_json to_json(const EvolutionResult& result);
nlohmann::ordered_json to_json(const PrevalenceReport& report, std::size_t max_ranked = 16);

/// Writes bytes unchanged (no newline translation). Creates parent directories.
void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace ionramp
