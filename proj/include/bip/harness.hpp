#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bip/spectral.hpp"

namespace bip::harness {

/// Bad configuration or arguments; maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitDiverged = 3;

/// INI configuration resolved against a fixed schema. Every key has a
/// default; unknown sections or keys are rejected on load.
class Config {
 public:
  static Config defaults();
  static Config load(const std::string& path);
  static Config parse(std::istream& in);

  /// Overrides "section.key"; the value is validated against the schema type.
  void set(const std::string& key, const std::string& value);

  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::uint64_t seed() const;
  bool flag(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<int> integers(const std::string& key) const;

  /// Resolved "[section]" / "key = value" listing in schema order.
  std::string echo() const;
  /// 16 hex digits of FNV-1a over echo().
  std::string hash() const;

 private:
  std::map<std::string, std::string> values_;
};

/// One line of the results CSV. NaN fields are written as "nan".
struct CsvRow {
  std::string experiment;
  std::string config_hash;
  long long N = 0;
  double dt = std::nan("");
  std::string interp = "none";
  double distance = std::nan("");
  double mean_gap = std::nan("");
  double cov_gap = std::nan("");
  double acceptance = std::nan("");
  double ess = std::nan("");
  double wall_s = 0.0;
};

extern const char* const kCsvHeader;

/// %.17g, with "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double x);
std::string format_row(const CsvRow& row);

/// Experiment output: CSV rows plus named scalars and notes for the manifest.
struct Report {
  std::vector<CsvRow> rows;
  std::vector<std::pair<std::string, double>> summary;
  std::vector<std::pair<std::string, std::string>> notes;
  std::string data_file;  // synth only: serialized data and u_true
};

enum class Experiment { HeatRate, StokesLagrangian, NsEulerian, MetricProps, Synth };

Experiment experiment_from_string(const std::string& s);
const char* to_string(Experiment e);

/// Mode count (grid points, M^2 with M even) to the |k|_inf cutoff M/2.
int cutoff_from_mode_count(int modes);

/// Sparse coefficient list "k1 k2 re im ..." on the torus at `resolution`.
SpectralField sparse_field(const std::vector<double>& entries, int resolution);

/// Validates the sections an experiment reads; throws ConfigError.
void validate(Experiment e, const Config& cfg);

Report heat_rate(const Config& cfg);
Report stokes_lagrangian(const Config& cfg);
Report ns_eulerian(const Config& cfg);
Report metric_props(const Config& cfg);
Report synth(const Config& cfg);

Report run(Experiment e, const Config& cfg);

struct RunOptions {
  std::optional<std::uint64_t> seed;   // beats BIP_SEED, which beats run.seed
  std::optional<int> workers;
  std::optional<std::string> out_dir;
};

/// Applies overrides, validates, runs, and writes config.ini, results.csv,
/// manifest.json (and data.txt for synth) into the output directory.
/// Returns the process exit status; diagnostics go to `err`.
int run_experiment(Experiment e, Config cfg, const RunOptions& options, std::ostream& err);

}  // namespace bip::harness
