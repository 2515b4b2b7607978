#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "weldpred/error.hpp"

namespace weldpred {

inline constexpr int kWireSlots = 16;
inline constexpr int kParamCount = 3;

enum class Param { energy = 0, amplitude = 1, pressure = 2 };

inline const char* param_name(Param p) {
  switch (p) {
    case Param::energy: return "energy";
    case Param::amplitude: return "amplitude";
    default: return "pressure";
  }
}

/// Wire cross-sections of one welding node, mm^2.
/// Canonical form: sorted descending, zero-padded to 16 slots.
struct WireVector {
  std::array<double, kWireSlots> sections{};

  /// Validates (>= 2 wires, <= 16, all positive) and canonicalizes.
  static WireVector from_sections(std::span<const double> values);

  double total_section() const;
  int wire_count() const;

  bool operator==(const WireVector&) const = default;
};

/// Welding process parameters: Energy (Ws), Amplitude (%), Pressure (bar).
struct ParamTriple {
  double energy = 0.0;
  double amplitude = 0.0;
  double pressure = 0.0;

  /// Throws unless all values are finite, positive, and amplitude <= 100.
  void validate() const;

  std::array<double, 3> as_array() const { return {energy, amplitude, pressure}; }
  static ParamTriple from_array(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

  bool operator==(const ParamTriple&) const = default;
};

struct Record {
  WireVector x;
  ParamTriple y;
  bool operator==(const Record&) const = default;
};

enum class Provenance { ingested, synthetic };

struct Dataset {
  std::vector<Record> records;
  Provenance provenance = Provenance::ingested;
  std::optional<std::uint64_t> seed;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

/// Affine/log trend coefficients plus noise for the synthetic generator.
/// Defaults are least-squares fits of the ten reference (S, label) tuples
/// from the factory export sample; noise defaults are 5% of each label's
/// observed range there.
struct GeneratorParams {
  double energy_a = 68.851354771388358;
  double energy_b = 63.564510012342474;
  double amp_a = 11.289446173962681;   // applied to ln(1 + S)
  double amp_b = 49.940341097841589;
  double press_a = 0.10351317782372192;
  double press_b = 1.4930219403269822;
  double noise_energy = 68.0;
  double noise_amplitude = 1.5;
  double noise_pressure = 0.11;
  int min_wires = 2;
  int max_wires = 10;
  std::vector<double> alphabet = {0.35, 0.5, 0.75, 1.0, 1.5, 2.5, 4.0, 6.0};

  void validate() const;

  /// Noise-free label values for a given total section.
  ParamTriple mean_labels(double total_section) const;
};

/// Expands a side-layout string such as "2,5*2+4,00*1" into cross-sections.
/// Grammar: term ("+" term)*, term = decimal "*" positive-int; both "." and
/// "," decimal separators accepted; empty input yields an empty list.
std::vector<double> parse_layout(std::string_view text);

/// Joins the two side lists into a canonical WireVector. Machine limits:
/// at most 5 wires per side when both sides are populated, at most 15 on a
/// single side otherwise.
WireVector build_wire_vector(std::span<const double> side1, std::span<const double> side2);

struct RejectedRow {
  int row = 0;  // 1-based line number in the file
  std::string reason;
};

struct IngestResult {
  Dataset dataset;
  std::vector<RejectedRow> rejected;
};

/// Reads the wide CSV (Wire 1..Wire 16, Energy, Amplitude, Pressure).
/// Invalid rows are skipped and reported; throws only when the file is
/// unusable (missing columns, unreadable, or no valid row at all).
IngestResult read_dataset_csv(const std::filesystem::path& path);

struct InputsResult {
  std::vector<WireVector> inputs;
  std::vector<RejectedRow> rejected;
};

/// Reads only the Wire 1..Wire 16 columns; label columns are optional and
/// ignored. Used for prediction inputs.
InputsResult read_inputs_csv(const std::filesystem::path& path);

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

/// Converts a raw factory export (Product layout side1/side2 + Pressure,
/// Amplitude, Energy columns) into a Dataset via parse_layout and
/// build_wire_vector.
IngestResult convert_raw_csv(const std::filesystem::path& path);

Dataset synthesize(std::size_t n, const GeneratorParams& params, std::uint64_t seed);

/// Seeded shuffle followed by partition; returns (train, test).
std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t test_count, std::uint64_t seed);

/// FNV-1a over the record bytes; stable content identity for artifacts.
std::string dataset_fingerprint(const Dataset& ds);

std::string render_rejected_report(std::span<const RejectedRow> rejected);

}  // namespace weldpred
