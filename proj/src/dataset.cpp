#include "weldpred/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

#include "weldpred/rng.hpp"
#include "text_util.hpp"

namespace weldpred {

using detail::header_key;
using detail::parse_double;
using detail::shortest;
using detail::trim;

// ---------------------------------------------------------------- WireVector

WireVector WireVector::from_sections(std::span<const double> values) {
  if (values.size() > kWireSlots)
    throw Error(Errc::invalid_argument,
                "too many wire sections (" + std::to_string(values.size()) + ", limit 16)");
  std::vector<double> live;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0)
      throw Error(Errc::invalid_argument, "wire sections must be finite and non-negative");
    if (v > 0.0) live.push_back(v);
  }
  if (live.size() < 2)
    throw Error(Errc::invalid_argument, "a welding node needs at least 2 wires");
  std::sort(live.begin(), live.end(), std::greater<>());
  WireVector w;
  std::copy(live.begin(), live.end(), w.sections.begin());
  return w;
}

double WireVector::total_section() const {
  double s = 0.0;
  for (double v : sections) s += v;
  return s;
}

int WireVector::wire_count() const {
  int n = 0;
  for (double v : sections)
    if (v > 0.0) ++n;
  return n;
}

// ---------------------------------------------------------------- ParamTriple

void ParamTriple::validate() const {
  auto bad = [](double v) { return !std::isfinite(v) || v <= 0.0; };
  if (bad(energy)) throw Error(Errc::invalid_argument, "energy must be finite and positive");
  if (bad(amplitude) || amplitude > 100.0)
    throw Error(Errc::invalid_argument, "amplitude must be in (0, 100]");
  if (bad(pressure)) throw Error(Errc::invalid_argument, "pressure must be finite and positive");
}

// ------------------------------------------------------------ GeneratorParams

void GeneratorParams::validate() const {
  for (double v : {energy_a, energy_b, amp_a, amp_b, press_a, press_b})
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "generator coefficients must be finite");
  for (double v : {noise_energy, noise_amplitude, noise_pressure})
    if (!std::isfinite(v) || v < 0.0)
      throw Error(Errc::invalid_argument, "noise levels must be non-negative");
  if (min_wires < 2 || max_wires < min_wires || max_wires > kWireSlots)
    throw Error(Errc::invalid_argument, "wire count range must satisfy 2 <= min <= max <= 16");
  if (alphabet.empty())
    throw Error(Errc::invalid_argument, "section alphabet must not be empty");
  for (double v : alphabet)
    if (!std::isfinite(v) || v <= 0.0)
      throw Error(Errc::invalid_argument, "section alphabet entries must be positive");
}

ParamTriple GeneratorParams::mean_labels(double total_section) const {
  ParamTriple t;
  t.energy = energy_a * total_section + energy_b;
  t.amplitude = amp_a * std::log(1.0 + total_section) + amp_b;
  t.pressure = press_a * total_section + press_b;
  return t;
}

// ---------------------------------------------------------------- parse_layout

namespace {

// Unsigned decimal with '.' or ',' separator; whole token must match.
std::optional<double> parse_section_number(std::string_view s) {
  bool digits = false, sep = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      digits = true;
    } else if ((c == '.' || c == ',') && !sep && digits && i + 1 < s.size()) {
      sep = true;
    } else {
      return std::nullopt;
    }
  }
  if (!digits) return std::nullopt;
  return parse_double(s);
}

std::optional<long> parse_count_number(std::string_view s) {
  if (s.empty() || s.size() > 9) return std::nullopt;
  long v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace

std::vector<double> parse_layout(std::string_view text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;

  std::size_t pos = 0;
  while (true) {
    std::size_t plus = text.find('+', pos);
    std::string_view raw = text.substr(pos, plus == std::string_view::npos ? plus : plus - pos);
    // offset of the term's first visible byte, for error reporting
    std::string_view term = trim(raw);
    std::size_t offset = pos;
    if (!term.empty()) offset += static_cast<std::size_t>(term.data() - raw.data());

    auto fail = [&](const char* why) -> LayoutParseError {
      std::ostringstream msg;
      msg << "bad layout term \"" << term << "\" at offset " << offset << ": " << why;
      return LayoutParseError(std::string(term), offset, msg.str());
    };

    if (term.empty()) throw fail("empty term");
    std::size_t star = term.find('*');
    if (star == std::string_view::npos) throw fail("expected <section>*<count>");
    auto section = parse_section_number(trim(term.substr(0, star)));
    if (!section) throw fail("invalid cross-section number");
    auto count = parse_count_number(trim(term.substr(star + 1)));
    if (!count) throw fail("invalid wire count");
    if (*count < 1) throw fail("wire count must be at least 1");
    if (*section <= 0.0) throw fail("cross-section must be positive");
    for (long i = 0; i < *count; ++i) out.push_back(*section);

    if (plus == std::string_view::npos) break;
    pos = plus + 1;
  }
  return out;
}

WireVector build_wire_vector(std::span<const double> side1, std::span<const double> side2) {
  for (auto side : {side1, side2})
    for (double v : side)
      if (!std::isfinite(v) || v <= 0.0)
        throw Error(Errc::invalid_argument, "wire sections must be positive");
  const std::size_t n1 = side1.size(), n2 = side2.size();
  if (n1 > 0 && n2 > 0) {
    if (n1 > 5 || n2 > 5)
      throw Error(Errc::invalid_argument,
                  "at most 5 wires per side when both terminal sides are used");
  } else if (n1 + n2 > 15) {
    throw Error(Errc::invalid_argument, "at most 15 wires on a single side");
  }
  std::vector<double> all(side1.begin(), side1.end());
  all.insert(all.end(), side2.begin(), side2.end());
  return WireVector::from_sections(all);  // enforces the >= 2 combined minimum
}

// ------------------------------------------------------------------ CSV plumbing

namespace {

struct CsvFile {
  char delim = ',';
  std::vector<std::string> header;                        // header_key form
  std::vector<std::pair<int, std::vector<std::string>>> rows;  // 1-based line number
};

// Splits one line; honors double quotes ("" escapes a quote inside).
std::vector<std::string> split_row(std::string_view line, char delim) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && trim(cur).empty()) {
      quoted = true;
      cur.clear();
    } else if (c == delim) {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

CsvFile load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = std::move(buf).str();
  if (text.starts_with("\xEF\xBB\xBF")) text.erase(0, 3);

  CsvFile csv;
  int line_no = 0;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line(text.data() + pos, (nl == std::string::npos ? text.size() : nl) - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    if (!have_header) {
      csv.delim = line.find(';') != std::string_view::npos ? ';' : ',';
      for (auto& cell : split_row(line, csv.delim)) csv.header.push_back(header_key(cell));
      have_header = true;
    } else {
      csv.rows.emplace_back(line_no, split_row(line, csv.delim));
    }
  }
  if (!have_header) throw Error(Errc::parse, path.string() + ": empty file");
  return csv;
}

int find_col(const CsvFile& csv, const std::string& key) {
  for (std::size_t i = 0; i < csv.header.size(); ++i)
    if (csv.header[i] == key) return static_cast<int>(i);
  return -1;
}

std::vector<int> require_cols(const CsvFile& csv, const std::filesystem::path& path,
                              const std::vector<std::string>& names) {
  std::vector<int> idx;
  std::string missing;
  for (const auto& name : names) {
    int col = find_col(csv, header_key(name));
    if (col < 0) missing += missing.empty() ? name : ", " + name;
    idx.push_back(col);
  }
  if (!missing.empty())
    throw Error(Errc::parse, path.string() + ": missing column(s): " + missing);
  return idx;
}

std::vector<std::string> wire_column_names() {
  std::vector<std::string> names;
  for (int i = 1; i <= kWireSlots; ++i) names.push_back("Wire " + std::to_string(i));
  return names;
}

const std::string& cell_at(const std::vector<std::string>& cells, int col) {
  static const std::string empty;
  return col >= 0 && col < static_cast<int>(cells.size()) ? cells[col] : empty;
}

}  // namespace

IngestResult read_dataset_csv(const std::filesystem::path& path) {
  CsvFile csv = load_csv(path);
  auto names = wire_column_names();
  names.insert(names.end(), {"Energy", "Amplitude", "Pressure"});
  auto cols = require_cols(csv, path, names);

  IngestResult out;
  for (const auto& [line_no, cells] : csv.rows) {
    try {
      std::array<double, kWireSlots> sections{};
      for (int i = 0; i < kWireSlots; ++i) {
        const std::string& cell = cell_at(cells, cols[i]);
        if (trim(cell).empty()) continue;  // blank padding slot
        auto v = parse_double(cell);
        if (!v) throw Error(Errc::parse, "bad number \"" + std::string(trim(cell)) + "\" in " + names[i]);
        sections[i] = *v;
      }
      ParamTriple y;
      double* fields[3] = {&y.energy, &y.amplitude, &y.pressure};
      for (int i = 0; i < 3; ++i) {
        const std::string& cell = cell_at(cells, cols[kWireSlots + i]);
        auto v = parse_double(cell);
        if (!v)
          throw Error(Errc::parse,
                      "bad number \"" + std::string(trim(cell)) + "\" in " + names[kWireSlots + i]);
        *fields[i] = *v;
      }
      Record rec{WireVector::from_sections(sections), y};
      rec.y.validate();
      out.dataset.records.push_back(rec);
    } catch (const Error& e) {
      out.rejected.push_back({line_no, e.what()});
    }
  }
  if (out.dataset.records.empty())
    throw Error(Errc::parse, path.string() + ": no valid data rows");
  return out;
}

InputsResult read_inputs_csv(const std::filesystem::path& path) {
  CsvFile csv = load_csv(path);
  auto names = wire_column_names();
  auto cols = require_cols(csv, path, names);

  InputsResult out;
  for (const auto& [line_no, cells] : csv.rows) {
    try {
      std::array<double, kWireSlots> sections{};
      for (int i = 0; i < kWireSlots; ++i) {
        const std::string& cell = cell_at(cells, cols[i]);
        if (trim(cell).empty()) continue;
        auto v = parse_double(cell);
        if (!v) throw Error(Errc::parse, "bad number \"" + std::string(trim(cell)) + "\" in " + names[i]);
        sections[i] = *v;
      }
      out.inputs.push_back(WireVector::from_sections(sections));
    } catch (const Error& e) {
      out.rejected.push_back({line_no, e.what()});
    }
  }
  if (out.inputs.empty()) throw Error(Errc::parse, path.string() + ": no valid data rows");
  return out;
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw Error(Errc::io, "cannot write " + path.string());
  for (int i = 1; i <= kWireSlots; ++i) outf << "Wire " << i << ',';
  outf << "Energy,Amplitude,Pressure\n";
  for (const Record& r : ds.records) {
    for (double v : r.x.sections) outf << shortest(v) << ',';
    outf << shortest(r.y.energy) << ',' << shortest(r.y.amplitude) << ','
         << shortest(r.y.pressure) << '\n';
  }
  if (!outf) throw Error(Errc::io, "write failed for " + path.string());
}

IngestResult convert_raw_csv(const std::filesystem::path& path) {
  CsvFile csv = load_csv(path);
  std::vector<std::string> names = {"Product layout side1", "Product layout side2",
                                    "Energy", "Amplitude", "Pressure"};
  auto cols = require_cols(csv, path, names);

  IngestResult out;
  for (const auto& [line_no, cells] : csv.rows) {
    try {
      auto side1 = parse_layout(cell_at(cells, cols[0]));
      auto side2 = parse_layout(cell_at(cells, cols[1]));
      ParamTriple y;
      double* fields[3] = {&y.energy, &y.amplitude, &y.pressure};
      for (int i = 0; i < 3; ++i) {
        const std::string& cell = cell_at(cells, cols[2 + i]);
        auto v = parse_double(cell);
        if (!v)
          throw Error(Errc::parse, "bad number \"" + std::string(trim(cell)) + "\" in " + names[2 + i]);
        *fields[i] = *v;
      }
      Record rec{build_wire_vector(side1, side2), y};
      rec.y.validate();
      out.dataset.records.push_back(rec);
    } catch (const Error& e) {
      out.rejected.push_back({line_no, e.what()});
    }
  }
  if (out.dataset.records.empty())
    throw Error(Errc::parse, path.string() + ": no valid data rows");
  return out;
}

// ------------------------------------------------------------------ generation

Dataset synthesize(std::size_t n, const GeneratorParams& params, std::uint64_t seed) {
  if (n == 0) throw Error(Errc::invalid_argument, "cannot synthesize an empty dataset");
  params.validate();
  Rng rng(seed);
  Dataset ds;
  ds.provenance = Provenance::synthetic;
  ds.seed = seed;
  ds.records.reserve(n);
  const std::uint64_t span = static_cast<std::uint64_t>(params.max_wires - params.min_wires + 1);
  for (std::size_t k = 0; k < n; ++k) {
    // fixed draw order per record: count, sections, then the three noises
    int count = params.min_wires + static_cast<int>(rng.below(span));
    std::vector<double> sections(count);
    for (double& s : sections) s = params.alphabet[rng.below(params.alphabet.size())];
    double e1 = rng.normal(0.0, params.noise_energy);
    double e2 = rng.normal(0.0, params.noise_amplitude);
    double e3 = rng.normal(0.0, params.noise_pressure);

    WireVector x = WireVector::from_sections(sections);
    ParamTriple mean = params.mean_labels(x.total_section());
    ParamTriple y;
    y.energy = std::max(mean.energy + e1, 1.0);
    y.amplitude = std::clamp(mean.amplitude + e2, 1.0, 100.0);
    y.pressure = std::max(mean.pressure + e3, 0.05);
    ds.records.push_back({x, y});
  }
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t test_count, std::uint64_t seed) {
  if (test_count < 1 || test_count >= ds.size())
    throw Error(Errc::invalid_argument, "test_count must be in [1, dataset size)");
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);

  Dataset train, test;
  train.provenance = test.provenance = ds.provenance;
  train.seed = test.seed = ds.seed;
  const std::size_t cut = ds.size() - test_count;
  for (std::size_t i = 0; i < cut; ++i) train.records.push_back(ds.records[idx[i]]);
  for (std::size_t i = cut; i < ds.size(); ++i) test.records.push_back(ds.records[idx[i]]);
  return {std::move(train), std::move(test)};
}

std::string dataset_fingerprint(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
  auto feed = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffULL;
      h *= 0x100000001b3ULL;
    }
  };
  for (const Record& r : ds.records) {
    for (double v : r.x.sections) feed(v);
    feed(r.y.energy);
    feed(r.y.amplitude);
    feed(r.y.pressure);
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = hex[h & 0xf];
  return out;
}

std::string render_rejected_report(std::span<const RejectedRow> rejected) {
  if (rejected.empty()) return {};
  std::ostringstream os;
  os << "skipped " << rejected.size() << " invalid row(s):\n";
  for (const RejectedRow& r : rejected) os << "  row " << r.row << ": " << r.reason << '\n';
  return os.str();
}

}  // namespace weldpred
