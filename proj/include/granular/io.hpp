#pragma once

// Output files: CSV tables, binary profiles and matrices, JSON reports. Every
// file starts with a header naming the artifact version and the config hash.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "granular/lapack.hpp"
#include "granular/velocity_grid.hpp"

namespace granular {

inline constexpr const char* kArtifactVersion = "0.1.0";

using json = nlohmann::ordered_json;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << x;
  return os.str();
}

struct OutputHeader {
  std::string config_hash;
  std::string command;

  std::string version() const { return kArtifactVersion; }
};

inline std::string format_double(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << x;
  return os.str();
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const OutputHeader& h, const std::vector<std::string>& columns)
      : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
    out_.imbue(std::locale::classic());
    out_ << "# artifact_version=" << h.version() << "\n";
    out_ << "# config_hash=" << h.config_hash << "\n";
    if (!h.command.empty()) out_ << "# command=" << h.command << "\n";
    row_strings(columns);
  }

  void row(const std::vector<double>& values) {
    std::vector<std::string> s;
    s.reserve(values.size());
    for (double v : values) s.push_back(format_double(v));
    row_strings(s);
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> header_lines;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  bool have_columns = false;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) {
      t.header_lines.push_back(line);
    } else if (!have_columns) {
      t.columns = split_csv_line(line);
      have_columns = true;
    } else if (!line.empty()) {
      t.rows.push_back(split_csv_line(line));
    }
  }
  return t;
}

inline void write_json(const std::filesystem::path& path, const OutputHeader& h, json body) {
  json doc;
  doc["artifact_version"] = h.version();
  doc["config_hash"] = h.config_hash;
  if (!h.command.empty()) doc["command"] = h.command;
  for (auto& [k, v] : body.items()) doc[k] = v;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << doc.dump(2) << "\n";
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

/// NaN and infinities become null so the file stays valid JSON.
inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json complex_json(cplx z) { return json{{"re", number(z.real())}, {"im", number(z.imag())}}; }

namespace detail {

inline void put_header(std::ofstream& out, const OutputHeader& h, const char magic[8]) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  out.write(magic, 8);
  const std::string text = "version=" + h.version() + ";config_hash=" + h.config_hash;
  const std::uint32_t n = static_cast<std::uint32_t>(text.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(text.data(), n);
}

inline std::string get_header(std::ifstream& in, const char magic[8]) {
  char m[8];
  in.read(m, 8);
  if (!in || std::string(m, 8) != std::string(magic, 8)) throw std::runtime_error("bad binary magic");
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  std::string text(n, '\0');
  in.read(text.data(), n);
  if (!in) throw std::runtime_error("truncated binary header");
  return text;
}

inline constexpr char kProfileMagic[8] = {'G', 'R', 'N', 'P', 'R', 'O', 'F', '1'};
inline constexpr char kMatrixMagic[8] = {'G', 'R', 'N', 'M', 'A', 'T', 'X', '1'};

}  // namespace detail

/// Header, then int32 d, int32 N, float64 L, N^d float64 values in row-major
/// node order (axis 0 slowest), little endian.
inline void write_profile(const std::filesystem::path& path, const OutputHeader& h, const Distribution& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  detail::put_header(out, h, detail::kProfileMagic);
  const std::int32_t d = f.grid.dim, n = f.grid.points;
  const double l = f.grid.half_extent;
  out.write(reinterpret_cast<const char*>(&d), sizeof d);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&l), sizeof l);
  out.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.size() * sizeof(double)));
}

inline Distribution read_profile(const std::filesystem::path& path, std::string* header = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string text = detail::get_header(in, detail::kProfileMagic);
  if (header) *header = text;
  std::int32_t d = 0, n = 0;
  double l = 0.0;
  in.read(reinterpret_cast<char*>(&d), sizeof d);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&l), sizeof l);
  Distribution f(build_grid(d, l, n));
  in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated profile " + path.string());
  return f;
}

/// Header, then int64 rows, int64 cols, column-major float64 values.
inline void write_matrix(const std::filesystem::path& path, const OutputHeader& h, const RMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  detail::put_header(out, h, detail::kMatrixMagic);
  const std::int64_t r = m.rows(), c = m.cols();
  out.write(reinterpret_cast<const char*>(&r), sizeof r);
  out.write(reinterpret_cast<const char*>(&c), sizeof c);
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

inline RMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  detail::get_header(in, detail::kMatrixMagic);
  std::int64_t r = 0, c = 0;
  in.read(reinterpret_cast<char*>(&r), sizeof r);
  in.read(reinterpret_cast<char*>(&c), sizeof c);
  RMatrix m(r, c);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated matrix " + path.string());
  return m;
}

inline void write_profile_csv(const std::filesystem::path& path, const OutputHeader& h, const Distribution& f) {
  std::vector<std::string> cols;
  for (int a = 0; a < f.grid.dim; ++a) cols.push_back("v" + std::to_string(a + 1));
  cols.push_back("f");
  CsvWriter w(path, h, cols);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Vec v = f.grid.node(k);
    std::vector<double> row(v.begin(), v.begin() + f.grid.dim);
    row.push_back(f[k]);
    w.row(row);
  }
}

}  // namespace granular
