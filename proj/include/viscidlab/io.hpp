#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "viscidlab/grid.hpp"

namespace viscidlab {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip text for a double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// RFC-4180 table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  explicit CsvTable(std::vector<std::string> h) : header(std::move(h)) {}

  struct Cell {
    std::string text;
    Cell(double v) : text(format_number(v)) {}                               // NOLINT
    Cell(int v) : text(std::to_string(v)) {}                                 // NOLINT
    Cell(long v) : text(std::to_string(v)) {}                                // NOLINT
    Cell(std::size_t v) : text(std::to_string(v)) {}                         // NOLINT
    Cell(bool v) : text(v ? "true" : "false") {}                             // NOLINT
    Cell(std::string v) : text(std::move(v)) {}                              // NOLINT
    Cell(const char* v) : text(v) {}                                         // NOLINT
  };

  void add(std::initializer_list<Cell> cells) {
    if (cells.size() != header.size()) throw std::invalid_argument("csv row width does not match header");
    std::vector<std::string> r;
    for (const auto& c : cells) r.push_back(c.text);
    rows.push_back(std::move(r));
  }

  void add(const std::vector<Cell>& cells) {
    if (cells.size() != header.size()) throw std::invalid_argument("csv row width does not match header");
    std::vector<std::string> r;
    for (const auto& c : cells) r.push_back(c.text);
    rows.push_back(std::move(r));
  }

  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t k = 0; k < r.size(); ++k) {
        if (k) out += ',';
        out += quote(r[k]);
      }
      out += "\r\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& t) { write_text(path, t.str()); }

namespace detail {
inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int k = 0; k < 8; ++k) r |= ((v >> (8 * k)) & 0xffu) << (8 * (7 - k));
    return r;
  }
}
}  // namespace detail

/// .fld layout: one JSON header line, then n*n little-endian float64 values
/// in row-major order.
inline void write_field(const std::filesystem::path& path, const ScalarField& f, nlohmann::json meta = {}) {
  meta["format"] = "viscidlab-field";
  meta["version"] = 1;
  meta["n"] = f.size();
  meta["length"] = f.grid().length();
  meta["dtype"] = "float64-le";
  std::string out = meta.dump() + "\n";
  const auto& v = f.values();
  const std::size_t header = out.size();
  out.resize(header + v.size() * 8);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::uint64_t bits = detail::to_little_endian(std::bit_cast<std::uint64_t>(v[k]));
    std::memcpy(out.data() + header + 8 * k, &bits, 8);
  }
  write_text(path, out);
}

struct FieldFile {
  nlohmann::json meta;
  ScalarField field;
};

inline FieldFile read_field(const std::filesystem::path& path) {
  const std::string raw = read_text(path);
  const auto nl = raw.find('\n');
  if (nl == std::string::npos) throw IoError("field file has no header: " + path.string());
  auto meta = nlohmann::json::parse(raw.substr(0, nl));
  if (meta.value("format", "") != "viscidlab-field") throw IoError("not a field file: " + path.string());
  const auto n = meta.at("n").get<std::size_t>();
  const PeriodicGrid g(n, meta.at("length").get<double>());
  if (raw.size() - nl - 1 != g.node_count() * 8) throw IoError("field payload size mismatch: " + path.string());
  std::vector<double> v(g.node_count());
  for (std::size_t k = 0; k < v.size(); ++k) {
    std::uint64_t bits;
    std::memcpy(&bits, raw.data() + nl + 1 + 8 * k, 8);
    v[k] = std::bit_cast<double>(detail::to_little_endian(bits));
  }
  return {std::move(meta), ScalarField(g, std::move(v))};
}

inline std::string sha256_hex(const std::string& data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    throw IoError("sha256 failed");
  std::ostringstream s;
  for (unsigned int k = 0; k < len; ++k) s << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[k]);
  return s.str();
}

inline std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

struct Series {
  std::string name;
  std::vector<double> y;
};

/// Minimal SVG line chart; non-finite points are skipped.
inline std::string svg_line_chart(const std::string& title, const std::string& xlabel, const std::vector<double>& x,
                                  const std::vector<Series>& series, bool log_y = false) {
  const double W = 640, H = 420, ml = 70, mr = 150, mt = 40, mb = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  auto usable = [&](double v) { return std::isfinite(v) && (!log_y || v > 0.0); };
  for (double v : x)
    if (std::isfinite(v)) x0 = std::min(x0, v), x1 = std::max(x1, v);
  for (const auto& s : series)
    for (double v : s.y)
      if (usable(v)) y0 = std::min(y0, ty(v)), y1 = std::max(y1, ty(v));
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  auto px = [&](double v) { return ml + (v - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (ty(v) - y0) / (y1 - y0) * (H - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
  std::ostringstream s;
  s << std::setprecision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  s << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12 << "\" font-family=\"sans-serif\" font-size=\"12\">"
    << xlabel << "</text>\n";
  s << "<text x=\"4\" y=\"" << mt + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
    << (log_y ? "1e" : "") << y1 << "</text>\n";
  s << "<text x=\"4\" y=\"" << H - mb << "\" font-family=\"sans-serif\" font-size=\"11\">" << (log_y ? "1e" : "")
    << y0 << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* c = colors[k % 7];
    s << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < x.size() && i < series[k].y.size(); ++i)
      if (std::isfinite(x[i]) && usable(series[k].y[i])) s << px(x[i]) << ',' << py(series[k].y[i]) << ' ';
    s << "\"/>\n";
    s << "<text x=\"" << W - mr + 8 << "\" y=\"" << mt + 16 * (k + 1) << "\" fill=\"" << c
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[k].name << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace viscidlab
