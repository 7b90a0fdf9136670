#ifndef NLSLAB_IO_HPP_
#define NLSLAB_IO_HPP_

#include <json.hpp>

#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nlslab/types.hpp"

namespace nlslab {

// Shortest-round-trip decimal at 17 significant digits; fixed formatting keeps
// CSV diffs meaningful across runs.
inline std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for checksum: " + path.string());
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64(data.data(), data.size());
}

// Raw little-endian array dump with a JSON sidecar (shape, dtype, row-major).
inline void dump_array(const std::filesystem::path& path, const void* data, std::size_t bytes,
                       const std::string& dtype, const std::vector<std::size_t>& shape) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write array: " + path.string());
  out.write(static_cast<const char*>(data), std::streamsize(bytes));
  if (!out) throw IoError("short write: " + path.string());
  nlohmann::json side;
  side["dtype"] = dtype;
  side["shape"] = shape;
  side["order"] = "row-major";
  side["byte_order"] = "little-endian";
  std::ofstream sc(path.string() + ".json");
  if (!sc) throw IoError("cannot write sidecar: " + path.string() + ".json");
  sc << side.dump(2) << "\n";
}

template <typename Scalar>
void dump_complex_field(const std::filesystem::path& path, const CplxVec<Scalar>& u) {
  static_assert(sizeof(std::complex<Scalar>) == 2 * sizeof(Scalar));
  dump_array(path, u.data(), sizeof(std::complex<Scalar>) * std::size_t(u.size()), "complex128",
             {std::size_t(u.size())});
}

template <typename Scalar>
void dump_real_vector(const std::filesystem::path& path, const RealVec<Scalar>& u) {
  dump_array(path, u.data(), sizeof(Scalar) * std::size_t(u.size()), "float64",
             {std::size_t(u.size())});
}

template <typename Scalar>
CplxVec<Scalar> load_complex_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read array: " + path.string());
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t n = data.size() / sizeof(std::complex<Scalar>);
  CplxVec<Scalar> out(n);
  std::memcpy(out.data(), data.data(), n * sizeof(std::complex<Scalar>));
  return out;
}

// CSV with one header row and 17-significant-digit numeric fields.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw IoError("cannot write csv: " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) {
      out_ << header[i] << (i + 1 < header.size() ? "," : "\n");
    }
    columns_ = header.size();
  }
  void row(const std::vector<double>& values) {
    if (values.size() != columns_) throw IoError("csv row width mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      out_ << format_number(values[i]) << (i + 1 < values.size() ? "," : "\n");
    }
  }

 private:
  std::ofstream out_;
  std::size_t columns_ = 0;
};

// gnuplot-ready two-column file
inline void dump_dat(const std::filesystem::path& path, const std::vector<double>& x,
                     const std::vector<double>& y) {
  if (x.size() != y.size()) throw IoError("dump_dat: column size mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dat: " + path.string());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out << format_number(x[i]) << " " << format_number(y[i]) << "\n";
  }
}

// Per-run manifest: config echo, checks, artifact checksums.  Written
// atomically (tmp file + rename) at run end.
class RunManifest {
 public:
  RunManifest(const nlohmann::json& config, const std::string& version) {
    doc_["config"] = config;
    doc_["version"] = version;
    doc_["checks"] = nlohmann::json::array();
    doc_["artifacts"] = nlohmann::json::array();
  }

  void add_check(const std::string& name, double measured, double tolerance, bool pass) {
    doc_["checks"].push_back(
        {{"name", name}, {"measured", measured}, {"tolerance", tolerance}, {"pass", pass}});
    all_pass_ = all_pass_ && pass;
  }
  void add_info(const std::string& name, double value) {
    doc_["checks"].push_back({{"name", name}, {"measured", value}, {"info_only", true}});
  }
  void add_artifact(const std::filesystem::path& path) {
    doc_["artifacts"].push_back({{"file", path.filename().string()},
                                 {"fnv1a64", format_hex(file_checksum(path))}});
  }
  void set_wall_time(double seconds) { doc_["wall_time_seconds"] = seconds; }
  void set_failure(const std::string& what) {
    doc_["failure"] = what;
    all_pass_ = false;
  }
  bool all_pass() const { return all_pass_; }
  const nlohmann::json& json() const { return doc_; }

  void write(const std::filesystem::path& path) const {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw IoError("cannot write manifest: " + tmp.string());
      out << doc_.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
  }

  static std::string format_hex(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
  }

 private:
  nlohmann::json doc_;
  bool all_pass_ = true;
};

}  // namespace nlslab

#endif  // NLSLAB_IO_HPP_
