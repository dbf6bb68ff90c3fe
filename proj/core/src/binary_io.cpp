#include "rdskit/binary_io.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>

#include "rdskit/error.hpp"

namespace rdskit::io {
namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&v, bytes.data(), sizeof(T));
    return v;
  }
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
  if (!out) throw Error(ErrorCode::io_error, "write failed");
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorCode::io_error, "unexpected end of record");
  return to_little(v);
}

}  // namespace

std::string record_kind_name(RecordKind kind) {
  switch (kind) {
    case RecordKind::wiener_path: return "wiener-path";
    case RecordKind::trajectory: return "trajectory";
    case RecordKind::stationary_point: return "stationary-point";
  }
  return "unknown";
}

void write_header(std::ostream& out, RecordKind kind) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(kind));
}

RecordKind peek_header(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::io_error, "not an rdskit binary record");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw Error(ErrorCode::io_error, "unsupported record version " + std::to_string(version));
  }
  const auto kind = get<std::uint32_t>(in);
  if (kind < 1 || kind > 3) throw Error(ErrorCode::io_error, "unknown record kind");
  return static_cast<RecordKind>(kind);
}

void read_header(std::istream& in, RecordKind expected) {
  const RecordKind kind = peek_header(in);
  if (kind != expected) {
    throw Error(ErrorCode::io_error, "expected a " + record_kind_name(expected) + " record, found " +
                                         record_kind_name(kind));
  }
}

void write_u64(std::ostream& out, std::uint64_t v) { put(out, v); }
void write_i64(std::ostream& out, std::int64_t v) { put(out, v); }
void write_f64(std::ostream& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }

void write_f64s(std::ostream& out, std::span<const double> v) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
    if (!out) throw Error(ErrorCode::io_error, "write failed");
  } else {
    for (double x : v) write_f64(out, x);
  }
}

std::uint64_t read_u64(std::istream& in) { return get<std::uint64_t>(in); }
std::int64_t read_i64(std::istream& in) { return get<std::int64_t>(in); }
double read_f64(std::istream& in) { return std::bit_cast<double>(get<std::uint64_t>(in)); }

void read_f64s(std::istream& in, std::span<double> v) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
    if (!in) throw Error(ErrorCode::io_error, "unexpected end of record");
  } else {
    for (double& x : v) x = read_f64(in);
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace rdskit::io
