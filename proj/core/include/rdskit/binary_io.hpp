#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

namespace rdskit::io {

// Every binary record starts with a 16-byte header: an 8-byte magic, a
// little-endian u32 format version and a little-endian u32 record kind.
inline constexpr char kMagic[8] = {'R', 'D', 'S', 'K', 'I', 'T', 'B', 'N'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class RecordKind : std::uint32_t {
  wiener_path = 1,
  trajectory = 2,
  stationary_point = 3,
};

std::string record_kind_name(RecordKind kind);

void write_header(std::ostream& out, RecordKind kind);
// Throws io_error on a bad magic, unknown version or a kind other than `expected`.
void read_header(std::istream& in, RecordKind expected);
// Reads the header and returns whatever kind it declares.
RecordKind peek_header(std::istream& in);

void write_u64(std::ostream& out, std::uint64_t v);
void write_i64(std::ostream& out, std::int64_t v);
void write_f64(std::ostream& out, double v);
void write_f64s(std::ostream& out, std::span<const double> v);

std::uint64_t read_u64(std::istream& in);
std::int64_t read_i64(std::istream& in);
double read_f64(std::istream& in);
void read_f64s(std::istream& in, std::span<double> v);

// Full-precision decimal formatting used for every CSV cell.
std::string format_double(double v);

}  // namespace rdskit::io
