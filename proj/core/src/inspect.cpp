#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "rdskit/binary_io.hpp"
#include "rdskit/noise.hpp"
#include "rdskit/pipeline.hpp"
#include "rdskit/stationary_point.hpp"

namespace rdskit {

namespace {

std::string inspect_binary(std::ifstream& in, const std::string& path) {
  const io::RecordKind kind = io::peek_header(in);
  in.seekg(0);
  std::ostringstream out;
  out << "binary record: " << io::record_kind_name(kind) << "\n";
  switch (kind) {
    case io::RecordKind::wiener_path: {
      const WienerPath w = WienerPath::load(in);
      out << "  step h      " << io::format_double(w.step()) << "\n"
          << "  modes       " << w.mode_count() << "\n"
          << "  cells       [" << w.first_cell() << ", " << w.end_cell() << ")\n"
          << "  seed        " << w.seed().seed << "\n";
      break;
    }
    case io::RecordKind::stationary_point: {
      const StationaryPoint y = StationaryPoint::load(in);
      const auto& rep = y.report();
      out << "  method      " << to_string(rep.method) << "\n"
          << "  dim         " << y.dim() << "\n"
          << "  step h      " << io::format_double(y.step()) << "\n";
      if (y.is_constant()) {
        out << "  constant    yes\n";
      } else {
        out << "  window      [" << y.first_index() << ", " << y.last_index() << "] (anchor " << y.anchor_steps()
            << ")\n";
      }
      out << "  residual    " << io::format_double(rep.stationarity_residual) << "\n";
      break;
    }
    case io::RecordKind::trajectory: {
      io::read_header(in, io::RecordKind::trajectory);
      const std::uint64_t count = io::read_u64(in);
      const std::uint64_t dim = io::read_u64(in);
      out << "  states      " << count << "\n"
          << "  dim         " << dim << "\n";
      if (count > 0) {
        std::vector<double> row(dim);
        const double t0 = io::read_f64(in);
        io::read_f64s(in, row);
        out << "  first time  " << io::format_double(t0) << "\n";
        in.seekg(static_cast<std::streamoff>(16 + 16 + (count - 1) * (dim + 1) * 8));
        out << "  last time   " << io::format_double(io::read_f64(in)) << "\n";
      }
      break;
    }
    default:
      throw Error(ErrorCode::io_error, "'" + path + "' holds an unknown record kind");
  }
  return out.str();
}

std::string inspect_csv(std::ifstream& in, int max_rows) {
  std::ostringstream out;
  std::string header;
  std::getline(in, header);
  out << "columns: " << header << "\n";
  std::string line;
  long rows = 0;
  while (std::getline(in, line)) {
    if (rows < max_rows) out << "  " << line << "\n";
    ++rows;
  }
  if (rows > max_rows) out << "  ... (" << rows - max_rows << " more rows)\n";
  out << "rows: " << rows << "\n";
  return out.str();
}

}  // namespace

std::string inspect_artifact(const std::string& path, int max_rows) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
  char magic[sizeof(io::kMagic)] = {};
  in.read(magic, sizeof(magic));
  const bool binary = in.gcount() == sizeof(magic) && std::equal(magic, magic + sizeof(magic), io::kMagic);
  in.clear();
  in.seekg(0);
  if (binary) return inspect_binary(in, path);

  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".csv") return inspect_csv(in, max_rows);
  std::stringstream buffer;
  buffer << in.rdbuf();
  if (ext == ".json") {
    try {
      return nlohmann::json::parse(buffer.str()).dump(2) + "\n";
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::io_error, "'" + path + "' is not valid JSON: " + e.what());
    }
  }
  // Config files are re-serialized so the output shows the effective values.
  return serialize_config(parse_config(buffer.str()));
}

}  // namespace rdskit
