#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qfbm/csv.hpp"
#include "qfbm/qfbm_field.hpp"

namespace qfbm {
namespace {

std::filesystem::path header_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".hdr");
}

void put_le(std::ofstream& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<unsigned char>(bits & 0xFF);
    bits >>= 8;
  }
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_frame_csv(const FieldFrame& frame, const std::filesystem::path& path) {
  write_atomically(path, [&](std::ofstream& out) {
    out << "theta,phi,value\n";
    for (int i = 0; i < frame.grid.n_theta(); ++i) {
      for (int j = 0; j < frame.grid.n_phi(); ++j) {
        out << format_real(frame.grid.theta(i)) << ',' << format_real(frame.grid.phi(j)) << ','
            << format_real(frame.values(i, j)) << '\n';
      }
    }
  });
}

void write_frame_binary(const FieldFrame& frame, const FrameHeader& header,
                        const std::filesystem::path& path) {
  if (header.n_theta != frame.values.rows() || header.n_phi != frame.values.cols()) {
    throw std::invalid_argument("frame header does not match frame dimensions");
  }
  write_atomically(
      path,
      [&](std::ofstream& out) {
        for (Eigen::Index i = 0; i < frame.values.rows(); ++i) {
          for (Eigen::Index j = 0; j < frame.values.cols(); ++j) put_le(out, frame.values(i, j));
        }
      },
      std::ios::out | std::ios::binary);
  write_atomically(header_path(path), [&](std::ofstream& out) {
    out << "format float64-le theta-major\n"
        << "n_theta " << header.n_theta << '\n'
        << "n_phi " << header.n_phi << '\n'
        << "grid " << header.grid_kind << '\n'
        << "t " << format_real(header.t) << '\n'
        << "H " << format_real(header.hurst) << '\n'
        << "kappa " << header.kappa << '\n'
        << "seed " << header.seed << '\n';
  });
}

std::pair<FrameHeader, Eigen::MatrixXd> read_frame_binary(const std::filesystem::path& path) {
  std::ifstream hdr(header_path(path));
  if (!hdr) throw std::runtime_error("missing frame header " + header_path(path).string());
  FrameHeader header;
  std::string line;
  while (std::getline(hdr, line)) {
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "n_theta") fields >> header.n_theta;
    else if (key == "n_phi") fields >> header.n_phi;
    else if (key == "grid") fields >> header.grid_kind;
    else if (key == "t") fields >> header.t;
    else if (key == "H") fields >> header.hurst;
    else if (key == "kappa") fields >> header.kappa;
    else if (key == "seed") fields >> header.seed;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::size_t count = static_cast<std::size_t>(header.n_theta) * static_cast<std::size_t>(header.n_phi);
  std::vector<unsigned char> bytes(count * 8);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw std::runtime_error("frame file is shorter than its header says");
  }
  Eigen::MatrixXd values(header.n_theta, header.n_phi);
  std::size_t offset = 0;
  for (int i = 0; i < header.n_theta; ++i) {
    for (int j = 0; j < header.n_phi; ++j, offset += 8) values(i, j) = get_le(bytes.data() + offset);
  }
  return {header, values};
}

}  // namespace qfbm
