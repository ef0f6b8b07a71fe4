// Binary netpbm I/O: P4 (bitmaps, MSB-first, rows padded to a byte) and
// P5 (8-bit gray). ASCII variants are rejected.
#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "svs/core.hpp"

namespace svs::netpbm {

namespace detail {

struct Header {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 1;
  std::size_t data_offset = 0;
};

inline void skip_space_and_comments(const std::string& buf, std::size_t& pos) {
  while (pos < buf.size()) {
    if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
      ++pos;
    } else if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
}

inline int read_int(const std::string& buf, std::size_t& pos, const std::string& what) {
  skip_space_and_comments(buf, pos);
  if (pos >= buf.size() || !std::isdigit(static_cast<unsigned char>(buf[pos])))
    throw ValidationError("netpbm: missing " + what);
  long v = 0;
  while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) {
    v = v * 10 + (buf[pos] - '0');
    if (v > 1'000'000) throw ValidationError("netpbm: " + what + " out of range");
    ++pos;
  }
  return static_cast<int>(v);
}

inline Header parse_header(const std::string& buf, bool with_maxval) {
  Header h;
  if (buf.size() < 2 || buf[0] != 'P') throw ValidationError("netpbm: bad magic");
  h.magic = buf.substr(0, 2);
  std::size_t pos = 2;
  h.width = read_int(buf, pos, "width");
  h.height = read_int(buf, pos, "height");
  if (with_maxval) h.maxval = read_int(buf, pos, "maxval");
  if (h.width <= 0 || h.height <= 0) throw ValidationError("netpbm: zero dimension");
  if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos])))
    throw ValidationError("netpbm: header not terminated");
  h.data_offset = pos + 1;
  return h;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void dump(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace detail

inline std::string encode_pbm(const MotionBitmap& bm) {
  std::ostringstream os;
  os << "P4\n" << bm.cols() << ' ' << bm.rows() << '\n';
  std::string out = os.str();
  const int row_bytes = (bm.cols() + 7) / 8;
  for (int r = 0; r < bm.rows(); ++r) {
    for (int b = 0; b < row_bytes; ++b) {
      unsigned char byte = 0;
      for (int k = 0; k < 8; ++k) {
        const int c = b * 8 + k;
        if (c < bm.cols() && bm.at(r, c)) byte |= static_cast<unsigned char>(0x80u >> k);
      }
      out.push_back(static_cast<char>(byte));
    }
  }
  return out;
}

inline MotionBitmap decode_pbm(const std::string& buf) {
  if (buf.rfind("P1", 0) == 0) throw ValidationError("netpbm: ASCII P1 not supported, expected P4");
  if (buf.rfind("P4", 0) != 0) throw ValidationError("netpbm: expected P4 bitmap");
  const auto h = detail::parse_header(buf, false);
  const int row_bytes = (h.width + 7) / 8;
  const std::size_t need = static_cast<std::size_t>(row_bytes) * h.height;
  if (buf.size() - h.data_offset < need) throw ValidationError("netpbm: truncated P4 payload");
  auto bm = MotionBitmap::with_dims(h.height, h.width);
  for (int r = 0; r < h.height; ++r) {
    for (int c = 0; c < h.width; ++c) {
      const auto byte = static_cast<unsigned char>(buf[h.data_offset + r * row_bytes + c / 8]);
      bm.set(r, c, (byte >> (7 - c % 8)) & 1u);
    }
  }
  return bm;
}

inline std::string encode_pgm(const GrayFrame& f) {
  std::ostringstream os;
  os << "P5\n" << f.cols() << ' ' << f.rows() << "\n255\n";
  std::string out = os.str();
  out.append(reinterpret_cast<const char*>(f.pixels().data()), f.pixels().size());
  return out;
}

inline GrayFrame decode_pgm(const std::string& buf) {
  if (buf.rfind("P2", 0) == 0) throw ValidationError("netpbm: ASCII P2 not supported, expected P5");
  if (buf.rfind("P5", 0) != 0) throw ValidationError("netpbm: expected P5 graymap");
  const auto h = detail::parse_header(buf, true);
  if (h.maxval < 1 || h.maxval > 255) throw ValidationError("netpbm: only 8-bit P5 supported");
  const std::size_t need = static_cast<std::size_t>(h.width) * h.height;
  if (buf.size() - h.data_offset < need) throw ValidationError("netpbm: truncated P5 payload");
  GrayFrame f(h.height, h.width);
  std::copy_n(reinterpret_cast<const std::uint8_t*>(buf.data() + h.data_offset), need,
              f.pixels().begin());
  return f;
}

inline MotionBitmap read_pbm(const std::filesystem::path& p) {
  try {
    return decode_pbm(detail::slurp(p));
  } catch (const ValidationError& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

inline GrayFrame read_pgm(const std::filesystem::path& p) {
  try {
    return decode_pgm(detail::slurp(p));
  } catch (const ValidationError& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

inline void write_pbm(const std::filesystem::path& p, const MotionBitmap& bm) {
  detail::dump(p, encode_pbm(bm));
}

inline void write_pgm(const std::filesystem::path& p, const GrayFrame& f) {
  detail::dump(p, encode_pgm(f));
}

}  // namespace svs::netpbm
