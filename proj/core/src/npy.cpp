#include "frofa/npy.hpp"

#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace frofa::npy {

namespace {

constexpr char kMagic[] = "\x93NUMPY";

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\n");
  const auto e = s.find_last_not_of(" \t\n");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

void parse_header(const std::string& header, Array& out) {
  static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
  static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
  std::smatch m;
  if (!std::regex_search(header, m, descr_re)) throw std::runtime_error("npy: header lacks 'descr'");
  out.descr = m[1];
  if (!std::regex_search(header, m, order_re)) {
    throw std::runtime_error("npy: header lacks 'fortran_order'");
  }
  out.fortran_order = m[1] == "True";
  if (!std::regex_search(header, m, shape_re)) throw std::runtime_error("npy: header lacks 'shape'");
  out.shape.clear();
  std::stringstream ss(m[1].str());
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.shape.push_back(std::stoull(item));
  }
}

}  // namespace

std::uint64_t Array::element_count() const {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::size_t Array::item_size() const {
  if (descr.size() < 3) throw std::runtime_error("npy: malformed dtype '" + descr + "'");
  return static_cast<std::size_t>(std::stoul(descr.substr(2)));
}

Array read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("npy: cannot open " + path.string());

  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, kMagic, 6) != 0) {
    throw std::runtime_error("npy: " + path.string() + " is not a .npy file");
  }
  unsigned char version[2];
  in.read(reinterpret_cast<char*>(version), 2);
  std::uint32_t header_len = 0;
  if (version[0] == 1) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    header_len = b[0] | (b[1] << 8);
  } else if (version[0] == 2 || version[0] == 3) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    header_len = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  } else {
    throw std::runtime_error("npy: unsupported format version " + std::to_string(version[0]));
  }
  std::string header(header_len, '\0');
  in.read(header.data(), header_len);
  if (!in) throw std::runtime_error("npy: truncated header in " + path.string());

  Array out;
  parse_header(header, out);
  const std::uint64_t nbytes = out.element_count() * out.item_size();
  out.bytes.resize(nbytes);
  in.read(reinterpret_cast<char*>(out.bytes.data()), static_cast<std::streamsize>(nbytes));
  if (static_cast<std::uint64_t>(in.gcount()) != nbytes) {
    throw std::runtime_error("npy: truncated payload in " + path.string());
  }
  return out;
}

void write(const std::filesystem::path& path, const Array& array) {
  std::string dict = "{'descr': '" + array.descr + "', 'fortran_order': " +
                     (array.fortran_order ? "True" : "False") + ", 'shape': (";
  for (std::size_t i = 0; i < array.shape.size(); ++i) {
    dict += std::to_string(array.shape[i]);
    if (array.shape.size() == 1 || i + 1 < array.shape.size()) dict += ",";
    if (i + 1 < array.shape.size()) dict += " ";
  }
  dict += "), }";

  // Pad so that the payload starts on a 64-byte boundary.
  const bool v2 = dict.size() + 1 + 10 > 65535;
  const std::size_t prefix = v2 ? 12 : 10;
  std::size_t total = prefix + dict.size() + 1;
  const std::size_t pad = (64 - total % 64) % 64;
  dict.append(pad, ' ');
  dict.push_back('\n');

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("npy: cannot write " + path.string());
  out.write(kMagic, 6);
  const unsigned char ver[2] = {static_cast<unsigned char>(v2 ? 2 : 1), 0};
  out.write(reinterpret_cast<const char*>(ver), 2);
  const auto len = static_cast<std::uint32_t>(dict.size());
  if (v2) {
    const unsigned char b[4] = {static_cast<unsigned char>(len), static_cast<unsigned char>(len >> 8),
                                static_cast<unsigned char>(len >> 16),
                                static_cast<unsigned char>(len >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
  } else {
    const unsigned char b[2] = {static_cast<unsigned char>(len), static_cast<unsigned char>(len >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
  }
  out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
  out.write(reinterpret_cast<const char*>(array.bytes.data()),
            static_cast<std::streamsize>(array.bytes.size()));
  if (!out) throw std::runtime_error("npy: write failed for " + path.string());
}

namespace {
template <typename T>
Array pack(const std::vector<T>& values, std::vector<std::uint64_t> shape, std::string descr) {
  Array a;
  a.descr = std::move(descr);
  a.shape = std::move(shape);
  if (a.element_count() != values.size()) throw std::invalid_argument("npy: shape/value count mismatch");
  a.bytes.resize(values.size() * sizeof(T));
  std::memcpy(a.bytes.data(), values.data(), a.bytes.size());
  return a;
}
}  // namespace

Array from_floats(const std::vector<float>& values, std::vector<std::uint64_t> shape) {
  return pack(values, std::move(shape), "<f4");
}
Array from_int64(const std::vector<std::int64_t>& values, std::vector<std::uint64_t> shape) {
  return pack(values, std::move(shape), "<i8");
}
Array from_int32(const std::vector<std::int32_t>& values, std::vector<std::uint64_t> shape) {
  return pack(values, std::move(shape), "<i4");
}

}  // namespace frofa::npy
