#include "genunc/numeric/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "genunc/error.hpp"
#include "genunc/numeric/hash.hpp"

namespace genunc::numeric {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'G', 'U', 'N', 'C', 'B', 'I', 'N', '1'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("container: truncated input");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void Container::add(std::string name, std::vector<double> values) {
  arrays.emplace_back(std::move(name), std::move(values));
}

bool Container::has(const std::string& name) const {
  for (const auto& [n, v] : arrays)
    if (n == name) return true;
  return false;
}

const std::vector<double>& Container::array(const std::string& name) const {
  for (const auto& [n, v] : arrays)
    if (n == name) return v;
  throw IoError("container: missing array '" + name + "'");
}

std::string Container::to_bytes() const {
  nlohmann::json header = {{"format_version", kFormatVersion}, {"kind", kind}, {"meta", meta}};
  auto& list = header["arrays"] = nlohmann::json::array();
  for (const auto& [n, v] : arrays) list.push_back({{"name", n}, {"length", v.size()}});
  const std::string text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& [n, v] : arrays)
    out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  return out;
}

Container Container::from_bytes(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw IoError("container: bad magic");
  std::size_t pos = sizeof kMagic;
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kFormatVersion) throw IoError("container: unsupported format version " + std::to_string(version));
  const auto len = take<std::uint64_t>(bytes, pos);
  if (pos + len > bytes.size()) throw IoError("container: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, len));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("container: corrupt header: ") + e.what());
  }
  pos += len;
  if (!header.contains("format_version")) throw IoError("container: header lacks format_version");

  Container c;
  c.kind = header.at("kind").get<std::string>();
  c.meta = header.at("meta");
  for (const auto& entry : header.at("arrays")) {
    const auto n = entry.at("length").get<std::size_t>();
    if (pos + n * sizeof(double) > bytes.size()) throw IoError("container: truncated array data");
    std::vector<double> v(n);
    std::memcpy(v.data(), bytes.data() + pos, n * sizeof(double));
    pos += n * sizeof(double);
    c.add(entry.at("name").get<std::string>(), std::move(v));
  }
  if (pos != bytes.size()) throw IoError("container: trailing bytes");
  return c;
}

void Container::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  const std::string bytes = to_bytes();
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

Container Container::load(const std::filesystem::path& path, const std::string& expected_kind) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  Container c = from_bytes(ss.str());
  if (!expected_kind.empty() && c.kind != expected_kind)
    throw IoError(path.string() + ": expected a '" + expected_kind + "' container, found '" + c.kind + "'");
  return c;
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return to_hex(fnv1a(ss.str()));
}

}  // namespace genunc::numeric
