#include "beamsr/record_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace beamsr {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary record format assumes a little-endian host");

constexpr char kMagic[8] = {'B', 'S', 'R', 'R', 'E', 'C', '\0', '\1'};
constexpr std::uint32_t kFormatVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw std::runtime_error("binary record: truncated input");
  return v;
}

template <class T>
void put_array(std::ostream& os, const std::vector<T>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           std::streamsize(v.size() * sizeof(T)));
}

template <class T>
void get_array(std::istream& is, std::vector<T>& v, std::size_t n) {
  v.resize(n);
  if (!is.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(T))))
    throw std::runtime_error("binary record: truncated input");
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_csv_header(std::ostream& os, const FileHeader& header) {
  os << "# beamsr_version: " << header.version << '\n';
  os << "# config_hash: " << header.config_hash << '\n';
  for (const auto& [k, v] : header.extra) os << "# " << k << ": " << v << '\n';
}

void write_record_csv(std::ostream& os, const DipoleRecord& rec,
                      const FileHeader& header) {
  rec.validate();
  write_csv_header(os, header);
  os << "# trajectory: " << rec.trajectory << '\n';
  os << "t,jx,jy,n_atoms\n";
  for (std::size_t i = 0; i < rec.size(); ++i)
    os << format_double(rec.times[i]) << ',' << format_double(rec.jx[i]) << ','
       << format_double(rec.jy[i]) << ',' << rec.n_snapshot[i] << '\n';
}

DipoleRecord read_record_csv(std::istream& is) {
  DipoleRecord rec;
  std::string line;
  bool have_columns = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "# trajectory: ";
      if (line.rfind(key, 0) == 0) rec.trajectory = std::stoull(line.substr(key.size()));
      continue;
    }
    if (!have_columns) {
      if (line != "t,jx,jy,n_atoms")
        throw std::runtime_error("record csv: unexpected column header '" + line + "'");
      have_columns = true;
      continue;
    }
    std::istringstream row(line);
    std::string f[4];
    for (auto& s : f)
      if (!std::getline(row, s, ','))
        throw std::runtime_error("record csv: short row '" + line + "'");
    rec.times.push_back(std::stod(f[0]));
    rec.jx.push_back(std::stod(f[1]));
    rec.jy.push_back(std::stod(f[2]));
    rec.n_snapshot.push_back(std::stoll(f[3]));
  }
  rec.validate();
  return rec;
}

void write_record_binary(std::ostream& os, const DipoleRecord& rec,
                         const FileHeader& header) {
  rec.validate();
  os.write(kMagic, sizeof(kMagic));
  put(os, kFormatVersion);
  const std::string h = header.version + "\n" + header.config_hash + "\n";
  put(os, std::uint32_t(h.size()));
  os.write(h.data(), std::streamsize(h.size()));
  put(os, std::uint64_t(rec.trajectory));
  put(os, std::uint64_t(rec.size()));
  put_array(os, rec.times);
  put_array(os, rec.jx);
  put_array(os, rec.jy);
  put_array(os, rec.n_snapshot);
}

DipoleRecord read_record_binary(std::istream& is, FileHeader* header) {
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("binary record: bad magic");
  const auto version = get<std::uint32_t>(is);
  if (version != kFormatVersion)
    throw std::runtime_error("binary record: unsupported format version " +
                             std::to_string(version));
  const auto hlen = get<std::uint32_t>(is);
  std::string h(hlen, '\0');
  if (!is.read(h.data(), hlen)) throw std::runtime_error("binary record: truncated input");
  if (header) {
    const auto nl = h.find('\n');
    header->version = h.substr(0, nl);
    header->config_hash = nl == std::string::npos ? "" : h.substr(nl + 1);
    if (!header->config_hash.empty() && header->config_hash.back() == '\n')
      header->config_hash.pop_back();
  }
  DipoleRecord rec;
  rec.trajectory = get<std::uint64_t>(is);
  const auto n = std::size_t(get<std::uint64_t>(is));
  get_array(is, rec.times, n);
  get_array(is, rec.jx, n);
  get_array(is, rec.jy, n);
  get_array(is, rec.n_snapshot, n);
  rec.validate();
  return rec;
}

void save_record_binary(const std::string& path, const DipoleRecord& rec,
                        const FileHeader& header) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_record_binary(os, rec, header);
}

DipoleRecord load_record_binary(const std::string& path, FileHeader* header) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_record_binary(is, header);
}

}  // namespace beamsr
