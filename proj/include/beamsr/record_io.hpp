#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "beamsr/beamsim.hpp"

namespace beamsr {

/// Provenance block written at the top of every output file.
struct FileHeader {
  std::string version = BEAMSR_VERSION;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> extra;
};

/// Shortest text that round-trips a double (17 significant digits).
std::string format_double(double x);

/// Writes "# key: value" lines for the header.
void write_csv_header(std::ostream& os, const FileHeader& header);

/// CSV layout: header comment lines, then "t,jx,jy,n_atoms" and one row per
/// sample.
void write_record_csv(std::ostream& os, const DipoleRecord& rec,
                      const FileHeader& header);
DipoleRecord read_record_csv(std::istream& is);

/// Binary layout (version 1, little endian):
///   char[8]  magic "BSRREC\0\1"
///   u32      format version (1)
///   u32      header length L, then L bytes "version\nconfig_hash\n"
///   u64      trajectory index
///   u64      sample count n
///   f64[n]   times, f64[n] jx, f64[n] jy, i64[n] atom counts
void write_record_binary(std::ostream& os, const DipoleRecord& rec,
                         const FileHeader& header);
DipoleRecord read_record_binary(std::istream& is, FileHeader* header = nullptr);

void save_record_binary(const std::string& path, const DipoleRecord& rec,
                        const FileHeader& header);
DipoleRecord load_record_binary(const std::string& path,
                                FileHeader* header = nullptr);

}  // namespace beamsr
