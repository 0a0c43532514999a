#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace crcsim {

/// Shortest round-trip decimal representation of a double (to_chars).
std::string format_double(double v);

double parse_double(const std::string& s, const std::string& context);
long long parse_int(const std::string& s, const std::string& context);

/// Minimal CSV support shared by the artifact writers/readers. Lines starting
/// with '#' are metadata comments and are skipped on read.
struct CsvTable {
    std::vector<std::string> comments;  // leading '#' lines, without newline
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // throws if absent
};

CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Standard first comment line carried by every artifact file.
std::string provenance_comment(std::uint64_t config_hash, std::uint64_t master_seed);

}  // namespace crcsim
