#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qkd/pulse_sim.hpp"

namespace qkd {

/// Time-tag stream file: magic "QKDT", version 0x01, 3 reserved bytes, then
/// 16-byte little-endian records: 8-byte gate index, 1-byte detector id,
/// 1-byte bob basis, 2-byte arrival offset in picoseconds, 4 reserved bytes.
void write_tag_stream(std::ostream& out, std::span<const DetectionRecord> records);
void write_tag_file(const std::string& path, std::span<const DetectionRecord> records);

std::vector<DetectionRecord> read_tag_stream(std::istream& in);
std::vector<DetectionRecord> read_tag_file(const std::string& path);

}  // namespace qkd
