#include "qkd/tag_io.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "qkd/errors.hpp"

namespace qkd {

namespace {

constexpr char kMagic[4] = {'Q', 'K', 'D', 'T'};
constexpr std::uint8_t kVersion = 0x01;
constexpr std::size_t kRecordSize = 16;

void put_u64_le(char* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint64_t get_u64_le(const char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

}  // namespace

void write_tag_stream(std::ostream& out, std::span<const DetectionRecord> records) {
    char header[8] = {};
    std::memcpy(header, kMagic, 4);
    header[4] = static_cast<char>(kVersion);
    out.write(header, sizeof(header));
    char buf[kRecordSize];
    for (const DetectionRecord& r : records) {
        std::memset(buf, 0, sizeof(buf));
        put_u64_le(buf, r.gate_index);
        buf[8] = static_cast<char>(r.detector_id);
        buf[9] = static_cast<char>(r.bob_basis);
        buf[10] = static_cast<char>(r.arrival_offset_ps & 0xFF);
        buf[11] = static_cast<char>(r.arrival_offset_ps >> 8);
        out.write(buf, sizeof(buf));
    }
    if (!out) throw IoError("failed writing tag stream");
}

void write_tag_file(const std::string& path, std::span<const DetectionRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open tag file for writing: " + path);
    write_tag_stream(out, records);
}

std::vector<DetectionRecord> read_tag_stream(std::istream& in) {
    char header[8];
    in.read(header, sizeof(header));
    if (!in || std::memcmp(header, kMagic, 4) != 0)
        throw IoError("not a QKDT tag stream");
    if (header[4] != static_cast<char>(kVersion))
        throw IoError("unsupported QKDT version");

    std::vector<DetectionRecord> records;
    char buf[kRecordSize];
    while (in.read(buf, sizeof(buf))) {
        DetectionRecord r;
        r.gate_index = get_u64_le(buf);
        r.detector_id = static_cast<std::uint8_t>(buf[8]);
        r.bob_basis = static_cast<std::uint8_t>(buf[9]);
        r.arrival_offset_ps = static_cast<std::uint16_t>(
            static_cast<unsigned char>(buf[10])
            | (static_cast<std::uint16_t>(static_cast<unsigned char>(buf[11])) << 8));
        records.push_back(r);
    }
    if (in.gcount() != 0) throw IoError("truncated QKDT record");
    return records;
}

std::vector<DetectionRecord> read_tag_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open tag file: " + path);
    return read_tag_stream(in);
}

}  // namespace qkd
