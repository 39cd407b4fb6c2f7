#include "cogmap/io_util.hpp"

#include <cstdio>

namespace cogmap {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "rb");
    if (!f)
        throw FormatError("cannot open for reading: " + path.string());
    std::fseek(f, 0, SEEK_END);
    const long size = std::ftell(f);
    if (size < 0) {
        std::fclose(f);
        throw FormatError("cannot determine size of: " + path.string());
    }
    std::fseek(f, 0, SEEK_SET);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    if (size > 0 && std::fread(bytes.data(), 1, bytes.size(), f) != bytes.size()) {
        std::fclose(f);
        throw FormatError("short read: " + path.string());
    }
    std::fclose(f);
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f)
        throw FormatError("cannot open for writing: " + path.string());
    if (!bytes.empty() &&
        std::fwrite(bytes.data(), 1, bytes.size(), f) != bytes.size()) {
        std::fclose(f);
        throw FormatError("short write: " + path.string());
    }
    if (std::fclose(f) != 0)
        throw FormatError("close failed: " + path.string());
}

} // namespace cogmap
