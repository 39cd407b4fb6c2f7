#include "cogmap/config.hpp"

#include <cctype>
#include <cstdlib>
#include <string_view>

#include "cogmap/error.hpp"
#include "cogmap/io_util.hpp"

namespace cogmap {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad_value(const std::string& key, std::string_view value) {
    throw UsageError("config: bad value for " + key + ": '" +
                     std::string(value) + "'");
}

std::uint64_t parse_u64(const std::string& key, std::string_view value) {
    const std::string s(value);
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size() || s.empty() || s[0] == '-')
        bad_value(key, value);
    return v;
}

std::uint32_t parse_u32(const std::string& key, std::string_view value) {
    const std::uint64_t v = parse_u64(key, value);
    if (v > 0xFFFFFFFFull)
        bad_value(key, value);
    return static_cast<std::uint32_t>(v);
}

double parse_f64(const std::string& key, std::string_view value) {
    const std::string s(value);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size() || s.empty())
        bad_value(key, value);
    return v;
}

bool parse_bool(const std::string& key, std::string_view value) {
    if (value == "true" || value == "1")
        return true;
    if (value == "false" || value == "0")
        return false;
    bad_value(key, value);
}

int parse_verbosity(const std::string& key, std::string_view value) {
    const std::uint64_t v = parse_u64(key, value);
    if (v > 2)
        bad_value(key, value);
    return static_cast<int>(v);
}

} // namespace

ToolConfig parse_config_text(const std::string& text) {
    ToolConfig cfg;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::size_t end = nl == std::string::npos ? text.size() : nl;
        std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (nl == std::string::npos && line.empty())
            break;
        if (line.empty() || line.front() == '#' || line.front() == ';')
            continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw UsageError("config: line " + std::to_string(line_no) +
                                 ": unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section != "scene" && section != "map" && section != "cdif" &&
                section != "run")
                throw UsageError("config: unknown section [" + section + "]");
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw UsageError("config: line " + std::to_string(line_no) +
                             ": expected key = value");
        const std::string key_short(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (section.empty())
            throw UsageError("config: line " + std::to_string(line_no) +
                             ": key outside any section");
        const std::string key = section + "." + key_short;

        if (section == "scene") {
            if (key_short == "objects")
                cfg.scene.object_count = parse_u32(key, value);
            else if (key_short == "extent")
                cfg.scene.scene_extent = parse_f64(key, value);
            else if (key_short == "points_per_object")
                cfg.scene.points_per_object_per_frame = parse_u32(key, value);
            else if (key_short == "feature_noise")
                cfg.scene.feature_noise_sigma = parse_f64(key, value);
            else if (key_short == "coordinate_noise")
                cfg.scene.coordinate_noise_sigma = parse_f64(key, value);
            else if (key_short == "frames")
                cfg.scene.frames = parse_u32(key, value);
            else if (key_short == "seed")
                cfg.scene.seed = parse_u64(key, value);
            else if (key_short == "dim_visual")
                cfg.scene.dim_visual = parse_u32(key, value);
            else if (key_short == "dim_spatial")
                cfg.scene.dim_spatial = parse_u32(key, value);
            else
                throw UsageError("config: unknown key " + key);
        } else if (section == "map") {
            if (key_short == "grid_extent")
                cfg.map.grid_extent = parse_u32(key, value);
            else if (key_short == "resolution")
                cfg.map.resolution = parse_f64(key, value);
            else if (key_short == "conf_threshold")
                cfg.map.conf_threshold = parse_f64(key, value);
            else if (key_short == "sim_threshold")
                cfg.map.sim_threshold = parse_f64(key, value);
            else if (key_short == "max_voxels")
                cfg.map.max_voxels = parse_u32(key, value);
            else if (key_short == "seed")
                cfg.map.seed = parse_u64(key, value);
            else if (key_short == "insert_low_confidence")
                cfg.map.insert_low_confidence = parse_bool(key, value);
            else
                throw UsageError("config: unknown key " + key);
        } else if (section == "cdif") {
            if (key_short == "layers")
                cfg.cdif.layers = parse_u32(key, value);
            else if (key_short == "heads")
                cfg.cdif.heads = parse_u32(key, value);
            else if (key_short == "seed")
                cfg.cdif.seed = parse_u64(key, value);
            else if (key_short == "frequency_base")
                cfg.cdif.frequency_base = parse_f64(key, value);
            else if (key_short == "coordinate_scale")
                cfg.cdif.coordinate_scale = parse_f64(key, value);
            else
                throw UsageError("config: unknown key " + key);
        } else { // run
            if (key_short == "out")
                cfg.run.out = std::string(value);
            else if (key_short == "verbosity")
                cfg.run.verbosity = parse_verbosity(key, value);
            else
                throw UsageError("config: unknown key " + key);
        }
    }
    return cfg;
}

ToolConfig load_config_file(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    return parse_config_text(std::string(bytes.begin(), bytes.end()));
}

} // namespace cogmap
