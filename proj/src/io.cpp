#include "sladoa/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>

#include "sladoa/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container payloads are little-endian; big-endian hosts need byte swaps");
static_assert(sizeof(double) == 8);

namespace sladoa {

void write_container(const std::filesystem::path& path, const json& manifest,
                     const std::vector<double>& payload) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    const std::string header = manifest.dump();
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.put('\n');
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(double)));
    if (!out) throw io_error("write failed: " + path.string());
}

Container read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw io_error("missing manifest line: " + path.string());

    Container c;
    try {
        c.manifest = json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        throw io_error("malformed manifest in " + path.string() + ": " + e.what());
    }

    const auto data_start = in.tellg();
    in.seekg(0, std::ios::end);
    const auto data_end = in.tellg();
    const std::size_t bytes = static_cast<std::size_t>(data_end - data_start);
    if (bytes % sizeof(double) != 0) {
        throw io_error("payload of " + path.string() + " is " + std::to_string(bytes) +
                       " bytes, not a multiple of 8");
    }
    c.payload.resize(bytes / sizeof(double));
    in.seekg(data_start);
    in.read(reinterpret_cast<char*>(c.payload.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw io_error("read failed: " + path.string());
    return c;
}

void expect_format(const json& manifest, const std::string& format, int version) {
    if (!manifest.contains("format") || manifest["format"] != format) {
        throw io_error("expected format \"" + format + "\", found \"" +
                       (manifest.contains("format") ? manifest["format"].dump() : "<none>") + "\"");
    }
    if (!manifest.contains("version") || !manifest["version"].is_number_integer() ||
        manifest["version"].get<int>() != version) {
        throw io_error("format \"" + format + "\": unsupported version " +
                       (manifest.contains("version") ? manifest["version"].dump() : "<none>") +
                       ", expected " + std::to_string(version));
    }
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw io_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

} // namespace sladoa
