#include "fuzzvad/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "fuzzvad/error.hpp"

namespace fuzzvad::nn {

namespace fs = std::filesystem;

namespace {

std::uint32_t le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

nlohmann::json read_manifest(const std::string& dir) {
    const auto path = fs::path(dir) / "manifest.json";
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open checkpoint manifest '{}'", path.string()));
    try {
        auto j = nlohmann::json::parse(in);
        if (j.value("format", "") != "fuzzvad-checkpoint") throw IoError(fmt::format("{}: not a checkpoint", path.string()));
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

}  // namespace

void save_checkpoint(const std::string& dir, const ParameterSet& params, const nlohmann::json& metadata) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create checkpoint directory '{}': {}", dir, ec.message()));

    nlohmann::json manifest;
    manifest["format"] = "fuzzvad-checkpoint";
    manifest["version"] = 1;
    manifest["parameters"] = nlohmann::json::array();
    std::vector<std::uint32_t> blob;
    blob.reserve(params.scalar_count());
    for (const auto& p : params) {
        manifest["parameters"].push_back(
            {{"name", p.name}, {"shape", p.value.shape()}, {"offset", blob.size()}, {"count", p.value.size()}});
        for (double v : p.value.values()) blob.push_back(le(std::bit_cast<std::uint32_t>(static_cast<float>(v))));
    }
    manifest["metadata"] = metadata;

    std::ofstream bin(fs::path(dir) / "params.bin", std::ios::binary | std::ios::trunc);
    bin.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size() * 4));
    std::ofstream js(fs::path(dir) / "manifest.json", std::ios::trunc);
    js << manifest.dump(2) << '\n';
    if (!bin || !js) throw IoError(fmt::format("failed writing checkpoint '{}'", dir));
}

Checkpoint load_checkpoint(const std::string& dir, ParameterSet& params) {
    const auto manifest = read_manifest(dir);
    const auto& entries = manifest.at("parameters");
    if (entries.size() != params.size()) {
        throw DomainError(fmt::format("checkpoint has {} parameters, model has {}", entries.size(), params.size()));
    }
    std::ifstream bin(fs::path(dir) / "params.bin", std::ios::binary);
    if (!bin) throw IoError(fmt::format("cannot open '{}/params.bin'", dir));
    std::vector<std::uint32_t> blob(params.scalar_count());
    if (!bin.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob.size() * 4))) {
        throw IoError(fmt::format("{}/params.bin is truncated", dir));
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k];
        const auto& e = entries[k];
        if (e.at("name").get<std::string>() != p.name || e.at("shape").get<Shape>() != p.value.shape()) {
            throw DomainError(fmt::format("checkpoint entry {} ('{}') does not match parameter '{}' {}", k,
                                          e.at("name").get<std::string>(), p.name, shape_string(p.value.shape())));
        }
        const auto offset = e.at("offset").get<std::size_t>();
        for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = std::bit_cast<float>(le(blob.at(offset + i)));
    }
    return {manifest.value("metadata", nlohmann::json::object())};
}

nlohmann::json read_checkpoint_metadata(const std::string& dir) {
    return read_manifest(dir).value("metadata", nlohmann::json::object());
}

}  // namespace fuzzvad::nn
