#include "manifest.hpp"

#include "crowdtrack/error.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

namespace crowdtrack::cli {

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, fmt::format("cannot read '{}' for checksum", path.string()));
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::Io, "SHA-256 initialisation failed");
    }
    std::array<char, 1 << 16> buffer{};
    while (in) {
        in.read(buffer.data(), buffer.size());
        const auto got = in.gcount();
        if (got > 0) {
            EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(got));
        }
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
    std::string hex;
    for (unsigned int i = 0; i < length; ++i) {
        hex += fmt::format("{:02x}", digest[i]);
    }
    return hex;
}

void RunManifest::write(const std::filesystem::path& dir) const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config"] = config_path;
    j["seed"] = seed;
    j["wall_seconds"] = wall_seconds;
    j["inputs"] = nlohmann::json::array();
    for (const auto& p : inputs) {
        j["inputs"].push_back(p.string());
    }
    j["outputs"] = nlohmann::json::array();
    for (const auto& p : outputs) {
        j["outputs"].push_back({{"path", p.filename().string()}, {"sha256", sha256_file(p)}});
    }
    const auto target = dir / "manifest.json";
    const auto tmp = dir / "manifest.json.tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << j.dump(2) << '\n';
        if (!out) {
            throw Error(ErrorKind::Io, fmt::format("cannot write '{}'", tmp.string()));
        }
    }
    std::filesystem::rename(tmp, target);
}

}  // namespace crowdtrack::cli
