#include "core/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "core/digest.hpp"
#include "core/errors.hpp"

namespace affedit::core {

namespace {
constexpr char kMagic[4] = {'A', 'F', 'C', 'K'};
constexpr uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    nlohmann::json header;
    header["config"] = ck.config;
    header["tensors"] = nlohmann::json::array();
    for (const auto& [name, tensor] : ck.tensors) {
        header["tensors"].push_back({{"name", name}, {"shape", tensor.shape()}});
    }
    std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, 4);
    uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    uint64_t hlen = header_str.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(header_str.data(), static_cast<std::streamsize>(hlen));
    for (const auto& [name, tensor] : ck.tensors) {
        out.write(reinterpret_cast<const char*>(tensor.data()),
                  static_cast<std::streamsize>(tensor.size() * sizeof(real)));
    }
    if (!out) throw IoError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("not a checkpoint file: " + path);
    }
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kVersion) throw IoError("unsupported checkpoint version");
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string header_str(hlen, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw IoError("truncated checkpoint header: " + path);

    nlohmann::json header = nlohmann::json::parse(header_str);
    Checkpoint ck;
    ck.config = header.value("config", nlohmann::json::object());
    for (const auto& entry : header.at("tensors")) {
        std::string name = entry.at("name").get<std::string>();
        std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(real)));
        if (!in) throw IoError("truncated tensor data in checkpoint: " + name);
        ck.tensors.emplace(std::move(name), std::move(t));
    }
    return ck;
}

uint64_t params_checksum(const ParamMap& params) {
    uint64_t h = 1469598103934665603ull;
    for (const auto& [name, tensor] : params) {
        h = fnv1a(name.data(), name.size(), h);
        h = fnv1a(tensor.data(), tensor.size() * sizeof(real), h);
    }
    return h;
}

}  // namespace affedit::core
