#include "scalewave/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace scalewave {

namespace {
constexpr char kMagic[4] = {'S', 'W', 'C', 'K'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    check(in.good(), ErrorCode::io_error, "truncated checkpoint");
    return v;
}
}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    nlohmann::json header;
    header["config"] = ckpt.config_json;
    header["rng_state"] = ckpt.rng_state;
    header["metrics_csv"] = ckpt.metrics_csv;
    header["tensors"] = nlohmann::json::array();
    for (const auto& [name, tensor] : ckpt.tensors) {
        header["tensors"].push_back({{"name", name}, {"shape", tensor.shape()}});
    }
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    check(out.good(), ErrorCode::io_error, "cannot write checkpoint " + path);
    out.write(kMagic, 4);
    write_pod(out, ckpt.version);
    const std::uint64_t hlen = header_str.size();
    write_pod(out, hlen);
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const auto& [name, tensor] : ckpt.tensors) {
        out.write(reinterpret_cast<const char*>(tensor.raw()),
                  static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
    }
    check(out.good(), ErrorCode::io_error, "write failure on checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), ErrorCode::io_error, "cannot open checkpoint " + path);
    char magic[4];
    in.read(magic, 4);
    check(in.good() && std::memcmp(magic, kMagic, 4) == 0, ErrorCode::io_error, "bad checkpoint magic");

    Checkpoint ckpt;
    ckpt.version = read_pod<std::uint32_t>(in);
    check(ckpt.version == 1, ErrorCode::io_error, "unsupported checkpoint version " + std::to_string(ckpt.version));
    const std::uint64_t hlen = read_pod<std::uint64_t>(in);
    std::string header_str(hlen, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(hlen));
    check(in.good(), ErrorCode::io_error, "truncated checkpoint header");

    nlohmann::json header = nlohmann::json::parse(header_str);
    ckpt.config_json = header.value("config", "");
    ckpt.rng_state = header.value("rng_state", "");
    ckpt.metrics_csv = header.value("metrics_csv", "");
    for (const auto& entry : header["tensors"]) {
        Shape shape = entry["shape"].get<Shape>();
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.raw()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
        check(in.good(), ErrorCode::io_error, "truncated checkpoint payload");
        ckpt.tensors.emplace_back(entry["name"].get<std::string>(), std::move(t));
    }
    return ckpt;
}

}  // namespace scalewave
