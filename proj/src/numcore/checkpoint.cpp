#include "ndd/numcore/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "ndd/error.hpp"

namespace ndd::numcore {

namespace {

constexpr std::array<char, 8> kMagic{'N', 'D', 'D', 'N', 'E', 'T', '0', '1'};

template <typename T>
void put(std::ostream& out, T value) {
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    std::array<char, sizeof(T)> bytes;
    if (!in.read(bytes.data(), sizeof(T))) throw DataError("checkpoint: truncated file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const DenseNet& net) {
    out.write(kMagic.data(), kMagic.size());
    put<std::uint64_t>(out, net.seed());
    const auto& sizes = net.layer_sizes();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(sizes.size() - 1));
    put<std::uint32_t>(out, 0);
    for (auto s : sizes) put<std::uint64_t>(out, s);
    std::size_t written = 0;
    for (const auto& l : net.layers()) {
        put<std::uint8_t>(out, static_cast<std::uint8_t>(l.activation));
        ++written;
    }
    while (written % 8 != 0) {
        put<std::uint8_t>(out, 0);
        ++written;
    }
    for (double v : net.flat_parameters()) put<double>(out, v);
    if (!out) throw DataError("checkpoint: write failed");
}

DenseNet read_checkpoint(std::istream& in) {
    std::array<char, 8> magic;
    if (!in.read(magic.data(), magic.size()) || magic != kMagic)
        throw DataError("checkpoint: bad magic");
    const auto seed = get<std::uint64_t>(in);
    const auto layers = get<std::uint32_t>(in);
    (void)get<std::uint32_t>(in);
    if (layers == 0 || layers > 1024) throw DataError("checkpoint: implausible layer count");
    std::vector<std::size_t> sizes(layers + 1);
    for (auto& s : sizes) s = static_cast<std::size_t>(get<std::uint64_t>(in));
    std::vector<Activation> acts(layers);
    std::size_t read = 0;
    for (auto& a : acts) {
        const auto code = get<std::uint8_t>(in);
        if (code > static_cast<std::uint8_t>(Activation::softplus))
            throw DataError("checkpoint: unknown activation code");
        a = static_cast<Activation>(code);
        ++read;
    }
    while (read % 8 != 0) {
        (void)get<std::uint8_t>(in);
        ++read;
    }
    RandomSource rng(seed);
    DenseNet net(sizes, acts, rng);
    std::vector<double> params(net.parameter_count());
    for (auto& p : params) p = get<double>(in);
    net.set_flat_parameters(params);
    return net;
}

void save_checkpoint(const std::filesystem::path& path, const DenseNet& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot open " + path.string());
    write_checkpoint(out, net);
}

DenseNet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot open " + path.string());
    return read_checkpoint(in);
}

}  // namespace ndd::numcore
