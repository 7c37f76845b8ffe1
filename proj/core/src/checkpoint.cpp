#include "tthjb/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace tthjb {

namespace {

constexpr std::array<char, 4> kMagic{'T', 'T', 'C', 'K'};

template <class U>
void put_le(std::ostream& os, U value) {
    std::array<unsigned char, sizeof(U)> buf{};
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(value >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf.data()), buf.size());
}

template <class U>
U get_le(std::istream& is) {
    std::array<unsigned char, sizeof(U)> buf{};
    if (!is.read(reinterpret_cast<char*>(buf.data()), buf.size())) throw std::runtime_error("checkpoint truncated");
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(buf[i]) << (8 * i);
    return value;
}

void put_f64(std::ostream& os, double x) { put_le(os, std::bit_cast<std::uint64_t>(x)); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }

std::uint32_t to_u32(std::size_t v) {
    if (v > 0xffffffffu) throw ShapeError("value does not fit the checkpoint format");
    return static_cast<std::uint32_t>(v);
}

} // namespace

void write_checkpoint(std::ostream& os, const TensorTrain& a, double t) {
    os.write(kMagic.data(), kMagic.size());
    put_le(os, kCheckpointVersion);
    put_le(os, to_u32(a.dims()));
    for (std::size_t n : a.mode_sizes()) put_le(os, to_u32(n));
    for (std::size_t r : a.ranks()) put_le(os, to_u32(r));
    for (const Core& c : a.cores())
        for (double x : c.data) put_f64(os, x);
    put_f64(os, t);
    if (!os) throw std::runtime_error("failed writing checkpoint");
}

void write_checkpoint(const std::filesystem::path& path, const TensorTrain& a, double t) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_checkpoint(os, a, t);
}

Checkpoint read_checkpoint(std::istream& is) {
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw std::runtime_error("not a TTCK checkpoint");
    const auto version = get_le<std::uint32_t>(is);
    if (version != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    const auto d = get_le<std::uint32_t>(is);
    if (d == 0 || d > 4096) throw std::runtime_error("checkpoint has implausible dimension count");
    std::vector<std::size_t> modes(d), ranks(d + 1);
    for (auto& n : modes) n = get_le<std::uint32_t>(is);
    for (auto& r : ranks) r = get_le<std::uint32_t>(is);
    std::vector<Core> cores;
    cores.reserve(d);
    for (std::uint32_t i = 0; i < d; ++i) {
        Core c(ranks[i], modes[i], ranks[i + 1]);
        for (double& x : c.data) x = get_f64(is);
        cores.push_back(std::move(c));
    }
    Checkpoint out{TensorTrain(std::move(cores)), get_f64(is)};
    return out;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_checkpoint(is);
}

} // namespace tthjb
