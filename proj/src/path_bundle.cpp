#include "svdecomp/path_bundle.hpp"

#include <array>
#include <bit>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace svdecomp {

namespace {

constexpr std::array<char, 5> kMagic{'S', 'V', 'D', 'P', '1'};

static_assert(std::endian::native == std::endian::little,
              "path dump writer assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("path dump: truncated header");
    return value;
}

void put_array(std::ostream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void get_array(std::istream& in, std::vector<double>& v) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in) throw std::runtime_error("path dump: truncated payload");
}

}  // namespace

PathBundle::PathBundle(std::size_t n_paths, std::size_t n_steps, double horizon, std::uint64_t seed)
    : n_paths_(n_paths),
      n_steps_(n_steps),
      horizon_(horizon),
      seed_(seed),
      S_(n_paths * (n_steps + 1)),
      sigma_sq_(n_paths * (n_steps + 1)),
      dW_(n_paths * n_steps),
      dB_(n_paths * n_steps) {}

PathView PathBundle::path(std::size_t p) const {
    const std::size_t nodes = n_steps_ + 1;
    return {std::span<const double>(S_).subspan(p * nodes, nodes),
            std::span<const double>(sigma_sq_).subspan(p * nodes, nodes),
            std::span<const double>(dW_).subspan(p * n_steps_, n_steps_),
            std::span<const double>(dB_).subspan(p * n_steps_, n_steps_), dt()};
}

PathSpan PathBundle::mutable_path(std::size_t p) {
    const std::size_t nodes = n_steps_ + 1;
    return {std::span<double>(S_).subspan(p * nodes, nodes),
            std::span<double>(sigma_sq_).subspan(p * nodes, nodes),
            std::span<double>(dW_).subspan(p * n_steps_, n_steps_),
            std::span<double>(dB_).subspan(p * n_steps_, n_steps_)};
}

void write_path_bundle(std::ostream& out, const PathBundle& b) {
    out.write(kMagic.data(), kMagic.size());
    put<std::uint64_t>(out, b.n_paths());
    put<std::uint64_t>(out, b.n_steps());
    put<std::uint64_t>(out, b.seed());
    put<double>(out, b.horizon());
    put_array(out, b.S());
    put_array(out, b.sigma_sq());
    put_array(out, b.dW());
    put_array(out, b.dB());
    if (!out) throw std::runtime_error("path dump: write failed");
}

PathBundle read_path_bundle(std::istream& in) {
    std::array<char, 5> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw std::runtime_error("path dump: bad magic");
    const auto n_paths = get<std::uint64_t>(in);
    const auto n_steps = get<std::uint64_t>(in);
    const auto seed = get<std::uint64_t>(in);
    const auto horizon = get<double>(in);
    PathBundle b(n_paths, n_steps, horizon, seed);
    get_array(in, b.S_);
    get_array(in, b.sigma_sq_);
    get_array(in, b.dW_);
    get_array(in, b.dB_);
    return b;
}

}  // namespace svdecomp
