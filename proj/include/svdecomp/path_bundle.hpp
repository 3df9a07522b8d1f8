#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace svdecomp {

/// Read-only view of one simulated path on a uniform grid t_i = i*dt.
/// S and sigma_sq have n_steps+1 entries; dW and dB have n_steps.
struct PathView {
    std::span<const double> S;
    std::span<const double> sigma_sq;
    std::span<const double> dW;
    std::span<const double> dB;
    double dt = 0.0;

    std::size_t n_steps() const { return dW.size(); }
};

/// Writable storage for one path, used by the simulator.
struct PathSpan {
    std::span<double> S;
    std::span<double> sigma_sq;
    std::span<double> dW;
    std::span<double> dB;

    PathView view(double dt) const { return {S, sigma_sq, dW, dB, dt}; }
};

/// Scratch buffers holding a single path.
class PathBuffer {
public:
    explicit PathBuffer(std::size_t n_steps)
        : S_(n_steps + 1), sigma_sq_(n_steps + 1), dW_(n_steps), dB_(n_steps) {}

    PathSpan span() { return {S_, sigma_sq_, dW_, dB_}; }
    PathView view(double dt) const { return {S_, sigma_sq_, dW_, dB_, dt}; }

private:
    std::vector<double> S_, sigma_sq_, dW_, dB_;
};

class PathBundle;
PathBundle read_path_bundle(std::istream& in);

/// Row-major arrays of all simulated paths.
class PathBundle {
public:
    PathBundle() = default;
    PathBundle(std::size_t n_paths, std::size_t n_steps, double horizon, std::uint64_t seed);

    std::size_t n_paths() const { return n_paths_; }
    std::size_t n_steps() const { return n_steps_; }
    double horizon() const { return horizon_; }
    double dt() const { return horizon_ / static_cast<double>(n_steps_); }
    double time(std::size_t i) const { return static_cast<double>(i) * dt(); }
    std::uint64_t seed() const { return seed_; }

    PathView path(std::size_t p) const;
    PathSpan mutable_path(std::size_t p);

    const std::vector<double>& S() const { return S_; }
    const std::vector<double>& sigma_sq() const { return sigma_sq_; }
    const std::vector<double>& dW() const { return dW_; }
    const std::vector<double>& dB() const { return dB_; }

    bool operator==(const PathBundle&) const = default;

private:
    friend PathBundle read_path_bundle(std::istream& in);

    std::size_t n_paths_ = 0;
    std::size_t n_steps_ = 0;
    double horizon_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<double> S_, sigma_sq_, dW_, dB_;
};

/// Binary dump: magic "SVDP1", u64 n_paths, u64 n_steps, u64 seed, f64 horizon,
/// then S, sigma_sq ([n_paths][n_steps+1]) and dW, dB ([n_paths][n_steps]) as
/// little-endian f64, row-major.
void write_path_bundle(std::ostream& out, const PathBundle& bundle);
PathBundle read_path_bundle(std::istream& in);

}  // namespace svdecomp
