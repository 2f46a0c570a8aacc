#pragma once

#include <cstdint>
#include <random>

namespace slicesim::sim {

/// Named random streams. Each consumer owns its own stream so changing one
/// does not perturb the draw sequences of the others.
enum class Stream : std::uint64_t {
    Workload = 1,
    Exploration = 2,
    WeightInit = 3,
    ReplaySampling = 4,
    Baseline = 5,
    Evaluation = 6,
    Test = 99,
};

/// Deterministic RNG: identical (seed, stream, salt) always produce the
/// identical draw sequence. Distribution transforms are implemented here
/// rather than with std:: distributions, which are not pinned across
/// standard libraries.
class SeededRng {
public:
    SeededRng(std::uint64_t seed, Stream stream, std::uint64_t salt = 0);
    SeededRng(std::uint64_t seed, std::uint64_t raw_stream);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    std::uint64_t next_u64();

    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    /// Uniform index in [0, n). n must be > 0.
    std::size_t uniform_index(std::size_t n);
    /// Exponential with the given rate (mean 1/rate).
    double exponential(double rate);
    /// Box-Muller normal draw.
    double normal(double mean, double stddev);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

/// splitmix64 mix step, also used to derive per-stream seeds and to digest
/// values into trace fingerprints.
std::uint64_t mix64(std::uint64_t x);

} // namespace slicesim::sim
