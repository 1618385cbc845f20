#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace daeops::util {

using Vec = std::vector<double>;

/// Deterministic, portable PRNG (xoshiro256++ seeded via splitmix64).
/// Used everywhere randomness matters so runs reproduce bit-exactly
/// independent of the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53 bits of mantissa.
    double uniform01();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller (consumes two uniforms per pair).
    double normal();

    /// Derive an independent stream (for per-trajectory seeding).
    Rng split();

private:
    std::uint64_t state_[4];
    bool have_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

/// Chunked parallel map over [0, n). nthreads <= 1 runs inline.
/// Work items must be independent; result ordering is by index, so the
/// caller's reduction order does not depend on thread scheduling.
void parallel_for(std::size_t n, std::size_t nthreads,
                  const std::function<void(std::size_t)>& body);

/// Format a double with 17 significant digits (round-trip exact for f64).
std::string format_f64(double v);

/// FNV-1a over a string; used for checkpoint/config compatibility stamps.
std::uint64_t fnv1a(const std::string& s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace daeops::util
