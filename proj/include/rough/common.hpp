#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace rough {

// Thrown on precondition / input validation failures. The CLI maps this to
// exit code 1; every other exception maps to exit code 2.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw validation_error(msg); }

// const char* overload keeps the happy path allocation-free.
inline void require(bool cond, const char* msg) {
    if (!cond) throw validation_error(msg);
}
inline void require(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
}

// SplitMix64 step, used to derive independent rng streams from a base seed
// plus arbitrary tags (epoch, sample index, ...). Derived streams are a pure
// function of their inputs, so results never depend on worker count.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base) { return mix64(base); }

template <class... Tags>
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, Tags... rest) {
    return derive_seed(mix64(base ^ mix64(tag)), rest...);
}

template <class... Tags>
std::mt19937_64 make_rng(std::uint64_t base, Tags... tags) {
    return std::mt19937_64(derive_seed(base, static_cast<std::uint64_t>(tags)...));
}

}  // namespace rough
