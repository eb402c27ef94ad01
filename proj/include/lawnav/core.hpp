#ifndef LAWNAV_CORE_HPP
#define LAWNAV_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace lawnav
{

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kStepSize = 0.25;                // meters per Forward
inline constexpr double kTurnAngle = 15.0 * kPi / 180.0; // radians per Left/Right
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline double deg2rad(double deg) noexcept { return deg * kPi / 180.0; }

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) noexcept
{
    double w = std::fmod(a + kPi, 2.0 * kPi);
    if (w < 0.0) w += 2.0 * kPi;
    w -= kPi;
    // fmod can land exactly on +pi after the shift for inputs just below -pi
    if (w >= kPi) w -= 2.0 * kPi;
    return w;
}

struct Point
{
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) noexcept { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) noexcept { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(Point a, double s) noexcept { return {a.x * s, a.y * s}; }
inline Point operator*(double s, Point a) noexcept { return {a.x * s, a.y * s}; }

inline double norm(Point a) noexcept { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

struct Pose
{
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0; // radians, [-pi, pi), counter-clockwise from +x

    Point position() const noexcept { return {x, y}; }
    friend bool operator==(const Pose&, const Pose&) = default;
};

enum class ActionType : std::uint8_t
{
    Forward = 0,
    Left = 1,
    Right = 2,
    Stop = 3,
};

inline constexpr int kNumActions = 4;

inline constexpr int action_index(ActionType a) noexcept { return static_cast<int>(a); }
inline constexpr ActionType action_from_index(int i) noexcept { return static_cast<ActionType>(i); }

inline std::string_view action_name(ActionType a) noexcept
{
    switch (a) {
    case ActionType::Forward: return "FORWARD";
    case ActionType::Left: return "LEFT";
    case ActionType::Right: return "RIGHT";
    case ActionType::Stop: return "STOP";
    }
    return "?";
}

// errors ---------------------------------------------------------------------

class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// No free path connects the requested points.
class DisconnectedError : public Error
{
  public:
    using Error::Error;
};

class InvalidArgument : public Error
{
  public:
    using Error::Error;
};

/// Malformed file content; carries the 1-based line number when known.
class FormatError : public Error
{
  public:
    FormatError(std::string file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), file_(std::move(file)), line_(line)
    {
    }
    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

  private:
    std::string file_;
    std::size_t line_;
};

class ConfigError : public Error
{
  public:
    using Error::Error;
};

// seeding --------------------------------------------------------------------

/// splitmix64 finalizer; used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) noexcept
{
    return mix_seed(mix_seed(mix_seed(mix_seed(seed) ^ a) ^ b) ^ c);
}

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits; stable across standard libraries.
inline double uniform01(Rng& rng) noexcept
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) noexcept
{
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [lo, hi] (inclusive).
inline int uniform_int(Rng& rng, int lo, int hi) noexcept
{
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(rng() % span);
}

// parallelism ----------------------------------------------------------------

/// Worker count: LAWSIM_THREADS if set and positive, else hardware concurrency.
inline unsigned thread_count()
{
    if (const char* env = std::getenv("LAWSIM_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n). Work is split into contiguous blocks so callers that
/// write results by index stay deterministic regardless of thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn)
{
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t block = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                const std::size_t lo = w * block;
                const std::size_t hi = std::min(n, lo + block);
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace lawnav

#endif // LAWNAV_CORE_HPP
