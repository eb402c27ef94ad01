#ifndef LAWNAV_DTW_HPP
#define LAWNAV_DTW_HPP

#include "core.hpp"

#include <span>
#include <vector>

namespace lawnav
{

/// Success radius used for SR/OS and as the nDTW normalizer (meters).
inline constexpr double kSuccessDistance = 3.0;

struct EuclideanMetric
{
    double operator()(Point a, Point b) const noexcept { return distance(a, b); }
};

/// Dynamic time warping cost between two point sequences:
/// D[i][j] = dist(p_i, r_j) + min(D[i-1][j], D[i][j-1], D[i-1][j-1]).
template <typename Metric = EuclideanMetric>
double dtw_cost(std::span<const Point> query, std::span<const Point> reference, Metric dist = {})
{
    if (query.empty() || reference.empty()) throw InvalidArgument("dtw_cost needs non-empty sequences");
    const std::size_t m = reference.size();
    std::vector<double> prev(m + 1, kInfinity), cur(m + 1, kInfinity);
    prev[0] = 0.0;
    for (const Point& p : query) {
        cur[0] = kInfinity;
        for (std::size_t j = 1; j <= m; ++j) {
            const double best = std::min({prev[j], cur[j - 1], prev[j - 1]});
            cur[j] = dist(p, reference[j - 1]) + best;
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

/// exp(-DTW / (|reference| * threshold)), in (0, 1].
inline double ndtw(std::span<const Point> query, std::span<const Point> reference,
                   double threshold = kSuccessDistance)
{
    if (!(threshold > 0.0)) throw InvalidArgument("ndtw threshold must be positive");
    return std::exp(-dtw_cost(query, reference) / (static_cast<double>(reference.size()) * threshold));
}

} // namespace lawnav

#endif // LAWNAV_DTW_HPP
