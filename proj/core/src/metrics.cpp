#include "ferroservo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ferroservo {

double distance_to_polyline(const Vec2& p, std::span<const Vec2> poly) {
    if (poly.empty()) {
        throw std::invalid_argument("distance to an empty polyline");
    }
    if (poly.size() == 1) {
        return distance(p, poly.front());
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < poly.size(); ++i) {
        const Vec2 a = poly[i - 1];
        const Vec2 ab = poly[i] - a;
        const double len2 = norm_sq(ab);
        const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
        best = std::min(best, distance(p, a + ab * t));
    }
    return best;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    s.count = values.size();
    if (values.empty()) {
        return s;
    }
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
        s.max = std::max(s.max, v);
    }
    s.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (const double v : values) {
        sq += (v - s.mean) * (v - s.mean);
    }
    s.std = std::sqrt(sq / static_cast<double>(values.size()));
    return s;
}

std::vector<double> error_series(std::span<const Vec2> positions, std::span<const Vec2> poly) {
    std::vector<double> out;
    out.reserve(positions.size());
    for (const Vec2& p : positions) {
        out.push_back(distance_to_polyline(p, poly));
    }
    return out;
}

std::vector<double> speed_series(std::span<const Vec2> positions, double dt_s) {
    if (!(dt_s > 0.0)) {
        throw std::invalid_argument("speed series needs dt > 0");
    }
    std::vector<double> out;
    for (std::size_t i = 1; i < positions.size(); ++i) {
        out.push_back(distance(positions[i - 1], positions[i]) / dt_s);
    }
    return out;
}

}  // namespace ferroservo
