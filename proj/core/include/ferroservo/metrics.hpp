#pragma once

#include "ferroservo/vec2.hpp"

#include <span>
#include <vector>

namespace ferroservo {

/// Distance from `p` to the continuous polyline through `poly`
/// (segment-wise projection). A single vertex degenerates to point distance.
double distance_to_polyline(const Vec2& p, std::span<const Vec2> poly);

struct Summary {
    double mean{0.0};
    double std{0.0};  // population standard deviation
    double max{0.0};
    std::size_t count{0};
};

Summary summarize(std::span<const double> values);

/// Error fields in micrometres, velocity fields in micrometres per second.
struct PathStats {
    double mean_err_um{0.0};
    double std_err_um{0.0};
    double max_err_um{0.0};
    double mean_v_ums{0.0};
    double std_v_ums{0.0};
    double max_v_ums{0.0};
};

/// Per-position polyline distances in mm.
std::vector<double> error_series(std::span<const Vec2> positions, std::span<const Vec2> poly);

/// Speeds |p[k+1] - p[k]| / dt in mm/s; empty for fewer than two positions.
std::vector<double> speed_series(std::span<const Vec2> positions, double dt_s);

}  // namespace ferroservo
