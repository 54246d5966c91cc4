#pragma once

#include "ferroservo/vec2.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ferroservo {

enum class PathKind { Line, Square, Circle, Polyline };

std::string_view to_string(PathKind kind);
PathKind path_kind_from_string(std::string_view text);

inline constexpr double kPathSpacingMm = 0.05;

struct PathParams {
    double length_mm{4.0};   // Line
    double side_mm{3.0};     // Square
    double radius_mm{1.5};   // Circle
    Vec2 center{};
    std::vector<Vec2> vertices;  // Polyline
};

struct ReferencePath {
    PathKind kind{PathKind::Polyline};
    std::string name;
    PathParams params;
    std::vector<Vec2> samples;

    bool closed() const { return kind == PathKind::Square || kind == PathKind::Circle; }
    double length() const;
};

/// Resamples each segment of `vertices` into round(L / spacing) equal steps,
/// so every vertex survives as a sample. Zero-length segments are dropped.
std::vector<Vec2> resample_polyline(const std::vector<Vec2>& vertices,
                                    double spacing_mm = kPathSpacingMm);

/// Line runs along +x through the centre; the square starts at its lower-left
/// corner and runs counter-clockwise; the circle starts at angle 0 and runs
/// counter-clockwise. Throws std::domain_error when any sample leaves the
/// disk of `workspace_radius_mm`, std::invalid_argument on bad dimensions.
ReferencePath make_path(PathKind kind, const PathParams& params = {},
                        double workspace_radius_mm = 4.0);

/// Polyline letters A, A, L, T, O, each about 4 mm tall and centred.
std::vector<ReferencePath> aalto_letters();

/// {"name", "kind", "spacing_mm", "points": [[x, y], ...]} with six decimals.
std::string path_to_json(const ReferencePath& path);
/// Accepts the same document; `points` are taken as polyline vertices and
/// resampled. Throws std::invalid_argument on malformed input.
ReferencePath path_from_json(std::string_view text, double workspace_radius_mm = 4.0);
ReferencePath load_path(const std::filesystem::path& file, double workspace_radius_mm = 4.0);
void save_path(const ReferencePath& path, const std::filesystem::path& file);

/// Built-in name ("line", "square", "circle") or a path file.
ReferencePath resolve_path(std::string_view name_or_file, double workspace_radius_mm = 4.0);

}  // namespace ferroservo
