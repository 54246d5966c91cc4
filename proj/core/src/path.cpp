#include "ferroservo/path.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ferroservo {

std::string_view to_string(PathKind kind) {
    switch (kind) {
        case PathKind::Line: return "line";
        case PathKind::Square: return "square";
        case PathKind::Circle: return "circle";
        case PathKind::Polyline: return "polyline";
    }
    return "polyline";
}

PathKind path_kind_from_string(std::string_view text) {
    if (text == "line") return PathKind::Line;
    if (text == "square") return PathKind::Square;
    if (text == "circle") return PathKind::Circle;
    if (text == "polyline") return PathKind::Polyline;
    throw std::invalid_argument("unknown path kind: " + std::string(text));
}

double ReferencePath::length() const {
    double total = 0.0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        total += distance(samples[i - 1], samples[i]);
    }
    return total;
}

std::vector<Vec2> resample_polyline(const std::vector<Vec2>& vertices, double spacing_mm) {
    if (!(spacing_mm > 0.0)) {
        throw std::invalid_argument("resample spacing must be positive");
    }
    std::vector<Vec2> out;
    if (vertices.empty()) {
        return out;
    }
    out.push_back(vertices.front());
    for (std::size_t i = 1; i < vertices.size(); ++i) {
        const Vec2 a = out.back();
        const Vec2 b = vertices[i];
        const double len = distance(a, b);
        if (len == 0.0) {
            continue;
        }
        const auto steps = std::max<long>(1, std::lround(len / spacing_mm));
        for (long k = 1; k < steps; ++k) {
            out.push_back(a + (b - a) * (static_cast<double>(k) / static_cast<double>(steps)));
        }
        out.push_back(b);
    }
    return out;
}

namespace {

void check_inside(const std::vector<Vec2>& samples, double radius) {
    for (const Vec2& p : samples) {
        if (norm(p) > radius + 1e-12) {
            throw std::domain_error(
                fmt::format("path point ({:.3f}, {:.3f}) lies outside the {:.3f} mm workspace",
                            p.x, p.y, radius));
        }
    }
}

}  // namespace

ReferencePath make_path(PathKind kind, const PathParams& params, double workspace_radius_mm) {
    ReferencePath path;
    path.kind = kind;
    path.name = std::string(to_string(kind));
    path.params = params;
    const Vec2 c = params.center;
    switch (kind) {
        case PathKind::Line: {
            if (!(params.length_mm > 0.0)) {
                throw std::invalid_argument("line length must be positive");
            }
            const double h = 0.5 * params.length_mm;
            path.samples = resample_polyline({c + Vec2{-h, 0.0}, c + Vec2{h, 0.0}});
            break;
        }
        case PathKind::Square: {
            if (!(params.side_mm > 0.0)) {
                throw std::invalid_argument("square side must be positive");
            }
            const double h = 0.5 * params.side_mm;
            path.samples = resample_polyline({c + Vec2{-h, -h}, c + Vec2{h, -h}, c + Vec2{h, h},
                                              c + Vec2{-h, h}, c + Vec2{-h, -h}});
            break;
        }
        case PathKind::Circle: {
            if (!(params.radius_mm > 0.0)) {
                throw std::invalid_argument("circle radius must be positive");
            }
            const double r = params.radius_mm;
            const auto n = std::max<long>(8, std::lround(2.0 * kPi * r / kPathSpacingMm));
            path.samples.reserve(static_cast<std::size_t>(n) + 1);
            for (long i = 0; i < n; ++i) {
                const double th = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
                path.samples.push_back(c + Vec2{r * std::cos(th), r * std::sin(th)});
            }
            path.samples.push_back(path.samples.front());
            break;
        }
        case PathKind::Polyline: {
            if (params.vertices.size() < 2) {
                throw std::invalid_argument("polyline needs at least two vertices");
            }
            path.samples = resample_polyline(params.vertices);
            if (path.samples.size() < 2) {
                throw std::invalid_argument("polyline has zero length");
            }
            break;
        }
    }
    check_inside(path.samples, workspace_radius_mm);
    return path;
}

std::vector<ReferencePath> aalto_letters() {
    auto letter = [](std::string name, std::vector<Vec2> vertices) {
        PathParams p;
        p.vertices = std::move(vertices);
        ReferencePath path = make_path(PathKind::Polyline, p);
        path.name = std::move(name);
        return path;
    };
    const std::vector<Vec2> a{{-1.2, -2.0}, {0.0, 2.0}, {1.2, -2.0}, {0.6, 0.0}, {-0.6, 0.0}};
    // The O is an ellipse sampled at equal arc length, so each vertex is
    // one path step apart. It starts at the top and runs counter-clockwise.
    constexpr int kDense = 7200;
    std::vector<Vec2> dense;
    std::vector<double> arc{0.0};
    for (int i = 0; i <= kDense; ++i) {
        const double th = kPi / 2.0 + 2.0 * kPi * i / kDense;
        dense.push_back({1.2 * std::cos(th), 2.0 * std::sin(th)});
        if (i > 0) arc.push_back(arc.back() + distance(dense[i - 1], dense[i]));
    }
    const auto steps = static_cast<int>(std::lround(arc.back() / kPathSpacingMm));
    std::vector<Vec2> o;
    std::size_t j = 1;
    for (int k = 0; k < steps; ++k) {
        const double s = arc.back() * k / steps;
        while (arc[j] < s) ++j;
        const double f = (s - arc[j - 1]) / (arc[j] - arc[j - 1]);
        o.push_back(dense[j - 1] + (dense[j] - dense[j - 1]) * f);
    }
    o.push_back(o.front());
    return {
        letter("A1", a),
        letter("A2", a),
        letter("L", {{-1.0, 2.0}, {-1.0, -2.0}, {1.2, -2.0}}),
        letter("T", {{-1.2, 2.0}, {1.2, 2.0}, {0.0, 2.0}, {0.0, -2.0}}),
        letter("O", o),
    };
}

std::string path_to_json(const ReferencePath& path) {
    std::string out = fmt::format("{{\n  \"name\": \"{}\",\n  \"kind\": \"{}\",\n"
                                  "  \"spacing_mm\": {:.2f},\n  \"points\": [\n",
                                  path.name, to_string(path.kind), kPathSpacingMm);
    for (std::size_t i = 0; i < path.samples.size(); ++i) {
        // Normalise -0.000000 to 0.000000 so output is stable across platforms.
        auto fix = [](double v) { return std::abs(v) < 5e-7 ? 0.0 : v; };
        out += fmt::format("    [{:.6f}, {:.6f}]{}\n", fix(path.samples[i].x), fix(path.samples[i].y),
                           i + 1 < path.samples.size() ? "," : "");
    }
    out += "  ]\n}\n";
    return out;
}

ReferencePath path_from_json(std::string_view text, double workspace_radius_mm) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("path JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("points") || !doc["points"].is_array()) {
        throw std::invalid_argument("path JSON needs a \"points\" array");
    }
    PathParams params;
    for (const auto& pt : doc["points"]) {
        if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
            throw std::invalid_argument("path points must be [x, y] number pairs");
        }
        const Vec2 v{pt[0].get<double>(), pt[1].get<double>()};
        if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
            throw std::invalid_argument("path points must be finite");
        }
        params.vertices.push_back(v);
    }
    ReferencePath path = make_path(PathKind::Polyline, params, workspace_radius_mm);
    if (doc.contains("kind") && doc["kind"].is_string()) {
        path.kind = path_kind_from_string(doc["kind"].get<std::string>());
    }
    path.name = doc.value("name", std::string(to_string(path.kind)));
    return path;
}

ReferencePath load_path(const std::filesystem::path& file, double workspace_radius_mm) {
    std::ifstream is(file);
    if (!is) {
        throw std::invalid_argument("cannot open path file " + file.string());
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return path_from_json(ss.str(), workspace_radius_mm);
}

void save_path(const ReferencePath& path, const std::filesystem::path& file) {
    std::ofstream os(file, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot write " + file.string());
    }
    os << path_to_json(path);
}

ReferencePath resolve_path(std::string_view name_or_file, double workspace_radius_mm) {
    if (name_or_file == "line" || name_or_file == "square" || name_or_file == "circle") {
        return make_path(path_kind_from_string(name_or_file), {}, workspace_radius_mm);
    }
    return load_path(std::filesystem::path(std::string(name_or_file)), workspace_radius_mm);
}

}  // namespace ferroservo
