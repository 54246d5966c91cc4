#include "ferroservo/vision.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ferroservo {

namespace {

__extension__ typedef unsigned __int128 u128;

// a * b as a 192-bit value split into bits [64, 192) and [0, 64).
struct Wide {
    u128 top;
    std::uint64_t bottom;
};

Wide mul_wide(u128 a, std::uint64_t b) {
    const auto a_lo = static_cast<std::uint64_t>(a);
    const auto a_hi = static_cast<std::uint64_t>(a >> 64);
    const u128 p0 = static_cast<u128>(a_lo) * b;
    const u128 p1 = static_cast<u128>(a_hi) * b;
    return {p1 + (p0 >> 64), static_cast<std::uint64_t>(p0)};
}

bool wide_less(const Wide& x, const Wide& y) {
    return x.top < y.top || (x.top == y.top && x.bottom < y.bottom);
}

}  // namespace

Vec2 CameraModel::to_pixel(const Vec2& mm) const {
    return {(mm.x - origin.x) / scale_mm_per_px, (origin.y - mm.y) / scale_mm_per_px};
}

Vec2 CameraModel::to_workspace(const Vec2& px) const {
    return {origin.x + px.x * scale_mm_per_px, origin.y - px.y * scale_mm_per_px};
}

bool CameraModel::in_view(const Vec2& mm) const {
    const Vec2 px = to_pixel(mm);
    return px.x >= 0.0 && px.y >= 0.0 && px.x < width && px.y < height;
}

void CameraModel::validate() const {
    if (width < 64 || height < 64) {
        throw std::invalid_argument("camera resolution must be at least 64x64");
    }
    if (!(scale_mm_per_px > 0.0)) {
        throw std::invalid_argument("camera scale must be positive");
    }
    if (!(noise_sigma >= 0.0)) {
        throw std::invalid_argument("camera noise sigma must be non-negative");
    }
}

CameraModel default_camera(double noise_sigma) {
    CameraModel cam;
    cam.noise_sigma = noise_sigma;
    return cam;
}

GrayFrame render_frame(const ParticleState& state, const CameraModel& cam, std::mt19937_64& rng) {
    cam.validate();
    GrayFrame frame{cam.width, cam.height,
                    std::vector<std::uint8_t>(static_cast<std::size_t>(cam.width) *
                                              static_cast<std::size_t>(cam.height))};
    std::vector<double> level(frame.pixels.size(), kBackgroundGray);

    if (cam.in_view(state.position)) {
        const Vec2 c = cam.to_pixel(state.position);
        const double r = 0.5 * state.diameter_mm / cam.scale_mm_per_px;
        const int x0 = std::max(0, static_cast<int>(std::floor(c.x - r)));
        const int x1 = std::min(cam.width - 1, static_cast<int>(std::floor(c.x + r)));
        const int y0 = std::max(0, static_cast<int>(std::floor(c.y - r)));
        const int y1 = std::min(cam.height - 1, static_cast<int>(std::floor(c.y + r)));
        constexpr int kSub = 4;
        const double r2 = r * r;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                int inside = 0;
                for (int sy = 0; sy < kSub; ++sy) {
                    for (int sx = 0; sx < kSub; ++sx) {
                        const double dx = x + (sx + 0.5) / kSub - c.x;
                        const double dy = y + (sy + 0.5) / kSub - c.y;
                        inside += (dx * dx + dy * dy <= r2) ? 1 : 0;
                    }
                }
                const double cover = static_cast<double>(inside) / (kSub * kSub);
                level[static_cast<std::size_t>(y) * static_cast<std::size_t>(cam.width) +
                      static_cast<std::size_t>(x)] =
                    kBackgroundGray + cover * (static_cast<double>(kParticleGray) - kBackgroundGray);
            }
        }
    }

    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < level.size(); ++i) {
        double v = level[i];
        if (cam.noise_sigma > 0.0) {
            v += cam.noise_sigma * noise(rng);
        }
        frame.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
    return frame;
}

Histogram histogram(const GrayFrame& frame) {
    Histogram h{};
    for (const std::uint8_t v : frame.pixels) {
        ++h[v];
    }
    return h;
}

int otsu_threshold(const Histogram& hist) {
    std::uint64_t total = 0;
    std::uint64_t weighted = 0;
    int populated = 0;
    int only = 0;
    for (int v = 0; v < 256; ++v) {
        total += hist[v];
        weighted += hist[v] * static_cast<std::uint64_t>(v);
        if (hist[v] > 0) {
            ++populated;
            only = v;
        }
    }
    if (total == 0) {
        throw std::invalid_argument("otsu threshold of an empty histogram");
    }
    if (total > (std::uint64_t{1} << 26)) {
        throw std::invalid_argument("histogram too large for exact otsu arithmetic");
    }
    if (populated == 1) {
        return only;
    }

    // sigma_B^2(k) = (n0*S - N*s0)^2 / (N^2 n0 n1); compare D^2/(n0 n1) exactly.
    int best_k = -1;
    u128 best_num = 0;
    std::uint64_t best_den = 1;
    std::uint64_t n0 = 0;
    std::uint64_t s0 = 0;
    for (int k = 0; k < 255; ++k) {
        n0 += hist[k];
        s0 += hist[k] * static_cast<std::uint64_t>(k);
        const std::uint64_t n1 = total - n0;
        if (n0 == 0 || n1 == 0) {
            continue;
        }
        const std::uint64_t a = n0 * weighted;
        const std::uint64_t b = total * s0;
        const std::uint64_t d = a > b ? a - b : b - a;
        const u128 num = static_cast<u128>(d) * d;
        const std::uint64_t den = n0 * n1;
        if (best_k < 0 || wide_less(mul_wide(best_num, den), mul_wide(num, best_den))) {
            best_k = k;
            best_num = num;
            best_den = den;
        }
    }
    return best_k;
}

std::optional<Vec2> blob_centroid(const GrayFrame& frame, int k, const CameraModel& cam,
                                  const BlobOptions& opts) {
    const int w = frame.width;
    const int h = frame.height;
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (frame.pixels.size() != n || n == 0) {
        return std::nullopt;
    }
    std::vector<std::uint8_t> seen(n, 0);
    std::vector<std::size_t> stack;
    std::size_t best_area = 0;
    double best_sx = 0.0;
    double best_sy = 0.0;

    for (std::size_t start = 0; start < n; ++start) {
        if (seen[start] || frame.pixels[start] > k) {
            continue;
        }
        std::size_t area = 0;
        double sx = 0.0;
        double sy = 0.0;
        seen[start] = 1;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            const int x = static_cast<int>(i % static_cast<std::size_t>(w));
            const int y = static_cast<int>(i / static_cast<std::size_t>(w));
            ++area;
            sx += x + 0.5;
            sy += y + 0.5;
            auto visit = [&](int nx, int ny) {
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
                    return;
                }
                const std::size_t j = static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) +
                                      static_cast<std::size_t>(nx);
                if (!seen[j] && frame.pixels[j] <= k) {
                    seen[j] = 1;
                    stack.push_back(j);
                }
            };
            visit(x - 1, y);
            visit(x + 1, y);
            visit(x, y - 1);
            visit(x, y + 1);
        }
        if (area > best_area) {
            best_area = area;
            best_sx = sx;
            best_sy = sy;
        }
    }

    if (best_area < static_cast<std::size_t>(std::max(opts.min_area_px, 1)) ||
        static_cast<double>(best_area) > opts.max_area_fraction * static_cast<double>(n)) {
        return std::nullopt;
    }
    const double area = static_cast<double>(best_area);
    return cam.to_workspace({best_sx / area, best_sy / area});
}

std::optional<Vec2> detect_particle(const GrayFrame& frame, const CameraModel& cam,
                                    const DetectorOptions& opts) {
    const Histogram hist = histogram(frame);
    const int k = otsu_threshold(hist);
    double n0 = 0.0;
    double s0 = 0.0;
    double n1 = 0.0;
    double s1 = 0.0;
    for (int v = 0; v < 256; ++v) {
        const auto c = static_cast<double>(hist[v]);
        if (v <= k) {
            n0 += c;
            s0 += c * v;
        } else {
            n1 += c;
            s1 += c * v;
        }
    }
    if (n0 == 0.0 || n1 == 0.0 || s1 / n1 - s0 / n0 < opts.min_contrast) {
        return std::nullopt;
    }
    return blob_centroid(frame, k, cam, opts.blob);
}

std::string to_pgm(const GrayFrame& frame) {
    std::string out = "P5\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) +
                      "\n255\n";
    out.append(frame.pixels.begin(), frame.pixels.end());
    return out;
}

void write_pgm(const GrayFrame& frame, const std::filesystem::path& file) {
    std::ofstream os(file, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot open " + file.string());
    }
    const std::string data = to_pgm(frame);
    os.write(data.data(), static_cast<std::streamsize>(data.size()));
}

}  // namespace ferroservo
