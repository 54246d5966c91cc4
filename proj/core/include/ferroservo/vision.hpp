#pragma once

#include "ferroservo/plant.hpp"
#include "ferroservo/vec2.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ferroservo {

/// Pinhole-free top-down camera. Pixel (0,0) is the upper-left corner of the
/// frame; image x grows with workspace x, image y grows with workspace -y.
/// Pixel centres sit at integer + 0.5.
struct CameraModel {
    int width{320};
    int height{320};
    double scale_mm_per_px{0.032};
    Vec2 origin{-5.12, 5.12};  // workspace point of the frame's upper-left corner
    double noise_sigma{0.0};   // gray levels

    /// Continuous pixel coordinates of a workspace point.
    Vec2 to_pixel(const Vec2& mm) const;
    Vec2 to_workspace(const Vec2& px) const;
    bool in_view(const Vec2& mm) const;
    void validate() const;
};

/// 320x320 frame centred on the workspace, covering the full tip circle.
CameraModel default_camera(double noise_sigma = 0.0);

struct GrayFrame {
    int width{0};
    int height{0};
    std::vector<std::uint8_t> pixels;  // row-major

    std::uint8_t at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
};

inline constexpr std::uint8_t kBackgroundGray = 200;
inline constexpr std::uint8_t kParticleGray = 60;

/// Background 200 with a gray-60 disk of the particle's diameter, edge
/// anti-aliased by 4x4 supersampling, plus clamped Gaussian noise. A particle
/// outside the view leaves the frame blank. `rng` is only drawn from when
/// noise_sigma > 0.
GrayFrame render_frame(const ParticleState& state, const CameraModel& cam, std::mt19937_64& rng);

using Histogram = std::array<std::uint64_t, 256>;

Histogram histogram(const GrayFrame& frame);

/// Otsu threshold: the smallest k maximising the between-class variance of
/// {v <= k} versus {v > k}. Comparisons are exact in integer arithmetic.
/// A single-valued histogram returns that value. Throws std::invalid_argument
/// for an empty histogram or more than 2^26 samples.
int otsu_threshold(const Histogram& hist);

struct BlobOptions {
    int min_area_px{9};
    double max_area_fraction{0.25};  // larger components are treated as background
};

/// Pixels <= k form the foreground. Returns the unweighted centroid of the
/// largest 4-connected component in workspace mm, or nothing when that
/// component is smaller than min_area_px or larger than the area cap.
std::optional<Vec2> blob_centroid(const GrayFrame& frame, int k, const CameraModel& cam,
                                  const BlobOptions& opts = {});

struct DetectorOptions {
    BlobOptions blob{};
    double min_contrast{40.0};  // required gap between Otsu class means, gray levels
};

/// Otsu threshold plus blob centroid. Reports absence when the two Otsu
/// classes are closer than min_contrast, i.e. the frame holds only noise.
std::optional<Vec2> detect_particle(const GrayFrame& frame, const CameraModel& cam,
                                    const DetectorOptions& opts = {});

/// Binary PGM (P5) encoding.
std::string to_pgm(const GrayFrame& frame);
void write_pgm(const GrayFrame& frame, const std::filesystem::path& file);

}  // namespace ferroservo
