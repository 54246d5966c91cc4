#include "ferroservo/workspace.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ferroservo {
namespace {

constexpr double kDegToRad = kPi / 180.0;

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw std::invalid_argument(message);
    }
}

}  // namespace

std::string_view to_string(SolenoidClass cls) {
    return cls == SolenoidClass::Short ? "short" : "long";
}

SolenoidClass solenoid_class_from_string(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "short") {
        return SolenoidClass::Short;
    }
    if (lower == "long") {
        return SolenoidClass::Long;
    }
    throw std::invalid_argument("unknown solenoid class: " + std::string(text));
}

double FieldFalloff::field_mT(double d_mm) const {
    if (!(d_mm > 0.0)) {
        throw std::domain_error("field distance must be positive");
    }
    return b0_mT * std::pow(d0_mm / d_mm, exponent);
}

void FieldFalloff::validate() const {
    require(b0_mT > 0.0, "falloff b0 must be positive");
    require(d0_mm > 0.0, "falloff d0 must be positive");
    require(exponent > 0.0, "falloff exponent must be positive");
}

double WorkspaceConfig::min_tip_radius() const {
    double r = solenoids.front().tip_radius_mm;
    for (const auto& s : solenoids) {
        r = std::min(r, s.tip_radius_mm);
    }
    return r;
}

bool WorkspaceConfig::contains(const Vec2& p) const {
    return norm(p) <= workspace_radius_mm;
}

void WorkspaceConfig::validate() const {
    for (const auto& s : solenoids) {
        require(s.gain > 0.0, "solenoid gain must be positive");
        require(s.tip_radius_mm > 0.0, "solenoid tip radius must be positive");
        require(std::isfinite(s.angle_rad), "solenoid angle must be finite");
    }
    require(workspace_radius_mm > 0.0, "workspace radius must be positive");
    require(workspace_radius_mm <= min_tip_radius(),
            "workspace radius must not exceed the smallest tip radius");
    require(tick_rate_hz > 0.0, "tick rate must be positive");
    require(current_ref_a > 0.0, "reference current must be positive");
    require(supply.slope_a_per_v > 0.0, "supply map slope must be positive");
    require(supply.max_volts > supply.min_volts, "supply map range is empty");
    require(tip_height_mm >= 0.0, "tip height must be non-negative");
    falloff.validate();
}

SupplyMap default_supply_map() {
    constexpr double v_lo = 2.0;
    constexpr double i_lo = 0.47;
    constexpr double v_hi = 6.0;
    constexpr double i_hi = 1.4;
    SupplyMap map;
    map.slope_a_per_v = (i_hi - i_lo) / (v_hi - v_lo);
    map.offset_a = i_lo - map.slope_a_per_v * v_lo;
    map.min_volts = 0.0;
    map.max_volts = 6.0;
    return map;
}

WorkspaceConfig default_rig() {
    WorkspaceConfig cfg;
    for (std::size_t i = 0; i < kSolenoidCount; ++i) {
        SolenoidSpec& s = cfg.solenoids[i];
        s.index = static_cast<int>(i);
        s.angle_rad = static_cast<double>(i) * (kPi / 4.0);
        s.tip_radius_mm = 5.1;
        s.cls = (i % 2 == 0) ? SolenoidClass::Short : SolenoidClass::Long;
        s.gain = 1.0;
        s.inclination_rad = kPi / 4.0;
    }
    cfg.workspace_radius_mm = 4.0;
    cfg.tick_rate_hz = 30.0;
    cfg.current_ref_a = 1.43;
    cfg.supply = default_supply_map();
    cfg.falloff = FieldFalloff{};
    cfg.tip_height_mm = 0.75;
    return cfg;
}

Vec2 tip_projection(const SolenoidSpec& coil) {
    return {coil.tip_radius_mm * std::cos(coil.angle_rad),
            coil.tip_radius_mm * std::sin(coil.angle_rad)};
}

double voltage_to_current(const WorkspaceConfig& cfg, double volts) {
    if (!(volts >= cfg.supply.min_volts && volts <= cfg.supply.max_volts)) {
        throw std::domain_error("supply voltage outside the mapped range");
    }
    return cfg.supply.slope_a_per_v * volts + cfg.supply.offset_a;
}

double current_to_voltage(const WorkspaceConfig& cfg, double amps) {
    return (amps - cfg.supply.offset_a) / cfg.supply.slope_a_per_v;
}

WorkspaceConfig rig_from_json(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("rig config is not valid JSON: ") + e.what());
    }
    require(doc.is_object(), "rig config must be a JSON object");

    WorkspaceConfig cfg = default_rig();
    try {
        if (doc.contains("solenoids")) {
            const auto& list = doc.at("solenoids");
            require(list.is_array() && list.size() == kSolenoidCount,
                    "solenoids must be an array of exactly 8 entries");
            for (std::size_t i = 0; i < kSolenoidCount; ++i) {
                const auto& item = list[i];
                SolenoidSpec& s = cfg.solenoids[i];
                if (item.contains("angle_deg")) {
                    s.angle_rad = item.at("angle_deg").get<double>() * kDegToRad;
                }
                if (item.contains("tip_radius_mm")) {
                    s.tip_radius_mm = item.at("tip_radius_mm").get<double>();
                }
                if (item.contains("class")) {
                    s.cls = solenoid_class_from_string(item.at("class").get<std::string>());
                }
                if (item.contains("gain")) {
                    s.gain = item.at("gain").get<double>();
                }
            }
        }
        if (doc.contains("workspace_radius_mm")) {
            cfg.workspace_radius_mm = doc.at("workspace_radius_mm").get<double>();
        }
        if (doc.contains("tick_rate_hz")) {
            cfg.tick_rate_hz = doc.at("tick_rate_hz").get<double>();
        }
        if (doc.contains("current_ref_a")) {
            cfg.current_ref_a = doc.at("current_ref_a").get<double>();
        }
        if (doc.contains("tip_height_mm")) {
            cfg.tip_height_mm = doc.at("tip_height_mm").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad rig config field: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

WorkspaceConfig load_rig(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw std::invalid_argument("cannot open rig config " + file.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return rig_from_json(buffer.str());
}

std::string rig_to_json(const WorkspaceConfig& cfg) {
    nlohmann::json doc;
    doc["solenoids"] = nlohmann::json::array();
    for (const auto& s : cfg.solenoids) {
        doc["solenoids"].push_back({{"angle_deg", s.angle_rad / kDegToRad},
                                    {"tip_radius_mm", s.tip_radius_mm},
                                    {"class", std::string(to_string(s.cls))},
                                    {"gain", s.gain}});
    }
    doc["workspace_radius_mm"] = cfg.workspace_radius_mm;
    doc["tick_rate_hz"] = cfg.tick_rate_hz;
    doc["current_ref_a"] = cfg.current_ref_a;
    doc["tip_height_mm"] = cfg.tip_height_mm;
    return doc.dump(2);
}

}  // namespace ferroservo
