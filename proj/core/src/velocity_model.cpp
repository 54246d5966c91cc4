#include "ferroservo/velocity_model.hpp"

#include <Eigen/Core>
#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ferroservo {
namespace {

double closed_form(LawKind kind, double c1, double c0, double rho) {
    switch (kind) {
        case LawKind::Inverse:
            return c1 / rho + c0;
        case LawKind::Linear:
            return c1 * rho + c0;
        case LawKind::InverseSquare:
            return c1 / (rho * rho) + c0;
        case LawKind::Tabulated:
            break;
    }
    throw std::logic_error("closed_form called on a tabulated law");
}

}  // namespace

double DistanceLaw::speed(double rho_mm) const {
    double v = 0.0;
    if (kind != LawKind::Tabulated) {
        v = closed_form(kind, c1, c0, rho_mm);
    } else {
        const double last_rho = table_rho0_mm + table_step_mm * static_cast<double>(table.size() - 1);
        auto tail = [&](double anchor_value, double anchor_rho) {
            const double base = closed_form(tail_kind, tail_c1, tail_c0, anchor_rho);
            return base > 0.0 ? anchor_value * closed_form(tail_kind, tail_c1, tail_c0, rho_mm) / base
                              : 0.0;
        };
        if (rho_mm <= table_rho0_mm) {
            v = tail(table.front(), table_rho0_mm);
        } else if (rho_mm >= last_rho) {
            v = tail(table.back(), last_rho);
        } else {
            const double u = (rho_mm - table_rho0_mm) / table_step_mm;
            const auto k = std::min(static_cast<std::size_t>(u), table.size() - 2);
            const double frac = u - static_cast<double>(k);
            v = table[k] + (table[k + 1] - table[k]) * frac;
        }
    }
    // Solenoids only push; a law extrapolated below zero means no motion.
    return std::max(v, 0.0);
}

namespace {

DistanceLaw make_law(LawKind kind, double c1, double c0) {
    DistanceLaw law;
    law.kind = kind;
    law.c1 = c1;
    law.c0 = c0;
    return law;
}

}  // namespace

DistanceLaw inverse_law() { return make_law(LawKind::Inverse, 3.17, 0.03); }
DistanceLaw linear_law() { return make_law(LawKind::Linear, -0.16, 1.54); }
DistanceLaw inverse_square_law() { return make_law(LawKind::InverseSquare, 6.02, 0.40); }

std::string_view to_string(GainPreset preset) {
    return preset == GainPreset::Unit ? "unit" : "fig2d";
}

GainPreset gain_preset_from_string(std::string_view text) {
    if (text == "unit") {
        return GainPreset::Unit;
    }
    if (text == "fig2d") {
        return GainPreset::Fig2d;
    }
    throw std::invalid_argument("unknown gain preset: " + std::string(text));
}

void VelocityModel::validate() const {
    if (law.kind == LawKind::Inverse && !(law.c1 > 0.0)) {
        throw std::invalid_argument("inverse law coefficient must be positive");
    }
    if (law.kind == LawKind::Tabulated && (law.table.size() < 2 || !(law.table_step_mm > 0.0))) {
        throw std::invalid_argument("tabulated law needs at least two samples");
    }
    if (!(gain_short > 0.0) || !(gain_long > 0.0)) {
        throw std::invalid_argument("class gains must be positive");
    }
    if (!(reference_current_a > 0.0)) {
        throw std::invalid_argument("reference current must be positive");
    }
    if (!(current_slope * reference_current_a + current_offset > 0.0)) {
        throw std::invalid_argument("current law must be positive at the reference current");
    }
}

VelocityModel make_velocity_model(GainPreset preset, DistanceLaw law) {
    VelocityModel model;
    model.law = std::move(law);
    if (preset == GainPreset::Fig2d) {
        // Single-solenoid centre speeds 0.50 (short) and 0.36 (long) mm/s
        // divided by the law's 0.6516 mm/s at 5.1 mm.
        model.gain_short = 0.767;
        model.gain_long = 0.552;
    }
    return model;
}

double current_scale(const VelocityModel& model, double current_a) {
    const double ref = model.current_slope * model.reference_current_a + model.current_offset;
    const double raw = model.current_slope * current_a + model.current_offset;
    return std::max(raw, 0.0) / ref;
}

double actuation_speed(const VelocityModel& model, double rho_mm, SolenoidClass cls,
                       double current_a) {
    if (!(rho_mm > 0.0)) {
        throw std::domain_error("actuation distance must be positive");
    }
    if (!(current_a >= 0.0)) {
        throw std::domain_error("actuation current must be non-negative");
    }
    const double rho = std::max(rho_mm, kMinActuationDistanceMm);
    return model.class_gain(cls) * current_scale(model, current_a) * model.law.speed(rho);
}

Vec2 solenoid_velocity(const Vec2& position, const SolenoidSpec& coil,
                       const VelocityModel& model, double current_a) {
    const Vec2 mp = position - tip_projection(coil);
    const double rho = norm(mp);
    if (!(rho > 0.0)) {
        throw std::domain_error("particle coincides with a solenoid tip projection");
    }
    const double speed = coil.gain * actuation_speed(model, rho, coil.cls, current_a);
    return mp * (speed / rho);
}

Vec2 superposed_velocity(const Vec2& position, ActuationPattern pattern,
                         const WorkspaceConfig& cfg, const VelocityModel& model,
                         double current_a) {
    Vec2 sum;
    for (std::size_t i = 0; i < kSolenoidCount; ++i) {
        if (pattern.on(i)) {
            sum += solenoid_velocity(position, cfg.solenoids[i], model, current_a);
        }
    }
    return sum;
}

double lag_retention(double dt_s, double lag_tau_s) {
    return lag_tau_s > 0.0 ? std::exp(-dt_s / lag_tau_s) : 0.0;
}

double simulated_mean_speed(const DistanceLaw& law, double rho0_mm, double lag_tau_s,
                            double dt_s, double window_s, double scale) {
    const auto steps = static_cast<int>(std::lround(window_s / dt_s));
    const double keep = lag_retention(dt_s, lag_tau_s);
    double rho = rho0_mm;
    double v = 0.0;
    for (int k = 0; k < steps; ++k) {
        const double commanded = scale * law.speed(std::max(rho, kMinActuationDistanceMm));
        v = commanded + (v - commanded) * keep;
        rho += v * dt_s;
    }
    return (rho - rho0_mm) / (static_cast<double>(steps) * dt_s);
}

namespace {

double smooth_law(const Eigen::Vector4d& c, double rho) {
    const double u = 1.0 / rho;
    return ((c[2] * u + c[1]) * u + c[0]) * u + c[3];
}

// Residuals of the first-second mean speed against the target law, one per
// fit distance, for Eigen's Levenberg-Marquardt with numerical Jacobian.
struct MeanSpeedResiduals : Eigen::DenseFunctor<double> {
    MeanSpeedResiduals(const DistanceLaw& law, std::vector<double> fit_rhos, int step_count,
                       double retention, double dt_s)
        : Eigen::DenseFunctor<double>(4, static_cast<int>(fit_rhos.size())),
          target(&law), rhos(std::move(fit_rhos)), steps(step_count), keep(retention), dt(dt_s) {}

    const DistanceLaw* target;
    std::vector<double> rhos;
    int steps;
    double keep;
    double dt;

    int operator()(const Eigen::VectorXd& c, Eigen::VectorXd& out) const {
        const Eigen::Vector4d coef = c.head<4>();
        for (std::size_t i = 0; i < rhos.size(); ++i) {
            double rho = rhos[i];
            double v = 0.0;
            for (int k = 0; k < steps; ++k) {
                const double commanded =
                    std::max(0.0, smooth_law(coef, std::max(rho, kMinActuationDistanceMm)));
                v = commanded + (v - commanded) * keep;
                rho += v * dt;
            }
            out[static_cast<Eigen::Index>(i)] =
                (rho - rhos[i]) / (static_cast<double>(steps) * dt) - target->speed(rhos[i]);
        }
        return 0;
    }
};

}  // namespace

VelocityModel calibrate_plant_model(const VelocityModel& observed, double lag_tau_s,
                                    double dt_s, const CalibrationOptions& options,
                                    CalibrationReport* report) {
    if (observed.law.kind == LawKind::Tabulated) {
        throw std::invalid_argument("calibration target must be a closed-form law");
    }
    if (!(dt_s > 0.0) || !(lag_tau_s >= 0.0)) {
        throw std::invalid_argument("calibration needs dt > 0 and lag >= 0");
    }
    if (!(options.fit_min_mm > 0.0) || !(options.fit_max_mm > options.fit_min_mm) ||
        !(options.fit_step_mm > 0.0) || !(options.table_step_mm > 0.0)) {
        throw std::invalid_argument("calibration ranges must be positive and ordered");
    }
    const DistanceLaw& target = observed.law;

    // Candidate law a/rho + b/rho^2 + c/rho^3 + d. A free table has
    // oscillating null-space solutions; this family keeps the law smooth.
    std::vector<double> rhos;
    for (double r = options.fit_min_mm; r <= options.fit_max_mm + 1e-9; r += options.fit_step_mm) {
        rhos.push_back(r);
    }
    const MeanSpeedResiduals residuals(target, std::move(rhos),
                                       static_cast<int>(std::lround(options.window_s / dt_s)),
                                       lag_retention(dt_s, lag_tau_s), dt_s);

    Eigen::VectorXd coef(4);
    coef << (target.kind == LawKind::Inverse ? target.c1 : 3.0), 0.0, 0.0,
        (target.kind == LawKind::Inverse ? target.c0 : 0.0);
    Eigen::NumericalDiff<MeanSpeedResiduals> functor(residuals);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<MeanSpeedResiduals>> lm(functor);
    lm.setMaxfev(options.max_evaluations);
    lm.setXtol(options.tolerance);
    lm.setFtol(options.tolerance);
    lm.minimize(coef);

    Eigen::VectorXd res(residuals.values());
    residuals(coef, res);
    CalibrationReport local;
    local.evaluations = static_cast<int>(lm.nfev());
    local.max_residual_mm_s = res.cwiseAbs().maxCoeff();
    for (int i = 0; i < 4; ++i) {
        local.coefficients[static_cast<std::size_t>(i)] = coef[i];
    }
    if (report != nullptr) {
        *report = local;
    }

    // Tabulate the fit on its identification range; outside it the target's
    // own shape takes over, scaled to stay continuous.
    DistanceLaw plant;
    plant.kind = LawKind::Tabulated;
    plant.table_rho0_mm = options.fit_min_mm;
    plant.table_step_mm = options.table_step_mm;
    const auto n = static_cast<std::size_t>(
        std::lround((options.fit_max_mm - options.fit_min_mm) / options.table_step_mm)) + 1;
    plant.table.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double rho = options.fit_min_mm + options.table_step_mm * static_cast<double>(k);
        plant.table[k] = std::max(0.0, smooth_law(coef.head<4>(), rho));
    }
    plant.tail_kind = target.kind;
    plant.tail_c1 = target.c1;
    plant.tail_c0 = target.c0;

    VelocityModel out = observed;
    out.law = std::move(plant);
    return out;
}

}  // namespace ferroservo
