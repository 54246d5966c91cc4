#include "ferroservo/io.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <stdexcept>

namespace ferroservo {

std::string trajectory_csv_row(const LogRow& row) {
    if (row.target) {
        return fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{:.6f}\n", row.t_s, row.position.x,
                           row.position.y, row.target->x, row.target->y, row.pattern.bits(),
                           row.err_mm);
    }
    return fmt::format("{:.6f},{:.6f},{:.6f},,,{},{:.6f}\n", row.t_s, row.position.x,
                       row.position.y, row.pattern.bits(), row.err_mm);
}

std::string trajectory_csv(const TrajectoryLog& log) {
    std::string out(kTrajectoryCsvHeader);
    out += '\n';
    for (const LogRow& row : log.rows) {
        out += trajectory_csv_row(row);
    }
    return out;
}

std::string stats_json(std::string_view path_name, int reps, const PathStats& s) {
    const nlohmann::ordered_json doc{
        {"path", path_name},           {"reps", reps},
        {"mean_err_um", s.mean_err_um}, {"std_err_um", s.std_err_um},
        {"max_err_um", s.max_err_um},   {"mean_v_ums", s.mean_v_ums},
        {"std_v_ums", s.std_v_ums},     {"max_v_ums", s.max_v_ums},
    };
    return doc.dump(2) + "\n";
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "distance_mm,mean_speed_mm_s,std_speed_mm_s,reps\n";
    for (const SweepRow& r : rows) {
        out += fmt::format("{:.3f},{:.6f},{:.6f},{}\n", r.distance_mm, r.mean_speed_mm_s,
                           r.std_speed_mm_s, r.speeds.size());
    }
    return out;
}

std::string energy_csv(const std::vector<energy::EnergySample>& samples) {
    std::string out = "rho_m,u_m,H_per_m,B_T,E_J,F_N\n";
    for (const auto& s : samples) {
        out += fmt::format("{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n", s.rho_m, s.u_m, s.h_per_m,
                           s.b_t, s.e_j, s.f_n);
    }
    return out;
}

std::string state_event_json(const LogRow& row) {
    nlohmann::ordered_json ev;
    ev["tick"] = row.tick;
    ev["t_s"] = row.t_s;
    ev["x_mm"] = row.position.x;
    ev["y_mm"] = row.position.y;
    if (row.target) {
        ev["target"] = {{"x_mm", row.target->x}, {"y_mm", row.target->y}};
    } else {
        ev["target"] = nullptr;
    }
    ev["pattern"] = row.pattern.bits();
    ev["mode"] = to_string(row.mode);
    ev["paused"] = row.paused;
    ev["err_mm"] = row.err_mm;
    return ev.dump();
}

void write_text(const std::filesystem::path& file, std::string_view text) {
    if (file.has_parent_path()) {
        std::filesystem::create_directories(file.parent_path());
    }
    std::ofstream os(file, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot write " + file.string());
    }
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace ferroservo
