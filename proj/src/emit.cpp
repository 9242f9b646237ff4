#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "oisac/sim.hpp"

namespace oisac {

namespace {

std::string fmt(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

struct PlotBox {
    double x0, x1, y0, y1;  // data range
    double px = 640.0, py = 420.0, margin = 45.0;

    double sx(double x) const {
        return margin + (x - x0) / (x1 - x0) * (px - 2 * margin);
    }
    double sy(double y) const {
        return py - margin - (y - y0) / (y1 - y0) * (py - 2 * margin);
    }
};

std::string polyline(const PlotBox& box, const std::vector<double>& xs,
                     const std::vector<double>& ys, const char* color) {
    std::string svg = "<polyline fill=\"none\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"1.2\" points=\"";
    char buf[64];
    for (size_t i = 0; i < xs.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", box.sx(xs[i]),
                      box.sy(ys[i]));
        svg += buf;
    }
    svg += "\"/>\n";
    return svg;
}

std::string svg_header(const PlotBox& box, const std::string& title) {
    char buf[256];
    std::string svg =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
        "height=\"420\" viewBox=\"0 0 640 420\">\n"
        "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.0f\" y=\"20\" font-family=\"sans-serif\" "
                  "font-size=\"14\">%s</text>\n",
                  box.margin, title.c_str());
    svg += buf;
    return svg;
}

}  // namespace

std::string records_to_csv(const std::vector<SimRecord>& records) {
    std::string csv =
        "t,leader_x,leader_y,leader_theta,follower_x,follower_y,"
        "follower_theta,s_x,s_y,s_gamma,est_x,est_y,est_gamma,uhat_v,"
        "uhat_omega,ul_v,ul_omega,cmd_v,cmd_omega,act_v,act_omega,fresh,"
        "eps_x,eps_y,eps_gamma,lyapunov\n";
    for (const auto& r : records) {
        csv += fmt(r.t);
        const double values[] = {
            r.leader.x,   r.leader.y,    r.leader.theta, r.follower.x,
            r.follower.y, r.follower.theta, r.s_true.x_lf, r.s_true.y_lf,
            r.s_true.gamma, r.s_est.x_lf, r.s_est.y_lf,  r.s_est.gamma,
            r.u_hat.v,    r.u_hat.omega, r.u_l_true.v,   r.u_l_true.omega,
            r.u_f_cmd.v,  r.u_f_cmd.omega, r.u_f_act.v,  r.u_f_act.omega};
        for (const double v : values) {
            csv += ',';
            csv += fmt(v);
        }
        csv += r.fresh ? ",1" : ",0";
        for (int i = 0; i < 3; ++i) {
            csv += ',';
            csv += fmt(r.eps[i]);
        }
        csv += ',';
        csv += fmt(r.lyapunov_v);
        csv += '\n';
    }
    return csv;
}

std::string metrics_to_text(const Metrics& m) {
    std::string text;
    const char* names[3] = {"x", "y", "gamma"};
    for (int i = 0; i < 3; ++i) {
        text += std::string("steady_band_") + names[i] + ": " +
                fmt(m.steady_band[i]) + "\n";
    }
    for (int i = 0; i < 3; ++i) {
        text += std::string("rmse_") + names[i] + ": " + fmt(m.rmse[i]) + "\n";
    }
    for (int i = 0; i < 3; ++i) {
        text += std::string("settling_time_") + names[i] + ": " +
                fmt(m.settling_time[i]) + "\n";
    }
    text += "braking_distance: " +
            (m.braking_distance ? fmt(*m.braking_distance) : std::string("n/a")) +
            "\n";
    text += "frames_total: " + std::to_string(m.frames_total) + "\n";
    text += "frames_fresh: " + std::to_string(m.frames_fresh) + "\n";
    text += "frames_missed: " + std::to_string(m.frames_missed) + "\n";
    text += "frames_gated: " + std::to_string(m.frames_gated) + "\n";
    text += "gate_bound_match: " + fmt(m.gate_bound_match) + "\n";
    text += "visibility_lost: " + std::string(m.visibility_lost ? "1" : "0") + "\n";
    text += "visibility_lost_t: " + fmt(m.visibility_lost_t) + "\n";
    return text;
}

std::string braking_table_to_csv(const std::vector<BrakingRow>& rows) {
    std::string csv = "v_level,estimator,mean_braking_distance";
    size_t max_reps = 0;
    for (const auto& row : rows) {
        max_reps = std::max(max_reps, row.distances.size());
    }
    for (size_t i = 0; i < max_reps; ++i) {
        csv += ",rep" + std::to_string(i);
    }
    csv += '\n';
    for (const auto& row : rows) {
        csv += fmt(row.v_level);
        csv += (row.estimator == EstimatorKind::kOisac) ? ",oisac" : ",ekf";
        csv += ',';
        csv += fmt(row.mean_distance);
        for (const double d : row.distances) {
            csv += ',';
            csv += fmt(d);
        }
        csv += '\n';
    }
    return csv;
}

std::string trajectory_svg(const std::vector<SimRecord>& records) {
    std::vector<double> lx, ly, fx, fy;
    for (const auto& r : records) {
        lx.push_back(r.leader.x);
        ly.push_back(r.leader.y);
        fx.push_back(r.follower.x);
        fy.push_back(r.follower.y);
    }
    PlotBox box{0, 1, 0, 1};
    if (!records.empty()) {
        box.x0 = box.x1 = lx[0];
        box.y0 = box.y1 = ly[0];
        for (size_t i = 0; i < lx.size(); ++i) {
            box.x0 = std::min({box.x0, lx[i], fx[i]});
            box.x1 = std::max({box.x1, lx[i], fx[i]});
            box.y0 = std::min({box.y0, ly[i], fy[i]});
            box.y1 = std::max({box.y1, ly[i], fy[i]});
        }
        const double pad = 0.05 * std::max(box.x1 - box.x0, box.y1 - box.y0) + 0.01;
        box.x0 -= pad;
        box.x1 += pad;
        box.y0 -= pad;
        box.y1 += pad;
    }
    std::string svg = svg_header(box, "trajectories (leader red, follower blue)");
    if (!records.empty()) {
        svg += polyline(box, lx, ly, "#cc2222");
        svg += polyline(box, fx, fy, "#2244cc");
    }
    svg += "</svg>\n";
    return svg;
}

std::string errors_svg(const std::vector<SimRecord>& records) {
    std::vector<double> ts, e0, e1, e2;
    for (const auto& r : records) {
        ts.push_back(r.t);
        e0.push_back(r.eps[0]);
        e1.push_back(r.eps[1]);
        e2.push_back(r.eps[2]);
    }
    PlotBox box{0, 1, -1, 1};
    if (!records.empty()) {
        box.x0 = ts.front();
        box.x1 = std::max(ts.back(), ts.front() + 1e-9);
        box.y0 = box.y1 = 0.0;
        for (size_t i = 0; i < ts.size(); ++i) {
            box.y0 = std::min({box.y0, e0[i], e1[i], e2[i]});
            box.y1 = std::max({box.y1, e0[i], e1[i], e2[i]});
        }
        const double pad = 0.05 * (box.y1 - box.y0) + 1e-3;
        box.y0 -= pad;
        box.y1 += pad;
    }
    std::string svg = svg_header(
        box, "formation errors (eps_x red, eps_y blue, eps_gamma green)");
    if (!records.empty()) {
        svg += polyline(box, {ts.front(), ts.back()}, {0.0, 0.0}, "#999999");
        svg += polyline(box, ts, e0, "#cc2222");
        svg += polyline(box, ts, e1, "#2244cc");
        svg += polyline(box, ts, e2, "#22aa44");
    }
    svg += "</svg>\n";
    return svg;
}

void emit(const std::vector<SimRecord>& records, const Metrics& metrics,
          const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create directory " + dir + ": " +
                                 ec.message());
    }
    write_file(dir + "/records.csv", records_to_csv(records));
    write_file(dir + "/metrics.txt", metrics_to_text(metrics));
    write_file(dir + "/trajectory.svg", trajectory_svg(records));
    write_file(dir + "/errors.svg", errors_svg(records));
}

}  // namespace oisac
