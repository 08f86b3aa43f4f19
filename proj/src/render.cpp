#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "softcompose/gridworld.hpp"

namespace softcompose {
namespace grid {

namespace {

void write_or_throw(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw ValidationError("write to '" + path + "' failed");
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void render_value_heatmap(const ValueTable& v, const GridGeometry& geom,
                          const std::string& path) {
    if (v.size() < geom.n_cells)
        throw ValidationError("render_value_heatmap: value table too small for grid");

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < geom.n_cells; ++s) {
        lo = std::min(lo, v[s]);
        hi = std::max(hi, v[s]);
    }
    const double range = hi - lo;

    std::string pgm = "P2\n" + std::to_string(geom.width) + " " +
                      std::to_string(geom.height) + "\n255\n";
    std::string csv = "x,y,value\n";
    for (int y = 0; y < geom.height; ++y) {
        for (int x = 0; x < geom.width; ++x) {
            const int c = geom.cell(x, y);
            int pixel = 0;
            if (!geom.wall[c]) {
                const double val = v[geom.state_of_cell[c]];
                pixel = range > 0.0
                            ? static_cast<int>(std::lround(255.0 * (val - lo) / range))
                            : 128;
                csv += std::to_string(x) + "," + std::to_string(y) + "," +
                       format_value(val) + "\n";
            }
            pgm += std::to_string(pixel);
            pgm += x + 1 == geom.width ? '\n' : ' ';
        }
    }
    write_or_throw(path, pgm);
    write_or_throw(path + ".csv", csv);
}

void render_trajectory(const Trajectory& traj, const GridGeometry& geom,
                       const std::vector<Item>& items, const std::string& path) {
    struct Rgb {
        int r, g, b;
    };
    const Rgb wall{0, 0, 0}, free{255, 255, 255}, visited{255, 80, 80};
    auto item_rgb = [](Color c) -> Rgb {
        switch (c) {
            case Color::blue: return {60, 60, 230};
            case Color::beige: return {210, 180, 140};
            default: return {150, 60, 200};
        }
    };

    std::vector<Rgb> pixels(geom.wall.size(), free);
    for (std::size_t c = 0; c < geom.wall.size(); ++c)
        if (geom.wall[c]) pixels[c] = wall;
    for (const Item& it : items) pixels[geom.cell(it.x, it.y)] = item_rgb(it.color);
    for (const Step& st : traj.steps)
        if (st.state < geom.n_cells) pixels[geom.cell_of_state[st.state]] = visited;
    if (traj.final_state < geom.n_cells)
        pixels[geom.cell_of_state[traj.final_state]] = visited;

    std::string ppm = "P3\n" + std::to_string(geom.width) + " " +
                      std::to_string(geom.height) + "\n255\n";
    for (int y = 0; y < geom.height; ++y) {
        for (int x = 0; x < geom.width; ++x) {
            const Rgb& p = pixels[geom.cell(x, y)];
            ppm += std::to_string(p.r) + " " + std::to_string(p.g) + " " +
                   std::to_string(p.b);
            ppm += x + 1 == geom.width ? '\n' : ' ';
        }
    }
    write_or_throw(path, ppm);
}

}  // namespace grid
}  // namespace softcompose
