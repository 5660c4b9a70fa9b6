#include "flowmap/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "flowmap/error.hpp"

namespace flowmap {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

double parse_double(const std::string& field, const std::string& path, std::size_t lineno) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw Error(path + ":" + std::to_string(lineno) + ": bad number '" + field + "'");
    }
    return value;
}

long long parse_int(const std::string& field, const std::string& path, std::size_t lineno) {
    long long value = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw Error(path + ":" + std::to_string(lineno) + ": bad integer '" + field + "'");
    }
    return value;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    return out;
}

void expect_header(std::ifstream& in, const std::string& expected,
                   const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(path + ": missing header row '" + expected + "'");
    }
    strip_cr(line);
    if (line != expected) {
        throw Error(path + ": expected header '" + expected + "', got '" + line + "'");
    }
}

// Shared timestamp bookkeeping: every frame index in [0, max] must have one
// consistent time.
class TimestampTable {
public:
    void note(int frame, double t, const std::string& path, std::size_t lineno) {
        auto [it, inserted] = times_.try_emplace(frame, t);
        if (!inserted && it->second != t) {
            throw Error(path + ":" + std::to_string(lineno) +
                        ": inconsistent timestamp for frame " + std::to_string(frame));
        }
    }
    std::vector<double> dense(const std::string& path) const {
        if (times_.empty()) return {};
        const int max_frame = times_.rbegin()->first;
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(max_frame) + 1);
        for (int f = 0; f <= max_frame; ++f) {
            auto it = times_.find(f);
            if (it == times_.end()) {
                throw Error(path + ": no timestamp for frame " + std::to_string(f) +
                            " (frames must cover 0.." + std::to_string(max_frame) + ")");
            }
            out.push_back(it->second);
        }
        return out;
    }

private:
    std::map<int, double> times_;
};

} // namespace

TrajectorySet read_trajectories(const std::string& path) {
    std::ifstream in = open_input(path);
    expect_header(in, "tracer_id,frame,t,x,y", path);
    std::vector<TrajectoryRecord> records;
    TimestampTable times;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 5) {
            throw Error(path + ":" + std::to_string(lineno) + ": expected 5 fields, got " +
                        std::to_string(fields.size()));
        }
        TrajectoryRecord rec;
        rec.id = parse_int(fields[0], path, lineno);
        rec.frame = static_cast<int>(parse_int(fields[1], path, lineno));
        const double t = parse_double(fields[2], path, lineno);
        rec.pos = {parse_double(fields[3], path, lineno),
                   parse_double(fields[4], path, lineno)};
        if (rec.frame < 0) {
            throw Error(path + ":" + std::to_string(lineno) + ": negative frame index");
        }
        times.note(rec.frame, t, path, lineno);
        records.push_back(rec);
    }
    return TrajectorySet::build(records, times.dense(path));
}

void write_trajectories(const TrajectorySet& set, const std::string& path) {
    // Timestamps ride on sample rows, so a frame without samples cannot be
    // represented losslessly.
    for (int f = 0; f < set.frame_count(); ++f) {
        if (set.frame_view(f).entries.empty()) {
            throw Error("cannot write '" + path + "': frame " + std::to_string(f) +
                        " has no samples, its timestamp would be lost");
        }
    }
    std::ofstream out = open_output(path);
    out << "tracer_id,frame,t,x,y\n";
    for (const TrajectoryRecord& rec : set.all_records()) {
        out << rec.id << ',' << rec.frame << ',' << fmt_double(set.time_at(rec.frame))
            << ',' << fmt_double(rec.pos.x) << ',' << fmt_double(rec.pos.y) << '\n';
    }
    if (!out) throw Error("failed writing '" + path + "'");
}

std::vector<DetectionFrame> read_detections(const std::string& path) {
    std::ifstream in = open_input(path);
    expect_header(in, "frame,t,x,y", path);
    std::map<int, DetectionFrame> by_frame;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 4) {
            throw Error(path + ":" + std::to_string(lineno) + ": expected 4 fields, got " +
                        std::to_string(fields.size()));
        }
        const int frame = static_cast<int>(parse_int(fields[0], path, lineno));
        const double t = parse_double(fields[1], path, lineno);
        const Vec2 p{parse_double(fields[2], path, lineno),
                     parse_double(fields[3], path, lineno)};
        auto [it, inserted] = by_frame.try_emplace(frame);
        if (inserted) {
            it->second.frame = frame;
            it->second.time = t;
        } else if (it->second.time != t) {
            throw Error(path + ":" + std::to_string(lineno) +
                        ": inconsistent timestamp for frame " + std::to_string(frame));
        }
        it->second.points.push_back(p);
    }
    std::vector<DetectionFrame> frames;
    frames.reserve(by_frame.size());
    for (auto& [frame, df] : by_frame) frames.push_back(std::move(df));
    return frames;
}

void write_detections(const std::vector<DetectionFrame>& frames, const std::string& path) {
    std::ofstream out = open_output(path);
    out << "frame,t,x,y\n";
    for (const DetectionFrame& df : frames) {
        for (const Vec2& p : df.points) {
            out << df.frame << ',' << fmt_double(df.time) << ',' << fmt_double(p.x) << ','
                << fmt_double(p.y) << '\n';
        }
    }
    if (!out) throw Error("failed writing '" + path + "'");
}

void write_metric_samples(const std::vector<MetricSample>& samples,
                          const std::string& path) {
    std::ofstream out = open_output(path);
    out << "tracer_id,x,y,metric,value,interval_start,interval_end\n";
    for (const MetricSample& s : samples) {
        out << s.id << ',' << fmt_double(s.position.x) << ',' << fmt_double(s.position.y)
            << ',' << metric_kind_name(s.kind) << ',' << fmt_double(s.value) << ','
            << s.frame_start << ',' << s.frame_end << '\n';
    }
    if (!out) throw Error("failed writing '" + path + "'");
}

std::vector<MetricSample> read_metric_samples(const std::string& path) {
    std::ifstream in = open_input(path);
    expect_header(in, "tracer_id,x,y,metric,value,interval_start,interval_end", path);
    std::vector<MetricSample> samples;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 7) {
            throw Error(path + ":" + std::to_string(lineno) + ": expected 7 fields, got " +
                        std::to_string(fields.size()));
        }
        MetricSample s;
        s.id = parse_int(fields[0], path, lineno);
        s.position = {parse_double(fields[1], path, lineno),
                      parse_double(fields[2], path, lineno)};
        try {
            s.kind = parse_metric_kind(fields[3]);
        } catch (const Error& e) {
            throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        s.value = parse_double(fields[4], path, lineno);
        s.frame_start = static_cast<int>(parse_int(fields[5], path, lineno));
        s.frame_end = static_cast<int>(parse_int(fields[6], path, lineno));
        samples.push_back(s);
    }
    return samples;
}

void write_oracle_grid(const FtleOracleGrid& grid, const std::string& path) {
    std::ofstream out = open_output(path);
    out << "x,y,value\n";
    const GridSpec& spec = grid.spec();
    const double hx = (spec.domain.x1 - spec.domain.x0) / (spec.nx - 1);
    const double hy = (spec.domain.y1 - spec.domain.y0) / (spec.ny - 1);
    for (int iy = 0; iy < spec.ny; ++iy) {
        for (int ix = 0; ix < spec.nx; ++ix) {
            out << fmt_double(spec.domain.x0 + ix * hx) << ','
                << fmt_double(spec.domain.y0 + iy * hy) << ','
                << fmt_double(grid.value_at(ix, iy)) << '\n';
        }
    }
    if (!out) throw Error("failed writing '" + path + "'");
}

void Homography::validate() const {
    const double det = h[0] * (h[4] * h[8] - h[5] * h[7]) -
                       h[1] * (h[3] * h[8] - h[5] * h[6]) +
                       h[2] * (h[3] * h[7] - h[4] * h[6]);
    if (!(std::abs(det) > 1e-12)) {
        throw Error("homography is singular (|det| <= 1e-12)");
    }
}

Vec2 Homography::apply(const Vec2& p) const {
    const double w = h[6] * p.x + h[7] * p.y + h[8];
    if (std::abs(w) < 1e-12) {
        throw Error("homography sends point (" + fmt_short(p.x) + ", " + fmt_short(p.y) +
                    ") to infinity");
    }
    return {(h[0] * p.x + h[1] * p.y + h[2]) / w, (h[3] * p.x + h[4] * p.y + h[5]) / w};
}

TrajectorySet apply_homography(const TrajectorySet& set, const Homography& hom) {
    hom.validate();
    std::vector<TrajectorySet::Track> tracks = set.tracks();
    for (auto& track : tracks) {
        for (Vec2& p : track.positions) p = hom.apply(p);
    }
    return set.with_tracks(std::move(tracks));
}

std::vector<DetectionFrame> apply_homography(std::vector<DetectionFrame> frames,
                                             const Homography& hom) {
    hom.validate();
    for (DetectionFrame& df : frames) {
        for (Vec2& p : df.points) p = hom.apply(p);
    }
    return frames;
}

namespace {

struct Rgb {
    double r, g, b;
};

// Compact viridis-like ramp; enough stops for a smooth legend.
constexpr std::array<Rgb, 9> kSequential{{{0.267, 0.005, 0.329},
                                          {0.283, 0.141, 0.458},
                                          {0.254, 0.265, 0.530},
                                          {0.207, 0.372, 0.553},
                                          {0.164, 0.471, 0.558},
                                          {0.128, 0.567, 0.551},
                                          {0.135, 0.659, 0.518},
                                          {0.267, 0.749, 0.441},
                                          {0.993, 0.906, 0.144}}};

Rgb lerp(const Rgb& a, const Rgb& b, double t) {
    return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

Rgb sequential_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const double scaled = t * (kSequential.size() - 1);
    const std::size_t i = std::min(static_cast<std::size_t>(scaled), kSequential.size() - 2);
    return lerp(kSequential[i], kSequential[i + 1], scaled - static_cast<double>(i));
}

// Blue-white-red, centered at t = 0.5.
Rgb diverging_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const Rgb blue{0.230, 0.299, 0.754};
    const Rgb white{0.950, 0.950, 0.950};
    const Rgb red{0.706, 0.016, 0.150};
    return t < 0.5 ? lerp(blue, white, 2.0 * t) : lerp(white, red, 2.0 * t - 1.0);
}

std::string css_color(const Rgb& c) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<int>(std::lround(std::clamp(c.r, 0.0, 1.0) * 255.0)),
                  static_cast<int>(std::lround(std::clamp(c.g, 0.0, 1.0) * 255.0)),
                  static_cast<int>(std::lround(std::clamp(c.b, 0.0, 1.0) * 255.0)));
    return buf;
}

} // namespace

void render_scatter(const std::vector<MetricSample>& samples, const PlotStyle& style,
                    const std::string& path) {
    if (samples.empty()) throw Error("cannot plot an empty sample set");
    if (style.width < 100) throw Error("plot width must be at least 100");
    const bool diverging = style.colormap == "diverging";
    if (!diverging && style.colormap != "sequential") {
        throw Error("unknown colormap '" + style.colormap +
                    "' (choose sequential or diverging)");
    }

    double xmin = samples[0].position.x, xmax = xmin;
    double ymin = samples[0].position.y, ymax = ymin;
    double vmin = samples[0].value, vmax = vmin;
    for (const MetricSample& s : samples) {
        xmin = std::min(xmin, s.position.x);
        xmax = std::max(xmax, s.position.x);
        ymin = std::min(ymin, s.position.y);
        ymax = std::max(ymax, s.position.y);
        vmin = std::min(vmin, s.value);
        vmax = std::max(vmax, s.value);
    }
    double lo = vmin, hi = vmax;
    if (diverging) {
        const double amp = std::max(std::abs(vmin), std::abs(vmax));
        lo = -amp;
        hi = amp;
    }
    const bool degenerate = !(hi > lo);

    const double pad_frac = 0.05;
    const double spanx = std::max(xmax - xmin, 1e-12);
    const double spany = std::max(ymax - ymin, 1e-12);
    const double x0 = xmin - pad_frac * spanx, x1 = xmax + pad_frac * spanx;
    const double y0 = ymin - pad_frac * spany, y1 = ymax + pad_frac * spany;

    const int legend_w = 70;
    const int plot_w = style.width - legend_w;
    const int plot_h = std::clamp(
        static_cast<int>(std::lround(plot_w * (y1 - y0) / (x1 - x0))), 100, 4 * plot_w);
    auto px = [&](double x) { return (x - x0) / (x1 - x0) * plot_w; };
    auto py = [&](double y) { return (1.0 - (y - y0) / (y1 - y0)) * plot_h; };
    auto color_of = [&](double v) {
        const double t = degenerate ? 0.5 : (v - lo) / (hi - lo);
        return css_color(diverging ? diverging_color(t) : sequential_color(t));
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width
        << "\" height=\"" << plot_h << "\" viewBox=\"0 0 " << style.width << ' '
        << plot_h << "\">\n";
    svg << "<rect width=\"" << style.width << "\" height=\"" << plot_h
        << "\" fill=\"white\"/>\n";
    for (const MetricSample& s : samples) {
        svg << "<circle cx=\"" << fmt_fixed(px(s.position.x), 2) << "\" cy=\""
            << fmt_fixed(py(s.position.y), 2) << "\" r=\"" << fmt_fixed(style.marker_radius, 2)
            << "\" fill=\"" << color_of(s.value) << "\"/>\n";
    }

    // Legend: discrete color bar plus range labels.
    const int bar_x = plot_w + 18;
    const int bar_w = 16;
    const int bar_top = 12;
    const int bar_h = std::max(plot_h - 44, 40);
    const int strips = 24;
    for (int i = 0; i < strips; ++i) {
        const double t_hi = 1.0 - static_cast<double>(i) / strips;
        const double v = degenerate ? lo : lo + (hi - lo) * (t_hi - 0.5 / strips);
        const double yy = bar_top + static_cast<double>(i) * bar_h / strips;
        svg << "<rect x=\"" << bar_x << "\" y=\"" << fmt_fixed(yy, 2) << "\" width=\""
            << bar_w << "\" height=\"" << fmt_fixed(static_cast<double>(bar_h) / strips + 0.5, 2)
            << "\" fill=\"" << color_of(v) << "\"/>\n";
    }
    svg << "<text x=\"" << bar_x << "\" y=\"" << bar_top + bar_h + 14
        << "\" font-size=\"11\" font-family=\"monospace\">" << fmt_short(lo) << "</text>\n";
    svg << "<text x=\"" << bar_x << "\" y=\"" << bar_top - 2
        << "\" font-size=\"11\" font-family=\"monospace\">" << fmt_short(hi) << "</text>\n";
    svg << "<text x=\"" << bar_x << "\" y=\"" << bar_top + bar_h + 28
        << "\" font-size=\"11\" font-family=\"monospace\">"
        << metric_kind_name(samples.front().kind) << "</text>\n";
    svg << "</svg>\n";

    std::ofstream out = open_output(path);
    out << svg.str();
    if (!out) throw Error("failed writing '" + path + "'");
}

void write_config_file(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out = open_output(path);
    out << "# resolved run configuration\n";
    for (const auto& [key, value] : entries) {
        out << key << " = " << value << '\n';
    }
    if (!out) throw Error("failed writing '" + path + "'");
}

} // namespace flowmap
