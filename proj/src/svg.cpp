#include "fibernet/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace fibernet::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

const char* colour(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;

    void include(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

Range range_of(const std::vector<Series>& series, bool use_x) {
    Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const Series& s : series)
        for (double v : use_x ? s.x : s.y) r.include(v);
    if (!std::isfinite(r.lo)) r = {0.0, 1.0};
    r.pad();
    return r;
}

class Canvas {
public:
    explicit Canvas(const Axes& axes) {
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
             << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
        out_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        text(kWidth / 2, 22, axes.title, "middle", 14);
        text(kLeft + plot_w() / 2, kHeight - 15, axes.xlabel, "middle");
        out_ << "<text transform=\"translate(18," << px(kTop + plot_h() / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
             << escape(axes.ylabel) << "</text>\n";
    }

    static double plot_w() { return kWidth - kLeft - kRight; }
    static double plot_h() { return kHeight - kTop - kBottom; }

    void set_range(Range x, Range y) {
        x_ = x;
        y_ = y;
    }
    double sx(double v) const { return kLeft + (v - x_.lo) / (x_.hi - x_.lo) * plot_w(); }
    double sy(double v) const { return kTop + plot_h() - (v - y_.lo) / (y_.hi - y_.lo) * plot_h(); }

    void frame() {
        out_ << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w() << "\" height=\"" << plot_h()
             << "\" fill=\"none\" stroke=\"black\"/>\n";
    }

    void x_ticks() {
        for (int i = 0; i <= 5; ++i) {
            const double v = x_.lo + (x_.hi - x_.lo) * i / 5.0;
            line(sx(v), kTop + plot_h(), sx(v), kTop + plot_h() + 4, "black");
            text(sx(v), kTop + plot_h() + 16, num(v), "middle");
        }
    }
    void y_ticks() {
        for (int i = 0; i <= 5; ++i) {
            const double v = y_.lo + (y_.hi - y_.lo) * i / 5.0;
            line(kLeft - 4, sy(v), kLeft, sy(v), "black");
            text(kLeft - 6, sy(v) + 4, num(v), "end");
        }
    }

    void line(double x0, double y0, double x1, double y1, const char* stroke, const char* dash = nullptr) {
        out_ << "<line x1=\"" << px(x0) << "\" y1=\"" << px(y0) << "\" x2=\"" << px(x1) << "\" y2=\"" << px(y1)
             << "\" stroke=\"" << stroke << "\"";
        if (dash) out_ << " stroke-dasharray=\"" << dash << "\"";
        out_ << "/>\n";
    }
    void rect(double x, double y, double w, double h, const std::string& fill) {
        out_ << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(w) << "\" height=\"" << px(h)
             << "\" fill=\"" << fill << "\"/>\n";
    }
    void circle(double x, double y, const char* fill) {
        out_ << "<circle cx=\"" << px(x) << "\" cy=\"" << px(y) << "\" r=\"3\" fill=\"" << fill << "\"/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke, const char* dash = nullptr) {
        out_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\"";
        if (dash) out_ << " stroke-dasharray=\"" << dash << "\"";
        out_ << " points=\"";
        for (const auto& [x, y] : pts) out_ << px(x) << "," << px(y) << " ";
        out_ << "\"/>\n";
    }
    void text(double x, double y, const std::string& s, const char* anchor = "start", int size = 0) {
        out_ << "<text x=\"" << px(x) << "\" y=\"" << px(y) << "\" text-anchor=\"" << anchor << "\"";
        if (size) out_ << " font-size=\"" << size << "\"";
        out_ << ">" << escape(s) << "</text>\n";
    }
    void legend(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            const double y = kTop + 10 + 16.0 * static_cast<double>(i);
            rect(kWidth - kRight + 12, y - 8, 10, 10, colour(i));
            text(kWidth - kRight + 26, y + 1, names[i]);
        }
    }

    std::string finish() {
        out_ << "</svg>\n";
        return out_.str();
    }

private:
    std::ostringstream out_;
    Range x_;
    Range y_;
};

// Maps a value onto fractional cell index by interpolating between sorted centres.
double cell_coordinate(const std::vector<double>& centres, double v) {
    if (centres.size() == 1) return 0.0;
    if (v <= centres.front()) return 0.0;
    if (v >= centres.back()) return static_cast<double>(centres.size() - 1);
    const auto it = std::upper_bound(centres.begin(), centres.end(), v);
    const auto k = static_cast<std::size_t>(it - centres.begin()) - 1;
    return static_cast<double>(k) + (v - centres[k]) / (centres[k + 1] - centres[k]);
}

std::string viridis(double t) {
    // Piecewise-linear approximation through five anchors of the viridis map.
    static const double anchors[5][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const int k = std::min(3, static_cast<int>(t));
    const double f = t - k;
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                  static_cast<int>(std::lround(anchors[k][0] + f * (anchors[k + 1][0] - anchors[k][0]))),
                  static_cast<int>(std::lround(anchors[k][1] + f * (anchors[k + 1][1] - anchors[k][1]))),
                  static_cast<int>(std::lround(anchors[k][2] + f * (anchors[k + 1][2] - anchors[k][2]))));
    return buf;
}

}  // namespace

std::string grouped_bar_chart(const Axes& axes, const std::vector<std::string>& categories,
                              const std::vector<Series>& series) {
    Canvas c(axes);
    Range y{0.0, 0.0};
    for (const Series& s : series)
        for (double v : s.y) y.include(v);
    if (y.hi <= y.lo) y.hi = y.lo + 1.0;
    c.set_range({0.0, static_cast<double>(std::max<std::size_t>(categories.size(), 1))}, y);
    c.frame();
    c.y_ticks();
    const double slot = Canvas::plot_w() / static_cast<double>(std::max<std::size_t>(categories.size(), 1));
    const double bar = 0.8 * slot / static_cast<double>(std::max<std::size_t>(series.size(), 1));
    for (std::size_t k = 0; k < categories.size(); ++k) {
        const double x0 = kLeft + slot * static_cast<double>(k) + 0.1 * slot;
        for (std::size_t s = 0; s < series.size(); ++s) {
            if (k >= series[s].y.size() || !std::isfinite(series[s].y[k])) continue;
            const double v = series[s].y[k];
            const double top = c.sy(std::max(v, 0.0));
            const double base = c.sy(std::min(v, 0.0));
            c.rect(x0 + bar * static_cast<double>(s), top, bar * 0.95, base - top, colour(s));
        }
        c.text(kLeft + slot * (static_cast<double>(k) + 0.5), kTop + Canvas::plot_h() + 16, categories[k], "middle");
    }
    if (y.lo < 0.0) c.line(kLeft, c.sy(0.0), kLeft + Canvas::plot_w(), c.sy(0.0), "black");
    if (series.size() > 1) {
        std::vector<std::string> names;
        for (const Series& s : series) names.push_back(s.name);
        c.legend(names);
    }
    return c.finish();
}

std::string bar_chart(const Axes& axes, const std::vector<std::string>& labels, const std::vector<double>& values) {
    return grouped_bar_chart(axes, labels, {Series{"", {}, values}});
}

std::string line_chart(const Axes& axes, const std::vector<Series>& series) {
    Canvas c(axes);
    c.set_range(range_of(series, true), range_of(series, false));
    c.frame();
    c.x_ticks();
    c.y_ticks();
    std::vector<std::string> names;
    for (std::size_t i = 0; i < series.size(); ++i) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t k = 0; k < std::min(series[i].x.size(), series[i].y.size()); ++k)
            if (std::isfinite(series[i].y[k])) pts.emplace_back(c.sx(series[i].x[k]), c.sy(series[i].y[k]));
        c.polyline(pts, colour(i));
        names.push_back(series[i].name);
    }
    c.legend(names);
    return c.finish();
}

std::string scatter_chart(const Axes& axes, const std::vector<Series>& series, double vertical_line) {
    Canvas c(axes);
    Range x = range_of(series, true);
    if (std::isfinite(vertical_line)) x.include(vertical_line);
    c.set_range(x, range_of(series, false));
    c.frame();
    c.x_ticks();
    c.y_ticks();
    if (std::isfinite(vertical_line))
        c.line(c.sx(vertical_line), kTop, c.sx(vertical_line), kTop + Canvas::plot_h(), "gray", "5,4");
    std::vector<std::string> names;
    for (std::size_t i = 0; i < series.size(); ++i) {
        for (std::size_t k = 0; k < std::min(series[i].x.size(), series[i].y.size()); ++k)
            if (std::isfinite(series[i].x[k]) && std::isfinite(series[i].y[k]))
                c.circle(c.sx(series[i].x[k]), c.sy(series[i].y[k]), colour(i));
        names.push_back(series[i].name);
    }
    c.legend(names);
    return c.finish();
}

std::string heatmap(const Axes& axes, const std::vector<double>& xs, const std::vector<double>& ys,
                    const Eigen::MatrixXd& values, const std::vector<Series>& overlays) {
    Canvas c(axes);
    const auto nx = static_cast<double>(xs.size());
    const auto ny = static_cast<double>(ys.size());
    c.set_range({-0.5, nx - 0.5}, {-0.5, ny - 0.5});
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (std::isfinite(values(i))) {
            lo = std::min(lo, values(i));
            hi = std::max(hi, values(i));
        }
    if (!std::isfinite(lo)) lo = hi = 0.0;
    const double span = hi - lo > 1e-12 ? hi - lo : 1.0;
    const double cw = Canvas::plot_w() / nx;
    const double ch = Canvas::plot_h() / ny;
    for (Eigen::Index r = 0; r < values.rows(); ++r)
        for (Eigen::Index col = 0; col < values.cols(); ++col) {
            const double x = c.sx(static_cast<double>(col) - 0.5);
            const double y = c.sy(static_cast<double>(r) + 0.5);
            const double v = values(r, col);
            if (std::isfinite(v)) {
                c.rect(x, y, cw, ch, viridis((v - lo) / span));
            } else {
                c.rect(x, y, cw, ch, "#dddddd");
                c.line(x, y, x + cw, y + ch, "black");
                c.line(x, y + ch, x + cw, y, "black");
            }
        }
    c.frame();
    for (std::size_t k = 0; k < xs.size(); ++k)
        c.text(c.sx(static_cast<double>(k)), kTop + Canvas::plot_h() + 16, num(xs[k]), "middle");
    for (std::size_t k = 0; k < ys.size(); ++k) c.text(kLeft - 6, c.sy(static_cast<double>(k)) + 4, num(ys[k]), "end");

    std::vector<std::string> names;
    for (std::size_t i = 0; i < overlays.size(); ++i) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t k = 0; k < std::min(overlays[i].x.size(), overlays[i].y.size()); ++k) {
            const double x = overlays[i].x[k];
            const double y = overlays[i].y[k];
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if (x < xs.front() || x > xs.back() || y < ys.front() || y > ys.back()) continue;
            pts.emplace_back(c.sx(cell_coordinate(xs, x)), c.sy(cell_coordinate(ys, y)));
        }
        c.polyline(pts, i == 0 ? "white" : "#ff4040", "6,3");
        names.push_back(overlays[i].name);
    }
    // Colour bar.
    const double bx = kWidth - kRight + 20;
    for (int k = 0; k < 50; ++k) {
        const double t = k / 49.0;
        c.rect(bx, kTop + Canvas::plot_h() * (1.0 - t) - Canvas::plot_h() / 50.0, 14, Canvas::plot_h() / 50.0 + 0.5,
               viridis(t));
    }
    c.text(bx + 18, kTop + 8, num(hi));
    c.text(bx + 18, kTop + Canvas::plot_h(), num(lo));
    for (std::size_t i = 0; i < names.size(); ++i)
        c.text(bx - 10, kTop + Canvas::plot_h() + 30 + 12.0 * static_cast<double>(i),
               (i == 0 ? "white dashed: " : "red dashed: ") + names[i]);
    return c.finish();
}

}  // namespace fibernet::svg
