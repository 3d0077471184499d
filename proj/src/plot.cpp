#include "latgm/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "latgm/io.hpp"

namespace latgm::plot {

namespace {

constexpr double kWidth = 800;
constexpr double kHeight = 600;
constexpr double kLeft = 80;
constexpr double kRight = 170;  // legend column
constexpr double kTop = 50;
constexpr double kBottom = 70;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b",
                                "#e377c2", "#17becf", "#bcbd22", "#7f7f7f", "#d62728"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Axis {
    double lo = 0;
    double hi = 1;
    bool log10 = false;
    std::string title;

    double transform(double v) const { return log10 ? std::log10(v) : v; }
};

// Tick positions in data units (already transformed for log axes).
std::vector<double> ticks(double lo, double hi, bool log_axis) {
    std::vector<double> t;
    if (log_axis) {
        for (double e = std::ceil(lo - 1e-9); e <= hi + 1e-9; e += 1.0) t.push_back(e);
        if (t.size() >= 2) return t;
        return {lo, hi};
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        step = m * mag;
        if (span / step <= 6.0) break;
    }
    for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + 1e-9 * span; v += step) {
        t.push_back(std::fabs(v) < 1e-12 * span ? 0.0 : v);
    }
    return t;
}

class Canvas {
public:
    Canvas(std::string title, Axis x, Axis y) : x_(std::move(x)), y_(std::move(y)) {
        body_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"600\" "
                 "viewBox=\"0 0 800 600\" font-family=\"sans-serif\" font-size=\"12pt\">\n";
        body_ += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
        body_ += "<text x=\"" + num(kLeft + plot_w() / 2) + "\" y=\"28\" text-anchor=\"middle\">" + escape(title) +
                 "</text>\n";
        draw_axes();
    }

    double px(double v) const { return kLeft + (x_.transform(v) - x_.lo) / (x_.hi - x_.lo) * plot_w(); }
    double py(double v) const { return kTop + plot_h() - (y_.transform(v) - y_.lo) / (y_.hi - y_.lo) * plot_h(); }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color) {
        if (pts.empty()) return;
        std::string p;
        for (const auto& [x, y] : pts) p += (p.empty() ? "" : " ") + num(px(x)) + "," + num(py(y));
        body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"" + p + "\"/>\n";
        for (const auto& [x, y] : pts) marker(x, y, color, 2.5);
    }

    void marker(double x, double y, const std::string& color, double r) {
        body_ += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"" + num(r) + "\" fill=\"" + color +
                 "\"/>\n";
    }

    void legend(const std::string& text, const std::string& color, bool dot = false) {
        const double y = kTop + 10 + 22.0 * static_cast<double>(legend_rows_++);
        const double x = kWidth - kRight + 20;
        if (dot) {
            body_ += "<circle cx=\"" + num(x + 12) + "\" cy=\"" + num(y) + "\" r=\"5\" fill=\"" + color + "\"/>\n";
        } else {
            body_ += "<line x1=\"" + num(x) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x + 24) + "\" y2=\"" + num(y) +
                     "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        }
        body_ += "<text x=\"" + num(x + 32) + "\" y=\"" + num(y + 5) + "\">" + escape(text) + "</text>\n";
    }

    std::string finish() {
        body_ += "</svg>\n";
        return body_;
    }

private:
    static double plot_w() { return kWidth - kLeft - kRight; }
    static double plot_h() { return kHeight - kTop - kBottom; }

    void draw_axes() {
        const double x0 = kLeft;
        const double x1 = kLeft + plot_w();
        const double y0 = kTop + plot_h();
        const double y1 = kTop;
        body_ += "<rect x=\"" + num(x0) + "\" y=\"" + num(y1) + "\" width=\"" + num(plot_w()) + "\" height=\"" +
                 num(plot_h()) + "\" fill=\"none\" stroke=\"black\"/>\n";
        for (double t : ticks(x_.lo, x_.hi, x_.log10)) {
            const double x = kLeft + (t - x_.lo) / (x_.hi - x_.lo) * plot_w();
            const double shown = x_.log10 ? std::pow(10.0, t) : t;
            body_ += "<line x1=\"" + num(x) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x) + "\" y2=\"" + num(y0 + 6) +
                     "\" stroke=\"black\"/>\n";
            body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y0 + 22) + "\" text-anchor=\"middle\">" + label(shown) +
                     "</text>\n";
        }
        for (double t : ticks(y_.lo, y_.hi, y_.log10)) {
            const double y = kTop + plot_h() - (t - y_.lo) / (y_.hi - y_.lo) * plot_h();
            body_ += "<line x1=\"" + num(x0 - 6) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y) +
                     "\" stroke=\"black\"/>\n";
            body_ += "<text x=\"" + num(x0 - 10) + "\" y=\"" + num(y + 5) + "\" text-anchor=\"end\">" + label(t) +
                     "</text>\n";
        }
        body_ += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 20) + "\" text-anchor=\"middle\">" +
                 escape(x_.title) + "</text>\n";
        body_ += "<text x=\"20\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
                 num((y0 + y1) / 2) + ")\">" + escape(y_.title) + "</text>\n";
    }

    Axis x_;
    Axis y_;
    std::string body_;
    int legend_rows_ = 0;
};

using Series = std::map<NuclearWeight, std::vector<Aggregate>>;

Series by_mu(const std::vector<Aggregate>& aggregates) {
    Series s;
    for (const auto& a : aggregates) s[a.mu].push_back(a);
    for (auto& [mu, v] : s) {
        std::sort(v.begin(), v.end(), [](const Aggregate& a, const Aggregate& b) { return a.lambda < b.lambda; });
    }
    return s;
}

std::string color_for(NuclearWeight mu, std::size_t index) {
    return mu.is_infinite() ? "black" : kPalette[index % std::size(kPalette)];
}

std::string mu_label(NuclearWeight mu) { return "mu=" + (mu.is_infinite() ? std::string("inf") : label(mu.value())); }

Axis unit_axis(std::string title) { return Axis{0.0, 1.0, false, std::move(title)}; }

}  // namespace

std::string rank_panel(const std::vector<Aggregate>& aggregates) {
    double lo = 1.0;
    double hi = 1.0;
    double rmax = 1.0;
    if (!aggregates.empty()) {
        lo = hi = aggregates.front().lambda;
        for (const auto& a : aggregates) {
            lo = std::min(lo, a.lambda);
            hi = std::max(hi, a.lambda);
            rmax = std::max(rmax, a.rank_XL);
        }
    }
    Axis x{std::log10(lo), std::log10(hi), true, "lambda"};
    if (x.hi - x.lo < 1e-12) {
        x.lo -= 0.5;
        x.hi += 0.5;
    }
    Canvas c("Mean rank of X L_hat", x, Axis{0.0, std::ceil(rmax * 1.05), false, "mean rank(X L_hat)"});
    std::size_t idx = 0;
    for (const auto& [mu, pts] : by_mu(aggregates)) {
        std::vector<std::pair<double, double>> xy;
        for (const auto& a : pts) xy.emplace_back(a.lambda, a.rank_XL);
        const auto color = color_for(mu, idx);
        c.polyline(xy, color);
        c.legend(mu_label(mu), color);
        if (!mu.is_infinite()) ++idx;
    }
    return c.finish();
}

std::string power_fdr_panel(const std::vector<Aggregate>& aggregates) {
    Canvas c("Power versus FDR", unit_axis("FDR"), unit_axis("power"));
    std::size_t idx = 0;
    for (const auto& [mu, pts] : by_mu(aggregates)) {
        std::vector<std::pair<double, double>> xy;
        for (const auto& a : pts) xy.emplace_back(a.fdr, a.power);
        const auto color = color_for(mu, idx);
        c.polyline(xy, color);
        c.legend(mu_label(mu), color);
        if (!mu.is_infinite()) ++idx;
    }
    return c.finish();
}

std::string rank_matched_panel(const std::vector<Aggregate>& aggregates, double h, double tol) {
    Canvas c("Rank-matched cells (mean rank near " + label(h) + ")", unit_axis("FDR"), unit_axis("power"));
    const auto series = by_mu(aggregates);
    if (const auto it = series.find(NuclearWeight::infinite()); it != series.end()) {
        std::vector<std::pair<double, double>> xy;
        for (const auto& a : it->second) xy.emplace_back(a.fdr, a.power);
        c.polyline(xy, "black");
        c.legend("mu=inf", "black");
    }
    bool any = false;
    for (const auto& a : select_rank_matched(aggregates, h, tol)) {
        if (a.mu.is_infinite()) continue;
        c.marker(a.fdr, a.power, "red", 5.0);
        any = true;
    }
    if (any) c.legend("rank matched", "red", true);
    return c.finish();
}

void write_panels(const std::filesystem::path& dir, const std::vector<Aggregate>& aggregates, double h, double tol) {
    io::write_text(dir / kRankPanel, rank_panel(aggregates));
    io::write_text(dir / kPowerFdrPanel, power_fdr_panel(aggregates));
    io::write_text(dir / kRankMatchedPanel, rank_matched_panel(aggregates, h, tol));
}

}  // namespace latgm::plot
