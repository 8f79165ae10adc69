#include "topoderiv/table_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace topoderiv {

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write: " + path);
}

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string csv_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    if (columns.empty()) throw std::invalid_argument("write_csv: no columns");
    std::string text;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) text += ',';
        text += columns[c];
    }
    text += '\n';
    for (const auto& row : rows) {
        if (row.size() != columns.size())
            throw std::invalid_argument("write_csv: row width differs from header");
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) text += ',';
            if (!std::isnan(row[c])) text += csv_number(row[c]);
        }
        text += '\n';
    }
    write_file(path, text);
}

void write_sweep_csv(const std::string& path, const SweepCurve& curve) {
    std::vector<std::vector<double>> rows;
    for (const SweepPoint& pt : curve.points)
        rows.push_back({pt.eps, pt.samples.j_eps, pt.h, static_cast<double>(pt.scalar_dofs),
                        pt.residual});
    write_csv(path, {"eps", "j", "h", "dofs", "residual"}, rows);
}

void write_sweep_baseline_csv(const std::string& path, const SweepCurve& curve) {
    std::vector<std::vector<double>> rows;
    for (const SweepPoint& pt : curve.points) rows.push_back({pt.eps, pt.samples.j0});
    write_csv(path, {"eps", "j0"}, rows);
}

void write_rate_csv(const std::string& path, const RateReport& report) {
    if (report.values.size() != report.eps.size())
        throw std::invalid_argument("write_rate_csv: malformed report");
    std::vector<std::vector<double>> rows;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < report.eps.size(); ++i) {
        const double slope = i == 0 || report.pair_slopes.size() + 1 != report.eps.size()
                                 ? nan
                                 : report.pair_slopes[i - 1];
        rows.push_back({report.eps[i], report.values[i], slope});
    }
    write_csv(path, {"eps", "value", "slope"}, rows);
}

void write_loglog_svg(const std::string& path, const std::string& title,
                      const std::vector<PlotSeries>& series) {
    constexpr double kW = 720, kH = 540, kL = 70, kR = 30, kT = 45, kB = 55;
    const double plot_w = kW - kL - kR;
    const double plot_h = kH - kT - kB;

    // Log-scale bounds over the positive magnitudes of all series.
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const PlotSeries& s : series) {
        if (s.x.size() != s.y.size())
            throw std::invalid_argument("write_loglog_svg: series size mismatch: " + s.name);
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double ax = std::abs(s.x[i]), ay = std::abs(s.y[i]);
            if (ax <= 0.0 || ay <= 0.0) continue;
            x_lo = std::min(x_lo, std::log10(ax));
            x_hi = std::max(x_hi, std::log10(ax));
            y_lo = std::min(y_lo, std::log10(ay));
            y_hi = std::max(y_hi, std::log10(ay));
        }
    }
    if (!(x_lo <= x_hi)) {
        x_lo = y_lo = -1.0;
        x_hi = y_hi = 1.0;
    }
    auto pad = [](double& lo, double& hi) {
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double margin = 0.05 * (hi - lo);
        lo -= margin;
        hi += margin;
    };
    pad(x_lo, x_hi);
    pad(y_lo, y_hi);

    auto px = [&](double lx) { return kL + (lx - x_lo) / (x_hi - x_lo) * plot_w; };
    auto py = [&](double ly) { return kT + (y_hi - ly) / (y_hi - y_lo) * plot_h; };

    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};
    constexpr int kNumColors = 6;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"540\" "
           "viewBox=\"0 0 720 540\">\n";
    svg += "<rect width=\"720\" height=\"540\" fill=\"white\"/>\n";
    svg += "<text x=\"360\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"15\">" +
           title + "</text>\n";

    // Decade grid and tick labels.
    for (int d = static_cast<int>(std::ceil(x_lo)); d <= static_cast<int>(std::floor(x_hi));
         ++d) {
        const double x = px(d);
        svg += "<line x1=\"" + fixed2(x) + "\" y1=\"" + fixed2(kT) + "\" x2=\"" + fixed2(x) +
               "\" y2=\"" + fixed2(kT + plot_h) + "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + fixed2(x) + "\" y=\"" + fixed2(kT + plot_h + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e" +
               std::to_string(d) + "</text>\n";
    }
    for (int d = static_cast<int>(std::ceil(y_lo)); d <= static_cast<int>(std::floor(y_hi));
         ++d) {
        const double y = py(d);
        svg += "<line x1=\"" + fixed2(kL) + "\" y1=\"" + fixed2(y) + "\" x2=\"" +
               fixed2(kL + plot_w) + "\" y2=\"" + fixed2(y) + "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + fixed2(kL - 6) + "\" y=\"" + fixed2(y + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" +
               std::to_string(d) + "</text>\n";
    }
    svg += "<rect x=\"" + fixed2(kL) + "\" y=\"" + fixed2(kT) + "\" width=\"" + fixed2(plot_w) +
           "\" height=\"" + fixed2(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % kNumColors];
        std::string d;
        std::string markers;
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            const double ax = std::abs(series[s].x[i]), ay = std::abs(series[s].y[i]);
            if (ax <= 0.0 || ay <= 0.0) continue;
            const double x = px(std::log10(ax)), y = py(std::log10(ay));
            d += (d.empty() ? "M" : " L") + std::string(" ") + fixed2(x) + " " + fixed2(y);
            markers += "<circle cx=\"" + fixed2(x) + "\" cy=\"" + fixed2(y) +
                       "\" r=\"3\" fill=\"" + color + "\"/>\n";
        }
        if (!d.empty())
            svg += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + color +
                   "\" stroke-width=\"1.5\"/>\n";
        svg += markers;

        const double ly = kT + 16 + 16 * static_cast<double>(s);
        svg += "<line x1=\"" + fixed2(kL + 10) + "\" y1=\"" + fixed2(ly - 4) + "\" x2=\"" +
               fixed2(kL + 34) + "\" y2=\"" + fixed2(ly - 4) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + fixed2(kL + 40) + "\" y=\"" + fixed2(ly) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + series[s].name +
               "</text>\n";
    }
    svg += "</svg>\n";
    write_file(path, svg);
}

}  // namespace topoderiv
