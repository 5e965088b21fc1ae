#include "vitalcast/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vitalcast/error.hpp"

namespace vitalcast {

namespace {

struct Rgb {
    int r, g, b;
};

constexpr Rgb kStops[5] = {
    {0x44, 0x01, 0x54}, // 0.00
    {0x3b, 0x52, 0x8b}, // 0.25
    {0x21, 0x91, 0x8c}, // 0.50
    {0x5e, 0xc9, 0x62}, // 0.75
    {0xfd, 0xe7, 0x25}, // 1.00
};

constexpr int kCell = 10;      // px per heatmap cell
constexpr int kLeft = 46;      // room for the forecast-step axis labels
constexpr int kTitleBand = 22; // per-panel title strip
constexpr int kPanelGap = 26;  // leaves room for the history-step axis label

} // namespace

std::string ramp_color(double v) {
    if (std::isnan(v)) v = 0.0;
    v = std::clamp(v, 0.0, 1.0);
    const double scaled = v * 4.0;
    const std::size_t lo = std::min<std::size_t>(3, static_cast<std::size_t>(scaled));
    const double t = scaled - static_cast<double>(lo);
    const Rgb& a = kStops[lo];
    const Rgb& b = kStops[lo + 1];
    auto mix = [t](int x, int y) {
        return static_cast<int>(std::lround(x + t * (y - x)));
    };
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", mix(a.r, b.r), mix(a.g, b.g),
                  mix(a.b, b.b));
    return buf;
}

std::string attention_svg(const AttentionArtifacts& art,
                          const std::vector<std::string>& series_names) {
    const std::size_t n = art.channels;
    const std::size_t horizon = art.horizon;
    const std::size_t history = art.history;
    if (series_names.size() != n)
        throw UsageError("need one series name per channel: " +
                         std::to_string(series_names.size()) + " names for " +
                         std::to_string(n) + " channels");

    const int grid_w = static_cast<int>(history) * kCell;
    const int grid_h = static_cast<int>(horizon) * kCell;
    const int panel_h = kTitleBand + grid_h + kPanelGap;
    const int legend_h = 40;
    // Wide enough for the legend text even when the grid itself is tiny.
    const int width = std::max(kLeft + grid_w + 14, kLeft + 41 * 4 + 430);
    const int height = static_cast<int>(n) * panel_h + legend_h;

    std::string svg;
    svg.reserve(n * horizon * history * 64);
    char buf[256];
    auto emit = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof(buf), fmt, args...);
        svg += buf;
    };

    emit("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
         "viewBox=\"0 0 %d %d\">\n",
         width, height, width, height);
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t i = 0; i < n; ++i) {
        const int top = static_cast<int>(i) * panel_h;
        double max_v = 0.0;
        for (std::size_t h = 0; h < horizon; ++h)
            for (std::size_t l = 0; l < history; ++l)
                max_v = std::max(max_v, art.map_at(i, h, l));

        emit("<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"13\">"
             "attention map, series %s</text>\n",
             kLeft, top + 15, series_names[i].c_str());
        for (std::size_t h = 0; h < horizon; ++h) {
            for (std::size_t l = 0; l < history; ++l) {
                const double v = max_v > 0.0 ? art.map_at(i, h, l) / max_v : 0.0;
                emit("<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\"/>\n",
                     kLeft + static_cast<int>(l) * kCell,
                     top + kTitleBand + static_cast<int>(h) * kCell, kCell, kCell,
                     ramp_color(v).c_str());
            }
        }
        emit("<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"10\" "
             "text-anchor=\"end\">forecast&#8595;</text>\n",
             kLeft - 4, top + kTitleBand + 12);
        emit("<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"10\">"
             "history step&#8594;</text>\n",
             kLeft, top + kTitleBand + grid_h + 14);
    }

    const int legend_top = static_cast<int>(n) * panel_h + 6;
    for (int s = 0; s <= 40; ++s) {
        emit("<rect x=\"%d\" y=\"%d\" width=\"4\" height=\"12\" fill=\"%s\"/>\n",
             kLeft + s * 4, legend_top, ramp_color(s / 40.0).c_str());
    }
    emit("<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"11\">"
         "dark = low attention, bright = high attention (each panel scaled by its own "
         "max)</text>\n",
         kLeft + 41 * 4 + 8, legend_top + 10);

    svg += "</svg>\n";
    return svg;
}

} // namespace vitalcast
