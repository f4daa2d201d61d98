#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "canaudit/audit.hpp"
#include "canaudit/errors.hpp"

namespace canaudit::audit {

namespace {

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(2);
    ss << std::fixed << v;
    return ss.str();
}

// ROC operating points (fpr, tpr), threshold descending.
std::vector<std::pair<double, double>> roc_points(const std::vector<TrialRecord>& trials) {
    std::vector<std::pair<double, bool>> entries;
    std::size_t np = 0;
    std::size_t nn = 0;
    for (const auto& t : trials) {
        entries.emplace_back(t.s_t, t.regime == 1);
        (t.regime == 1 ? np : nn) += 1;
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t i = 0;
    while (i < entries.size()) {
        std::size_t j = i;
        while (j < entries.size() && entries[j].first == entries[i].first) {
            if (entries[j].second) ++tp;
            else ++fp;
            ++j;
        }
        pts.emplace_back(static_cast<double>(fp) / static_cast<double>(nn),
                         static_cast<double>(tp) / static_cast<double>(np));
        i = j;
    }
    return pts;
}

}  // namespace

void write_report_svg(const std::filesystem::path& path, const DetectionReport& r) {
    if (r.trials.empty()) throw InvariantError("cannot plot an empty report");

    // Layout: histogram panel (left), ROC panel (right).
    const double W = 880;
    const double H = 360;
    const double panel_w = 380;
    const double panel_h = 280;
    const double m = 50;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";

    // --- histogram of s_t per regime ---
    double lo = r.trials[0].s_t;
    double hi = lo;
    for (const auto& t : r.trials) {
        lo = std::min(lo, t.s_t);
        hi = std::max(hi, t.s_t);
    }
    if (hi == lo) hi = lo + 1e-9;
    const int bins = 20;
    std::vector<int> h0(bins, 0);
    std::vector<int> h1(bins, 0);
    for (const auto& t : r.trials) {
        int b = static_cast<int>(std::floor((t.s_t - lo) / (hi - lo) * bins));
        b = std::clamp(b, 0, bins - 1);
        (t.regime == 1 ? h1 : h0)[static_cast<std::size_t>(b)] += 1;
    }
    int peak = 1;
    for (int i = 0; i < bins; ++i) peak = std::max({peak, h0[static_cast<std::size_t>(i)], h1[static_cast<std::size_t>(i)]});

    const double bw = panel_w / bins;
    for (int i = 0; i < bins; ++i) {
        const double x = m + i * bw;
        const double v0 = panel_h * h0[static_cast<std::size_t>(i)] / peak;
        const double v1 = panel_h * h1[static_cast<std::size_t>(i)] / peak;
        svg << "<rect x=\"" << x << "\" y=\"" << m + panel_h - v0 << "\" width=\"" << bw * 0.45
            << "\" height=\"" << v0 << "\" fill=\"#4878a8\" opacity=\"0.8\"/>\n";
        svg << "<rect x=\"" << x + bw * 0.45 << "\" y=\"" << m + panel_h - v1 << "\" width=\""
            << bw * 0.45 << "\" height=\"" << v1 << "\" fill=\"#c44e52\" opacity=\"0.8\"/>\n";
    }
    svg << "<rect x=\"" << m << "\" y=\"" << m << "\" width=\"" << panel_w << "\" height=\""
        << panel_h << "\" fill=\"none\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << m << "\" y=\"" << m - 12
        << "\">Amplification scores (blue compliant, red violating)</text>\n";
    svg << "<text x=\"" << m << "\" y=\"" << m + panel_h + 18 << "\">" << fmt(lo)
        << "</text>\n";
    svg << "<text x=\"" << m + panel_w - 30 << "\" y=\"" << m + panel_h + 18 << "\">" << fmt(hi)
        << "</text>\n";

    // --- ROC curve ---
    const double rx = m + panel_w + 70;
    svg << "<rect x=\"" << rx << "\" y=\"" << m << "\" width=\"" << panel_w << "\" height=\""
        << panel_h << "\" fill=\"none\" stroke=\"#333\"/>\n";
    svg << "<line x1=\"" << rx << "\" y1=\"" << m + panel_h << "\" x2=\"" << rx + panel_w
        << "\" y2=\"" << m << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
    svg << "<polyline fill=\"none\" stroke=\"#c44e52\" stroke-width=\"2\" points=\"";
    for (const auto& [fpr, tpr] : roc_points(r.trials)) {
        svg << rx + fpr * panel_w << ',' << m + panel_h - tpr * panel_h << ' ';
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << rx << "\" y=\"" << m - 12 << "\">ROC (AUROC = " << fmt(r.auroc)
        << ", TPR@FPR&#8804;" << fmt(r.fpr_max) << " = " << fmt(r.tpr_at_fpr) << ")</text>\n";
    svg << "<text x=\"" << rx << "\" y=\"" << m + panel_h + 18 << "\">FPR</text>\n";
    svg << "<text x=\"" << rx - 30 << "\" y=\"" << m + 10 << "\">TPR</text>\n";
    svg << "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << svg.str();
}

}  // namespace canaudit::audit
