#include "polycl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

namespace polycl {

using nlohmann::json;

double dice_score(const Mask2D& a, const Mask2D& b) {
    if (!a.same_shape(b)) throw ShapeMismatchError("dice_score: mask shapes differ");
    size_t inter = 0, ca = 0, cb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        ca += a.data[i];
        cb += b.data[i];
        inter += static_cast<size_t>(a.data[i] & b.data[i]);
    }
    if (ca + cb == 0) return 1.0;  // both empty
    return 2.0 * double(inter) / double(ca + cb);
}

double dice_score_stack(const std::vector<Mask2D>& a, const std::vector<Mask2D>& b) {
    if (a.size() != b.size()) throw ShapeMismatchError("dice_score_stack: stack depths differ");
    size_t inter = 0, ca = 0, cb = 0;
    for (size_t k = 0; k < a.size(); ++k) {
        if (!a[k].same_shape(b[k])) throw ShapeMismatchError("dice_score_stack: slice shapes differ");
        for (size_t i = 0; i < a[k].size(); ++i) {
            ca += a[k].data[i];
            cb += b[k].data[i];
            inter += static_cast<size_t>(a[k].data[i] & b[k].data[i]);
        }
    }
    if (ca + cb == 0) return 1.0;
    return 2.0 * double(inter) / double(ca + cb);
}

PointSet3 foreground_points(const Mask2D& m, float z) {
    PointSet3 ps;
    for (int r = 0; r < m.height; ++r)
        for (int c = 0; c < m.width; ++c)
            if (m.at(r, c)) ps.pts.push_back({float(r), float(c), z});
    return ps;
}

PointSet3 foreground_points_stack(const std::vector<Mask2D>& stack) {
    PointSet3 ps;
    for (size_t k = 0; k < stack.size(); ++k) {
        const auto& m = stack[k];
        for (int r = 0; r < m.height; ++r)
            for (int c = 0; c < m.width; ++c)
                if (m.at(r, c)) ps.pts.push_back({float(r), float(c), float(k)});
    }
    return ps;
}

namespace {

double sq_dist(const std::array<float, 3>& a, const std::array<float, 3>& b) {
    const double d0 = double(a[0]) - b[0], d1 = double(a[1]) - b[1], d2 = double(a[2]) - b[2];
    return d0 * d0 + d1 * d1 + d2 * d2;
}

// Directed Hausdorff max_a min_b d(a,b), exact. The inner scan stops as soon
// as a point's running minimum falls below the current maximum, since such a
// point can no longer raise the result.
double directed_hausdorff_sq(const PointSet3& a, const PointSet3& b) {
    double max_min = 0.0;
    for (const auto& pa : a.pts) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& pb : b.pts) {
            const double d = sq_dist(pa, pb);
            if (d < best) {
                best = d;
                if (best <= max_min) break;
            }
        }
        if (best > max_min) max_min = best;
    }
    return max_min;
}

}  // namespace

std::optional<double> hausdorff_points(const PointSet3& a, const PointSet3& b) {
    if (a.pts.empty() || b.pts.empty()) return std::nullopt;
    const double d = std::max(directed_hausdorff_sq(a, b), directed_hausdorff_sq(b, a));
    return std::sqrt(d);
}

std::optional<double> hausdorff(const Mask2D& a, const Mask2D& b) {
    if (!a.same_shape(b)) throw ShapeMismatchError("hausdorff: mask shapes differ");
    return hausdorff_points(foreground_points(a), foreground_points(b));
}

TTestResult paired_ttest_one_tailed(const std::vector<double>& x, const std::vector<double>& y,
                                    TailDirection direction) {
    if (x.size() != y.size()) throw ShapeMismatchError("paired_ttest: sample sizes differ");
    if (x.size() < 2) throw InvalidArgumentError("paired_ttest: need at least 2 pairs");

    const size_t n = x.size();
    std::vector<double> d(n);
    for (size_t i = 0; i < n; ++i) d[i] = x[i] - y[i];
    const double md = mean_of(d);
    double ss = 0.0;
    for (double v : d) ss += (v - md) * (v - md);
    const double var = ss / double(n - 1);

    TTestResult res;
    res.dof = static_cast<int>(n) - 1;
    if (var <= 0.0) {
        res.degenerate = true;
        res.t = 0.0;
        res.p = 1.0;
        return res;
    }
    res.t = md / std::sqrt(var / double(n));
    const boost::math::students_t dist(double(res.dof));
    const double cdf = boost::math::cdf(dist, res.t);
    res.p = direction == TailDirection::XGreaterThanY ? 1.0 - cdf : cdf;
    return res;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double population_std(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / double(v.size()));
}

void EvalReport::recompute_aggregates() {
    std::vector<double> dices, hds;
    hd_excluded = 0;
    for (const auto& s : per_scan) {
        dices.push_back(s.dice);
        if (s.hausdorff)
            hds.push_back(*s.hausdorff);
        else
            ++hd_excluded;
    }
    mean_dice = mean_of(dices);
    std_dice = population_std(dices);
    mean_hd = mean_of(hds);
    std_hd = population_std(hds);
}

std::string EvalReport::to_json() const {
    json j;
    j["header"] = header;
    j["runs"] = runs;
    j["per_scan"] = json::array();
    for (const auto& s : per_scan) {
        json row;
        row["scan_id"] = s.scan_id;
        row["dice"] = s.dice;
        if (s.hausdorff)
            row["hausdorff"] = *s.hausdorff;
        else
            row["hausdorff"] = "undefined";
        j["per_scan"].push_back(row);
    }
    j["aggregate"] = {{"mean_dice", mean_dice},
                      {"std_dice", std_dice},
                      {"mean_hd", mean_hd},
                      {"std_hd", std_hd},
                      {"hd_excluded", hd_excluded}};
    return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
    const json j = json::parse(text);
    EvalReport r;
    r.header = j.value("header", "");
    r.runs = j.value("runs", 1);
    for (const auto& row : j.at("per_scan")) {
        ScanScore s;
        s.scan_id = row.at("scan_id").get<std::string>();
        s.dice = row.at("dice").get<double>();
        if (row.at("hausdorff").is_number()) s.hausdorff = row.at("hausdorff").get<double>();
        r.per_scan.push_back(std::move(s));
    }
    r.recompute_aggregates();
    return r;
}

std::string EvalReport::to_csv() const {
    std::string out = "scan_id,dice,hausdorff\n";
    for (const auto& s : per_scan) {
        out += s.scan_id + "," + std::to_string(s.dice) + ",";
        out += s.hausdorff ? std::to_string(*s.hausdorff) : std::string("undefined");
        out += "\n";
    }
    return out;
}

void write_bar_chart_svg(const std::string& path, const std::string& title,
                         const std::vector<BarChartSeries>& series) {
    const int w = 120 * std::max<int>(1, int(series.size())) + 100;
    const int h = 320, base = 260, top = 40;
    double vmax = 1e-9;
    for (const auto& s : series) vmax = std::max(vmax, s.mean + s.stddev);

    std::ofstream f(path);
    if (!f) throw Error("write_bar_chart_svg: cannot open " + path);
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    f << "<text x='" << w / 2 << "' y='20' text-anchor='middle' font-size='14'>" << title
      << "</text>\n";
    f << "<line x1='50' y1='" << base << "' x2='" << w - 20 << "' y2='" << base
      << "' stroke='black'/>\n";
    for (size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const double scale = (base - top) / vmax;
        const int x = 70 + int(i) * 120;
        const int bh = std::max(1, int(s.mean * scale));
        f << "<rect x='" << x << "' y='" << base - bh << "' width='60' height='" << bh
          << "' fill='#4878a8'/>\n";
        const int ey0 = base - int((s.mean + s.stddev) * scale);
        const int ey1 = base - int(std::max(0.0, s.mean - s.stddev) * scale);
        f << "<line x1='" << x + 30 << "' y1='" << ey0 << "' x2='" << x + 30 << "' y2='" << ey1
          << "' stroke='black'/>\n";
        f << "<text x='" << x + 30 << "' y='" << base + 16 << "' text-anchor='middle' font-size='11'>"
          << s.label << "</text>\n";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", s.mean);
        f << "<text x='" << x + 30 << "' y='" << base - bh - 6
          << "' text-anchor='middle' font-size='10'>" << buf << "</text>\n";
    }
    f << "</svg>\n";
}

}  // namespace polycl
