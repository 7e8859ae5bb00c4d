#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "polycl/image.hpp"

namespace polycl {

// Hard-set Dice over binary masks; both-empty pairs score 1.0 by convention.
double dice_score(const Mask2D& a, const Mask2D& b);

// 3D variant over stacked slices (slice index is the third coordinate).
double dice_score_stack(const std::vector<Mask2D>& a, const std::vector<Mask2D>& b);

// Point set for Hausdorff computations: foreground coordinates, z in slice
// units (pixel-unit convention throughout; callers may rescale by spacing).
struct PointSet3 {
    std::vector<std::array<float, 3>> pts;
};

PointSet3 foreground_points(const Mask2D& m, float z = 0.f);
PointSet3 foreground_points_stack(const std::vector<Mask2D>& stack);

// Symmetric (max) Hausdorff distance in pixel units. Empty point set on
// either side yields nullopt; aggregation treats that as a counted
// exclusion rather than a penalty value.
std::optional<double> hausdorff(const Mask2D& a, const Mask2D& b);
std::optional<double> hausdorff_points(const PointSet3& a, const PointSet3& b);

enum class TailDirection { XGreaterThanY, XLessThanY };

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    int dof = 0;
    bool degenerate = false;  // zero-variance differences
};

// One-tailed paired Student t-test on the differences x - y.
TTestResult paired_ttest_one_tailed(const std::vector<double>& x, const std::vector<double>& y,
                                    TailDirection direction);

struct ScanScore {
    std::string scan_id;
    double dice = 0.0;
    std::optional<double> hausdorff;
};

struct EvalReport {
    std::vector<ScanScore> per_scan;
    double mean_dice = 0.0, std_dice = 0.0;
    double mean_hd = 0.0, std_hd = 0.0;
    int hd_excluded = 0;  // scans whose Hausdorff was undefined
    int runs = 1;
    std::string header;  // metric conventions, stated once per report

    void recompute_aggregates();
    std::string to_json() const;
    static EvalReport from_json(const std::string& text);
    std::string to_csv() const;
};

// Population mean/std helpers (the reporting convention for repeats).
double mean_of(const std::vector<double>& v);
double population_std(const std::vector<double>& v);

// Grouped bar chart (one group per model, mean +/- std whiskers) as SVG.
struct BarChartSeries {
    std::string label;
    double mean = 0.0;
    double stddev = 0.0;
};
void write_bar_chart_svg(const std::string& path, const std::string& title,
                         const std::vector<BarChartSeries>& series);

}  // namespace polycl
