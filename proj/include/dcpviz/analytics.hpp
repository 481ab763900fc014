#pragma once

#include "dcpviz/error.hpp"
#include "dcpviz/grid.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dcpviz::analytics {

using grid::ClimateVariable;
using grid::Scenario;
using grid::Season;
using grid::YearMonth;

enum class Errc {
    AxisMismatch,
    IncompleteSeason,
    IncompleteYear,
    IncompleteWindow,
    InvalidWindow,
    ZeroBaseline,
    NoCommonYears,
    BadCsv,
};

std::string to_code(Errc errc);

using AnalyticsError = ModuleError<Errc>;

// Monthly regional means X_r(y, m) for one region, variable, model and
// scenario. A projection series may also hold the historical years that lead
// into it, so retrospective windows can be evaluated against it.
struct RegionalSeries {
    int region_id = 0;
    ClimateVariable variable = ClimateVariable::Pr;
    std::string model;
    Scenario scenario = Scenario::Historical;
    std::map<YearMonth, double> entries;
    std::map<YearMonth, std::size_t> cell_counts;

    // cell_count must be positive.
    void add(int year, int month, double value, std::size_t cell_count);
    std::optional<double> find(int year, int month) const;
    // Monthly value or the given error.
    double at(int year, int month, Errc missing_errc) const;
    std::vector<int> years() const;
};

struct RegionStat {
    double value = 0.0;
    std::size_t cell_count = 0;
};

struct MeanOptions {
    // Weight cells by cos(latitude). Off by default: plain cell averages.
    bool area_weighted = false;
};

// Mean over unmasked cells of each region; regions without any valid cell are
// absent from the result.
std::map<int, RegionStat> regional_monthly_mean(const grid::GridSnapshot& snapshot, const grid::RegionMask& mask,
                                                const MeanOptions& options = {});

// Unweighted mean of the season's three monthly means.
double seasonal_mean(const RegionalSeries& series, int year, Season season);

// Unweighted mean of twelve monthly means.
double yearly_mean(const RegionalSeries& series, int year);

// Inclusive year range [t0, t1] used as the retrospective baseline.
struct RetroWindow {
    int t0 = 1985;
    int t1 = 2005;

    int delta_t() const noexcept { return t1 - t0 + 1; }
    void validate() const; // InvalidWindow unless t0 <= t1
    bool operator==(const RetroWindow&) const = default;
};

// Sum of X_r(y, m) over the window's years and the season's three months,
// divided by 3 * delta_t.
double retrospective_mean(const RegionalSeries& series, const RetroWindow& window, Season season);

struct AnomalyCell {
    int year = 0;
    int month = 0;
    int region_id = 0;
    double value = 0.0;
    double baseline = 0.0;
    double ri_signed = 0.0;    // (X - RM) / |RM|
    double ri_magnitude = 0.0; // |X - RM| / |RM|
};

// Throws ZeroBaseline when RM is exactly 0, IncompleteWindow when the baseline
// cannot be formed, IncompleteSeason when month (year, month) is absent.
AnomalyCell relative_intensity(const RegionalSeries& series, const RetroWindow& window, int year, int month);

// Relative intensity for every month of the series. Baselines are computed
// once per season; months whose baseline is zero come back undefined.
struct AnomalyRow {
    int year = 0;
    int month = 0;
    double value = 0.0;
    std::optional<AnomalyCell> anomaly; // empty when the baseline is zero
};

std::vector<AnomalyRow> anomaly_table(const RegionalSeries& series, const RetroWindow& window);

struct SpreadRow {
    int year = 0;
    std::map<Scenario, double> values;
    double min = 0.0;
    double max = 0.0;
};

// Seasonal means per scenario for every year in which all supplied scenarios
// have the full season, with the per-year envelope across scenarios.
std::vector<SpreadRow> scenario_spread(const std::vector<RegionalSeries>& per_scenario, Season season);

struct TreeNode {
    std::string name;
    double size = 0.0;
    double color = 0.0; // leaf: seasonal tasmax mean; inner: mean of children
    std::vector<TreeNode> children;
};

// region -> season -> year. Leaves need a complete season in both series.
TreeNode treemap_hierarchy(const std::vector<RegionalSeries>& pr, const std::vector<RegionalSeries>& tasmax,
                           int year_start, int year_end, const std::map<int, std::string>& region_names);

// CSV with columns region,variable,model,scenario,year,month,value,cell_count.
// Values use 17 significant digits so parsing restores them exactly.
std::string aggregate_csv(const std::vector<RegionalSeries>& series);
// Adds ri_signed,ri_magnitude,retro_start,retro_end (empty when undefined).
std::string anomaly_csv(const std::vector<RegionalSeries>& series, const RetroWindow& window);
// anomaly_csv rows for the single month `ym` of each series that has it;
// `scenario_label` replaces the scenario column (chained series carry
// historical months under a projection label).
std::string anomaly_csv_month(const std::vector<RegionalSeries>& series, const RetroWindow& window, YearMonth ym,
                              std::optional<Scenario> scenario_label = std::nullopt);
// Inverse of aggregate_csv; rows are grouped into series by
// (region, variable, model, scenario).
std::vector<RegionalSeries> parse_aggregate_csv(std::string_view text);

} // namespace dcpviz::analytics
