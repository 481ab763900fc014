#include "dcpviz/analytics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <tuple>

namespace dcpviz::analytics {

std::string to_code(Errc errc) {
    switch (errc) {
    case Errc::AxisMismatch: return "axis_mismatch";
    case Errc::IncompleteSeason: return "incomplete_season";
    case Errc::IncompleteYear: return "incomplete_year";
    case Errc::IncompleteWindow: return "incomplete_window";
    case Errc::InvalidWindow: return "invalid_window";
    case Errc::ZeroBaseline: return "zero_baseline";
    case Errc::NoCommonYears: return "no_common_years";
    case Errc::BadCsv: return "bad_csv";
    }
    return "unknown";
}

void RegionalSeries::add(int year, int month, double value, std::size_t cell_count) {
    if (cell_count == 0) throw AnalyticsError(Errc::BadCsv, "regional entry with zero contributing cells");
    if (month < 1 || month > 12) throw AnalyticsError(Errc::BadCsv, "month out of range");
    entries[{year, month}] = value;
    cell_counts[{year, month}] = cell_count;
}

std::optional<double> RegionalSeries::find(int year, int month) const {
    auto it = entries.find({year, month});
    if (it == entries.end()) return std::nullopt;
    return it->second;
}

double RegionalSeries::at(int year, int month, Errc missing_errc) const {
    auto it = entries.find({year, month});
    if (it == entries.end())
        throw AnalyticsError(missing_errc, "region " + std::to_string(region_id) + " has no value for " +
                                               std::to_string(year) + "-" + std::to_string(month));
    return it->second;
}

std::vector<int> RegionalSeries::years() const {
    std::vector<int> out;
    for (const auto& [ym, v] : entries)
        if (out.empty() || out.back() != ym.year) out.push_back(ym.year);
    return out;
}

std::map<int, RegionStat> regional_monthly_mean(const grid::GridSnapshot& snapshot, const grid::RegionMask& mask,
                                                const MeanOptions& options) {
    if (snapshot.lat != mask.lat || snapshot.lon != mask.lon)
        throw AnalyticsError(Errc::AxisMismatch, "snapshot and region mask axes differ");
    struct Acc {
        double sum = 0.0;
        double weight = 0.0;
        std::size_t n = 0;
    };
    std::map<int, Acc> acc;
    for (std::size_t i = 0; i < snapshot.rows(); ++i) {
        double w = options.area_weighted ? std::cos(snapshot.lat[i] * std::numbers::pi / 180.0) : 1.0;
        for (std::size_t j = 0; j < snapshot.cols(); ++j) {
            int id = mask.at(i, j);
            if (id == 0 || snapshot.is_missing(i, j)) continue;
            auto& a = acc[id];
            a.sum += options.area_weighted ? w * snapshot.at(i, j) : snapshot.at(i, j);
            a.weight += w;
            ++a.n;
        }
    }
    std::map<int, RegionStat> out;
    for (const auto& [id, a] : acc)
        out[id] = {options.area_weighted ? a.sum / a.weight : a.sum / static_cast<double>(a.n), a.n};
    return out;
}

double seasonal_mean(const RegionalSeries& series, int year, Season season) {
    double sum = 0.0;
    for (int m : season.months()) sum += series.at(year, m, Errc::IncompleteSeason);
    return sum / 3.0;
}

double yearly_mean(const RegionalSeries& series, int year) {
    double sum = 0.0;
    for (int m = 1; m <= 12; ++m) sum += series.at(year, m, Errc::IncompleteYear);
    return sum / 12.0;
}

void RetroWindow::validate() const {
    if (t0 > t1)
        throw AnalyticsError(Errc::InvalidWindow, "retrospective window " + std::to_string(t0) + ":" +
                                                      std::to_string(t1) + " is empty");
}

double retrospective_mean(const RegionalSeries& series, const RetroWindow& window, Season season) {
    window.validate();
    double sum = 0.0;
    for (int y = window.t0; y <= window.t1; ++y)
        for (int m : season.months()) sum += series.at(y, m, Errc::IncompleteWindow);
    return sum / (3.0 * window.delta_t());
}

namespace {

AnomalyCell anomaly_from(const RegionalSeries& series, int year, int month, double x, double rm) {
    if (rm == 0.0)
        throw AnalyticsError(Errc::ZeroBaseline, "retrospective mean is zero for region " +
                                                     std::to_string(series.region_id));
    AnomalyCell cell;
    cell.year = year;
    cell.month = month;
    cell.region_id = series.region_id;
    cell.value = x;
    cell.baseline = rm;
    cell.ri_signed = (x - rm) / std::abs(rm);
    cell.ri_magnitude = std::abs(rm - x) / std::abs(rm);
    return cell;
}

} // namespace

AnomalyCell relative_intensity(const RegionalSeries& series, const RetroWindow& window, int year, int month) {
    double rm = retrospective_mean(series, window, grid::season_of(month));
    double x = series.at(year, month, Errc::IncompleteSeason);
    return anomaly_from(series, year, month, x, rm);
}

std::vector<AnomalyRow> anomaly_table(const RegionalSeries& series, const RetroWindow& window) {
    double rm[4];
    for (int s = 0; s < 4; ++s) rm[s] = retrospective_mean(series, window, Season{s});
    std::vector<AnomalyRow> out;
    out.reserve(series.entries.size());
    for (const auto& [ym, x] : series.entries) {
        AnomalyRow row{ym.year, ym.month, x, std::nullopt};
        double base = rm[grid::season_of(ym.month).index];
        if (base != 0.0) row.anomaly = anomaly_from(series, ym.year, ym.month, x, base);
        out.push_back(row);
    }
    return out;
}

std::vector<SpreadRow> scenario_spread(const std::vector<RegionalSeries>& per_scenario, Season season) {
    std::set<Scenario> scenarios;
    for (const auto& s : per_scenario) scenarios.insert(s.scenario);
    if (per_scenario.size() < 2 || scenarios.size() != per_scenario.size())
        throw AnalyticsError(Errc::NoCommonYears, "scenario comparison needs at least two distinct scenarios");

    auto complete = [&](const RegionalSeries& s, int y) {
        for (int m : season.months())
            if (!s.entries.contains({y, m})) return false;
        return true;
    };
    std::set<int> years;
    for (const auto& [ym, v] : per_scenario.front().entries) years.insert(ym.year);

    std::vector<SpreadRow> out;
    for (int y : years) {
        bool all = std::all_of(per_scenario.begin(), per_scenario.end(),
                               [&](const RegionalSeries& s) { return complete(s, y); });
        if (!all) continue;
        SpreadRow row;
        row.year = y;
        for (const auto& s : per_scenario) row.values[s.scenario] = seasonal_mean(s, y, season);
        auto [lo, hi] = std::minmax_element(row.values.begin(), row.values.end(),
                                            [](const auto& a, const auto& b) { return a.second < b.second; });
        row.min = lo->second;
        row.max = hi->second;
        out.push_back(std::move(row));
    }
    if (out.empty()) throw AnalyticsError(Errc::NoCommonYears, "scenarios share no complete season");
    return out;
}

namespace {

void finish_inner(TreeNode& node) {
    node.size = 0.0;
    double color = 0.0;
    for (const auto& c : node.children) {
        node.size += c.size;
        color += c.color;
    }
    node.color = node.children.empty() ? 0.0 : color / static_cast<double>(node.children.size());
}

bool has_season(const RegionalSeries& s, int year, Season season) {
    for (int m : season.months())
        if (!s.entries.contains({year, m})) return false;
    return true;
}

} // namespace

TreeNode treemap_hierarchy(const std::vector<RegionalSeries>& pr, const std::vector<RegionalSeries>& tasmax,
                           int year_start, int year_end, const std::map<int, std::string>& region_names) {
    TreeNode root;
    root.name = "all";
    std::map<int, const RegionalSeries*> temp;
    for (const auto& s : tasmax) temp[s.region_id] = &s;
    std::map<int, const RegionalSeries*> prec;
    for (const auto& s : pr) prec[s.region_id] = &s;

    for (const auto& [id, ps] : prec) {
        auto t = temp.find(id);
        if (t == temp.end()) continue;
        TreeNode region;
        auto name = region_names.find(id);
        region.name = name != region_names.end() ? name->second : std::to_string(id);
        for (int s = 0; s < 4; ++s) {
            Season season{s};
            TreeNode sn;
            sn.name = std::string(season.name());
            for (int y = year_start; y <= year_end; ++y) {
                if (!has_season(*ps, y, season) || !has_season(*t->second, y, season)) continue;
                TreeNode leaf;
                leaf.name = std::to_string(y);
                leaf.size = std::max(0.0, seasonal_mean(*ps, y, season));
                leaf.color = seasonal_mean(*t->second, y, season);
                sn.children.push_back(std::move(leaf));
            }
            if (sn.children.empty()) continue;
            finish_inner(sn);
            region.children.push_back(std::move(sn));
        }
        if (region.children.empty()) continue;
        finish_inner(region);
        root.children.push_back(std::move(region));
    }
    finish_inner(root);
    return root;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string aggregate_prefix(const RegionalSeries& s, const YearMonth& ym) {
    return std::to_string(s.region_id) + "," + std::string(grid::to_string(s.variable)) + "," + s.model + "," +
           std::string(grid::to_string(s.scenario)) + "," + std::to_string(ym.year) + "," +
           std::to_string(ym.month);
}

constexpr std::string_view kAggregateHeader = "region,variable,model,scenario,year,month,value,cell_count";

} // namespace

std::string aggregate_csv(const std::vector<RegionalSeries>& series) {
    std::string out(kAggregateHeader);
    out += "\n";
    for (const auto& s : series)
        for (const auto& [ym, v] : s.entries)
            out += aggregate_prefix(s, ym) + "," + fmt17(v) + "," + std::to_string(s.cell_counts.at(ym)) + "\n";
    return out;
}

std::string anomaly_csv(const std::vector<RegionalSeries>& series, const RetroWindow& window) {
    std::string out(kAggregateHeader);
    out += ",ri_signed,ri_magnitude,retro_start,retro_end\n";
    const std::string retro = std::to_string(window.t0) + "," + std::to_string(window.t1);
    for (const auto& s : series) {
        for (const auto& row : anomaly_table(s, window)) {
            YearMonth ym{row.year, row.month};
            out += aggregate_prefix(s, ym) + "," + fmt17(row.value) + "," + std::to_string(s.cell_counts.at(ym));
            if (row.anomaly)
                out += "," + fmt17(row.anomaly->ri_signed) + "," + fmt17(row.anomaly->ri_magnitude);
            else
                out += ",,";
            out += "," + retro + "\n";
        }
    }
    return out;
}

std::string anomaly_csv_month(const std::vector<RegionalSeries>& series, const RetroWindow& window, YearMonth ym,
                              std::optional<Scenario> scenario_label) {
    std::string out(kAggregateHeader);
    out += ",ri_signed,ri_magnitude,retro_start,retro_end\n";
    const std::string retro = std::to_string(window.t0) + "," + std::to_string(window.t1);
    for (const auto& s : series) {
        auto value = s.find(ym.year, ym.month);
        if (!value) continue;
        RegionalSeries label = s;
        if (scenario_label) label.scenario = *scenario_label;
        out += aggregate_prefix(label, ym) + "," + fmt17(*value) + "," + std::to_string(s.cell_counts.at(ym));
        try {
            auto cell = relative_intensity(s, window, ym.year, ym.month);
            out += "," + fmt17(cell.ri_signed) + "," + fmt17(cell.ri_magnitude);
        } catch (const AnalyticsError& e) {
            if (e.errc() != Errc::ZeroBaseline) throw;
            out += ",,";
        }
        out += "," + retro + "\n";
    }
    return out;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    while (true) {
        auto c = line.find(',');
        out.push_back(line.substr(0, c));
        if (c == std::string_view::npos) break;
        line.remove_prefix(c + 1);
    }
    return out;
}

template <typename T>
T parse_number(std::string_view s, std::size_t line) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw AnalyticsError(Errc::BadCsv, "line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
    return v;
}

} // namespace

std::vector<RegionalSeries> parse_aggregate_csv(std::string_view text) {
    std::vector<RegionalSeries> out;
    std::map<std::tuple<int, ClimateVariable, std::string, Scenario>, std::size_t> slot;
    std::size_t lineno = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line.substr(0, kAggregateHeader.size()) != kAggregateHeader)
                throw AnalyticsError(Errc::BadCsv, "unexpected aggregate CSV header");
            continue;
        }
        auto f = split_commas(line);
        if (f.size() < 8) throw AnalyticsError(Errc::BadCsv, "line " + std::to_string(lineno) + ": too few columns");
        int region = parse_number<int>(f[0], lineno);
        ClimateVariable var;
        Scenario scen;
        try {
            var = grid::parse_variable(f[1]);
            scen = grid::parse_scenario(f[3]);
        } catch (const grid::GridError& e) {
            throw AnalyticsError(Errc::BadCsv, "line " + std::to_string(lineno) + ": " + e.what());
        }
        std::string model(f[2]);
        auto key = std::make_tuple(region, var, model, scen);
        auto it = slot.find(key);
        if (it == slot.end()) {
            it = slot.emplace(key, out.size()).first;
            RegionalSeries s;
            s.region_id = region;
            s.variable = var;
            s.model = model;
            s.scenario = scen;
            out.push_back(std::move(s));
        }
        out[it->second].add(parse_number<int>(f[4], lineno), parse_number<int>(f[5], lineno),
                            parse_number<double>(f[6], lineno), parse_number<std::size_t>(f[7], lineno));
    }
    return out;
}

} // namespace dcpviz::analytics
