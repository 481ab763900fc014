#include "dcpviz/grid.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>

namespace dcpviz::grid {

std::string to_code(Errc errc) {
    switch (errc) {
    case Errc::MissingCoordinate: return "missing_coordinate";
    case Errc::UnitUnknown: return "unit_unknown";
    case Errc::ShapeMismatch: return "shape_mismatch";
    case Errc::UnknownRegionId: return "unknown_region_id";
    case Errc::BadAxis: return "bad_axis";
    case Errc::BadTimeAxis: return "bad_time_axis";
    case Errc::BadValue: return "bad_value";
    case Errc::ParseError: return "parse_error";
    case Errc::Io: return "io_failure";
    }
    return "unknown";
}

std::string_view to_string(ClimateVariable v) {
    switch (v) {
    case ClimateVariable::Pr: return "pr";
    case ClimateVariable::Tasmax: return "tasmax";
    case ClimateVariable::Tasmin: return "tasmin";
    }
    return "?";
}

std::string_view to_string(Scenario s) {
    switch (s) {
    case Scenario::Historical: return "historical";
    case Scenario::Rcp26: return "rcp26";
    case Scenario::Rcp45: return "rcp45";
    case Scenario::Rcp85: return "rcp85";
    }
    return "?";
}

ClimateVariable parse_variable(std::string_view name) {
    for (auto v : kAllVariables)
        if (to_string(v) == name) return v;
    throw GridError(Errc::BadValue, "unknown variable '" + std::string(name) + "'");
}

Scenario parse_scenario(std::string_view name) {
    for (auto s : kAllScenarios)
        if (to_string(s) == name) return s;
    throw GridError(Errc::BadValue, "unknown scenario '" + std::string(name) + "'");
}

std::string_view canonical_units(ClimateVariable v) { return v == ClimateVariable::Pr ? "mm/day" : "degC"; }

bool scenario_covers(Scenario s, int year) {
    return s == Scenario::Historical ? year <= kLastHistoricalYear : year > kLastHistoricalYear;
}

std::string_view Season::name() const {
    static constexpr std::string_view names[] = {"JFM", "AMJ", "JAS", "OND"};
    return index >= 0 && index < 4 ? names[index] : "?";
}

Season season_of(int month) {
    if (month < 1 || month > 12) throw GridError(Errc::BadValue, "month out of range: " + std::to_string(month));
    return Season{(month - 1) / 3};
}

Season parse_season(std::string_view text) {
    for (int s = 0; s < 4; ++s) {
        Season season{s};
        if (text == season.name() || (text.size() == 1 && text[0] == '0' + s)) return season;
    }
    throw GridError(Errc::BadValue, "unknown season '" + std::string(text) + "'");
}

UnitConversion conversion_to_canonical(ClimateVariable v, std::string_view units) {
    if (v == ClimateVariable::Pr) {
        if (units == "mm/day" || units == "mm day-1" || units == "mm d-1") return {};
        if (units == "kg m-2 s-1" || units == "kg/m2/s" || units == "kg m**-2 s**-1")
            return {86400.0, 0.0}; // 1 kg/m2 of water is 1 mm
    } else {
        if (units == "degC" || units == "C" || units == "celsius" || units == "degrees_C") return {};
        if (units == "K" || units == "kelvin" || units == "degK") return {1.0, -273.15};
    }
    if (units.empty())
        throw GridError(Errc::UnitUnknown, "no units attribute for " + std::string(to_string(v)));
    throw GridError(Errc::UnitUnknown,
                    "cannot convert '" + std::string(units) + "' for " + std::string(to_string(v)));
}

bool is_ascending_axis(const Axis& axis) {
    if (axis.empty()) return false;
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (!std::isfinite(axis[i])) return false;
        if (i > 0 && !(axis[i] > axis[i - 1])) return false;
    }
    return true;
}

void GridSnapshot::validate() const {
    if (!is_ascending_axis(lat) || !is_ascending_axis(lon))
        throw GridError(Errc::BadAxis, "snapshot axes must be strictly ascending");
    if (values.size() != lat.size() * lon.size() || missing.size() != values.size())
        throw GridError(Errc::ShapeMismatch, "snapshot values do not match its axes");
    if (month < 1 || month > 12) throw GridError(Errc::BadValue, "month out of range");
    if (!scenario_covers(scenario, year))
        throw GridError(Errc::BadValue, std::string(to_string(scenario)) + " does not cover year " +
                                            std::to_string(year));
}

namespace {

// "<unit> since YYYY-M-D[ ...]"
struct TimeUnits {
    double days_per_unit = 1.0;
    std::chrono::sys_days epoch;
};

TimeUnits parse_time_units(std::string_view units) {
    auto fail = [&]() -> TimeUnits {
        throw GridError(Errc::BadTimeAxis, "unsupported time units '" + std::string(units) + "'");
    };
    auto since = units.find(" since ");
    if (since == std::string_view::npos) return fail();
    auto unit = units.substr(0, since);
    TimeUnits out;
    if (unit == "days" || unit == "day")
        out.days_per_unit = 1.0;
    else if (unit == "hours" || unit == "hour")
        out.days_per_unit = 1.0 / 24.0;
    else
        return fail();
    auto date = units.substr(since + 7);
    int parts[3] = {0, 0, 0};
    const char* p = date.data();
    const char* end = date.data() + date.size();
    for (int k = 0; k < 3; ++k) {
        auto [next, ec] = std::from_chars(p, end, parts[k]);
        if (ec != std::errc{}) return fail();
        p = next;
        if (k < 2) {
            if (p == end || *p != '-') return fail();
            ++p;
        }
    }
    using namespace std::chrono;
    year_month_day ymd{year{parts[0]}, month{static_cast<unsigned>(parts[1])}, day{static_cast<unsigned>(parts[2])}};
    if (!ymd.ok()) return fail();
    out.epoch = sys_days{ymd};
    return out;
}

} // namespace

YearMonth decode_time(double value, std::string_view units, std::string_view calendar) {
    if (calendar != "standard" && calendar != "gregorian" && calendar != "proleptic_gregorian")
        throw GridError(Errc::BadTimeAxis, "unsupported calendar '" + std::string(calendar) + "'");
    if (!std::isfinite(value)) throw GridError(Errc::BadTimeAxis, "non-finite time value");
    auto tu = parse_time_units(units);
    using namespace std::chrono;
    auto days = static_cast<long long>(std::floor(value * tu.days_per_unit));
    year_month_day ymd{tu.epoch + std::chrono::days{days}};
    return {static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month()))};
}

std::vector<YearMonth> read_time_axis(const nc::ByteSource& source, const nc::NcFile& file) {
    const auto* tv = file.find_variable("time");
    if (!tv) throw GridError(Errc::MissingCoordinate, "no time coordinate variable");
    auto units = tv->units();
    if (!units) throw GridError(Errc::BadTimeAxis, "time variable has no units");
    std::string calendar = "standard";
    if (const auto* c = tv->attributes.find("calendar"))
        if (const auto* text = c->as_text()) calendar = *text;
    auto slab = nc::read_variable(source, file, "time");
    std::vector<YearMonth> out;
    out.reserve(slab.size());
    for (std::size_t i = 0; i < slab.size(); ++i) {
        if (slab.missing[i]) throw GridError(Errc::BadTimeAxis, "missing time value");
        out.push_back(decode_time(slab.values[i], *units, calendar));
    }
    return out;
}

namespace {

Axis read_axis(const nc::ByteSource& source, const nc::NcFile& file, const std::string& name, bool& flipped) {
    const auto* var = file.find_variable(name);
    if (!var || var->dim_ids.size() != 1 || file.dimensions[var->dim_ids[0]].name != name)
        throw GridError(Errc::MissingCoordinate, "no coordinate variable for dimension '" + name + "'");
    auto slab = nc::read_variable(source, file, name);
    if (slab.missing_count() > 0) throw GridError(Errc::BadAxis, "missing values in axis '" + name + "'");
    Axis axis = std::move(slab.values);
    flipped = false;
    if (axis.size() > 1 && axis.front() > axis.back()) {
        std::reverse(axis.begin(), axis.end());
        flipped = true;
    }
    if (!is_ascending_axis(axis)) throw GridError(Errc::BadAxis, "axis '" + name + "' is not strictly monotonic");
    return axis;
}

} // namespace

GridSnapshot snapshot_from_slab(const nc::ByteSource& source, const nc::NcFile& file, std::string_view variable,
                                std::size_t time_index, const SnapshotMeta& meta) {
    const auto& var = file.variable(variable);
    if (var.dim_ids.size() != 3)
        throw GridError(Errc::ShapeMismatch, "'" + std::string(variable) + "' is not a (time, lat, lon) variable");
    auto dims = file.dimension_names(var);

    GridSnapshot snap;
    snap.variable = parse_variable(variable);
    snap.model = meta.model;
    snap.scenario = meta.scenario;

    bool lat_flipped = false, lon_flipped = false;
    snap.lat = read_axis(source, file, dims[1], lat_flipped);
    snap.lon = read_axis(source, file, dims[2], lon_flipped);

    auto times = read_time_axis(source, file);
    auto shape = file.shape(var);
    if (times.size() != shape[0])
        throw GridError(Errc::ShapeMismatch, "time axis length differs from the variable's time dimension");
    if (time_index >= times.size())
        throw nc::NetcdfError(nc::Errc::OutOfBounds, "time index " + std::to_string(time_index) + " >= " +
                                                         std::to_string(times.size()));
    snap.year = times[time_index].year;
    snap.month = times[time_index].month;

    const std::uint64_t start[3] = {time_index, 0, 0};
    const std::uint64_t count[3] = {1, shape[1], shape[2]};
    auto slab = nc::read_slab(source, file, variable, start, count);
    auto conv = conversion_to_canonical(snap.variable, slab.units);

    const std::size_t rows = shape[1], cols = shape[2];
    snap.values.assign(rows * cols, 0.0);
    snap.missing.assign(rows * cols, 0);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t i = lat_flipped ? rows - 1 - r : r;
        for (std::size_t c = 0; c < cols; ++c) {
            std::size_t j = lon_flipped ? cols - 1 - c : c;
            std::size_t src = r * cols + c, dst = i * cols + j;
            double v = slab.values[src];
            if (slab.missing[src] || !std::isfinite(v)) {
                snap.missing[dst] = 1;
                continue;
            }
            snap.values[dst] = conv.apply(v);
        }
    }
    snap.validate();
    return snap;
}

} // namespace dcpviz::grid
