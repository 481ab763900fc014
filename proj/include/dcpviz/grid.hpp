#pragma once

#include "dcpviz/error.hpp"
#include "dcpviz/netcdf.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dcpviz::grid {

enum class Errc {
    MissingCoordinate,
    UnitUnknown,
    ShapeMismatch,
    UnknownRegionId,
    BadAxis,
    BadTimeAxis,
    BadValue,
    ParseError,
    Io,
};

std::string to_code(Errc errc);

using GridError = ModuleError<Errc>;

enum class ClimateVariable { Pr, Tasmax, Tasmin };
enum class Scenario { Historical, Rcp26, Rcp45, Rcp85 };

std::string_view to_string(ClimateVariable v);
std::string_view to_string(Scenario s);
// Throw BadValue on unknown names.
ClimateVariable parse_variable(std::string_view name);
Scenario parse_scenario(std::string_view name);
inline constexpr std::array kAllVariables{ClimateVariable::Pr, ClimateVariable::Tasmax, ClimateVariable::Tasmin};
inline constexpr std::array kAllScenarios{Scenario::Historical, Scenario::Rcp26, Scenario::Rcp45, Scenario::Rcp85};

// Canonical display units: mm/day for pr, degC for temperatures.
std::string_view canonical_units(ClimateVariable v);

// Last year of the historical record; projections start the year after.
inline constexpr int kLastHistoricalYear = 2005;

// Whether (scenario, year) is a valid pairing.
bool scenario_covers(Scenario s, int year);

// Calendar quarter: season s covers months 3s+1 .. 3s+3.
struct Season {
    int index = 0;

    std::array<int, 3> months() const { return {3 * index + 1, 3 * index + 2, 3 * index + 3}; }
    std::string_view name() const; // "JFM", "AMJ", "JAS", "OND"
    bool operator==(const Season&) const = default;
};

Season season_of(int month);
Season parse_season(std::string_view text); // "0".."3" or a quarter name

// value_canonical = value * scale + offset
struct UnitConversion {
    double scale = 1.0;
    double offset = 0.0;

    double apply(double v) const { return v * scale + offset; }
};

// Throws UnitUnknown for units that are absent or not convertible.
UnitConversion conversion_to_canonical(ClimateVariable v, std::string_view units);

using Axis = std::vector<double>;

// Strictly increasing with finite entries.
bool is_ascending_axis(const Axis& axis);

struct GridSnapshot {
    ClimateVariable variable = ClimateVariable::Pr;
    std::string model;
    Scenario scenario = Scenario::Historical;
    int year = 0;
    int month = 1;
    Axis lat;
    Axis lon;
    std::vector<double> values;       // row-major [lat][lon], canonical units
    std::vector<std::uint8_t> missing; // 1 where the cell has no data

    std::size_t rows() const noexcept { return lat.size(); }
    std::size_t cols() const noexcept { return lon.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * lon.size() + j]; }
    bool is_missing(std::size_t i, std::size_t j) const { return missing[i * lon.size() + j] != 0; }

    // Shape, axis, month and scenario/year checks; throws on violation.
    void validate() const;
};

struct RegionMask {
    Axis lat;
    Axis lon;
    std::vector<int> ids; // row-major [lat][lon]; 0 = outside all regions
    std::map<int, std::string> names;

    int at(std::size_t i, std::size_t j) const { return ids[i * lon.size() + j]; }
    // Ids with a name entry, ascending.
    std::vector<int> region_ids() const;
    const std::string& name_of(int id) const; // throws UnknownRegionId

    void validate() const;
    // ShapeMismatch unless both axes equal the given ones exactly.
    void require_axes(const Axis& lat_axis, const Axis& lon_axis) const;
};

RegionMask parse_region_mask(std::string_view text);
std::string format_region_mask(const RegionMask& mask);
RegionMask load_region_mask(const std::string& path);
// Same, additionally requiring the mask to sit on the given axes.
RegionMask load_region_mask(const std::string& path, const Axis& lat, const Axis& lon);
void save_region_mask(const RegionMask& mask, const std::string& path);

// Names of the seven contiguous-U.S. assessment regions, ids 1..7.
const std::map<int, std::string>& nca_region_names();

// Synthetic seven-region mask. The grid's extent is stretched over the
// contiguous U.S. box (124.5W-67.5W, 24.5N-49.5N) and cells are assigned by
// coarse longitude/latitude cuts, so every region appears on grids of about
// 8x12 cells or more.
RegionMask make_nca_mask(const Axis& lat, const Axis& lon);

// Year and month of each step of a CF time axis ("days since ..." or
// "hours since ..."; standard/gregorian calendars).
struct YearMonth {
    int year = 0;
    int month = 1;
    auto operator<=>(const YearMonth&) const = default;
};

std::vector<YearMonth> read_time_axis(const nc::ByteSource& source, const nc::NcFile& file);

// Convert one decoded time value given its units attribute.
YearMonth decode_time(double value, std::string_view units, std::string_view calendar = "standard");

struct SnapshotMeta {
    std::string model;
    Scenario scenario = Scenario::Historical;
};

// Month `time_index` of a (time, lat, lon) variable in canonical units, with
// axes flipped to ascending order if the file stores them descending.
GridSnapshot snapshot_from_slab(const nc::ByteSource& source, const nc::NcFile& file,
                                std::string_view variable, std::size_t time_index, const SnapshotMeta& meta);

} // namespace dcpviz::grid
