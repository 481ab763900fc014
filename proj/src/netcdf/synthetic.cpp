#include "dcpviz/netcdf.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

namespace dcpviz::nc {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    // splitmix64 step over h ^ v
    std::uint64_t z = h ^ (v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t hash_text(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// mt19937_64 output is fixed by the standard; convert by hand so the values
// do not depend on a library's distribution implementation.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double scenario_trend(std::string_view scenario) {
    if (scenario == "rcp26") return 0.25;
    if (scenario == "rcp45") return 0.6;
    if (scenario == "rcp85") return 1.0;
    return 0.0;
}

// Physical value in canonical units (mm/day, degC, or unitless) at normalized
// position (u east, v north) for one month.
struct ClimateField {
    std::string_view name;
    std::string_view scenario;
    std::uint64_t seed;

    double operator()(int year, int month, double u, double v, const double (&modes)[6]) const {
        const double season = 2.0 * kPi * (month - 1) / 12.0;
        const double years_out = std::max(0, year - 2005);
        const double warming = scenario_trend(scenario) * years_out;
        double anomaly = 0.0;
        for (int k = 0; k < 3; ++k)
            anomaly += modes[2 * k] * std::sin(kPi * ((k + 1) * u + modes[2 * k + 1])) *
                       std::cos(kPi * ((k + 1) * v * 0.7 + modes[2 * k + 1]));
        if (name == "pr") {
            double base = 1.0 + 3.0 * u * (1.0 - 0.45 * v) +
                          1.5 * std::exp(-((u - 0.05) * (u - 0.05) + (v - 0.85) * (v - 0.85)) / 0.03);
            double cycle = 1.0 + 0.35 * std::sin(season + 2.0 * kPi * u);
            return std::max(0.0, base * cycle + 0.6 * anomaly + 0.004 * warming);
        }
        if (name == "tasmax" || name == "tasmin") {
            double t = 31.0 - 24.0 * v + 11.0 * std::sin(season - kPi / 2.0) * (0.6 + 0.4 * v) + 2.0 * anomaly +
                       0.045 * warming;
            return name == "tasmin" ? t - 12.0 : t;
        }
        return 0.5 + 0.25 * std::sin(kPi * u) * std::cos(kPi * v) + 0.1 * anomaly;
    }
};

// Canonical physical value expressed in the variable's declared units.
double to_declared_units(std::string_view name, std::string_view units, double physical) {
    if (units == "kg m-2 s-1" || units == "kg/m2/s" || units == "kg m**-2 s**-1") return physical / 86400.0;
    if ((name == "tasmax" || name == "tasmin") && (units == "K" || units == "kelvin" || units == "degK"))
        return physical + 273.15;
    return physical;
}

double clamp_to_type(Type type, double v) {
    auto clamp = [&](double lo, double hi) { return std::min(hi, std::max(lo, v)); };
    switch (type) {
    case Type::Byte: return clamp(-128, 127);
    case Type::Short: return clamp(-32768, 32767);
    case Type::Int: return clamp(std::numeric_limits<std::int32_t>::min(), std::numeric_limits<std::int32_t>::max());
    default: return v;
    }
}

// Physical value -> stored raw value in the type domain (packing applied).
double to_raw(const SyntheticVariable& var, double value) {
    if (var.scale_factor || var.add_offset) {
        double scale = var.scale_factor.value_or(1.0);
        double offset = var.add_offset.value_or(0.0);
        value = (value - offset) / scale;
    }
    switch (var.type) {
    case Type::Byte:
    case Type::Short:
    case Type::Int: return clamp_to_type(var.type, std::nearbyint(value));
    case Type::Float: return static_cast<double>(static_cast<float>(value));
    default: return value;
    }
}

std::pair<int, int> month_at(const SyntheticSpec& spec, std::size_t t) {
    int zero_based = spec.start_month - 1 + static_cast<int>(t);
    return {spec.start_year + zero_based / 12, zero_based % 12 + 1};
}

double axis_value(const AxisSpec& a, std::size_t i) { return a.start + a.step * static_cast<double>(i); }

} // namespace

void validate(const SyntheticSpec& spec) {
    auto fail = [](const std::string& msg) { throw NetcdfError(Errc::SpecInvalid, msg); };
    if (spec.lat.count == 0 || spec.lon.count == 0) fail("zero-length lat/lon dimension");
    if (spec.months == 0) fail("zero-length time dimension");
    if (spec.lat.step == 0.0 || spec.lon.step == 0.0) fail("axis step must be nonzero");
    if (spec.start_month < 1 || spec.start_month > 12) fail("start_month must be 1-12");
    if (spec.variables.empty()) fail("no variables");
    std::set<std::string> names{"time", "lat", "lon"};
    for (const auto& v : spec.variables) {
        if (v.name.empty()) fail("empty variable name");
        if (!names.insert(v.name).second) fail("duplicate variable name '" + v.name + "'");
        if (v.type == Type::Char) fail("char grids are not supported");
        if (v.scale_factor && *v.scale_factor == 0.0) fail("scale_factor must be nonzero");
        if (!spec.missing_cells.empty() && !v.fill_value) fail("missing cells require a _FillValue on '" + v.name + "'");
    }
    for (auto [i, j] : spec.missing_cells)
        if (i >= spec.lat.count || j >= spec.lon.count) fail("missing cell outside grid");
}

std::vector<double> synthetic_values(const SyntheticSpec& spec, const SyntheticVariable& var) {
    validate(spec);
    const std::size_t nlat = spec.lat.count, nlon = spec.lon.count;
    std::vector<double> out(spec.months * nlat * nlon);
    const ClimateField field{var.name, spec.scenario, spec.seed};

    std::vector<std::uint8_t> hole(nlat * nlon, 0);
    for (auto [i, j] : spec.missing_cells) hole[i * nlon + j] = 1;

    for (std::size_t t = 0; t < spec.months; ++t) {
        auto [year, month] = month_at(spec, t);
        // seeded per (seed, variable, scenario, year, month) so split archives agree
        std::uint64_t key = mix(mix(mix(spec.seed, hash_text(var.name)), hash_text(spec.scenario)),
                                static_cast<std::uint64_t>(year * 12 + month));
        std::mt19937_64 rng(key);
        double modes[6];
        for (int k = 0; k < 3; ++k) {
            modes[2 * k] = unit(rng) - 0.5;
            modes[2 * k + 1] = unit(rng) * 2.0;
        }
        for (std::size_t r = 0; r < nlat; ++r) {
            // row r in file order; descending files store north first
            std::size_t i = spec.descending_lat ? nlat - 1 - r : r;
            double v = nlat > 1 ? static_cast<double>(i) / static_cast<double>(nlat - 1) : 0.5;
            for (std::size_t j = 0; j < nlon; ++j) {
                double u = nlon > 1 ? static_cast<double>(j) / static_cast<double>(nlon - 1) : 0.5;
                auto& slot = out[(t * nlat + r) * nlon + j];
                if (hole[i * nlon + j]) {
                    slot = var.type == Type::Float ? static_cast<double>(static_cast<float>(*var.fill_value))
                                                   : *var.fill_value;
                    continue;
                }
                double physical = 0.0;
                switch (var.generator) {
                case Generator::Climate:
                    physical = to_declared_units(var.name, var.units, field(year, month, u, v, modes));
                    break;
                case Generator::Constant: physical = var.constant; break;
                case Generator::Random:
                    physical = var.random_low + (var.random_high - var.random_low) * unit(rng);
                    break;
                }
                slot = to_raw(var, physical);
            }
        }
    }
    return out;
}

std::vector<std::byte> write_synthetic_archive(const SyntheticSpec& spec) {
    validate(spec);
    Writer w(spec.format);
    auto time_dim = w.add_dimension("time", spec.months, spec.unlimited_time);
    auto lat_dim = w.add_dimension("lat", spec.lat.count);
    auto lon_dim = w.add_dimension("lon", spec.lon.count);

    w.set_global("Conventions", Attribute::text("CF-1.4"));
    w.set_global("title", Attribute::text("Synthetic downscaled monthly projection"));
    w.set_global("dataset", Attribute::text(spec.dataset));
    w.set_global("model_id", Attribute::text(spec.model));
    w.set_global("experiment_id", Attribute::text(spec.scenario));
    w.set_global("frequency", Attribute::text("mon"));
    w.set_global("seed", Attribute::of(static_cast<double>(spec.seed)));

    {
        Attributes a;
        a.set("units", Attribute::text("days since 1950-01-01 00:00:00"));
        a.set("calendar", Attribute::text("standard"));
        a.set("axis", Attribute::text("T"));
        auto id = w.add_variable("time", Type::Double, {time_dim}, std::move(a));
        std::vector<double> days(spec.months);
        using namespace std::chrono;
        const sys_days epoch{year{kTimeEpochYear} / January / 1};
        for (std::size_t t = 0; t < spec.months; ++t) {
            auto [y, m] = month_at(spec, t);
            sys_days mid{year{y} / month{static_cast<unsigned>(m)} / day{15}};
            days[t] = static_cast<double>((mid - epoch).count());
        }
        w.set_data(id, std::move(days));
    }
    {
        Attributes a;
        a.set("units", Attribute::text("degrees_north"));
        a.set("axis", Attribute::text("Y"));
        auto id = w.add_variable("lat", Type::Double, {lat_dim}, std::move(a));
        std::vector<double> lat(spec.lat.count);
        for (std::size_t r = 0; r < lat.size(); ++r)
            lat[r] = axis_value(spec.lat, spec.descending_lat ? lat.size() - 1 - r : r);
        w.set_data(id, std::move(lat));
    }
    {
        Attributes a;
        a.set("units", Attribute::text("degrees_east"));
        a.set("axis", Attribute::text("X"));
        auto id = w.add_variable("lon", Type::Double, {lon_dim}, std::move(a));
        std::vector<double> lon(spec.lon.count);
        for (std::size_t j = 0; j < lon.size(); ++j) lon[j] = axis_value(spec.lon, j);
        w.set_data(id, std::move(lon));
    }
    for (const auto& var : spec.variables) {
        Attributes a;
        a.set("units", Attribute::text(var.units));
        auto typed = [&](double v) {
            switch (var.type) {
            case Type::Byte: return Attribute(std::vector<std::int8_t>{static_cast<std::int8_t>(v)});
            case Type::Short: return Attribute::of(static_cast<std::int16_t>(v));
            case Type::Int: return Attribute::of(static_cast<std::int32_t>(v));
            case Type::Float: return Attribute::of(static_cast<float>(v));
            default: return Attribute::of(v);
            }
        };
        if (var.fill_value) a.set("_FillValue", typed(*var.fill_value));
        if (var.scale_factor) a.set("scale_factor", Attribute::of(*var.scale_factor));
        if (var.add_offset) a.set("add_offset", Attribute::of(*var.add_offset));
        auto id = w.add_variable(var.name, var.type, {time_dim, lat_dim, lon_dim}, std::move(a));
        w.set_data(id, synthetic_values(spec, var));
    }
    return w.encode();
}

} // namespace dcpviz::nc
