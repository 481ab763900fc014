#include "doctest.h"

#include "dcpviz/netcdf.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <thread>

using namespace dcpviz::nc;

namespace {

std::vector<std::byte> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::byte> out(raw.size());
    std::memcpy(out.data(), raw.data(), raw.size());
    return out;
}

std::string fixture(const char* name) { return std::string(DCPVIZ_FIXTURES_DIR) + "/" + name; }

std::vector<std::byte> bytes_of(std::initializer_list<int> v) {
    std::vector<std::byte> out;
    for (int b : v) out.push_back(std::byte(b));
    return out;
}

template <typename F>
Errc error_of(F&& f) {
    try {
        f();
    } catch (const NetcdfError& e) {
        return e.errc();
    }
    FAIL("expected a NetcdfError");
    return Errc::Io;
}

// The scipy-written reference, rebuilt with our writer. scipy emits variables
// sorted by shape tuple, descending and stores Python floats as 32-bit attributes.
std::vector<std::byte> rebuild_reference(Format format) {
    Writer w(format);
    w.set_global("title", Attribute::text("reference"));
    w.set_global("model_id", Attribute::text("CESM1-CAM5"));
    auto time = w.add_dimension("time", 3);
    auto lat = w.add_dimension("lat", 2);
    auto lon = w.add_dimension("lon", 3);
    Attributes a;
    a.set("units", Attribute::text("mm/day"));
    a.set("_FillValue", Attribute::of(1e20f));
    std::vector<double> pr(18);
    for (int i = 0; i < 18; ++i) pr[i] = i * 0.5;
    pr[1 * 6 + 0 * 3 + 2] = static_cast<float>(1e20);
    w.set_data(w.add_variable("pr", Type::Float, {time, lat, lon}, a), pr);
    a = {};
    a.set("units", Attribute::text("K"));
    a.set("scale_factor", Attribute::of(0.01f));
    a.set("add_offset", Attribute::of(273.15f));
    std::vector<double> tas(18);
    for (int i = 0; i < 18; ++i) tas[i] = i * 10 - 50;
    w.set_data(w.add_variable("tas", Type::Short, {time, lat, lon}, a), tas);
    a = {};
    a.set("units", Attribute::text("degrees_east"));
    w.set_data(w.add_variable("lon", Type::Double, {lon}, a), std::vector<double>{-100, -99, -98});
    w.set_data(w.add_variable("code", Type::Byte, {lon}), std::vector<double>{-1, 0, 7});
    a = {};
    a.set("units", Attribute::text("mm/day"));
    w.set_data(w.add_variable("grid", Type::Float, {lat, lon}, a), std::vector<double>{1, 2, 3, 4, 5, 6});
    a = {};
    a.set("units", Attribute::text("degrees_north"));
    w.set_data(w.add_variable("lat", Type::Double, {lat}, a), std::vector<double>{30, 31});
    return w.encode();
}

} // namespace

TEST_CASE("parse_header rejects non-classic inputs") {
    CHECK(error_of([] { parse_header(std::span<const std::byte>{}); }) == Errc::Truncated);
    CHECK(error_of([] { parse_header(bytes_of({0x43, 0x44})); }) == Errc::Truncated);
    CHECK(error_of([] { parse_header(bytes_of({0x89, 0x48, 0x44, 0x46, 0x0d, 0x0a, 0x1a, 0x0a})); }) ==
          Errc::Unsupported);
    CHECK(error_of([] { parse_header(bytes_of({'C', 'D', 'F', 5, 0, 0, 0, 0})); }) == Errc::Unsupported);
    CHECK(error_of([] { parse_header(bytes_of({'C', 'D', 'F', 3, 0, 0, 0, 0})); }) == Errc::BadMagic);
    CHECK(error_of([] { parse_header(bytes_of({'G', 'I', 'F', '8', '9', 'a', 0, 0})); }) == Errc::BadMagic);
}

TEST_CASE("HDF5-backed reference file is Unsupported") {
    auto bytes = slurp(fixture("reference_netcdf4.nc"));
    CHECK(error_of([&] { parse_header(bytes); }) == Errc::Unsupported);
}

TEST_CASE("scipy reference files parse and read") {
    for (auto [name, format] : {std::pair{"reference_cdf1.nc", Format::Cdf1}, {"reference_cdf2.nc", Format::Cdf2}}) {
        CAPTURE(name);
        FileSource src(fixture(name));
        auto f = parse_header(src);
        CHECK(f.format == format);
        REQUIRE(f.dimensions.size() == 3);
        CHECK(f.dimensions[0].name == "time");
        CHECK(f.dimensions[0].length == 3);
        CHECK(f.global_attributes.find("model_id")->as_text() != nullptr);
        CHECK(*f.global_attributes.find("model_id")->as_text() == "CESM1-CAM5");

        auto grid = read_variable(src, f, "grid");
        CHECK(grid.values == std::vector<double>{1, 2, 3, 4, 5, 6});
        CHECK(grid.units == "mm/day");

        auto pr = read_variable(src, f, "pr");
        CHECK(pr.missing_count() == 1);
        CHECK(pr.missing[1 * 6 + 2] == 1);
        CHECK(pr.values[1 * 6 + 2] == 0.0);
        CHECK(pr.values[5] == 2.5);

        auto tas = read_variable(src, f, "tas");
        const double scale = 0.01f, offset = 273.15f;
        CHECK(tas.values[0] == -50.0 * scale + offset);
        CHECK(tas.values[17] == 120.0 * scale + offset);

        auto code = read_raw(src, f, "code", std::vector<std::uint64_t>{0}, std::vector<std::uint64_t>{3});
        CHECK(code == std::vector<double>{-1, 0, 7});
    }
}

TEST_CASE("writer output is byte-identical to the scipy reference") {
    for (auto [name, format] : {std::pair{"reference_cdf1.nc", Format::Cdf1}, {"reference_cdf2.nc", Format::Cdf2}}) {
        CAPTURE(name);
        auto ours = rebuild_reference(format);
        auto theirs = slurp(fixture(name));
        CHECK(ours.size() == theirs.size());
        auto n = std::min(ours.size(), theirs.size());
        std::size_t first_diff = n;
        for (std::size_t i = 0; i < n; ++i)
            if (ours[i] != theirs[i]) {
                first_diff = i;
                break;
            }
        CHECK(first_diff == n);
    }
}

TEST_CASE("read_slab examples") {
    Writer w;
    auto r = w.add_dimension("r", 2);
    auto c = w.add_dimension("c", 3);
    Attributes a;
    a.set("_FillValue", Attribute::of(1e20f));
    auto v = w.add_variable("v", Type::Float, {r, c}, a);
    w.set_data(v, std::vector<double>{1, 2, 3, 4, static_cast<float>(1e20), 6});
    auto bytes = w.encode();
    MemorySource src(bytes);
    auto f = parse_header(src);

    auto full = read_variable(src, f, "v");
    CHECK(full.shape == std::vector<std::uint64_t>{2, 3});
    CHECK(full.missing == std::vector<std::uint8_t>{0, 0, 0, 0, 1, 0});
    CHECK(full.values == std::vector<double>{1, 2, 3, 4, 0, 6});

    std::vector<std::uint64_t> zero{0, 0};
    auto empty = read_slab(src, f, "v", zero, zero);
    CHECK(empty.values.empty());

    std::vector<std::uint64_t> start{1, 1}, count{1, 2};
    auto part = read_slab(src, f, "v", start, count);
    CHECK(part.values == std::vector<double>{0, 6});
    CHECK(part.missing == std::vector<std::uint8_t>{1, 0});

    SUBCASE("errors") {
        std::vector<std::uint64_t> s{1, 0}, bad{2, 3};
        CHECK(error_of([&] { read_slab(src, f, "v", s, bad); }) == Errc::OutOfBounds);
        std::vector<std::uint64_t> one{0};
        CHECK(error_of([&] { read_slab(src, f, "v", one, one); }) == Errc::OutOfBounds);
        CHECK(error_of([&] { read_slab(src, f, "nope", zero, zero); }) == Errc::NoSuchVariable);
    }
}

TEST_CASE("char variables are readable as text only") {
    Writer w;
    auto n = w.add_dimension("n", 8);
    w.set_data(w.add_variable("label", Type::Char, {n}), std::string("pr\0\0\0\0\0\0", 8));
    auto bytes = w.encode();
    MemorySource src(bytes);
    auto f = parse_header(src);
    CHECK(read_text(src, f, "label") == "pr");
    CHECK(error_of([&] { read_variable(src, f, "label"); }) == Errc::TypeMismatch);
}

TEST_CASE("every header prefix fails as Truncated") {
    SyntheticSpec spec;
    spec.variables.push_back({.name = "pr", .units = "mm/day"});
    auto bytes = write_synthetic_archive(spec);
    auto full = parse_header(bytes);
    for (std::size_t n = 0; n < full.header_size; ++n) {
        CAPTURE(n);
        auto prefix = std::span<const std::byte>(bytes).first(n);
        CHECK(error_of([&] { parse_header(prefix); }) == Errc::Truncated);
    }
}

TEST_CASE("fixed-size data past end of file is Truncated") {
    SyntheticSpec spec;
    spec.unlimited_time = false;
    spec.variables.push_back({.name = "pr", .units = "mm/day"});
    auto bytes = write_synthetic_archive(spec);
    bytes.resize(bytes.size() - 4);
    CHECK(error_of([&] { parse_header(bytes); }) == Errc::Truncated);
}

TEST_CASE("synthetic archive layout") {
    SyntheticSpec spec;
    spec.lat.count = 4;
    spec.lon.count = 5;
    spec.months = 60;
    spec.variables.push_back({.name = "pr", .units = "mm/day"});
    auto bytes = write_synthetic_archive(spec);
    auto f = parse_header(bytes);
    REQUIRE(f.dimensions.size() == 3);
    CHECK(f.dimensions[0].name == "time");
    CHECK(f.dimensions[0].length == 60);
    CHECK(f.dimensions[1].name == "lat");
    CHECK(f.dimensions[1].length == 4);
    CHECK(f.dimensions[2].name == "lon");
    CHECK(f.dimensions[2].length == 5);
    CHECK(f.numrecs == 60);

    std::uint64_t fixed = 0;
    for (const auto& v : f.variables)
        if (!f.is_record_variable(v)) fixed += v.vsize;
    CHECK(f.header_size + fixed + f.numrecs * f.record_size <= bytes.size());
}

TEST_CASE("constant generator reads back as constant") {
    SyntheticSpec spec;
    spec.months = 12;
    spec.variables.push_back({.name = "pr", .units = "mm/day", .generator = Generator::Constant, .constant = 0.0});
    auto bytes = write_synthetic_archive(spec);
    MemorySource src(bytes);
    auto f = parse_header(src);
    auto s = read_variable(src, f, "pr");
    CHECK(s.size() == 12 * 4 * 5);
    for (double x : s.values) CHECK(x == 0.0);
    CHECK(s.missing_count() == 0);
}

TEST_CASE("spec validation") {
    SyntheticSpec spec;
    spec.variables.push_back({.name = "pr", .units = "mm/day"});
    auto bad = spec;
    bad.lat.count = 0;
    CHECK(error_of([&] { write_synthetic_archive(bad); }) == Errc::SpecInvalid);
    bad = spec;
    bad.variables.push_back({.name = "pr", .units = "mm/day"});
    CHECK(error_of([&] { write_synthetic_archive(bad); }) == Errc::SpecInvalid);
    bad = spec;
    bad.variables.push_back({.name = "lat", .units = "x"});
    CHECK(error_of([&] { write_synthetic_archive(bad); }) == Errc::SpecInvalid);
    bad = spec;
    bad.missing_cells.push_back({0, 0});
    CHECK(error_of([&] { write_synthetic_archive(bad); }) == Errc::SpecInvalid);
}

TEST_CASE("slab linearity over random partitions") {
    SyntheticSpec spec;
    spec.lat.count = 7;
    spec.lon.count = 9;
    spec.months = 13;
    spec.format = Format::Cdf2;
    spec.variables.push_back({.name = "pr", .units = "mm/day", .generator = Generator::Random});
    spec.variables.push_back({.name = "tasmax", .units = "K", .type = Type::Short, .scale_factor = 0.01,
                              .add_offset = 280.0, .generator = Generator::Random, .random_low = 250,
                              .random_high = 310});
    auto bytes = write_synthetic_archive(spec);
    MemorySource src(bytes);
    auto f = parse_header(src);

    std::mt19937 rng(42);
    for (const char* name : {"pr", "tasmax"}) {
        auto whole = read_variable(src, f, name);
        auto shape = whole.shape;
        for (int trial = 0; trial < 50; ++trial) {
            // random box
            std::vector<std::uint64_t> start(3), count(3);
            for (int d = 0; d < 3; ++d) {
                start[d] = rng() % shape[d];
                count[d] = 1 + rng() % (shape[d] - start[d]);
            }
            auto box = read_slab(src, f, name, start, count);
            // split along a random dimension and concatenate
            int d = static_cast<int>(rng() % 3);
            std::uint64_t cut = rng() % (count[d] + 1);
            auto c1 = count, c2 = count, s2 = start;
            c1[d] = cut;
            c2[d] = count[d] - cut;
            s2[d] = start[d] + cut;
            auto a = read_slab(src, f, name, start, c1);
            auto b = read_slab(src, f, name, s2, c2);
            // interleave a and b back along dimension d
            std::vector<double> merged;
            std::uint64_t outer = 1, inner_a = 1, inner_b = 1;
            for (int k = 0; k < d; ++k) outer *= count[k];
            for (int k = d; k < 3; ++k) {
                inner_a *= c1[k];
                inner_b *= c2[k];
            }
            for (std::uint64_t o = 0; o < outer; ++o) {
                merged.insert(merged.end(), a.values.begin() + o * inner_a, a.values.begin() + (o + 1) * inner_a);
                merged.insert(merged.end(), b.values.begin() + o * inner_b, b.values.begin() + (o + 1) * inner_b);
            }
            CHECK(merged == box.values);

            // and the box equals the matching cells of the whole variable
            for (std::uint64_t t = 0; t < count[0]; ++t)
                for (std::uint64_t i = 0; i < count[1]; ++i)
                    for (std::uint64_t j = 0; j < count[2]; ++j) {
                        auto w = ((start[0] + t) * shape[1] + start[1] + i) * shape[2] + start[2] + j;
                        auto b_idx = (t * count[1] + i) * count[2] + j;
                        REQUIRE(box.values[b_idx] == whole.values[w]);
                    }
        }
    }
}

TEST_CASE("concurrent slab reads share one descriptor") {
    SyntheticSpec spec;
    spec.lat.count = 16;
    spec.lon.count = 16;
    spec.variables.push_back({.name = "pr", .units = "mm/day"});
    auto bytes = write_synthetic_archive(spec);
    const MemorySource src(bytes);
    const auto f = parse_header(src);
    auto whole = read_variable(src, f, "pr");
    std::vector<std::thread> threads;
    std::atomic<int> mismatches{0};
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&, t] {
            for (std::uint64_t m = static_cast<std::uint64_t>(t); m < 60; m += 4) {
                std::vector<std::uint64_t> start{m, 0, 0}, count{1, 16, 16};
                auto s = read_slab(src, f, "pr", start, count);
                for (std::size_t k = 0; k < s.size(); ++k)
                    if (s.values[k] != whole.values[m * 256 + k]) ++mismatches;
            }
        });
    for (auto& th : threads) th.join();
    CHECK(mismatches == 0);
}
