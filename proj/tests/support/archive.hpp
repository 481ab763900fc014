#pragma once

#include "dcpviz/netcdf.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

// Writes a synthetic archive file and returns its path.
inline std::filesystem::path write_archive(const std::filesystem::path& dir, const dcpviz::nc::SyntheticSpec& spec) {
    std::filesystem::create_directories(dir);
    auto path = dir / dcpviz::nc::archive_file_name(spec);
    auto bytes = dcpviz::nc::write_synthetic_archive(spec);
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return path;
}

inline dcpviz::nc::SyntheticSpec small_spec(int start_year, int years, std::string scenario = "rcp85",
                                            std::vector<std::string> variables = {"pr"}) {
    dcpviz::nc::SyntheticSpec s;
    s.lat = {12, 25.0, 2.0};
    s.lon = {16, -124.0, 3.5};
    s.start_year = start_year;
    s.months = static_cast<std::size_t>(12 * years);
    s.scenario = std::move(scenario);
    for (const auto& name : variables) {
        dcpviz::nc::SyntheticVariable v;
        v.name = name;
        v.units = name == "pr" ? "kg m-2 s-1" : "K";
        s.variables.push_back(v);
    }
    return s;
}
