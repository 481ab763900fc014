#include "dcpviz/netcdf.hpp"

#include "big_endian.hpp"

#include <cmath>
#include <limits>

namespace dcpviz::nc {

using detail::append_u16;
using detail::append_u32;
using detail::append_u64;
using detail::padded4;

namespace {

void pad(std::vector<std::byte>& out, std::uint64_t n) { out.insert(out.end(), padded4(n) - n, std::byte{0}); }

// Data padding uses the type's default fill, as the reference netCDF library does.
void pad_values(std::vector<std::byte>& out, Type type, std::uint64_t n) {
    std::uint64_t extra = padded4(n) - n;
    if (type == Type::Byte) {
        out.insert(out.end(), extra, std::byte{0x81});
    } else if (type == Type::Short) {
        for (std::uint64_t i = 0; i < extra; i += 2) append_u16(out, 0x8001);
    } else {
        out.insert(out.end(), extra, std::byte{0});
    }
}

void append_name(std::vector<std::byte>& out, const std::string& name) {
    append_u32(out, static_cast<std::uint32_t>(name.size()));
    for (char c : name) out.push_back(static_cast<std::byte>(c));
    pad(out, name.size());
}

void append_element(std::vector<std::byte>& out, Type type, double v) {
    switch (type) {
    case Type::Byte:
    case Type::Char: out.push_back(static_cast<std::byte>(static_cast<std::int8_t>(std::llround(v)))); break;
    case Type::Short: append_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::llround(v)))); break;
    case Type::Int: append_u32(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(std::llround(v)))); break;
    case Type::Float: append_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); break;
    case Type::Double: append_u64(out, std::bit_cast<std::uint64_t>(v)); break;
    }
}

void append_attribute(std::vector<std::byte>& out, const std::string& name, const Attribute& attr) {
    append_name(out, name);
    append_u32(out, static_cast<std::uint32_t>(attr.type()));
    append_u32(out, static_cast<std::uint32_t>(attr.size()));
    std::visit(
        [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, std::string>) {
                for (char c : v) out.push_back(static_cast<std::byte>(c));
                pad(out, v.size());
            } else {
                using T = typename V::value_type;
                for (T x : v) {
                    if constexpr (std::is_same_v<T, std::int8_t>) out.push_back(static_cast<std::byte>(x));
                    else if constexpr (std::is_same_v<T, std::int16_t>) append_u16(out, static_cast<std::uint16_t>(x));
                    else if constexpr (std::is_same_v<T, std::int32_t>) append_u32(out, static_cast<std::uint32_t>(x));
                    else if constexpr (std::is_same_v<T, float>) append_u32(out, std::bit_cast<std::uint32_t>(x));
                    else append_u64(out, std::bit_cast<std::uint64_t>(x));
                }
                pad(out, v.size() * sizeof(T));
            }
        },
        attr.value());
}

void append_attribute_list(std::vector<std::byte>& out, const Attributes& attrs) {
    if (attrs.empty()) {
        append_u32(out, 0);
        append_u32(out, 0);
        return;
    }
    append_u32(out, 0x0C);
    append_u32(out, static_cast<std::uint32_t>(attrs.size()));
    for (const auto& [name, attr] : attrs) append_attribute(out, name, attr);
}

} // namespace

std::size_t Writer::add_dimension(std::string name, std::uint64_t length, bool unlimited) {
    if (name.empty()) throw NetcdfError(Errc::SpecInvalid, "empty dimension name");
    for (const auto& d : dims_) {
        if (d.name == name) throw NetcdfError(Errc::SpecInvalid, "duplicate dimension '" + name + "'");
        if (unlimited && d.is_unlimited) throw NetcdfError(Errc::SpecInvalid, "second unlimited dimension");
    }
    if (!unlimited && length == 0) throw NetcdfError(Errc::SpecInvalid, "zero-length dimension '" + name + "'");
    dims_.push_back({std::move(name), length, unlimited});
    return dims_.size() - 1;
}

void Writer::set_global(std::string name, Attribute value) { globals_.set(std::move(name), std::move(value)); }

std::size_t Writer::add_variable(std::string name, Type type, std::vector<std::size_t> dim_ids,
                                 Attributes attributes) {
    if (name.empty()) throw NetcdfError(Errc::SpecInvalid, "empty variable name");
    for (const auto& v : vars_)
        if (v.name == name) throw NetcdfError(Errc::SpecInvalid, "duplicate variable '" + name + "'");
    for (std::size_t i = 0; i < dim_ids.size(); ++i) {
        if (dim_ids[i] >= dims_.size()) throw NetcdfError(Errc::SpecInvalid, "undeclared dimension id");
        if (dims_[dim_ids[i]].is_unlimited && i != 0)
            throw NetcdfError(Errc::SpecInvalid, "unlimited dimension must come first");
    }
    Variable v;
    v.name = std::move(name);
    v.type = type;
    v.dim_ids = std::move(dim_ids);
    v.attributes = std::move(attributes);
    vars_.push_back(std::move(v));
    data_.emplace_back(std::vector<double>{});
    return vars_.size() - 1;
}

void Writer::set_data(std::size_t var_index, VariableData data) {
    if (var_index >= vars_.size()) throw NetcdfError(Errc::SpecInvalid, "variable index out of range");
    data_[var_index] = std::move(data);
}

std::vector<std::byte> Writer::encode() const {
    std::uint64_t numrecs = 0;
    for (const auto& d : dims_)
        if (d.is_unlimited) numrecs = d.length;

    auto is_record = [&](const Variable& v) { return !v.dim_ids.empty() && dims_[v.dim_ids[0]].is_unlimited; };
    auto per_record_elems = [&](const Variable& v) {
        std::uint64_t n = 1;
        for (auto id : v.dim_ids)
            if (!dims_[id].is_unlimited) n *= dims_[id].length;
        return n;
    };

    std::vector<Variable> vars = vars_;
    std::size_t n_record = 0;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        auto& v = vars[i];
        auto elems = per_record_elems(v);
        v.vsize = padded4(elems * type_size(v.type));
        std::uint64_t expected = is_record(v) ? elems * numrecs : elems;
        std::uint64_t have = std::visit([](const auto& d) -> std::uint64_t { return d.size(); }, data_[i]);
        bool text = std::holds_alternative<std::string>(data_[i]);
        if (text != (v.type == Type::Char))
            throw NetcdfError(Errc::SpecInvalid, "payload kind does not match type of '" + v.name + "'");
        if (have != expected)
            throw NetcdfError(Errc::SpecInvalid, "variable '" + v.name + "' expects " + std::to_string(expected) +
                                                     " values, got " + std::to_string(have));
        if (is_record(v)) ++n_record;
    }
    std::uint64_t record_size = 0;
    for (const auto& v : vars)
        if (is_record(v))
            record_size += n_record == 1 ? per_record_elems(v) * type_size(v.type) : v.vsize;

    auto build_header = [&]() {
        std::vector<std::byte> h;
        h.push_back(std::byte{'C'});
        h.push_back(std::byte{'D'});
        h.push_back(std::byte{'F'});
        h.push_back(std::byte(format_ == Format::Cdf1 ? 1 : 2));
        append_u32(h, static_cast<std::uint32_t>(numrecs));
        if (dims_.empty()) {
            append_u32(h, 0);
            append_u32(h, 0);
        } else {
            append_u32(h, 0x0A);
            append_u32(h, static_cast<std::uint32_t>(dims_.size()));
            for (const auto& d : dims_) {
                append_name(h, d.name);
                append_u32(h, d.is_unlimited ? 0 : static_cast<std::uint32_t>(d.length));
            }
        }
        append_attribute_list(h, globals_);
        if (vars.empty()) {
            append_u32(h, 0);
            append_u32(h, 0);
        } else {
            append_u32(h, 0x0B);
            append_u32(h, static_cast<std::uint32_t>(vars.size()));
            for (const auto& v : vars) {
                append_name(h, v.name);
                append_u32(h, static_cast<std::uint32_t>(v.dim_ids.size()));
                for (auto id : v.dim_ids) append_u32(h, static_cast<std::uint32_t>(id));
                append_attribute_list(h, v.attributes);
                append_u32(h, static_cast<std::uint32_t>(v.type));
                append_u32(h, v.vsize > 0xFFFFFFFCull ? 0xFFFFFFFFu : static_cast<std::uint32_t>(v.vsize));
                if (format_ == Format::Cdf1)
                    append_u32(h, static_cast<std::uint32_t>(v.begin));
                else
                    append_u64(h, v.begin);
            }
        }
        return h;
    };

    // header length does not depend on begin values, so lay out data after a dry run
    const std::uint64_t header_size = build_header().size();
    std::uint64_t pos = header_size;
    for (auto& v : vars)
        if (!is_record(v)) {
            v.begin = pos;
            pos += v.vsize;
        }
    std::uint64_t rec_pos = pos;
    for (auto& v : vars)
        if (is_record(v)) {
            v.begin = rec_pos;
            rec_pos += n_record == 1 ? per_record_elems(v) * type_size(v.type) : v.vsize;
        }
    if (format_ == Format::Cdf1) {
        std::uint64_t last_begin = 0;
        for (const auto& v : vars) last_begin = std::max(last_begin, v.begin);
        if (last_begin > std::numeric_limits<std::int32_t>::max())
            throw NetcdfError(Errc::SpecInvalid, "offsets exceed CDF-1 limits; use CDF-2");
    }

    std::vector<std::byte> out = build_header();
    out.reserve(pos + numrecs * record_size);

    auto write_values = [&](const Variable& v, std::size_t vi, std::uint64_t first, std::uint64_t n) {
        if (const auto* text = std::get_if<std::string>(&data_[vi])) {
            for (std::uint64_t i = 0; i < n; ++i) out.push_back(static_cast<std::byte>((*text)[first + i]));
        } else {
            const auto& d = std::get<std::vector<double>>(data_[vi]);
            for (std::uint64_t i = 0; i < n; ++i) append_element(out, v.type, d[first + i]);
        }
    };

    for (std::size_t i = 0; i < vars.size(); ++i) {
        const auto& v = vars[i];
        if (is_record(v)) continue;
        auto n = per_record_elems(v);
        write_values(v, i, 0, n);
        pad_values(out, v.type, n * type_size(v.type));
    }
    for (std::uint64_t r = 0; r < numrecs; ++r) {
        for (std::size_t i = 0; i < vars.size(); ++i) {
            const auto& v = vars[i];
            if (!is_record(v)) continue;
            auto n = per_record_elems(v);
            write_values(v, i, r * n, n);
            if (n_record != 1) pad_values(out, v.type, n * type_size(v.type));
        }
    }
    return out;
}

} // namespace dcpviz::nc
