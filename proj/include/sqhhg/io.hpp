#pragma once

// Output helpers: shortest round-trip number formatting, CSV with LF line
// endings, and JSON files.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace sqhhg::io {

inline std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

inline std::string format_number(std::uint64_t v) { return std::to_string(v); }

inline std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string{}; }

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary), columns_(header.size())
    {
        if (!out_) fail(ErrorKind::config, "cannot write '" + path.string() + "'");
        row(header);
    }

    void row(const std::vector<std::string>& cells)
    {
        require(cells.size() == columns_, ErrorKind::invalid_parameter, "CSV row width differs from the header");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
    std::size_t columns_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::config, "cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

/// JSON number or null for a missing value.
inline nlohmann::ordered_json json_optional(const std::optional<double>& v)
{
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace sqhhg::io
