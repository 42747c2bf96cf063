#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowpix {

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

// Fixed-point rendering with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

// Strict parse: the whole (trimmed) string must be a finite or infinite real.
std::optional<double> parse_double(std::string_view text);
std::optional<std::uint64_t> parse_uint(std::string_view text);

std::string_view trim(std::string_view text);

// Splits one CSV line. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

std::vector<std::string> split(std::string_view text, char separator);
std::string join(const std::vector<std::string>& parts, std::string_view separator);

// Round half away from zero.
long long round_half_away(double value);

// 64-bit FNV-1a, used for schema, model and dataset digests.
class Fnv1a {
public:
    void update(std::string_view bytes);
    void update(const void* data, std::size_t size);
    std::uint64_t value() const { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string fnv1a_hex(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace flowpix
