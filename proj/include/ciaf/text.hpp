#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ciaf {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Strict decimal parse: the whole (trimmed) field must be consumed and the
/// result must be finite.
std::optional<double> parse_real(std::string_view s);
std::optional<long long> parse_integer(std::string_view s);

/// Shortest representation that round-trips exactly.
std::string format_real(double v);

namespace csv {

/// RFC-4180 reader: quoted fields may contain commas, doubled quotes and
/// newlines. A trailing '\r' is stripped from each record.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Returns false at end of input.
    bool next(std::vector<std::string>& fields);

    /// 1-based physical line where the last returned record started.
    std::size_t line() const noexcept { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
    std::size_t record_line_ = 0;
};

void write_row(std::ostream& out, const std::vector<std::string>& fields);
std::string quote(std::string_view field);

} // namespace csv

} // namespace ciaf
