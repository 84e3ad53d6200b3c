#include "ciaf/text.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace ciaf {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::optional<double> parse_real(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    if (s.empty())
        return std::nullopt;
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

std::optional<long long> parse_integer(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    if (s.empty())
        return std::nullopt;
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        return std::nullopt;
    return v;
}

std::string format_real(double v) {
    // Plain digits for counter-sized magnitudes; exponent form only at the extremes.
    char buf[400];
    double mag = std::abs(v);
    auto [ptr, ec] = mag == 0.0 || (mag >= 1e-6 && mag < 1e21)
                         ? std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed)
                         : std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

namespace csv {

bool Reader::next(std::vector<std::string>& fields) {
    fields.clear();
    std::string line;
    if (!std::getline(in_, line))
        return false;
    ++line_;
    record_line_ = line_;

    std::string field;
    bool in_quotes = false;
    bool was_quoted = false;
    for (;;) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            char c = line[i];
            if (in_quotes) {
                if (c == '"') {
                    if (i + 1 < line.size() && line[i + 1] == '"') {
                        field += '"';
                        ++i;
                    } else {
                        in_quotes = false;
                    }
                } else {
                    field += c;
                }
            } else if (c == '"' && field.empty() && !was_quoted) {
                in_quotes = true;
                was_quoted = true;
            } else if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
                was_quoted = false;
            } else if (c == '\r' && i + 1 == line.size()) {
                // CRLF line ending
            } else {
                field += c;
            }
        }
        if (!in_quotes)
            break;
        // Quoted field spans a newline.
        if (!std::getline(in_, line))
            break;
        ++line_;
        field += '\n';
    }
    fields.push_back(std::move(field));
    return true;
}

std::string quote(std::string_view field) {
    bool needs = field.find_first_of(",\"\n\r") != std::string_view::npos ||
                 (!field.empty() && (std::isspace(static_cast<unsigned char>(field.front())) ||
                                     std::isspace(static_cast<unsigned char>(field.back()))));
    if (!needs)
        return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i != 0)
            out << ',';
        out << quote(fields[i]);
    }
    out << '\n';
}

} // namespace csv

} // namespace ciaf
