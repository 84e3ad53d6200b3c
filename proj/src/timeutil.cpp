#include "ciaf/timeutil.hpp"

#include <cctype>
#include <cstdio>

namespace ciaf {

namespace {

using namespace std::chrono;

class Cursor {
public:
    explicit Cursor(std::string_view s) : s_(s) {}

    bool done() const { return pos_ >= s_.size(); }
    char peek() const { return done() ? '\0' : s_[pos_]; }

    bool accept(char c) {
        if (peek() != c)
            return false;
        ++pos_;
        return true;
    }

    void skip_spaces() {
        while (!done() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    // Reads between min_digits and max_digits decimal digits.
    std::optional<int> digits(int min_digits, int max_digits) {
        int value = 0;
        int n = 0;
        while (n < max_digits && !done() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
            value = value * 10 + (s_[pos_] - '0');
            ++pos_;
            ++n;
        }
        if (n < min_digits)
            return std::nullopt;
        return value;
    }

    // Fractional seconds: any number of digits, truncated to milliseconds.
    int fraction_millis() {
        int ms = 0;
        int n = 0;
        while (!done() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
            if (n < 3)
                ms = ms * 10 + (s_[pos_] - '0');
            ++pos_;
            ++n;
        }
        for (; n < 3; ++n)
            ms *= 10;
        return ms;
    }

    std::string_view rest() const { return s_.substr(pos_); }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
};

std::optional<Instant> make_instant(int y, int mo, int d, int h, int mi, int s, int ms) {
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60)
        return std::nullopt;
    return Instant{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms};
}

std::optional<Instant> parse_iso(std::string_view text) {
    Cursor c{text};
    auto y = c.digits(4, 4);
    if (!y || !c.accept('-'))
        return std::nullopt;
    auto mo = c.digits(2, 2);
    if (!mo || !c.accept('-'))
        return std::nullopt;
    auto d = c.digits(2, 2);
    if (!d)
        return std::nullopt;
    int h = 0, mi = 0, s = 0, ms = 0;
    minutes offset{0};
    if (!c.done()) {
        if (!c.accept('T') && !c.accept('t') && !c.accept(' '))
            return std::nullopt;
        auto hh = c.digits(2, 2);
        if (!hh || !c.accept(':'))
            return std::nullopt;
        auto mm = c.digits(2, 2);
        if (!mm)
            return std::nullopt;
        h = *hh;
        mi = *mm;
        if (c.accept(':')) {
            auto ss = c.digits(2, 2);
            if (!ss)
                return std::nullopt;
            s = *ss;
            if (c.accept('.') || c.accept(','))
                ms = c.fraction_millis();
        }
        if (c.accept('Z') || c.accept('z')) {
        } else if (c.peek() == '+' || c.peek() == '-') {
            int sign = c.peek() == '-' ? -1 : 1;
            c.accept(c.peek());
            auto oh = c.digits(2, 2);
            if (!oh)
                return std::nullopt;
            c.accept(':');
            auto om = c.digits(2, 2);
            if (!om)
                return std::nullopt;
            offset = minutes{sign * (*oh * 60 + *om)};
        }
    }
    if (!c.done())
        return std::nullopt;
    auto t = make_instant(*y, *mo, *d, h, mi, s, ms);
    if (!t)
        return std::nullopt;
    return *t - offset;
}

// "M/D/YYYY, h:mm:ss.fff AM/PM"; the comma and the fraction are optional.
std::optional<Instant> parse_azure(std::string_view text) {
    Cursor c{text};
    auto mo = c.digits(1, 2);
    if (!mo || !c.accept('/'))
        return std::nullopt;
    auto d = c.digits(1, 2);
    if (!d || !c.accept('/'))
        return std::nullopt;
    auto y = c.digits(4, 4);
    if (!y)
        return std::nullopt;
    c.accept(',');
    c.skip_spaces();
    auto h = c.digits(1, 2);
    if (!h || !c.accept(':'))
        return std::nullopt;
    auto mi = c.digits(2, 2);
    if (!mi)
        return std::nullopt;
    int s = 0, ms = 0;
    if (c.accept(':')) {
        auto ss = c.digits(2, 2);
        if (!ss)
            return std::nullopt;
        s = *ss;
        if (c.accept('.'))
            ms = c.fraction_millis();
    }
    c.skip_spaces();
    int hour = *h;
    std::string_view rest = c.rest();
    auto iequals = [](std::string_view a, std::string_view b) {
        if (a.size() != b.size())
            return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (std::toupper(static_cast<unsigned char>(a[i])) != b[i])
                return false;
        return true;
    };
    if (iequals(rest, "AM")) {
        if (hour < 1 || hour > 12)
            return std::nullopt;
        if (hour == 12)
            hour = 0;
    } else if (iequals(rest, "PM")) {
        if (hour < 1 || hour > 12)
            return std::nullopt;
        if (hour != 12)
            hour += 12;
    } else if (!rest.empty()) {
        return std::nullopt;
    }
    return make_instant(*y, *mo, *d, hour, *mi, s, ms);
}

} // namespace

std::optional<Instant> parse_instant(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
        text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
        text.remove_suffix(1);
    if (text.empty())
        return std::nullopt;
    if (text.find('/') != std::string_view::npos)
        return parse_azure(text);
    return parse_iso(text);
}

std::string format_instant(Instant t) {
    auto day_point = floor<days>(t);
    year_month_day ymd{day_point};
    hh_mm_ss<milliseconds> tod{t - day_point};
    char buf[40];
    long long ms = tod.subseconds().count();
    if (ms == 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ",
                      static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                      static_cast<unsigned>(ymd.day()),
                      static_cast<long long>(tod.hours().count()),
                      static_cast<long long>(tod.minutes().count()),
                      static_cast<long long>(tod.seconds().count()));
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                      static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                      static_cast<unsigned>(ymd.day()),
                      static_cast<long long>(tod.hours().count()),
                      static_cast<long long>(tod.minutes().count()),
                      static_cast<long long>(tod.seconds().count()), ms);
    }
    return buf;
}

Instant floor_minute(Instant t) {
    return floor<minutes>(t);
}

} // namespace ciaf
