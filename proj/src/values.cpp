#include "heprep/values.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace heprep {

std::string format_real(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    std::string out(buf.data(), end);
    auto e = out.find('e');
    if (e == std::string::npos) return out;
    std::string mantissa = out.substr(0, e);
    std::string_view exp(out);
    exp.remove_prefix(e + 1);
    bool negative = false;
    if (!exp.empty() && (exp.front() == '+' || exp.front() == '-')) {
        negative = exp.front() == '-';
        exp.remove_prefix(1);
    }
    while (exp.size() > 1 && exp.front() == '0') exp.remove_prefix(1);
    return mantissa + "e" + (negative ? "-" : "") + std::string(exp);
}

std::optional<double> parse_real(std::string_view text) {
    if (text.empty()) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

std::optional<std::int64_t> parse_integer(std::string_view text) {
    if (text.empty()) return std::nullopt;
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

std::string format_payload(const AttPayload& payload) {
    struct Formatter {
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(double d) const { return format_real(d); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(const Color& c) const {
            return format_real(c.r) + "," + format_real(c.g) + "," + format_real(c.b);
        }
    };
    return std::visit(Formatter{}, payload);
}

std::optional<AttPayload> parse_payload(AttValueKind kind, std::string_view text) {
    switch (kind) {
        case AttValueKind::Text: return AttPayload{std::string(text)};
        case AttValueKind::Integer:
            if (auto i = parse_integer(text)) return AttPayload{*i};
            return std::nullopt;
        case AttValueKind::Real:
            if (auto d = parse_real(text)) return AttPayload{*d};
            return std::nullopt;
        case AttValueKind::Boolean:
            if (text == "true") return AttPayload{true};
            if (text == "false") return AttPayload{false};
            return std::nullopt;
        case AttValueKind::Color: {
            auto c1 = text.find(',');
            if (c1 == text.npos) return std::nullopt;
            auto c2 = text.find(',', c1 + 1);
            if (c2 == text.npos || text.find(',', c2 + 1) != text.npos) return std::nullopt;
            auto r = parse_real(text.substr(0, c1));
            auto g = parse_real(text.substr(c1 + 1, c2 - c1 - 1));
            auto b = parse_real(text.substr(c2 + 1));
            if (!r || !g || !b) return std::nullopt;
            for (double x : {*r, *g, *b}) {
                if (x < 0.0 || x > 1.0) return std::nullopt;
            }
            return AttPayload{Color{*r, *g, *b}};
        }
    }
    return std::nullopt;
}

}  // namespace heprep
