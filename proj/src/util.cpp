#include "nest/util.hpp"

#include "nest/rng.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace nest {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string Rng::encode_state() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < s_.size(); ++i) {
        if (i) os << ':';
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(s_[i]));
        os << buf;
    }
    return os.str();
}

std::optional<std::array<std::uint64_t, 4>> Rng::decode_state(const std::string& text) {
    std::array<std::uint64_t, 4> s{};
    std::size_t pos = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        if (i > 0) {
            if (pos >= text.size() || text[pos] != ':') return std::nullopt;
            ++pos;
        }
        if (pos + 16 > text.size()) return std::nullopt;
        char* end = nullptr;
        const std::string chunk = text.substr(pos, 16);
        s[i] = std::strtoull(chunk.c_str(), &end, 16);
        if (end != chunk.c_str() + 16) return std::nullopt;
        pos += 16;
    }
    if (pos != text.size()) return std::nullopt;
    return s;
}

} // namespace nest
