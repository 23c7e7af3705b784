#ifndef QLAB_CSV_HPP
#define QLAB_CSV_HPP

#include <charconv>
#include <cstdint>
#include <string>

namespace qlab {

// Shortest round-trip decimal form; the same value always prints the same
// bytes, which is what makes CSV outputs comparable across runs.
inline std::string fmt_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt_int(std::int64_t v) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt_uint(std::uint64_t v) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace qlab

#endif
