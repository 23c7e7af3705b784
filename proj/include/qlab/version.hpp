#ifndef QLAB_VERSION_HPP
#define QLAB_VERSION_HPP

namespace qlab {
inline constexpr const char* kVersion = "0.1.0";
}

#endif
