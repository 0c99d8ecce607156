#pragma once

#include <cstdio>
#include <string>

namespace convoy::detail {

// Fixed-point formatting, locale independent for the "C" locale the library runs under.
inline std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

inline std::string signed_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.*f", decimals, value);
    return buf;
}

}  // namespace convoy::detail
