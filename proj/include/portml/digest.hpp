#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace portml::digest {

// FNV-1a, 64-bit. Stable across platforms and runs; used for schema and
// config fingerprints, not security.
inline uint64_t fnv1a(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a_list(const std::vector<std::string>& items) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& s : items) {
        h = fnv1a(s, h);
        h ^= 0x1f;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex(uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline uint64_t file_digest(const std::string& path);

}  // namespace portml::digest

#include <fstream>
#include <sstream>

inline uint64_t portml::digest::file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a(ss.str());
}
