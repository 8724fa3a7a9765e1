#include "fairpred/hashing.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fairpred/errors.hpp"

namespace fairpred {

std::string to_hex(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return to_hex(fnv1a64(buffer.str()));
}

} // namespace fairpred
