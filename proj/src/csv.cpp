#include "fimsketch/csv.hpp"

#include <charconv>

namespace fimsketch {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                   std::chars_format::general, 17);
    return std::string(buf, ptr);
}

}  // namespace fimsketch
