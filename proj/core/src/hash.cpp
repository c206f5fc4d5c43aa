#include "phalcor/hash.hpp"

#include <fmt/format.h>

namespace phalcor {

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

}  // namespace phalcor
