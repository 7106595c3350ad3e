#pragma once

#include <string_view>

namespace motrims {

// Library version, "major.minor.patch".
std::string_view code_version();

}  // namespace motrims
