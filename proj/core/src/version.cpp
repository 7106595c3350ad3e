#include "motrims/version.hpp"

namespace motrims {

std::string_view code_version() { return MOTRIMS_VERSION; }

}  // namespace motrims
