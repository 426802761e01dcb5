#include "bdcraft/error.hpp"

namespace bdcraft {

ParseError::ParseError(std::size_t line, const std::string& what)
    : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace bdcraft
