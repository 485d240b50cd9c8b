#include "mrbear/errors.hpp"

namespace mrbear {

ValidationError::ValidationError(std::string field, const std::string& what)
    : Error(field + ": " + what), field_(std::move(field)) {}

}  // namespace mrbear
