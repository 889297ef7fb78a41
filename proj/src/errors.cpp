#include "lvstab/errors.hpp"

#include <fmt/format.h>

namespace lvstab {

SubcriticalError::SubcriticalError(double lambda1)
    : Error(fmt::format("subcritical: lambda_1(a) = {:.6g} >= 0, only the zero solution exists", lambda1)),
      lambda1_(lambda1) {}

}  // namespace lvstab
