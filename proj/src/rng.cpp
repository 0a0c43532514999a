#include "crcsim/rng.hpp"

#include "crcsim/special_functions.hpp"

namespace crcsim {

double RngStream::normal() {
    return normal_quantile(uniform());
}

}  // namespace crcsim
