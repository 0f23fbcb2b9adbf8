#include "cafx/ref_counted.hpp"

namespace cafx {

ref_counted::~ref_counted() {
  // nop
}

} // namespace cafx
