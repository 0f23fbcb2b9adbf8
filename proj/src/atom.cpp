#include "cafx/atom.hpp"

#include <algorithm>

namespace cafx {

std::string atom_decode(atom_value v) {
  auto bits = static_cast<uint64_t>(v);
  if (bits >> (6 * max_atom_length) != 0)
    throw failure{errc::invalid_atom, "atom value has nonzero top bits"};
  std::string result;
  while (bits != 0) {
    auto code = bits & 0x3F;
    if (code == 0)
      throw failure{errc::invalid_atom, "atom value contains an empty group"};
    result += detail::atom_char(code);
    bits >>= 6;
  }
  std::reverse(result.begin(), result.end());
  return result;
}

std::string to_string(atom_value v) {
  if (!is_valid_atom_value(v)) {
    char buf[32];
    snprintf(buf, sizeof(buf), "atom#%016llx",
             static_cast<unsigned long long>(v));
    return buf;
  }
  return "'" + atom_decode(v) + "'";
}

} // namespace cafx
