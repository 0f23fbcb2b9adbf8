#pragma once

#include "cafx/atom.hpp"

namespace cafx {

/// Atoms used by runtime-generated messages.
using down_atom = atom_constant<atom("down")>;
using exit_atom = atom_constant<atom("exit")>;

} // namespace cafx
