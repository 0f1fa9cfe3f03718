#include "mrsav/rng.hpp"

#include <sstream>

#include "mrsav/error.hpp"

namespace mrsav {

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::set_state(const std::string& text) {
  std::istringstream is(text);
  is >> engine_;
  if (!is) throw InvalidArgument("corrupt RNG state");
}

}  // namespace mrsav
