#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <ostream>

namespace gcilsm {

/// Track identity: the scan at which the track was born and an index that
/// distinguishes births within that scan. Ordered lexicographically.
struct Label {
  int birth_time = 0;
  int index = 1;

  friend constexpr auto operator<=>(const Label&, const Label&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Label& l) {
  return os << '(' << l.birth_time << ',' << l.index << ')';
}

}  // namespace gcilsm

template <>
struct std::hash<gcilsm::Label> {
  std::size_t operator()(const gcilsm::Label& l) const noexcept {
    return std::hash<long long>{}((static_cast<long long>(l.birth_time) << 32) ^
                                  static_cast<unsigned>(l.index));
  }
};
