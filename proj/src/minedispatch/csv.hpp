#ifndef MINEDISPATCH_CSV_HPP
#define MINEDISPATCH_CSV_HPP

#include <charconv>
#include <string>

namespace minedispatch {

/// Shortest decimal form that reads back to the same double.
inline std::string format_number(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace minedispatch

#endif  // MINEDISPATCH_CSV_HPP
