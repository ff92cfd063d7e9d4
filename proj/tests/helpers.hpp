#pragma once

#include <string>

#include "quitting/scalar.hpp"

inline std::string fixture(const std::string& name) {
  return std::string(FIXTURES_DIR) + "/" + name;
}

inline quitting::rational rat(long long p, long long q) {
  return quitting::rational(p) / quitting::rational(q);
}
