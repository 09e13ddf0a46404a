#pragma once

#include <string>
#include <vector>

namespace stw {

struct SelftestCase {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick sanity suite over every module (tiny meshes, well under a minute).
std::vector<SelftestCase> run_selftest();

}  // namespace stw
