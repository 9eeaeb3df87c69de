#pragma once

#include <filesystem>
#include <string>

namespace testutil {

inline std::string fixture(const std::string& name) {
  return std::string(DYNLIGHT_TEST_FIXTURES) + "/" + name;
}

/// Fresh scratch directory under the build tree, wiped on creation.
inline std::string scratch_dir(const std::string& name) {
  auto dir = std::filesystem::path("test_scratch") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace testutil
