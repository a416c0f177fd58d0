#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <gtest/gtest.h>

#include "parobs/grid.hpp"

namespace parobs::test {

inline std::shared_ptr<const Grid> make_grid(int dim, double radius, double h, double tau, double horizon) {
  GridSpec s;
  s.dim = dim;
  s.radius = radius;
  s.h = h;
  s.tau = tau;
  s.horizon = horizon;
  return std::make_shared<const Grid>(s);
}

// Fresh directory under the system temp dir, named after the running test.
inline std::filesystem::path scratch_dir(const std::string& tag = {}) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  std::string name = std::string(info->test_suite_name()) + "_" + info->name() + tag;
  const auto dir = std::filesystem::temp_directory_path() / "parobs_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace parobs::test
