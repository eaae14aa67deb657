#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "oneshot/rng.hpp"

namespace test {

inline Eigen::VectorXd random_unit(Eigen::Index n, std::uint64_t seed) {
  Eigen::VectorXd x = oneshot::Rng(seed).normal_vector(n);
  return x / x.norm();
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("oneshot_unit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace test
