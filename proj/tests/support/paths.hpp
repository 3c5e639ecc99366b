#pragma once

#include <filesystem>
#include <string>

#include "ctvsim/target.hpp"

namespace testing_paths {

inline std::filesystem::path target_file(const std::string& name) {
  return std::filesystem::path(CTVSIM_DATA_DIR) / "targets" / (name + ".json");
}

inline ctvsim::TargetSpec shipped(const std::string& name) {
  return ctvsim::load_spec_file(target_file(name));
}

}  // namespace testing_paths
