#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dkrrt/execution.hpp"
#include "dkrrt/observables.hpp"
#include "dkrrt/training.hpp"

namespace dkrrt {

/// Scene file (YAML). Every error is a Config error prefixed with "file:line:".
Scene load_scene(const std::filesystem::path& file);
Scene parse_scene(const std::string& text, const std::string& origin = "<string>");

struct SuiteConfig {
  std::vector<std::filesystem::path> scene_files;  // resolved against the config file's directory
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;
  std::uint64_t suite_seed = 0;
  std::string metrics_out = "metrics.csv";
  std::string summary_out = "summary.json";
  bool write_trajectories = false;
};

SuiteConfig load_suite(const std::filesystem::path& file);
SuiteConfig parse_suite(const std::string& text, const std::string& origin = "<string>",
                        const std::filesystem::path& base_dir = ".");

/// Everything `train` needs: data scene, schedule and model shapes.
struct TrainSetup {
  TrainingScene scene = TrainingScene::two_obstacle();
  TrainingConfig config;
  std::vector<Index> encoder_hidden{64, 64};
  Index encoder_features = 4;
  std::uint64_t encoder_seed = 0;
  int robot_degree = 3;  // polynomial robot dictionary
};

TrainSetup load_train_setup(const std::filesystem::path& file);
TrainSetup parse_train_setup(const std::string& text, const std::string& origin = "<string>");

}  // namespace dkrrt
