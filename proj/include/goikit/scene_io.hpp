#pragma once

// JSON scene, pose and metric files.
//
// Scene:
//   { "landmarks": [[x, y, z], ...],
//     "pose": { "r": 3x3 nested or 9 row-major ("R" also accepted), "t": [x, y, z] },
//     "sigma": scalar std, 2x2 nested or 4 row-major covariance,
//     "observations": [ { "z": [u, v], "landmark": id }, ... ],   optional
//     "dynamic": [bool, ...] }                                     optional
// Without "observations", each landmark gets its noiseless projection at the
// scene pose. A scalar "sigma" means Sigma = sigma^2 I.

#include <filesystem>
#include <optional>
#include <string>

#include "goikit/curvature.hpp"

namespace goikit::io {

struct Scene {
  ObservationSet set;
  Pose pose;
};

/// Throws ConfigError with the path and the reason on any malformed input.
Scene read_scene(const std::filesystem::path& path);
Scene parse_scene(const std::string& text);
std::string scene_to_json(const ObservationSet& set, const Pose& pose);

Pose read_pose(const std::filesystem::path& path);
Pose parse_pose(const std::string& text);

/// Accepts a 6x6 nested array or a flat array of 36 numbers, either inline
/// (text starting with '[') or as a file path.
Metric read_metric(const std::string& path_or_json);

}  // namespace goikit::io
