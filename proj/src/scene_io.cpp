#include "goikit/scene_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "goikit/errors.hpp"

namespace goikit::io {

namespace {

using nlohmann::json;

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  return j.get<double>();
}

// Reads rows x cols from a nested array or a flat row-major array.
Eigen::MatrixXd matrix(const json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array");
  Eigen::MatrixXd M(rows, cols);
  const auto total = static_cast<std::size_t>(rows * cols);
  if (j.size() == total && (total == 1 || !j[0].is_array())) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) M(r, c) = number(j[r * cols + c], what);
    }
    return M;
  }
  if (j.size() != static_cast<std::size_t>(rows)) {
    throw ConfigError(what + " must be " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != static_cast<std::size_t>(cols)) {
      throw ConfigError(what + " must be " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    for (int c = 0; c < cols; ++c) M(r, c) = number(j[r][c], what);
  }
  return M;
}

Vec3 vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + " must have 3 entries");
  return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

Pose pose_from(const json& j) {
  const char* key = j.is_object() && j.contains("R") ? "R" : "r";
  if (!j.is_object() || !j.contains(key) || !j.contains("t")) {
    throw ConfigError("pose needs \"r\" and \"t\"");
  }
  const Mat3 R = matrix(j[key], 3, 3, "pose.r");
  return Pose(R, vec3(j["t"], "pose.t"));
}

json pose_to(const Pose& g) {
  json R = json::array();
  for (int r = 0; r < 3; ++r) R.push_back({g.R()(r, 0), g.R()(r, 1), g.R()(r, 2)});
  return {{"r", R}, {"t", {g.t().x(), g.t().y(), g.t().z()}}};
}

template <class F>
auto with_context(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

Scene parse_scene(const std::string& text) {
  const json j = parse_json(text);
  if (!j.is_object()) throw ConfigError("scene must be a JSON object");
  if (!j.contains("landmarks") || !j["landmarks"].is_array() || j["landmarks"].empty()) {
    throw ConfigError("scene needs a non-empty \"landmarks\" array");
  }
  Scene scene;
  if (j.contains("pose")) scene.pose = pose_from(j["pose"]);

  for (const auto& l : j["landmarks"]) scene.set.landmarks.push_back(vec3(l, "landmark"));

  if (j.contains("sigma")) {
    const json& s = j["sigma"];
    if (s.is_number()) {
      const double sigma = s.get<double>();
      if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
      scene.set.noise = NoiseModel::isotropic(sigma);
    } else {
      scene.set.noise = NoiseModel(Mat2(matrix(s, 2, 2, "sigma")));
    }
  }

  if (j.contains("observations")) {
    for (const auto& o : j["observations"]) {
      if (!o.is_object() || !o.contains("z") || !o["z"].is_array() || o["z"].size() != 2) {
        throw ConfigError("observation needs \"z\": [u, v]");
      }
      Observation obs;
      obs.z = {number(o["z"][0], "observation z"), number(o["z"][1], "observation z")};
      const json& id = o.contains("landmark") ? o["landmark"] : json(scene.set.observations.size());
      if (!id.is_number_unsigned() && !id.is_number_integer()) {
        throw ConfigError("observation landmark id must be an integer");
      }
      const auto k = id.get<long long>();
      if (k < 0 || static_cast<std::size_t>(k) >= scene.set.landmarks.size()) {
        throw ConfigError("observation refers to a missing landmark");
      }
      obs.landmark_id = static_cast<std::size_t>(k);
      scene.set.observations.push_back(obs);
    }
  } else {
    for (std::size_t i = 0; i < scene.set.landmarks.size(); ++i) {
      scene.set.observations.push_back(
          {project(act_inverse(scene.pose, scene.set.landmarks[i])), i});
    }
  }

  if (j.contains("dynamic")) {
    const json& d = j["dynamic"];
    if (!d.is_array() || d.size() != scene.set.observations.size()) {
      throw ConfigError("\"dynamic\" must have one entry per observation");
    }
    std::vector<bool> labels;
    for (const auto& v : d) {
      if (!v.is_boolean()) throw ConfigError("\"dynamic\" entries must be booleans");
      labels.push_back(v.get<bool>());
    }
    scene.set.dynamic_labels = labels;
  }
  scene.set.validate();
  return scene;
}

Scene read_scene(const std::filesystem::path& path) {
  return with_context("malformed scene file '" + path.string() + "'",
                      [&] { return parse_scene(slurp(path)); });
}

std::string scene_to_json(const ObservationSet& set, const Pose& pose) {
  json j;
  j["pose"] = pose_to(pose);
  const Mat2& S = set.noise.Sigma();
  j["sigma"] = {{S(0, 0), S(0, 1)}, {S(1, 0), S(1, 1)}};
  j["landmarks"] = json::array();
  for (const auto& X : set.landmarks) j["landmarks"].push_back({X.x(), X.y(), X.z()});
  j["observations"] = json::array();
  for (const auto& o : set.observations) {
    j["observations"].push_back({{"z", {o.z.x(), o.z.y()}}, {"landmark", o.landmark_id}});
  }
  if (set.dynamic_labels) j["dynamic"] = *set.dynamic_labels;
  return j.dump(2);
}

Pose parse_pose(const std::string& text) { return pose_from(parse_json(text)); }

Pose read_pose(const std::filesystem::path& path) {
  return with_context("malformed pose file '" + path.string() + "'",
                      [&] { return parse_pose(slurp(path)); });
}

Metric read_metric(const std::string& path_or_json) {
  const bool inline_json = !path_or_json.empty() && path_or_json.front() == '[';
  const std::string where =
      inline_json ? std::string("malformed metric") : "malformed metric file '" + path_or_json + "'";
  return with_context(where, [&] {
    const std::string text = inline_json ? path_or_json : slurp(path_or_json);
    return Metric(Mat6(matrix(parse_json(text), 6, 6, "metric")));
  });
}

}  // namespace goikit::io
