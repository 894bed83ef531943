#pragma once

#include <cmath>

#include "pushdet/skeleton.hpp"

namespace pushdet::fixtures {

/// Upright frontal skeleton with arms hanging straight down. All confidences 1.
inline Skeleton upright(double cx = 100.0, double hip_y = 200.0, double h = 100.0) {
  Skeleton s;
  auto set = [&](Joint j, double x, double y) { s[j] = {x, y, 1.0}; };
  const double sw = 0.22 * h, hw = 0.16 * h, torso = 0.3 * h;
  const double sy = hip_y - torso;
  set(Joint::Nose, cx, sy - 0.12 * h);
  set(Joint::LeftEye, cx + 0.03 * h, sy - 0.14 * h);
  set(Joint::RightEye, cx - 0.03 * h, sy - 0.14 * h);
  set(Joint::LeftEar, cx + 0.06 * h, sy - 0.13 * h);
  set(Joint::RightEar, cx - 0.06 * h, sy - 0.13 * h);
  set(Joint::LeftShoulder, cx + sw / 2, sy);
  set(Joint::RightShoulder, cx - sw / 2, sy);
  // Elbow directly below the shoulder, wrist directly below the elbow.
  set(Joint::LeftElbow, cx + sw / 2, sy + 0.17 * h);
  set(Joint::RightElbow, cx - sw / 2, sy + 0.17 * h);
  set(Joint::LeftWrist, cx + sw / 2, sy + 0.32 * h);
  set(Joint::RightWrist, cx - sw / 2, sy + 0.32 * h);
  set(Joint::LeftHip, cx + hw / 2, hip_y);
  set(Joint::RightHip, cx - hw / 2, hip_y);
  set(Joint::LeftKnee, cx + hw / 2, hip_y + 0.24 * h);
  set(Joint::RightKnee, cx - hw / 2, hip_y + 0.24 * h);
  set(Joint::LeftAnkle, cx + hw / 2, hip_y + 0.47 * h);
  set(Joint::RightAnkle, cx - hw / 2, hip_y + 0.47 * h);
  s.bbox = {cx - 0.3 * h, sy - 0.2 * h, 0.6 * h, h};
  s.det_conf = 0.9;
  return s;
}

/// Skeleton whose keypoints all sit inside `box` (only the box matters).
inline Skeleton boxed(const BBox& box) {
  Skeleton s = upright(box.x + box.w / 2, box.y + 0.6 * box.h, box.h * 0.9);
  s.bbox = box;
  return s;
}

}  // namespace pushdet::fixtures
