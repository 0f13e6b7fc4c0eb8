#pragma once

#include <array>
#include <cmath>

#include "crossview/core/errors.hpp"

namespace crossview {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// Pinhole camera: intrinsics in pixels, extrinsics mapping world -> camera,
// plus the image size the pixel coordinates refer to.
struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  std::array<double, 9> rotation = {1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  std::array<double, 3> translation = {0, 0, 0};
  int width = 1;
  int height = 1;

  Vec3 world_to_camera(const Vec3& p) const {
    const auto& r = rotation;
    return {r[0] * p.x + r[1] * p.y + r[2] * p.z + translation[0],
            r[3] * p.x + r[4] * p.y + r[5] * p.z + translation[1],
            r[6] * p.x + r[7] * p.y + r[8] * p.z + translation[2]};
  }

  Vec3 camera_to_world(const Vec3& p) const {
    const double qx = p.x - translation[0];
    const double qy = p.y - translation[1];
    const double qz = p.z - translation[2];
    const auto& r = rotation;  // orthonormal, so inverse is the transpose
    return {r[0] * qx + r[3] * qy + r[6] * qz,
            r[1] * qx + r[4] * qy + r[7] * qz,
            r[2] * qx + r[5] * qy + r[8] * qz};
  }

  void validate() const {
    if (fx <= 0.0 || fy <= 0.0) throw InputDomainError("CameraModel: focal lengths must be > 0");
    if (width < 1 || height < 1) throw InputDomainError("CameraModel: image size must be >= 1");
    const auto& r = rotation;
    // R * R^T == I and det(R) == +1, within 1e-6.
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += r[i * 3 + k] * r[j * 3 + k];
        const double want = (i == j) ? 1.0 : 0.0;
        if (std::abs(dot - want) > 1e-6) {
          throw InputDomainError("CameraModel: rotation is not orthonormal");
        }
      }
    }
    const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                       r[2] * (r[3] * r[7] - r[4] * r[6]);
    if (std::abs(det - 1.0) > 1e-6) {
      throw InputDomainError("CameraModel: rotation determinant must be +1");
    }
  }
};

}  // namespace crossview
