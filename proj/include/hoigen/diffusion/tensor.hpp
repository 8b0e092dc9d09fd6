#pragma once

#include <Eigen/Core>

#include "hoigen/core/error.hpp"

namespace hoigen::diffusion {

/// Slot/feature layout of one generated window.
///
/// Sample slot features: [human pose (D) | object position (3) + row-major rotation (9) | contacts (4) | time offset (1)]
/// Condition slot features: [object (12) | human pose (D)], the masked-motion layout.
struct SampleLayout {
  int joints = 15;
  int slots = 9;  ///< initial state + key actions

  int pose_dim() const { return 3 + 6 * joints; }
  int feature_dim() const { return pose_dim() + 12 + 4 + 1; }
  int condition_dim() const { return 12 + pose_dim(); }

  int object_offset() const { return pose_dim(); }
  int contact_offset() const { return pose_dim() + 12; }
  int time_offset() const { return pose_dim() + 16; }

  /// Column in the sample features for condition column `c`.
  int sample_column_of_condition(int c) const { return c < 12 ? pose_dim() + c : c - 12; }
  /// Column of the object x/y/z position in the condition features.
  static constexpr int condition_object_x = 0;

  bool operator==(const SampleLayout&) const = default;
};

/// slots x features; invalid slots carry zeros.
struct SampleTensor {
  Eigen::MatrixXd values;
  Eigen::VectorXd valid;  ///< 1 for real slots, 0 for padding
};

/// Conditioning signals for one window, in model space.
struct ConditionBundle {
  Eigen::MatrixXd geometry;    ///< basis-point vectors (count x 3); projected inside the denoiser
  Eigen::MatrixXd motion;      ///< masked motion S: slots x (12 + D)
  Eigen::MatrixXd mask;        ///< same shape as motion; 1 where an entry is given
  Eigen::VectorXd slot_valid;  ///< which slots are to be generated
  Eigen::VectorXd text;        ///< text embedding

  int given_slot_count() const;
};

inline void require_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols)
    throw ValidationError(std::string(what) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                          ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

}  // namespace hoigen::diffusion
