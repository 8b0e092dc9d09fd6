#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hoigen/core/motion.hpp"
#include "hoigen/geometry/mesh.hpp"
#include "hoigen/io/motion_format.hpp"
#include "hoigen/tracking/tracking.hpp"

namespace hoigen::metrics {

/// Distances in millimeters unless noted. Unset fields could not be computed for the record.
struct GenerationMetrics {
  std::optional<double> start_error;     ///< T_s
  std::optional<double> end_error;       ///< T_e
  std::optional<double> waypoint_error;  ///< T_xy, planar
  std::optional<double> foot_height;     ///< H_feet
  std::optional<double> foot_sliding;    ///< FS
  std::optional<double> contact_precision;
  std::optional<double> contact_recall;
  std::optional<double> contact_f1;
  std::optional<double> contact_percent;  ///< fraction of frames with any predicted hand contact
  std::optional<double> hand_penetration;
  std::optional<double> mpjpe;
  std::optional<double> root_error;
  std::optional<double> object_error;
  std::optional<double> object_orientation_error;  ///< mean Frobenius norm, unitless
};

struct TrackingMetrics {
  bool contact_success = false;
  bool target_success = false;
  double tracked_ratio = 0.0;        ///< TTR in [0, 1]
  double position_error = 0.0;       ///< key joints, mm
  double rotation_error = 0.0;       ///< key joints, rad
  double object_position_error = 0.0;
  double object_rotation_error = 0.0;  ///< rad
  double object_acceleration_error = 0.0;  ///< mm/s^2
  double object_velocity_error = 0.0;      ///< mm/s
};

struct ConditionMatch {
  double start = 0.0;
  double end = 0.0;
  std::optional<double> planar;  ///< unset without waypoints
};

/// T_s = |p_0 - start|, T_e = |p_{T-1} - target| and T_xy = mean planar distance at the waypoint frames.
ConditionMatch condition_matching(const ObjectTrajectory& generated, const Vec3& start,
                                  std::span<const io::Waypoint> waypoints, const std::optional<Vec3>& target);

struct FootOptions {
  double max_height = 0.05;      ///< h_max of the sliding weight, m
  double contact_height = 0.05;  ///< feet below this count as in contact when no labels are given
};

struct FootMetrics {
  std::optional<double> height;  ///< unset when no frame is labeled in contact
  double sliding = 0.0;
};

/// H_feet: mean foot height (z) over in-contact (foot, frame) pairs, labeled by the foot contact
/// channels when given and by `contact_height` otherwise. FS: over (foot, frame) pairs with
/// h = z_t < max_height, the mean of |xy_{t+1} - xy_t| * (2 - 2^{h / max_height}) with h clamped to
/// [0, max_height]; zero when no pair qualifies.
FootMetrics foot_metrics(const GlobalMotion& motion, const SkeletonSpec& skeleton,
                         const ContactChannels* labels = nullptr, const FootOptions& options = {});

struct ContactScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double percent = 0.0;
};

/// Binary scores pooled over the two hand channels and all frames with both sides thresholded at
/// 0.5. With no positives on either side every score is 1; otherwise an empty denominator scores 0.
ContactScores contact_metrics(const ContactChannels& predicted, const ContactChannels& truth);

/// Mean over frames and hand joints of max(0, -signed distance) in the object frame, in mm.
double hand_penetration(const GlobalMotion& motion, const SkeletonSpec& skeleton, const ObjectTrajectory& object,
                        const geometry::TriangleMesh& mesh);
/// Serial reference of hand_penetration.
double hand_penetration_serial(const GlobalMotion& motion, const SkeletonSpec& skeleton, const ObjectTrajectory& object,
                               const geometry::TriangleMesh& mesh);

struct GroundTruthDifference {
  double mpjpe = 0.0;
  double root = 0.0;
  std::optional<double> object;
  std::optional<double> object_orientation;
};

/// MPJPE over root-relative joint positions (global when `root_relative` is false), mean root and
/// object position errors and mean |R_gen - R_gt|_F.
GroundTruthDifference gt_difference(const GlobalMotion& generated, const GlobalMotion& truth,
                                    const ObjectTrajectory* generated_object, const ObjectTrajectory* truth_object,
                                    bool root_relative = true);

struct TrackingOptions {
  double target_radius = 0.5;  ///< m
  int min_contact_segment = 5;
};

/// Contact success: every maximal run of at least `min_contact_segment` logged frames in which a
/// channel is expected contains a frame where that channel is in contact, and no channel that is
/// never expected during the episode ever registers contact. TTR is the termination frame (or the
/// logged length) over the reference length.
TrackingMetrics tracking_metrics(const tracking::RolloutLog& rollout, const Vec3& target,
                                 const TrackingOptions& options = {});

struct GenerationRecord {
  std::string name;
  GenerationMetrics metrics;
};

struct TrackingRecord {
  std::string name;
  TrackingMetrics metrics;
};

/// Mean of each field over the records that define it.
GenerationMetrics mean_metrics(std::span<const GenerationRecord> records);
TrackingMetrics mean_metrics(std::span<const TrackingRecord> records);

enum class ReportFormat { table, csv };
/// "table" or "csv"; anything else is a ValidationError.
ReportFormat parse_report_format(const std::string& s);

std::vector<std::string> generation_columns();
std::vector<std::string> tracking_columns();

/// Fixed column order; missing values render as "-". CSV values use shortest round-trip formatting.
std::string emit_report(std::span<const GenerationRecord> records, ReportFormat format);
std::string emit_report(std::span<const TrackingRecord> records, ReportFormat format);

std::vector<GenerationRecord> parse_generation_csv(const std::string& text);
std::vector<TrackingRecord> parse_tracking_csv(const std::string& text);

}  // namespace hoigen::metrics
