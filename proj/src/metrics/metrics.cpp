#include "hoigen/metrics/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hoigen/core/error.hpp"
#include "hoigen/core/rotation.hpp"

namespace hoigen::metrics {

namespace {

constexpr double kMm = 1000.0;

void require_same_length(int a, int b, const char* what) {
  if (a != b) throw ValidationError(std::string(what) + ": sequence lengths differ");
}

std::vector<Vec3> hand_points_object_frame(const GlobalMotion& motion, const SkeletonSpec& skeleton,
                                           const ObjectTrajectory& object, const geometry::TriangleMesh& mesh) {
  if (!mesh.watertight()) throw ValidationError("hand penetration: mesh is not watertight");
  require_same_length(motion.length(), object.length(), "hand penetration");
  if (motion.length() == 0) throw ValidationError("hand penetration: empty motion");
  const int hands[2] = {skeleton.left_hand, skeleton.right_hand};
  for (int h : hands)
    if (h < 0 || h >= motion.joint_count()) throw ValidationError("hand penetration: hand joints not identified");
  std::vector<Vec3> pts;
  pts.reserve(2 * motion.frames.size());
  for (int t = 0; t < motion.length(); ++t) {
    const auto& pose = object.poses[t];
    for (int h : hands) pts.push_back(pose.rotation.transpose() * (motion.frames[t].positions[h] - pose.position));
  }
  return pts;
}

double mean_penetration(const std::vector<double>& sd) {
  double s = 0.0;
  for (double d : sd) s += std::max(0.0, -d);
  return kMm * s / static_cast<double>(sd.size());
}

// Accumulates a running mean of an optional field.
struct MeanAcc {
  double sum = 0.0;
  int n = 0;
  void add(const std::optional<double>& v) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  std::optional<double> get() const { return n ? std::optional<double>(sum / n) : std::nullopt; }
};

std::string csv_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string table_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (quoted) throw FormatError("csv: unterminated quoted field");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<double> parse_value(const std::string& s) {
  if (s == "-") return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw FormatError("csv: bad number '" + s + "'");
  return v;
}

std::vector<std::optional<double>> generation_values(const GenerationMetrics& m) {
  return {m.start_error,       m.end_error,      m.waypoint_error, m.foot_height, m.foot_sliding,
          m.contact_precision, m.contact_recall, m.contact_f1,     m.contact_percent,
          m.hand_penetration,  m.mpjpe,          m.root_error,     m.object_error, m.object_orientation_error};
}

GenerationMetrics generation_from_values(const std::vector<std::optional<double>>& v) {
  GenerationMetrics m;
  m.start_error = v[0];
  m.end_error = v[1];
  m.waypoint_error = v[2];
  m.foot_height = v[3];
  m.foot_sliding = v[4];
  m.contact_precision = v[5];
  m.contact_recall = v[6];
  m.contact_f1 = v[7];
  m.contact_percent = v[8];
  m.hand_penetration = v[9];
  m.mpjpe = v[10];
  m.root_error = v[11];
  m.object_error = v[12];
  m.object_orientation_error = v[13];
  return m;
}

std::vector<double> tracking_values(const TrackingMetrics& m) {
  return {m.contact_success ? 1.0 : 0.0, m.target_success ? 1.0 : 0.0, m.tracked_ratio,
          m.object_position_error,       m.object_rotation_error,      m.object_acceleration_error,
          m.object_velocity_error,       m.position_error,             m.rotation_error};
}

TrackingMetrics tracking_from_values(const std::vector<double>& v) {
  TrackingMetrics m;
  m.contact_success = v[0] != 0.0;
  m.target_success = v[1] != 0.0;
  m.tracked_ratio = v[2];
  m.object_position_error = v[3];
  m.object_rotation_error = v[4];
  m.object_acceleration_error = v[5];
  m.object_velocity_error = v[6];
  m.position_error = v[7];
  m.rotation_error = v[8];
  return m;
}

std::string render(const std::vector<std::string>& columns, const std::vector<std::vector<std::string>>& rows,
                   ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << "name";
    for (const auto& c : columns) out << ',' << c;
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << (i == 0 ? csv_field(r[i]) : r[i]);
      out << '\n';
    }
    return out.str();
  }
  std::vector<std::string> header = {"name"};
  header.insert(header.end(), columns.begin(), columns.end());
  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << "  ";
      if (i == 0)
        out << cells[i] << std::string(width[i] - cells[i].size(), ' ');
      else
        out << std::string(width[i] - cells[i].size(), ' ') << cells[i];
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

std::vector<std::vector<std::string>> parse_rows(const std::string& text, const std::vector<std::string>& columns) {
  auto rows = parse_csv(text);
  if (rows.empty()) throw FormatError("csv: missing header");
  std::vector<std::string> header = {"name"};
  header.insert(header.end(), columns.begin(), columns.end());
  if (rows.front() != header) throw FormatError("csv: unexpected header");
  rows.erase(rows.begin());
  for (const auto& r : rows)
    if (r.size() != header.size()) throw FormatError("csv: row has the wrong number of fields");
  return rows;
}

}  // namespace

ConditionMatch condition_matching(const ObjectTrajectory& generated, const Vec3& start,
                                  std::span<const io::Waypoint> waypoints, const std::optional<Vec3>& target) {
  if (!target) throw ValidationError("condition matching: missing target");
  if (generated.length() == 0) throw ValidationError("condition matching: empty trajectory");
  ConditionMatch m;
  m.start = kMm * (generated.poses.front().position - start).norm();
  m.end = kMm * (generated.poses.back().position - *target).norm();
  if (!waypoints.empty()) {
    double s = 0.0;
    for (const auto& w : waypoints) {
      if (w.frame < 0 || w.frame >= generated.length())
        throw ValidationError("condition matching: waypoint frame " + std::to_string(w.frame) + " outside trajectory");
      const Vec3& p = generated.poses[w.frame].position;
      s += std::hypot(p.x() - w.x, p.y() - w.y);
    }
    m.planar = kMm * s / static_cast<double>(waypoints.size());
  }
  return m;
}

FootMetrics foot_metrics(const GlobalMotion& motion, const SkeletonSpec& skeleton, const ContactChannels* labels,
                         const FootOptions& options) {
  const int feet[2] = {skeleton.left_foot, skeleton.right_foot};
  for (int f : feet)
    if (f < 0 || f >= motion.joint_count()) throw ValidationError("foot metrics: foot joints not identified");
  if (!(options.max_height > 0.0)) throw ValidationError("foot metrics: max height must be positive");
  if (labels) require_same_length(labels->length(), motion.length(), "foot metrics");
  const int T = motion.length();

  FootMetrics out;
  double h_sum = 0.0, fs_sum = 0.0;
  int h_n = 0, fs_n = 0;
  for (int side = 0; side < 2; ++side) {
    const int j = feet[side];
    for (int t = 0; t < T; ++t) {
      const Vec3& p = motion.frames[t].positions[j];
      const bool in_contact = labels ? labels->frames[t][2 + side] >= 0.5 : p.z() < options.contact_height;
      if (in_contact) {
        h_sum += p.z();
        ++h_n;
      }
      if (t + 1 < T && p.z() < options.max_height) {
        const Vec3& q = motion.frames[t + 1].positions[j];
        const double h = std::clamp(p.z(), 0.0, options.max_height);
        fs_sum += std::hypot(q.x() - p.x(), q.y() - p.y()) * (2.0 - std::exp2(h / options.max_height));
        ++fs_n;
      }
    }
  }
  if (h_n) out.height = kMm * h_sum / h_n;
  out.sliding = fs_n ? kMm * fs_sum / fs_n : 0.0;
  return out;
}

ContactScores contact_metrics(const ContactChannels& predicted, const ContactChannels& truth) {
  require_same_length(predicted.length(), truth.length(), "contact metrics");
  if (predicted.length() == 0) throw ValidationError("contact metrics: empty sequence");
  long tp = 0, fp = 0, fn = 0, any = 0;
  for (int t = 0; t < predicted.length(); ++t) {
    bool frame_any = false;
    for (int k = 0; k < 2; ++k) {
      const bool p = predicted.frames[t][k] >= 0.5;
      const bool g = truth.frames[t][k] >= 0.5;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
      frame_any = frame_any || p;
    }
    any += frame_any;
  }
  ContactScores s;
  s.percent = static_cast<double>(any) / predicted.length();
  if (tp + fp + fn == 0) {
    s.precision = s.recall = s.f1 = 1.0;
    return s;
  }
  s.precision = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
  s.recall = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

double hand_penetration(const GlobalMotion& motion, const SkeletonSpec& skeleton, const ObjectTrajectory& object,
                        const geometry::TriangleMesh& mesh) {
  const auto pts = hand_points_object_frame(motion, skeleton, object, mesh);
  return mean_penetration(geometry::signed_distances(mesh, pts));
}

double hand_penetration_serial(const GlobalMotion& motion, const SkeletonSpec& skeleton, const ObjectTrajectory& object,
                               const geometry::TriangleMesh& mesh) {
  const auto pts = hand_points_object_frame(motion, skeleton, object, mesh);
  return mean_penetration(geometry::signed_distances_serial(mesh, pts));
}

GroundTruthDifference gt_difference(const GlobalMotion& generated, const GlobalMotion& truth,
                                    const ObjectTrajectory* generated_object, const ObjectTrajectory* truth_object,
                                    bool root_relative) {
  require_same_length(generated.length(), truth.length(), "ground-truth difference");
  if (generated.length() == 0) throw ValidationError("ground-truth difference: empty motion");
  if (generated.joint_count() != truth.joint_count()) throw ValidationError("ground-truth difference: joint counts differ");
  const int T = generated.length(), J = generated.joint_count();
  GroundTruthDifference d;
  double joint_sum = 0.0, root_sum = 0.0;
  for (int t = 0; t < T; ++t) {
    const auto& g = generated.frames[t].positions;
    const auto& r = truth.frames[t].positions;
    root_sum += (g[0] - r[0]).norm();
    for (int j = 0; j < J; ++j)
      joint_sum += root_relative ? ((g[j] - g[0]) - (r[j] - r[0])).norm() : (g[j] - r[j]).norm();
  }
  d.mpjpe = kMm * joint_sum / (static_cast<double>(T) * J);
  d.root = kMm * root_sum / T;
  if (generated_object && truth_object) {
    require_same_length(generated_object->length(), T, "ground-truth difference");
    require_same_length(truth_object->length(), T, "ground-truth difference");
    double p = 0.0, o = 0.0;
    for (int t = 0; t < T; ++t) {
      p += (generated_object->poses[t].position - truth_object->poses[t].position).norm();
      o += (generated_object->poses[t].rotation - truth_object->poses[t].rotation).norm();
    }
    d.object = kMm * p / T;
    d.object_orientation = o / T;
  }
  return d;
}

TrackingMetrics tracking_metrics(const tracking::RolloutLog& rollout, const Vec3& target, const TrackingOptions& options) {
  if (rollout.frames.empty()) throw ValidationError("tracking metrics: empty rollout");
  if (rollout.reference_length <= 0) throw ValidationError("tracking metrics: missing reference length");
  const auto& frames = rollout.frames;
  const int n = rollout.length();
  std::vector<int> keys = rollout.key_joints;
  if (keys.empty())
    for (int j = 0; j < frames.front().sim.joint_count(); ++j) keys.push_back(j);

  TrackingMetrics m;
  double pos = 0.0, rot = 0.0, opos = 0.0, orot = 0.0, ovel = 0.0, oacc = 0.0;
  for (int t = 0; t < n; ++t) {
    const auto& f = frames[t];
    double jp = 0.0, jr = 0.0;
    for (int j : keys) {
      jp += (f.sim.positions[j] - f.ref.positions[j]).norm();
      jr += rotation_angle(rotation_difference(f.ref.orientations[j], f.sim.orientations[j]));
    }
    pos += jp / keys.size();
    rot += jr / keys.size();
    opos += (f.sim_object.position - f.ref_object.position).norm();
    orot += rotation_angle(rotation_difference(f.ref_object.orientation, f.sim_object.orientation));
    ovel += (f.sim_object.linear_velocity - f.ref_object.linear_velocity).norm();
    if (t + 1 < n) {
      const auto& g = frames[t + 1];
      const Vec3 a_sim = (g.sim_object.linear_velocity - f.sim_object.linear_velocity) * rollout.frame_rate;
      const Vec3 a_ref = (g.ref_object.linear_velocity - f.ref_object.linear_velocity) * rollout.frame_rate;
      oacc += (a_sim - a_ref).norm();
    }
  }
  m.position_error = kMm * pos / n;
  m.rotation_error = rot / n;
  m.object_position_error = kMm * opos / n;
  m.object_rotation_error = orot / n;
  m.object_velocity_error = kMm * ovel / n;
  m.object_acceleration_error = n > 1 ? kMm * oacc / (n - 1) : 0.0;

  m.target_success = tracking::reaches_target(rollout, target, options.target_radius);
  const int survived = rollout.termination.terminated ? rollout.termination.frame : n;
  m.tracked_ratio = std::clamp(static_cast<double>(survived) / rollout.reference_length, 0.0, 1.0);

  bool ok = true;
  for (int k = 0; k < 4 && ok; ++k) {
    bool ever_expected = false;
    for (const auto& f : frames) ever_expected = ever_expected || f.commanded[k] >= 0.5;
    if (!ever_expected) {
      for (const auto& f : frames) ok = ok && !f.sim_object.contact[k];
      continue;
    }
    int run = 0;
    bool touched = false;
    for (int t = 0; t <= n && ok; ++t) {
      const bool expected = t < n && frames[t].commanded[k] >= 0.5;
      if (expected) {
        ++run;
        touched = touched || frames[t].sim_object.contact[k];
      } else {
        if (run >= options.min_contact_segment && !touched) ok = false;
        run = 0;
        touched = false;
      }
    }
  }
  m.contact_success = ok;
  return m;
}

GenerationMetrics mean_metrics(std::span<const GenerationRecord> records) {
  std::vector<MeanAcc> acc(generation_columns().size());
  for (const auto& r : records) {
    const auto v = generation_values(r.metrics);
    for (std::size_t i = 0; i < v.size(); ++i) acc[i].add(v[i]);
  }
  std::vector<std::optional<double>> out;
  for (const auto& a : acc) out.push_back(a.get());
  return generation_from_values(out);
}

TrackingMetrics mean_metrics(std::span<const TrackingRecord> records) {
  if (records.empty()) throw ValidationError("mean metrics: no records");
  std::vector<double> sum(tracking_columns().size(), 0.0);
  for (const auto& r : records) {
    const auto v = tracking_values(r.metrics);
    for (std::size_t i = 0; i < v.size(); ++i) sum[i] += v[i];
  }
  for (auto& s : sum) s /= static_cast<double>(records.size());
  TrackingMetrics m = tracking_from_values(sum);
  // A mean row reports success only when every record succeeded.
  m.contact_success = sum[0] == 1.0;
  m.target_success = sum[1] == 1.0;
  return m;
}

ReportFormat parse_report_format(const std::string& s) {
  if (s == "table") return ReportFormat::table;
  if (s == "csv") return ReportFormat::csv;
  throw ValidationError("unknown report format '" + s + "' (expected table or csv)");
}

std::vector<std::string> generation_columns() {
  return {"T_s_mm",    "T_e_mm",    "T_xy_mm",   "H_feet_mm", "FS_mm",  "C_prec",    "C_rec",
          "C_F1",      "C_pct",     "P_hand_mm", "MPJPE_mm",  "T_root_mm", "T_obj_mm", "O_obj"};
}

std::vector<std::string> tracking_columns() {
  return {"Succ_cont", "Succ_tgt", "TTR", "E_pos_obj_mm", "E_rot_obj_rad", "E_acc_obj_mm_s2", "E_vel_obj_mm_s",
          "E_pos_mm", "E_rot_rad"};
}

std::string emit_report(std::span<const GenerationRecord> records, ReportFormat format) {
  if (records.empty()) throw ValidationError("report: no records");
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : records) {
    std::vector<std::string> row = {r.name};
    for (const auto& v : generation_values(r.metrics))
      row.push_back(!v ? "-" : format == ReportFormat::csv ? csv_number(*v) : table_number(*v));
    rows.push_back(std::move(row));
  }
  return render(generation_columns(), rows, format);
}

std::string emit_report(std::span<const TrackingRecord> records, ReportFormat format) {
  if (records.empty()) throw ValidationError("report: no records");
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : records) {
    std::vector<std::string> row = {r.name};
    const auto v = tracking_values(r.metrics);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i < 2)
        row.push_back(v[i] != 0.0 ? "1" : "0");
      else
        row.push_back(format == ReportFormat::csv ? csv_number(v[i]) : table_number(v[i]));
    }
    rows.push_back(std::move(row));
  }
  return render(tracking_columns(), rows, format);
}

std::vector<GenerationRecord> parse_generation_csv(const std::string& text) {
  std::vector<GenerationRecord> out;
  for (const auto& r : parse_rows(text, generation_columns())) {
    std::vector<std::optional<double>> v;
    for (std::size_t i = 1; i < r.size(); ++i) v.push_back(parse_value(r[i]));
    out.push_back({r[0], generation_from_values(v)});
  }
  return out;
}

std::vector<TrackingRecord> parse_tracking_csv(const std::string& text) {
  std::vector<TrackingRecord> out;
  for (const auto& r : parse_rows(text, tracking_columns())) {
    std::vector<double> v;
    for (std::size_t i = 1; i < r.size(); ++i) {
      const auto x = parse_value(r[i]);
      if (!x) throw FormatError("csv: tracking fields cannot be empty");
      v.push_back(*x);
    }
    out.push_back({r[0], tracking_from_values(v)});
  }
  return out;
}

}  // namespace hoigen::metrics
