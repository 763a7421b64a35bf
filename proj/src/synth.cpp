#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "hdgkit/error.hpp"
#include "hdgkit/ingest.hpp"

namespace hdg {

namespace {

// Body template in millimetres (x right, y up, z away from camera), 20 joints
// in the Kinect v1 order. Joint 0 is the torso and serves as reference.
struct TemplateJoint {
  double x, y, z;
  int parent;  // -1 for the root
  int limb;    // -1 torso/head, 0 left arm, 1 right arm, 2 left leg, 3 right leg
  double reach;  // fraction of the limb's motion amplitude applied to this joint
};

constexpr TemplateJoint kBody[20] = {
    {0, 1100, 0, -1, -1, 0.0},     // torso
    {0, 950, 0, 0, -1, 0.0},       // hip centre
    {0, 1450, 0, 0, -1, 0.0},      // shoulder centre
    {0, 1650, 0, 2, -1, 0.0},      // head
    {-180, 1420, 0, 2, -1, 0.0},   // left shoulder
    {-220, 1150, 0, 4, 0, 0.5},    // left elbow
    {-240, 900, 0, 5, 0, 0.9},     // left wrist
    {-250, 820, 0, 6, 0, 1.0},     // left hand
    {180, 1420, 0, 2, -1, 0.0},    // right shoulder
    {220, 1150, 0, 8, 1, 0.5},     // right elbow
    {240, 900, 0, 9, 1, 0.9},      // right wrist
    {250, 820, 0, 10, 1, 1.0},     // right hand
    {-100, 930, 0, 1, -1, 0.0},    // left hip
    {-110, 500, 0, 12, 2, 0.5},    // left knee
    {-115, 80, 0, 13, 2, 0.9},     // left ankle
    {-115, 30, 60, 14, 2, 1.0},    // left foot
    {100, 930, 0, 1, -1, 0.0},     // right hip
    {110, 500, 0, 16, 3, 0.5},     // right knee
    {115, 80, 0, 17, 3, 0.9},      // right ankle
    {115, 30, 60, 18, 3, 1.0},     // right foot
};
constexpr int kTemplateJoints = 20;

constexpr double kBodyCentreY = 850.0;
constexpr double kCameraDistance = 2500.0;
constexpr double kBlobRadius = 70.0;

TemplateJoint template_joint(int j) {
  TemplateJoint t = kBody[j % kTemplateJoints];
  // Joints beyond the template reuse its positions with a small lateral shift.
  t.x += 10.0 * (j / kTemplateJoints);
  if (j >= kTemplateJoints) t.parent = -1;
  return t;
}

struct ClassMotion {
  int limb;
  int axis;
  double cycles;
  double amplitude;
};

// Distinct (limb, axis, frequency) triple per class.
ClassMotion class_motion(int c) {
  ClassMotion m;
  m.limb = c % 4;
  m.axis = (c / 4) % 3;
  m.cycles = 1.0 + static_cast<double>(c / 12);
  m.amplitude = m.limb < 2 ? 350.0 : 250.0;
  return m;
}

struct SubjectTraits {
  double scale;
  double speed;
};

SubjectTraits subject_traits(std::uint64_t seed, int subject) {
  std::mt19937_64 rng(derive_seed(seed, 0x5ab1ec7, static_cast<std::uint64_t>(subject)));
  std::uniform_real_distribution<double> scale(0.85, 1.15);
  std::uniform_real_distribution<double> speed(0.85, 1.15);
  SubjectTraits t;
  t.scale = scale(rng);
  t.speed = speed(rng);
  return t;
}

struct RepTraits {
  double phase;
  double amplitude_jitter;
  double offset_x;
  double offset_z;
};

RepTraits rep_traits(std::uint64_t seed, int cls, int subject, int rep) {
  std::mt19937_64 rng(derive_seed(seed, 0x7e9, (static_cast<std::uint64_t>(cls) << 40) ^
                                                  (static_cast<std::uint64_t>(subject) << 20) ^
                                                  static_cast<std::uint64_t>(rep)));
  std::uniform_real_distribution<double> phase(0.0, 0.5);
  std::uniform_real_distribution<double> jitter(0.9, 1.1);
  std::uniform_real_distribution<double> offset(-100.0, 100.0);
  RepTraits r;
  r.phase = phase(rng);
  r.amplitude_jitter = jitter(rng);
  r.offset_x = offset(rng);
  r.offset_z = offset(rng);
  return r;
}

// Camera-space joints before the view rotation.
std::vector<Joint> body_frames(const SynthSpec& spec, int cls, int subject, int rep) {
  const auto motion = class_motion(cls);
  const auto body = subject_traits(spec.rng_seed, subject);
  const auto r = rep_traits(spec.rng_seed, cls, subject, rep);

  std::vector<Joint> out;
  out.reserve(static_cast<std::size_t>(spec.frames) * spec.num_joints);
  for (int t = 0; t < spec.frames; ++t) {
    const double u = spec.frames > 1 ? static_cast<double>(t) / (spec.frames - 1) : 0.0;
    const double wave = std::sin(2.0 * std::numbers::pi * motion.cycles * u * body.speed + r.phase);
    for (int j = 0; j < spec.num_joints; ++j) {
      const auto tj = template_joint(j);
      double p[3] = {tj.x * body.scale, (tj.y - kBodyCentreY) * body.scale, tj.z * body.scale};
      if (tj.limb == motion.limb) {
        p[motion.axis] += motion.amplitude * body.scale * r.amplitude_jitter * tj.reach * wave;
      }
      out.push_back({p[0] + r.offset_x, p[1], p[2] + kCameraDistance + r.offset_z, 1.0});
    }
  }
  return out;
}

// Orthographic splat of spherical blobs; the nearest surface wins per pixel.
class Renderer {
 public:
  Renderer(int height, int width) : height_(height), width_(width), px_per_mm_(0.85 * height / 1900.0) {}

  void splat(std::vector<std::uint16_t>& frame, double x, double y, double z, double radius) const {
    const double cu = width_ / 2.0 + x * px_per_mm_;
    const double cv = height_ / 2.0 - y * px_per_mm_;
    const double rpx = radius * px_per_mm_;
    const int u0 = std::max(0, static_cast<int>(std::floor(cu - rpx)));
    const int u1 = std::min(width_ - 1, static_cast<int>(std::ceil(cu + rpx)));
    const int v0 = std::max(0, static_cast<int>(std::floor(cv - rpx)));
    const int v1 = std::min(height_ - 1, static_cast<int>(std::ceil(cv + rpx)));
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        const double du = (u + 0.5 - cu) / px_per_mm_;
        const double dv = (v + 0.5 - cv) / px_per_mm_;
        const double d2 = du * du + dv * dv;
        if (d2 > radius * radius) continue;
        const double depth = z - std::sqrt(radius * radius - d2);
        if (depth < 1.0 || depth > 65535.0) continue;
        auto& px = frame[static_cast<std::size_t>(v) * width_ + u];
        const auto value = static_cast<std::uint16_t>(std::lround(depth));
        if (px == 0 || value < px) px = value;
      }
    }
  }

 private:
  int height_;
  int width_;
  double px_per_mm_;
};

}  // namespace

void SynthSpec::validate() const {
  auto positive = [](int v, const char* what) {
    if (v < 1) throw ValidationError(fmt::format("synthetic spec: {} must be >= 1 (got {})", what, v));
  };
  positive(num_classes, "num_classes");
  positive(num_subjects, "num_subjects");
  positive(num_views, "num_views");
  positive(reps_per_cell, "reps_per_cell");
  positive(height, "height");
  positive(width, "width");
  positive(frames, "frames");
  positive(num_joints, "num_joints");
  if (!std::isfinite(noise_level) || noise_level < 0.0) {
    throw ValidationError("synthetic spec: noise_level must be finite and >= 0");
  }
  if (!std::isfinite(skeleton_noise) || skeleton_noise < 0.0) {
    throw ValidationError("synthetic spec: skeleton_noise must be finite and >= 0");
  }
}

Joint ViewTransform::apply(const Joint& j) const {
  const double d[3] = {j.x - pivot[0], j.y - pivot[1], j.z - pivot[2]};
  Joint out = j;
  out.x = rotation[0] * d[0] + rotation[1] * d[1] + rotation[2] * d[2] + pivot[0];
  out.y = rotation[3] * d[0] + rotation[4] * d[1] + rotation[5] * d[2] + pivot[1];
  out.z = rotation[6] * d[0] + rotation[7] * d[1] + rotation[8] * d[2] + pivot[2];
  return out;
}

Joint ViewTransform::inverse(const Joint& j) const {
  const double d[3] = {j.x - pivot[0], j.y - pivot[1], j.z - pivot[2]};
  Joint out = j;
  out.x = rotation[0] * d[0] + rotation[3] * d[1] + rotation[6] * d[2] + pivot[0];
  out.y = rotation[1] * d[0] + rotation[4] * d[1] + rotation[7] * d[2] + pivot[1];
  out.z = rotation[2] * d[0] + rotation[5] * d[1] + rotation[8] * d[2] + pivot[2];
  return out;
}

ViewTransform view_transform(int view_id) {
  // Yaw about the vertical axis through the subject, 25 degrees per view.
  const double yaw = view_id * 25.0 * std::numbers::pi / 180.0;
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  ViewTransform v;
  v.rotation = {c, 0, s, 0, 1, 0, -s, 0, c};
  v.pivot = {0, 0, kCameraDistance};
  return v;
}

SyntheticDataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  SyntheticDataset out;
  auto& m = out.manifest;
  m.name = fmt::format("synthetic-seed{}", spec.rng_seed);
  m.num_classes = spec.num_classes;
  m.num_subjects = spec.num_subjects;
  m.num_views = spec.num_views;
  m.num_joints = spec.num_joints;
  m.reference_joint = 0;
  for (int c = 0; c < spec.num_classes; ++c) {
    const auto motion = class_motion(c);
    static constexpr const char* kLimbs[] = {"larm", "rarm", "lleg", "rleg"};
    static constexpr const char* kAxes[] = {"x", "y", "z"};
    m.class_names.push_back(fmt::format("{}-{}-{}", kLimbs[motion.limb], kAxes[motion.axis], motion.cycles));
  }

  const Renderer renderer(spec.height, spec.width);
  for (int cls = 0; cls < spec.num_classes; ++cls) {
    for (int subject = 0; subject < spec.num_subjects; ++subject) {
      const auto body = subject_traits(spec.rng_seed, subject);
      for (int view = 0; view < spec.num_views; ++view) {
        const auto camera = view_transform(view);
        for (int rep = 0; rep < spec.reps_per_cell; ++rep) {
          ActionSample sample;
          sample.sample_id = fmt::format("c{:02}_s{:02}_v{:02}_r{:02}", cls, subject, view, rep);
          sample.class_label = cls;
          sample.subject_id = subject;
          sample.view_id = view;

          std::mt19937_64 noise_rng(derive_seed(spec.rng_seed, 0xd0153,
                                                (static_cast<std::uint64_t>(cls) << 48) ^
                                                    (static_cast<std::uint64_t>(subject) << 32) ^
                                                    (static_cast<std::uint64_t>(view) << 16) ^
                                                    static_cast<std::uint64_t>(rep)));
          std::normal_distribution<double> joint_noise(0.0, 1.0);
          std::normal_distribution<double> depth_noise(0.0, 1.0);

          auto joints = body_frames(spec, cls, subject, rep);
          for (auto& j : joints) {
            j = camera.apply(j);
            if (spec.skeleton_noise > 0.0) {
              j.x += spec.skeleton_noise * joint_noise(noise_rng);
              j.y += spec.skeleton_noise * joint_noise(noise_rng);
              j.z += spec.skeleton_noise * joint_noise(noise_rng);
            }
          }

          const auto frame_size = static_cast<std::size_t>(spec.height) * spec.width;
          std::vector<std::uint16_t> depth(frame_size * spec.frames, 0);
          const double radius = kBlobRadius * body.scale;
          for (int t = 0; t < spec.frames; ++t) {
            std::vector<std::uint16_t> frame(frame_size, 0);
            const Joint* fj = joints.data() + static_cast<std::size_t>(t) * spec.num_joints;
            for (int j = 0; j < spec.num_joints; ++j) {
              renderer.splat(frame, fj[j].x, fj[j].y, fj[j].z, radius);
              const int parent = template_joint(j).parent;
              if (parent >= 0 && parent < spec.num_joints) {
                // Fill the bone with intermediate blobs.
                for (int k = 1; k <= 3; ++k) {
                  const double a = k / 4.0;
                  renderer.splat(frame, fj[j].x + a * (fj[parent].x - fj[j].x), fj[j].y + a * (fj[parent].y - fj[j].y),
                                 fj[j].z + a * (fj[parent].z - fj[j].z), radius * 0.8);
                }
              }
            }
            if (spec.noise_level > 0.0) {
              for (auto& px : frame) {
                if (px == 0) continue;
                const double noisy = px + spec.noise_level * depth_noise(noise_rng);
                px = static_cast<std::uint16_t>(std::clamp(std::lround(noisy), 1L, 65535L));
              }
            }
            std::copy(frame.begin(), frame.end(), depth.begin() + static_cast<std::ptrdiff_t>(frame_size * t));
          }

          sample.depth = DepthSequence(spec.frames, spec.height, spec.width, std::move(depth));
          sample.skeleton = SkeletonSequence(spec.frames, spec.num_joints, std::move(joints), m.reference_joint);

          m.samples.push_back({sample.sample_id, cls, subject, view, "", ""});
          out.samples.push_back(std::move(sample));
        }
      }
    }
  }
  m.validate();
  return out;
}

}  // namespace hdg
