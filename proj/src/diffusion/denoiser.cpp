#include "hoigen/diffusion/denoiser.hpp"

#include <cmath>
#include <exception>
#include <sstream>

#include "hoigen/core/rng.hpp"

namespace hoigen::diffusion {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

int ConditionBundle::given_slot_count() const {
  int n = 0;
  for (Index s = 0; s < mask.rows(); ++s)
    if (mask.row(s).any()) ++n;
  return n;
}

void DenoiserConfig::validate() const {
  if (layout.joints < 1 || layout.slots < 2) throw ValidationError("denoiser: need >= 1 joint and >= 2 slots");
  if (hidden < 1 || mlp < 1 || blocks < 0 || text_dim < 1 || noise_embed_dim < 2 || noise_embed_dim % 2 != 0)
    throw ValidationError("denoiser: invalid widths");
  if (basis_points < 1 || projected_points < 1) throw ValidationError("denoiser: invalid geometry sizes");
}

ParamLayout::ParamLayout(const DenoiserConfig& cfg) {
  cfg.validate();
  const int H = cfg.hidden, M = cfg.mlp, S = cfg.layout.slots, F = cfg.layout.feature_dim(),
            C = cfg.layout.condition_dim();
  add("noise.W", "noise_embedding", H, cfg.noise_embed_dim);
  add("noise.b", "noise_embedding", H, 1);
  add("text.W", "text_embedding", H, cfg.text_dim);
  add("geom.P", "geometry_projection", cfg.projected_points, cfg.basis_points);
  add("geom.W", "geometry_embedding", H, 3 * cfg.projected_points);
  add("geom.b", "geometry_embedding", H, 1);
  add("in.Wx", "slot_input", H, F);
  add("in.Ws", "slot_input", H, C);
  add("in.Wm", "slot_input", H, C);
  add("in.wv", "slot_input", H, 1);
  add("in.pos", "slot_input", H, S);
  add("in.b", "slot_input", H, 1);
  for (int k = 0; k < cfg.blocks; ++k) {
    const std::string p = "block" + std::to_string(k);
    add(p + ".A", p, S, S);
    add(p + ".W1", p, M, H);
    add(p + ".b1", p, M, 1);
    add(p + ".U", p, M, H);
    add(p + ".W2", p, H, M);
    add(p + ".b2", p, H, 1);
  }
  add("out.W", "output_head", F, H);
  add("out.b", "output_head", F, 1);
  add("out.skip", "output_head", F, 1);
}

void ParamLayout::add(std::string name, std::string group, int rows, int cols) {
  tensors_.push_back({std::move(name), std::move(group), rows, cols, size_});
  size_ += static_cast<Index>(rows) * cols;
}

std::vector<std::string> ParamLayout::groups() const {
  std::vector<std::string> g;
  for (const auto& t : tensors_)
    if (g.empty() || g.back() != t.group) g.push_back(t.group);
  return g;
}

std::vector<Index> ParamLayout::group_indices(const std::string& group) const {
  std::vector<Index> out;
  for (const auto& t : tensors_)
    if (t.group == group)
      for (Index i = 0; i < t.size(); ++i) out.push_back(t.offset + i);
  return out;
}

const TensorSlot& ParamLayout::find(const std::string& name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return t;
  throw ValidationError("denoiser: no parameter tensor '" + name + "'");
}

DenoiserParams DenoiserParams::initialize(const DenoiserConfig& cfg, std::uint64_t seed) {
  const ParamLayout layout(cfg);
  DenoiserParams p{cfg, VectorXd::Zero(layout.size())};
  Rng rng(seed);
  for (const auto& t : layout.tensors()) {
    if (t.name == "out.skip") {
      p.values.segment(t.offset, t.size()).setOnes();
      continue;
    }
    const bool is_bias = t.cols == 1 && t.name != "in.wv";
    if (is_bias) continue;
    double scale = 1.0 / std::sqrt(static_cast<double>(t.cols));
    if (t.name == "in.pos") scale = 0.1;
    if (t.name.ends_with(".A")) scale = 0.1 / std::sqrt(static_cast<double>(t.cols));
    if (t.name.ends_with(".W2")) scale *= 0.1;
    for (Index i = 0; i < t.size(); ++i) p.values[t.offset + i] = scale * rng.normal();
  }
  return p;
}

void DenoiserParams::validate() const {
  const ParamLayout layout(config);
  if (values.size() != layout.size())
    throw ValidationError("denoiser params: expected " + std::to_string(layout.size()) + " values, got " +
                          std::to_string(values.size()));
  if (!values.allFinite()) throw NumericError("denoiser params: non-finite value");
}

VectorXd noise_level_features(int n, int dim) {
  VectorXd phi(dim);
  for (int i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(10000.0, -2.0 * i / dim);
    phi[2 * i] = std::sin(n * freq);
    phi[2 * i + 1] = std::cos(n * freq);
  }
  return phi;
}

void check_example(const DenoiserConfig& cfg, const SampleTensor& tau0, const ConditionBundle& c) {
  const auto& L = cfg.layout;
  require_shape(tau0.values, L.slots, L.feature_dim(), "sample tensor");
  if (tau0.valid.size() != L.slots) throw ValidationError("sample tensor: validity mask length mismatch");
  require_shape(c.geometry, cfg.basis_points, 3, "condition geometry");
  require_shape(c.motion, L.slots, L.condition_dim(), "condition motion");
  require_shape(c.mask, L.slots, L.condition_dim(), "condition mask");
  if (c.slot_valid.size() != L.slots) throw ValidationError("condition: slot mask length mismatch");
  if (c.text.size() != cfg.text_dim) throw ValidationError("condition: text embedding dimension mismatch");
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <class Derived>
MatrixXd silu(const Eigen::MatrixBase<Derived>& z) {
  return z.unaryExpr([](double v) { return v * sigmoid(v); });
}

template <class Derived>
MatrixXd silu_grad(const Eigen::MatrixBase<Derived>& z) {
  return z.unaryExpr([](double v) {
    const double s = sigmoid(v);
    return s * (1.0 + v * (1.0 - s));
  });
}

/// Named views into a flat buffer.
template <class Ptr>
struct Views {
  using Map = Eigen::Map<std::conditional_t<std::is_const_v<std::remove_pointer_t<Ptr>>, const MatrixXd, MatrixXd>>;
  const ParamLayout& layout;
  Ptr base;
  Map operator()(const std::string& name) const {
    const auto& t = layout.find(name);
    return Map(base + t.offset, t.rows, t.cols);
  }
};

struct BlockCache {
  MatrixXd h_in, h_mid, z, y;
};

struct Forward {
  VectorXd phi, pre_c, c;
  VectorXd ghat;  // column-major flatten of the projected geometry
  MatrixXd x, sm, m;
  VectorXd valid;
  std::vector<BlockCache> blocks;
  MatrixXd h_final;
  MatrixXd given;  // condition entries scattered onto their sample columns, F x S
  MatrixXd out;    // F x S
};

/// Places each given condition entry in the sample column it describes.
MatrixXd scatter_given(const SampleLayout& L, const MatrixXd& sm) {
  MatrixXd g = MatrixXd::Zero(L.feature_dim(), sm.cols());
  for (Index j = 0; j < sm.rows(); ++j) g.row(L.sample_column_of_condition(static_cast<int>(j))) = sm.row(j);
  return g;
}

/// `projected` is the geometry code P * G of this item (projected_points x 3).
Forward run_forward(const ParamLayout& layout, const DenoiserParams& p, const MatrixXd& x_n, int n,
                    const ConditionBundle& c, const Eigen::Ref<const MatrixXd>& projected) {
  const auto& cfg = p.config;
  const Views<const double*> W{layout, p.values.data()};
  Forward f;
  f.valid = c.slot_valid;
  f.phi = noise_level_features(n, cfg.noise_embed_dim);
  f.pre_c = W("noise.W") * f.phi + W("noise.b") + W("text.W") * c.text;
  f.c = silu(f.pre_c);

  f.ghat = Eigen::Map<const VectorXd>(MatrixXd(projected).data(), projected.size());
  const VectorXd g = W("geom.W") * f.ghat + W("geom.b");

  f.x = x_n.transpose();
  for (Index s = 0; s < f.x.cols(); ++s)
    if (f.valid[s] == 0.0) f.x.col(s).setZero();
  f.m = c.mask.transpose();
  f.sm = c.motion.transpose().cwiseProduct(f.m);

  const VectorXd shared = W("in.b") + f.c + g;
  MatrixXd h = W("in.Wx") * f.x + W("in.Ws") * f.sm + W("in.Wm") * f.m + W("in.wv") * f.valid.transpose() +
               MatrixXd(W("in.pos"));
  h.colwise() += shared;

  for (int k = 0; k < cfg.blocks; ++k) {
    const std::string pre = "block" + std::to_string(k);
    BlockCache b;
    b.h_in = h;
    b.h_mid = h + h * W(pre + ".A").transpose();
    const VectorXd bias = W(pre + ".b1") + W(pre + ".U") * f.c;
    b.z = W(pre + ".W1") * b.h_mid;
    b.z.colwise() += bias;
    b.y = silu(b.z);
    h = b.h_mid + W(pre + ".W2") * b.y;
    h.colwise() += VectorXd(W(pre + ".b2"));
    f.blocks.push_back(std::move(b));
  }
  f.h_final = h;
  f.given = scatter_given(cfg.layout, f.sm);
  f.out = W("out.W") * h + VectorXd(W("out.skip")).asDiagonal() * f.given;
  f.out.colwise() += VectorXd(W("out.b"));
  for (Index s = 0; s < f.out.cols(); ++s)
    if (f.valid[s] == 0.0) f.out.col(s).setZero();
  return f;
}

/// Accumulates parameter gradients of <d_out, out> into `grad`, except for the geometry projection:
/// the gradient with respect to this item's projected geometry is written to `d_projected`.
void run_backward(const ParamLayout& layout, const DenoiserParams& p, const ConditionBundle& c, const Forward& f,
                  MatrixXd d_out, VectorXd& grad, Eigen::Ref<MatrixXd> d_projected) {
  const auto& cfg = p.config;
  const Views<const double*> W{layout, p.values.data()};
  const Views<double*> G{layout, grad.data()};
  for (Index s = 0; s < d_out.cols(); ++s)
    if (f.valid[s] == 0.0) d_out.col(s).setZero();

  G("out.W") += d_out * f.h_final.transpose();
  G("out.b") += d_out.rowwise().sum();
  G("out.skip") += d_out.cwiseProduct(f.given).rowwise().sum();
  MatrixXd dh = W("out.W").transpose() * d_out;
  VectorXd dc = VectorXd::Zero(cfg.hidden);

  for (int k = cfg.blocks - 1; k >= 0; --k) {
    const std::string pre = "block" + std::to_string(k);
    const auto& b = f.blocks[static_cast<std::size_t>(k)];
    G(pre + ".W2") += dh * b.y.transpose();
    G(pre + ".b2") += dh.rowwise().sum();
    const MatrixXd dz = (W(pre + ".W2").transpose() * dh).cwiseProduct(silu_grad(b.z));
    const VectorXd dz_sum = dz.rowwise().sum();
    G(pre + ".W1") += dz * b.h_mid.transpose();
    G(pre + ".b1") += dz_sum;
    G(pre + ".U") += dz_sum * f.c.transpose();
    dc += W(pre + ".U").transpose() * dz_sum;
    const MatrixXd dh_mid = dh + W(pre + ".W1").transpose() * dz;
    G(pre + ".A") += dh_mid.transpose() * b.h_in;
    dh = dh_mid + dh_mid * W(pre + ".A");
  }

  const VectorXd dh_sum = dh.rowwise().sum();
  G("in.Wx") += dh * f.x.transpose();
  G("in.Ws") += dh * f.sm.transpose();
  G("in.Wm") += dh * f.m.transpose();
  G("in.wv") += dh * f.valid;
  G("in.pos") += dh;
  G("in.b") += dh_sum;
  dc += dh_sum;

  // geometry branch: g = W_g vec(P G) + b_g
  G("geom.W") += dh_sum * f.ghat.transpose();
  G("geom.b") += dh_sum;
  const VectorXd dghat = W("geom.W").transpose() * dh_sum;
  d_projected = Eigen::Map<const MatrixXd>(dghat.data(), cfg.projected_points, 3);

  const VectorXd dpre = dc.cwiseProduct(silu_grad(f.pre_c));
  G("noise.W") += dpre * f.phi.transpose();
  G("noise.b") += dpre;
  G("text.W") += dpre * c.text.transpose();
}

MatrixXd noisy_input(const SampleTensor& tau0, int n, const MatrixXd& noise, const NoiseSchedule& schedule) {
  return forward_noise(tau0.values, n, noise, schedule);
}

std::string diagnostics(const Forward& f, int n) {
  std::ostringstream os;
  os << "step " << n << ", |c|=" << f.c.norm() << ", |h|=" << f.h_final.norm() << ", |out|=" << f.out.norm();
  return os.str();
}

}  // namespace

MatrixXd denoise(const DenoiserParams& params, const MatrixXd& x_n, int n, const ConditionBundle& c) {
  const ParamLayout layout(params.config);
  if (params.values.size() != layout.size()) throw ValidationError("denoise: parameter vector size mismatch");
  const auto& L = params.config.layout;
  require_shape(x_n, L.slots, L.feature_dim(), "denoise input");
  require_shape(c.geometry, params.config.basis_points, 3, "condition geometry");
  const Views<const double*> W{layout, params.values.data()};
  const Forward f = run_forward(layout, params, x_n, n, c, W("geom.P") * c.geometry);
  return f.out.transpose();
}

namespace {

struct LossTerms {
  double loss;
  MatrixXd d_out;  // F x S
};

LossTerms l1_terms(const Forward& f, const SampleTensor& tau0) {
  const MatrixXd target = tau0.values.transpose();
  Index count = 0;
  double sum = 0.0;
  MatrixXd d = MatrixXd::Zero(target.rows(), target.cols());
  for (Index s = 0; s < target.cols(); ++s) {
    if (tau0.valid[s] == 0.0) continue;
    count += target.rows();
    for (Index i = 0; i < target.rows(); ++i) {
      const double r = f.out(i, s) - target(i, s);
      sum += std::abs(r);
      d(i, s) = static_cast<double>((r > 0.0) - (r < 0.0));
    }
  }
  if (count == 0) throw ValidationError("training_loss: window has no valid slots");
  d /= static_cast<double>(count);
  return {sum / static_cast<double>(count), std::move(d)};
}

}  // namespace

LossResult training_loss(const DenoiserParams& params, const SampleTensor& tau0, int n, const ConditionBundle& c,
                         const MatrixXd& noise, const NoiseSchedule& schedule) {
  const ParamLayout layout(params.config);
  if (params.values.size() != layout.size()) throw ValidationError("training_loss: parameter vector size mismatch");
  check_example(params.config, tau0, c);
  const Views<const double*> W{layout, params.values.data()};
  const Forward f = run_forward(layout, params, noisy_input(tau0, n, noise, schedule), n, c, W("geom.P") * c.geometry);
  if (!f.out.allFinite()) throw NumericError("training_loss: non-finite denoiser output (" + diagnostics(f, n) + ")");
  LossTerms t = l1_terms(f, tau0);
  LossResult r{t.loss, VectorXd::Zero(layout.size())};
  MatrixXd d_projected(params.config.projected_points, 3);
  run_backward(layout, params, c, f, std::move(t.d_out), r.gradient, d_projected);
  const Views<double*> G{layout, r.gradient.data()};
  G("geom.P") += d_projected * c.geometry.transpose();
  if (!r.gradient.allFinite()) throw NumericError("training_loss: non-finite gradient (" + diagnostics(f, n) + ")");
  return r;
}

LossResult batched_loss(const DenoiserParams& params, std::span<const LossItem> items, const NoiseSchedule& schedule,
                        int chunks, bool parallel) {
  if (items.empty()) throw ValidationError("batched_loss: empty batch");
  if (chunks < 1) throw ValidationError("batched_loss: chunk count must be >= 1");
  const ParamLayout layout(params.config);
  if (params.values.size() != layout.size()) throw ValidationError("batched_loss: parameter vector size mismatch");
  const auto& cfg = params.config;
  const Index B = static_cast<Index>(items.size());
  MatrixXd stacked(cfg.basis_points, 3 * B);
  for (Index i = 0; i < B; ++i) {
    const auto& it = items[static_cast<std::size_t>(i)];
    check_example(cfg, *it.tau0, *it.condition);
    stacked.middleCols(3 * i, 3) = it.condition->geometry;
  }
  const Views<const double*> W{layout, params.values.data()};
  const MatrixXd projected = W("geom.P") * stacked;
  MatrixXd d_projected(cfg.projected_points, 3 * B);

  const int nchunks = static_cast<int>(std::min<Index>(chunks, B));
  std::vector<double> losses(static_cast<std::size_t>(nchunks), 0.0);
  std::vector<VectorXd> grads(static_cast<std::size_t>(nchunks));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nchunks));
#pragma omp parallel for schedule(static) if (parallel)
  for (int k = 0; k < nchunks; ++k) {
    try {
      auto& g = grads[static_cast<std::size_t>(k)];
      g = VectorXd::Zero(layout.size());
      for (Index i = k * B / nchunks; i < (k + 1) * B / nchunks; ++i) {
        const auto& it = items[static_cast<std::size_t>(i)];
        const Forward f = run_forward(layout, params, noisy_input(*it.tau0, it.step, *it.noise, schedule), it.step,
                                      *it.condition, projected.middleCols(3 * i, 3));
        if (!f.out.allFinite())
          throw NumericError("training_loss: non-finite denoiser output (" + diagnostics(f, it.step) + ")");
        LossTerms t = l1_terms(f, *it.tau0);
        losses[static_cast<std::size_t>(k)] += t.loss;
        run_backward(layout, params, *it.condition, f, std::move(t.d_out), g, d_projected.middleCols(3 * i, 3));
      }
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  LossResult r{0.0, VectorXd::Zero(layout.size())};
  for (int k = 0; k < nchunks; ++k) {
    r.loss += losses[static_cast<std::size_t>(k)];
    r.gradient += grads[static_cast<std::size_t>(k)];
  }
  const Views<double*> G{layout, r.gradient.data()};
  G("geom.P") += d_projected * stacked.transpose();
  r.loss /= static_cast<double>(B);
  r.gradient /= static_cast<double>(B);
  if (!r.gradient.allFinite()) throw NumericError("batched_loss: non-finite gradient");
  return r;
}

double training_loss_value(const DenoiserParams& params, const SampleTensor& tau0, int n, const ConditionBundle& c,
                           const MatrixXd& noise, const NoiseSchedule& schedule) {
  const ParamLayout layout(params.config);
  check_example(params.config, tau0, c);
  const Views<const double*> W{layout, params.values.data()};
  const Forward f = run_forward(layout, params, noisy_input(tau0, n, noise, schedule), n, c, W("geom.P") * c.geometry);
  if (!f.out.allFinite()) throw NumericError("training_loss: non-finite denoiser output (" + diagnostics(f, n) + ")");
  return l1_terms(f, tau0).loss;
}

}  // namespace hoigen::diffusion
