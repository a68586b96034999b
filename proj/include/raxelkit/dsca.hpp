// Copyright 2026 The raxelkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "raxelkit/error.hpp"

// Reference forward pass of a two-branch transformer block: per-modality
// self-attention, then symmetric cross-attention between the modalities,
// then a per-branch feed-forward. Tokens are rows of a (n x d_model) matrix.

namespace raxelkit::dsca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// (temporal, row, column)
using Position = std::array<int, 3>;
inline constexpr int kPositionAxes = 3;
inline constexpr double kRopeBase = 10000.0;
inline constexpr double kNormEpsilon = 1e-6;

enum class Modality { Video, Ray };

class TokenSeq {
 public:
  TokenSeq(Matrix tokens, std::vector<Position> positions, Modality modality)
      : tokens_(std::move(tokens)), positions_(std::move(positions)), modality_(modality) {
    if (static_cast<std::size_t>(tokens_.rows()) != positions_.size()) {
      throw Error(ErrorCode::ShapeMismatch, "one position per token required");
    }
    if (std::set<Position>(positions_.begin(), positions_.end()).size() != positions_.size()) {
      throw Error(ErrorCode::InvalidArgument, "token positions must be unique");
    }
  }

  const Matrix& tokens() const noexcept { return tokens_; }
  const std::vector<Position>& positions() const noexcept { return positions_; }
  Modality modality() const noexcept { return modality_; }
  Eigen::Index size() const noexcept { return tokens_.rows(); }
  Eigen::Index d_model() const noexcept { return tokens_.cols(); }

 private:
  Matrix tokens_;
  std::vector<Position> positions_;
  Modality modality_;
};

/// Projections act on row tokens: q = x * query, etc. All d_model x d_model.
struct AttentionParams {
  Matrix query, key, value, output;
};

struct FeedForwardParams {
  Matrix w1;  // d_model x hidden
  Vector b1;
  Matrix w2;  // hidden x d_model
  Vector b2;
};

/// Everything one modality owns. Norms are gain-only layer norms applied
/// before each sub-layer.
struct BranchParams {
  AttentionParams self_attn;
  AttentionParams cross_attn;
  Vector self_norm;
  Vector cross_query_norm;
  Vector cross_context_norm;
  Vector ffn_norm;
  FeedForwardParams ffn;
  Vector modality_offset;
};

struct DscaBlockParams {
  BranchParams video;
  BranchParams ray;
  int head_count = 1;

  const BranchParams& branch(Modality m) const { return m == Modality::Video ? video : ray; }

  /// Seeded init: weights and biases uniform in +-1/sqrt(fan_in), gains 1,
  /// modality offsets uniform in +-0.02.
  static DscaBlockParams random(int d_model, int head_count, int hidden, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto uniform = [&rng](Eigen::Index rows, Eigen::Index cols, double bound) {
      std::uniform_real_distribution<double> dist(-bound, bound);
      Matrix m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
      }
      return m;
    };
    const double in_bound = 1.0 / std::sqrt(static_cast<double>(d_model));
    const double hidden_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    auto attention = [&] {
      AttentionParams a;
      a.query = uniform(d_model, d_model, in_bound);
      a.key = uniform(d_model, d_model, in_bound);
      a.value = uniform(d_model, d_model, in_bound);
      a.output = uniform(d_model, d_model, in_bound);
      return a;
    };
    auto branch = [&] {
      BranchParams b;
      b.self_attn = attention();
      b.cross_attn = attention();
      b.self_norm = Vector::Ones(d_model);
      b.cross_query_norm = Vector::Ones(d_model);
      b.cross_context_norm = Vector::Ones(d_model);
      b.ffn_norm = Vector::Ones(d_model);
      b.ffn.w1 = uniform(d_model, hidden, in_bound);
      b.ffn.b1 = uniform(hidden, 1, in_bound);
      b.ffn.w2 = uniform(hidden, d_model, hidden_bound);
      b.ffn.b2 = uniform(d_model, 1, hidden_bound);
      b.modality_offset = uniform(d_model, 1, 0.02);
      return b;
    };
    DscaBlockParams p;
    p.video = branch();
    p.ray = branch();
    p.head_count = head_count;
    return p;
  }
};

/// Pairs assigned to each position axis for a vector of `pair_count` 2D
/// pairs: an even split, earlier axes taking the remainder.
inline std::array<int, kPositionAxes> rope_axis_pairs(int pair_count) {
  std::array<int, kPositionAxes> pairs{};
  for (int a = 0; a < kPositionAxes; ++a) {
    pairs[a] = pair_count / kPositionAxes + (a < pair_count % kPositionAxes ? 1 : 0);
  }
  return pairs;
}

/// Rotary embedding over three position axes. Axis a owns a contiguous block
/// of consecutive pairs; its pair k turns by position[a] * base^(-2k / pairs_a).
inline void rope_rotate_inplace(Eigen::Ref<Vector> vec, const Position& position) {
  if (vec.size() % 2 != 0 || vec.size() < 2 * kPositionAxes) {
    throw Error(ErrorCode::ShapeMismatch, "rotary embedding needs an even length of at least " +
                                              std::to_string(2 * kPositionAxes));
  }
  const auto pairs = rope_axis_pairs(static_cast<int>(vec.size() / 2));
  Eigen::Index pair = 0;
  for (int a = 0; a < kPositionAxes; ++a) {
    for (int k = 0; k < pairs[a]; ++k, ++pair) {
      const double theta = std::pow(kRopeBase, -2.0 * k / pairs[a]);
      const double angle = position[a] * theta;
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      const double x = vec[2 * pair];
      const double y = vec[2 * pair + 1];
      vec[2 * pair] = c * x - s * y;
      vec[2 * pair + 1] = s * x + c * y;
    }
  }
}

inline Vector rope_rotate(const Vector& vec, const Position& position) {
  Vector out = vec;
  rope_rotate_inplace(out, position);
  return out;
}

/// Per-head attention weights (n_queries x n_keys each), filled on request.
struct AttentionTrace {
  std::vector<Matrix> weights;
};

namespace detail {

inline void check_square(const Matrix& m, Eigen::Index d, const char* what) {
  if (m.rows() != d || m.cols() != d) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " must be d_model x d_model");
  }
}

inline void check_gain(const Vector& g, Eigen::Index d) {
  if (g.size() != d) throw Error(ErrorCode::ShapeMismatch, "norm gain length must equal d_model");
}

inline Matrix layer_norm(const Matrix& x, const Vector& gain) {
  check_gain(gain, x.cols());
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const Eigen::RowVectorXd centered = x.row(r).array() - mean;
    const double var = centered.squaredNorm() / static_cast<double>(x.cols());
    out.row(r) = (centered / std::sqrt(var + kNormEpsilon)).cwiseProduct(gain.transpose());
  }
  return out;
}

inline int head_dim(Eigen::Index d_model, int heads) {
  if (heads <= 0 || d_model % heads != 0) {
    throw Error(ErrorCode::ShapeMismatch, "d_model must be divisible by the head count");
  }
  return static_cast<int>(d_model / heads);
}

// Multi-head scaled dot-product attention with RoPE on queries and keys.
inline Matrix attend(const Matrix& query_in, const std::vector<Position>& query_pos, const Matrix& context_in,
                     const std::vector<Position>& context_pos, const AttentionParams& p, int heads,
                     AttentionTrace* trace) {
  const Eigen::Index d = query_in.cols();
  if (context_in.cols() != d) {
    throw Error(ErrorCode::ShapeMismatch, "query and context sequences differ in d_model");
  }
  check_square(p.query, d, "query projection");
  check_square(p.key, d, "key projection");
  check_square(p.value, d, "value projection");
  check_square(p.output, d, "output projection");
  const int dh = head_dim(d, heads);

  Matrix q = query_in * p.query;
  Matrix k = context_in * p.key;
  const Matrix v = context_in * p.value;
  const Eigen::Index nq = q.rows();
  const Eigen::Index nk = k.rows();
  for (int h = 0; h < heads; ++h) {
    for (Eigen::Index i = 0; i < nq; ++i) {
      Vector slice = q.row(i).segment(h * dh, dh).transpose();
      rope_rotate_inplace(slice, query_pos[i]);
      q.row(i).segment(h * dh, dh) = slice.transpose();
    }
    for (Eigen::Index j = 0; j < nk; ++j) {
      Vector slice = k.row(j).segment(h * dh, dh).transpose();
      rope_rotate_inplace(slice, context_pos[j]);
      k.row(j).segment(h * dh, dh) = slice.transpose();
    }
  }

  if (trace) trace->weights.assign(heads, Matrix());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix heads_out(nq, d);
  for (int h = 0; h < heads; ++h) {
    Matrix scores = q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose() * scale;
    for (Eigen::Index i = 0; i < nq; ++i) {
      const double mx = scores.row(i).maxCoeff();
      scores.row(i) = (scores.row(i).array() - mx).exp();
      scores.row(i) /= scores.row(i).sum();
    }
    heads_out.middleCols(h * dh, dh) = scores * v.middleCols(h * dh, dh);
    if (trace) trace->weights[h] = std::move(scores);
  }
  return heads_out * p.output;
}

inline Vector gelu(const Vector& x) {
  const double c = std::sqrt(2.0 / std::numbers::pi);
  return x.unaryExpr([c](double v) { return 0.5 * v * (1.0 + std::tanh(c * (v + 0.044715 * v * v * v))); });
}

}  // namespace detail

/// Intra-modal attention over the sequence's own tokens, with residual.
inline TokenSeq self_attention(const TokenSeq& seq, const DscaBlockParams& params, AttentionTrace* trace = nullptr) {
  const BranchParams& b = params.branch(seq.modality());
  const Matrix normed = detail::layer_norm(seq.tokens(), b.self_norm);
  Matrix out = seq.tokens() +
               detail::attend(normed, seq.positions(), normed, seq.positions(), b.self_attn, params.head_count, trace);
  return TokenSeq(std::move(out), seq.positions(), seq.modality());
}

/// Queries from `queries_from` attend to keys and values of
/// `keys_values_from`, using the query modality's cross-attention weights.
/// The residual and output positions come from the query sequence.
inline TokenSeq cross_attention(const TokenSeq& queries_from, const TokenSeq& keys_values_from,
                                const DscaBlockParams& params, AttentionTrace* trace = nullptr) {
  const BranchParams& b = params.branch(queries_from.modality());
  const Matrix q = detail::layer_norm(queries_from.tokens(), b.cross_query_norm);
  const Matrix kv = detail::layer_norm(keys_values_from.tokens(), b.cross_context_norm);
  Matrix out = queries_from.tokens() + detail::attend(q, queries_from.positions(), kv, keys_values_from.positions(),
                                                      b.cross_attn, params.head_count, trace);
  return TokenSeq(std::move(out), queries_from.positions(), queries_from.modality());
}

/// Pre-norm GELU feed-forward of the sequence's branch, with residual.
inline TokenSeq feed_forward(const TokenSeq& seq, const DscaBlockParams& params) {
  const BranchParams& b = params.branch(seq.modality());
  const Eigen::Index d = seq.d_model();
  if (b.ffn.w1.rows() != d || b.ffn.w2.cols() != d || b.ffn.w1.cols() != b.ffn.w2.rows() ||
      b.ffn.b1.size() != b.ffn.w1.cols() || b.ffn.b2.size() != d) {
    throw Error(ErrorCode::ShapeMismatch, "feed-forward weights do not match d_model");
  }
  const Matrix normed = detail::layer_norm(seq.tokens(), b.ffn_norm);
  Matrix out = seq.tokens();
  for (Eigen::Index i = 0; i < seq.size(); ++i) {
    const Vector hidden = detail::gelu(b.ffn.w1.transpose() * normed.row(i).transpose() + b.ffn.b1);
    out.row(i) += (b.ffn.w2.transpose() * hidden + b.ffn.b2).transpose();
  }
  return TokenSeq(std::move(out), seq.positions(), seq.modality());
}

/// Optional per-stage attention maps from dsca_block.
struct BlockTrace {
  AttentionTrace video_self, ray_self, video_cross, ray_cross;
};

/// One decoupled block: modality offsets, self-attention per branch, then
/// both cross directions reading the stage-one outputs, then feed-forward.
inline std::pair<TokenSeq, TokenSeq> dsca_block(const TokenSeq& video, const TokenSeq& ray,
                                                const DscaBlockParams& params, BlockTrace* trace = nullptr) {
  if (video.modality() != Modality::Video || ray.modality() != Modality::Ray) {
    throw Error(ErrorCode::InvalidArgument, "dsca_block expects a video sequence and a ray sequence");
  }
  if (video.d_model() != ray.d_model()) {
    throw Error(ErrorCode::ShapeMismatch, "video and ray sequences differ in d_model");
  }
  auto offset = [&](const TokenSeq& s) {
    const Vector& o = params.branch(s.modality()).modality_offset;
    if (o.size() != s.d_model()) throw Error(ErrorCode::ShapeMismatch, "modality offset length must equal d_model");
    Matrix x = s.tokens().rowwise() + o.transpose();
    return TokenSeq(std::move(x), s.positions(), s.modality());
  };

  const TokenSeq video_self = self_attention(offset(video), params, trace ? &trace->video_self : nullptr);
  const TokenSeq ray_self = self_attention(offset(ray), params, trace ? &trace->ray_self : nullptr);
  const TokenSeq video_cross = cross_attention(video_self, ray_self, params, trace ? &trace->video_cross : nullptr);
  const TokenSeq ray_cross = cross_attention(ray_self, video_self, params, trace ? &trace->ray_cross : nullptr);
  return {feed_forward(video_cross, params), feed_forward(ray_cross, params)};
}

}  // namespace raxelkit::dsca
