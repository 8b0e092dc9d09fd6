#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace hoigen::diffusion {

inline constexpr int kTextEmbeddingDim = 512;

/// Lowercased alphanumeric runs.
std::vector<std::string> tokenize(std::string_view prompt);

/// Bag-of-hashed-words embedding: each token adds +1 or -1 to one of `dim` buckets, then the
/// vector is L2-normalized. The empty prompt maps to the zero vector.
Eigen::VectorXd toy_text_embed(std::string_view prompt, int dim = kTextEmbeddingDim);

}  // namespace hoigen::diffusion
