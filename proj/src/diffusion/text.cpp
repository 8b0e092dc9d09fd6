#include "hoigen/diffusion/text.hpp"

#include <cctype>
#include <cstdint>

namespace hoigen::diffusion {

std::vector<std::string> tokenize(std::string_view prompt) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : prompt) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Eigen::VectorXd toy_text_embed(std::string_view prompt, int dim) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  for (const auto& tok : tokenize(prompt)) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : tok) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    e[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim))] += (h >> 63) ? -1.0 : 1.0;
  }
  const double n = e.norm();
  if (n > 0.0) e /= n;
  return e;
}

}  // namespace hoigen::diffusion
