#include "neuroskin/bounds.hpp"

#include "neuroskin/error.hpp"

namespace neuroskin {

Bounds Bounds::uniform(std::size_t n, double lo, double hi) {
  const auto size = static_cast<Eigen::Index>(n);
  return {Eigen::VectorXd::Constant(size, lo), Eigen::VectorXd::Constant(size, hi)};
}

bool Bounds::contains(const Eigen::VectorXd& x) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  return true;
}

Eigen::VectorXd Bounds::clamp(const Eigen::VectorXd& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

void Bounds::validate() const {
  if (lower.size() != upper.size()) throw ConfigError("lower and upper bounds differ in length");
  if (lower.size() == 0) throw ConfigError("bounds are empty");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!(lower[i] < upper[i])) throw ConfigError("bounds need lower < upper in every dimension");
}

}  // namespace neuroskin
