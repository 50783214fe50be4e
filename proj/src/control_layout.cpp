#include "chainctl/control_layout.hpp"

#include <numeric>
#include <stdexcept>

namespace chainctl {

std::string to_string(LayoutKind k) {
  switch (k) {
    case LayoutKind::TwoBoundary: return "two-boundary";
    case LayoutKind::InteriorBlock: return "interior-block";
    case LayoutKind::ExtensionBlock: return "extension-block";
  }
  return "?";
}

MatrixXd ControlLayout::matrix() const {
  MatrixXd b = MatrixXd::Zero(n_agents, channels());
  for (int c = 0; c < channels(); ++c) b(row_of(active[c]), c) = 1.0;
  return b;
}

void ControlLayout::add_scaled(const Eigen::Ref<const VectorXd>& u, double c,
                               Eigen::Ref<VectorXd> into) const {
  for (int ch = 0; ch < channels(); ++ch)
    into[row_of(active[ch])] += c * u[ch];
}

VectorXd ControlLayout::gather(const Eigen::Ref<const VectorXd>& y) const {
  VectorXd out(channels());
  for (int ch = 0; ch < channels(); ++ch) out[ch] = y[row_of(active[ch])];
  return out;
}

ControlLayout build_two_boundary_layout(int n) {
  if (n < 2)
    throw std::invalid_argument("two-boundary layout needs n >= 2, got n=" +
                                std::to_string(n));
  ControlLayout layout;
  layout.kind = LayoutKind::TwoBoundary;
  layout.n_agents = n;
  layout.active = {1, n};
  layout.index_base = 1;
  return layout;
}

ControlLayout build_interior_block_layout(int n, int start, int m) {
  if (n < 2) throw std::invalid_argument("interior block needs n >= 2");
  if (m < 1) throw std::invalid_argument("interior block needs m >= 1");
  if (start < 2 || start + m - 1 > n - 1)
    throw std::invalid_argument(
        "interior block [" + std::to_string(start) + "," +
        std::to_string(start + m - 1) + "] not strictly inside {1,...," +
        std::to_string(n) + "}");
  ControlLayout layout;
  layout.kind = LayoutKind::InteriorBlock;
  layout.n_agents = n;
  layout.active.resize(m);
  std::iota(layout.active.begin(), layout.active.end(), start);
  layout.index_base = 1;
  return layout;
}

ControlLayout build_extension_block_layout(int n) {
  if (n < 2) throw std::invalid_argument("extension block needs n >= 2");
  const int w = extension_width(n);
  ControlLayout layout;
  layout.kind = LayoutKind::ExtensionBlock;
  layout.n_agents = n + 2 * w + 1;
  layout.index_base = -w;
  layout.original_n = n;
  layout.active.resize(w);
  std::iota(layout.active.begin(), layout.active.end(), -w + 1);  // -w+1 .. 0
  return layout;
}

ControlLayout build_control_layout(int n, LayoutKind kind,
                                   const LayoutParams& params) {
  switch (kind) {
    case LayoutKind::TwoBoundary:
      return build_two_boundary_layout(n);
    case LayoutKind::InteriorBlock: {
      const int m = params.block_size > 0 ? params.block_size
                                          : std::max(1, n / 4);
      const int start =
          params.block_start > 0 ? params.block_start : (n - m) / 2 + 1;
      return build_interior_block_layout(n, start, m);
    }
    case LayoutKind::ExtensionBlock:
      return build_extension_block_layout(n);
  }
  throw std::invalid_argument("unknown layout kind");
}

}  // namespace chainctl
