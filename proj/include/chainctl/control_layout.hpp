#pragma once

#include <vector>

#include "chainctl/types.hpp"

namespace chainctl {

enum class LayoutKind { TwoBoundary, InteriorBlock, ExtensionBlock };

std::string to_string(LayoutKind k);

/// Which agents receive independent control channels. The induced n_agents x M
/// matrix has exactly one 1 per active column.
///
/// Agents carry 1-based indices: the first agent of a plain chain is 1; an
/// extension layout lives on a chain indexed -w .. n+w with the embedded
/// network at 1..n. index_base is the agent index of storage row 0.
struct ControlLayout {
  LayoutKind kind = LayoutKind::TwoBoundary;
  int n_agents = 0;          // row dimension of the induced matrix
  std::vector<int> active;   // agent indices, one channel per entry, ordered
  int index_base = 1;        // agent index of row 0
  int original_n = 0;        // ExtensionBlock: size of the embedded chain

  int channels() const { return static_cast<int>(active.size()); }
  int row_of(int agent_index) const { return agent_index - index_base; }

  MatrixXd matrix() const;

  /// into += c * B * u
  void add_scaled(const Eigen::Ref<const VectorXd>& u, double c,
                  Eigen::Ref<VectorXd> into) const;

  /// B^T y
  VectorXd gather(const Eigen::Ref<const VectorXd>& y) const;
};

/// Two channels on the extremal agents 1 and n.
ControlLayout build_two_boundary_layout(int n);

/// A contiguous block of m agents starting at agent `start`, strictly inside
/// {1,...,n}: the block may not touch agents 1 or n.
ControlLayout build_interior_block_layout(int n, int start, int m);

/// Interior-control layout on the extended chain of an n-agent network.
/// The extension adds w = ceil(n/2) nodes on each side plus one junction
/// node, giving agents -w .. n+w (2w+n+1 rows); controls act on the w nodes
/// -w+1 .. 0, all outside the embedded network. For even n this is the
/// 2n+1-node construction with M = n/2.
ControlLayout build_extension_block_layout(int n);

struct LayoutParams {
  int block_start = 0;  // InteriorBlock; 0 = centered
  int block_size = 0;   // InteriorBlock; 0 = max(1, n/4)
};

ControlLayout build_control_layout(int n, LayoutKind kind,
                                   const LayoutParams& params = {});

/// Width of the one-sided extension used by build_extension_block_layout.
inline int extension_width(int n) { return (n + 1) / 2; }

}  // namespace chainctl
