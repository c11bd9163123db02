//! kd-tree construction and tree-accelerated queries: exact k nearest and
//! k furthest neighbors, and kernel density estimation with a relative error
//! guarantee.

mod kde;
mod kdtree;
mod kernel;
mod neighbors;

pub use kde::kde;
pub use kdtree::{kdtree_build, KdTree, Node, NodeKind};
pub use kernel::{AnyKernel, EpanechnikovKernel, GaussianKernel, Kernel, KernelKind};
pub use neighbors::{kfn_search, knn_search, Neighbors};
