//! Finite coverings of bounded sets, the nested covering construction for a
//! squeezing map, and box-counting estimates.

mod ball;
mod boxcount;
mod cloud;
mod tree;

pub use ball::{ball_sample, cover_ball, farthest_point_cover, lemma_bound, BallCover, MAX_BALL_DIM};
pub use boxcount::{box_counting_dimension, geometric_ladder, greedy_net, BoxCountReport, BoxCountRung};
pub use cloud::{hausdorff_semidist, Ambient, PointCloud};
pub use tree::{
    build_covering_tree, verify_exponential_attraction, AttractionReport, AttractionRow, CoveringTree,
    DiagonalSplitMap, ESet, SplitMap, TreeConstants, TreeLevel, MAX_LEVELS,
};
