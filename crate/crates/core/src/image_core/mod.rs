//! Image containers and the spatial primitives shared by every stage:
//! grayscale conversion, derivative filters, convolution, pyramids, tiling
//! and file I/O.

mod convolve;
mod gradient;
mod image;
pub mod io;
mod plane;
mod pyramid;
mod taper;
mod tiles;

pub use convolve::{
    convolve2d, convolve_plane, convolve_plane_direct, convolve_plane_fft, pad_replicate,
    BoundaryMode,
};
pub use gradient::{gradients, GradientField};
pub use image::{to_grayscale, Image, LUMA_WEIGHTS};
pub use plane::Plane;
pub use pyramid::{build_pyramid, coarser_side, resize_plane, Pyramid, MIN_LEVEL_SIDE};
pub use taper::{fast_len, pad_smooth_periodic};
pub use tiles::{split_dims, split_tiles, stitch_tiles, Rect, Tile, TileGrid, MIN_CORE};
