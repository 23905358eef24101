use serde::Serialize;

use super::{Image, Plane};
use crate::error::{DeblurError, Result};

/// Smallest accepted tile core.
pub const MIN_CORE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row && row < self.row + self.height && col >= self.col && col < self.col + self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tile {
    pub index: usize,
    pub grid_row: usize,
    pub grid_col: usize,
    /// Region this tile owns exclusively.
    pub core: Rect,
    /// Core plus overlap margins, clamped to the image.
    pub outer: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TileGrid {
    pub width: usize,
    pub height: usize,
    pub rows: usize,
    pub cols: usize,
    pub core_size: usize,
    pub overlap: usize,
    pub tiles: Vec<Tile>,
}

impl TileGrid {
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn index_of(&self, grid_row: usize, grid_col: usize) -> usize {
        grid_row * self.cols + grid_col
    }

    /// 4-neighbours in ascending index order.
    pub fn neighbours(&self, index: usize) -> Vec<usize> {
        let (r, c) = (index / self.cols, index % self.cols);
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push(self.index_of(r - 1, c));
        }
        if c > 0 {
            out.push(self.index_of(r, c - 1));
        }
        if c + 1 < self.cols {
            out.push(self.index_of(r, c + 1));
        }
        if r + 1 < self.rows {
            out.push(self.index_of(r + 1, c));
        }
        out
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        let (r, c) = (index / self.cols, index % self.cols);
        r == 0 || c == 0 || r + 1 == self.rows || c + 1 == self.cols
    }

    /// Pixels of the tile including its margins.
    pub fn extract(&self, img: &Image, index: usize) -> Image {
        let o = self.tiles[index].outer;
        img.crop(o.row, o.col, o.width, o.height)
    }
}

fn cuts(len: usize, n: usize) -> Vec<usize> {
    (0..=n)
        .map(|i| ((i * len) as f64 / n as f64).round() as usize)
        .collect()
}

/// Partitions the image into `core`-sized cells (cells shrink evenly when
/// the size does not divide) and grows each by `overlap` pixels on every
/// side that is not an image border. Degenerate parameters yield one tile.
pub fn split_tiles(img: &Image, core: usize, overlap: usize) -> TileGrid {
    split_dims(img.width(), img.height(), core, overlap)
}

pub fn split_dims(width: usize, height: usize, core: usize, overlap: usize) -> TileGrid {
    let usable = core >= MIN_CORE && core + 2 * overlap <= width.min(height);
    let (cols, rows, overlap) = if usable {
        (width.div_ceil(core), height.div_ceil(core), overlap)
    } else {
        (1, 1, 0)
    };
    let xs = cuts(width, cols);
    let ys = cuts(height, rows);
    let mut tiles = Vec::with_capacity(rows * cols);
    for gr in 0..rows {
        for gc in 0..cols {
            let core_rect = Rect {
                row: ys[gr],
                col: xs[gc],
                width: xs[gc + 1] - xs[gc],
                height: ys[gr + 1] - ys[gr],
            };
            let r0 = ys[gr].saturating_sub(overlap);
            let c0 = xs[gc].saturating_sub(overlap);
            let r1 = (ys[gr + 1] + overlap).min(height);
            let c1 = (xs[gc + 1] + overlap).min(width);
            tiles.push(Tile {
                index: gr * cols + gc,
                grid_row: gr,
                grid_col: gc,
                core: core_rect,
                outer: Rect {
                    row: r0,
                    col: c0,
                    width: c1 - c0,
                    height: r1 - r0,
                },
            });
        }
    }
    TileGrid {
        width,
        height,
        rows,
        cols,
        core_size: if usable { core } else { width.max(height) },
        overlap,
        tiles,
    }
}

/// Averages every tile's full (margin-included) pixels into the output.
/// `results[i]` must cover tile `i`'s outer rectangle.
pub fn stitch_tiles(grid: &TileGrid, results: &[Option<Image>]) -> Result<Image> {
    let mut channels = None;
    for tile in &grid.tiles {
        let img = results
            .get(tile.index)
            .and_then(Option::as_ref)
            .ok_or(DeblurError::MissingTile(tile.index))?;
        if img.width() != tile.outer.width || img.height() != tile.outer.height {
            return Err(DeblurError::DimensionMismatch(format!(
                "tile {} result is {}x{}, expected {}x{}",
                tile.index,
                img.width(),
                img.height(),
                tile.outer.width,
                tile.outer.height
            )));
        }
        match channels {
            None => channels = Some(img.channels()),
            Some(c) if c != img.channels() => {
                return Err(DeblurError::DimensionMismatch(format!(
                    "tile {} has {} channels, expected {c}",
                    tile.index,
                    img.channels()
                )))
            }
            _ => {}
        }
    }
    let channels = channels.unwrap_or(1);
    let (w, h) = (grid.width, grid.height);
    let mut count = vec![0u32; w * h];
    let mut sums: Vec<Plane> = (0..channels).map(|_| Plane::zeros(w, h)).collect();
    for tile in &grid.tiles {
        let img = results[tile.index].as_ref().unwrap();
        let o = tile.outer;
        for r in 0..o.height {
            for c in 0..o.width {
                count[(o.row + r) * w + o.col + c] += 1;
            }
        }
        for (ch, sum) in sums.iter_mut().enumerate() {
            let data = sum.data_mut();
            for r in 0..o.height {
                for c in 0..o.width {
                    data[(o.row + r) * w + o.col + c] += img.get(ch, r, c);
                }
            }
        }
    }
    for sum in sums.iter_mut() {
        for (v, &n) in sum.data_mut().iter_mut().zip(&count) {
            if n > 1 {
                *v /= n as f64;
            }
        }
    }
    Image::from_planes_clamped(sums)
}
