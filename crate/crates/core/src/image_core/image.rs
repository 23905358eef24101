use super::Plane;
use crate::error::{DeblurError, Result};

/// Rec.601 luma weights used for grayscale conversion.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// A 1- or 3-channel image with every sample in `[0, 1]`.
///
/// Samples are stored planar: all of channel 0 row-major, then channel 1,
/// and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(DeblurError::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(DeblurError::InvalidImage(format!(
                "expected 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(DeblurError::InvalidImage(format!(
                "{width}x{height}x{channels} needs {} samples, got {}",
                width * height * channels,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(DeblurError::InvalidImage(format!(
                "sample {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    /// Builds an image from channel planes, rejecting out-of-range samples.
    pub fn from_planes(planes: Vec<Plane>) -> Result<Self> {
        let (width, height) = Self::planes_dims(&planes)?;
        let channels = planes.len();
        let data = planes.into_iter().flat_map(Plane::into_vec).collect();
        Self::new(width, height, channels, data)
    }

    /// Builds an image from channel planes, clamping samples into `[0, 1]`.
    /// NaN samples become 0.
    pub fn from_planes_clamped(planes: Vec<Plane>) -> Result<Self> {
        let (width, height) = Self::planes_dims(&planes)?;
        let channels = planes.len();
        let data = planes
            .into_iter()
            .flat_map(Plane::into_vec)
            .map(clamp_unit)
            .collect();
        Self::new(width, height, channels, data)
    }

    fn planes_dims(planes: &[Plane]) -> Result<(usize, usize)> {
        let first = planes
            .first()
            .ok_or_else(|| DeblurError::InvalidImage("no channels".into()))?;
        let dims = first.dims();
        if planes.iter().any(|p| p.dims() != dims) {
            return Err(DeblurError::DimensionMismatch(
                "channel planes differ in size".into(),
            ));
        }
        Ok(dims)
    }

    pub fn from_gray(plane: Plane) -> Result<Self> {
        Self::from_planes(vec![plane])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.data[(channel * self.height + row) * self.width + col]
    }

    pub fn channel(&self, channel: usize) -> Plane {
        let n = self.width * self.height;
        let start = channel * n;
        Plane::from_vec(self.width, self.height, self.data[start..start + n].to_vec())
            .expect("channel slice has plane dimensions")
    }

    pub fn planes(&self) -> Vec<Plane> {
        (0..self.channels).map(|c| self.channel(c)).collect()
    }

    pub fn crop(&self, row0: usize, col0: usize, width: usize, height: usize) -> Image {
        let planes = self
            .planes()
            .iter()
            .map(|p| p.crop(row0, col0, width, height))
            .collect();
        Image::from_planes(planes).expect("crop of a valid image is valid")
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }
}

#[inline]
pub(crate) fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Converts to a single channel using [`LUMA_WEIGHTS`]; grayscale input is
/// returned unchanged.
pub fn to_grayscale(img: &Image) -> Image {
    if img.channels() == 1 {
        return img.clone();
    }
    let planes = img.planes();
    let gray = Plane::from_fn(img.width(), img.height(), |r, c| {
        LUMA_WEIGHTS
            .iter()
            .zip(&planes)
            .map(|(w, p)| w * p.get(r, c))
            .sum::<f64>()
    });
    Image::from_planes_clamped(vec![gray]).expect("luma of a valid image is valid")
}
