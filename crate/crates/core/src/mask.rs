//! Label masks, instance views and boundary extraction.
//!
//! A [`LabelMask`] is a row-major grid of 16-bit instance ids where 0 marks
//! background. Instances are defined by label value alone: a label split into
//! several disconnected blobs is still one instance. Connected-component
//! splitting is deliberately not performed here.

use std::collections::BTreeMap;
use std::io::Cursor;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};

/// A pixel coordinate as (row, col).
pub type Pixel = (u32, u32);

/// Supported on-disk mask encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskFormat {
    /// Single-channel 8/16-bit grayscale image; pixel value = instance id.
    GrayscaleImage,
    /// Plain text: first line `height width`, then `height` lines of
    /// `width` space-separated integers.
    PlainGridText,
}

/// A 2D grid of instance labels. 0 is background, nonzero values are
/// instance ids. Ids need not be contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: u32,
    height: u32,
    labels: Vec<u16>,
}

impl LabelMask {
    /// Builds a mask from row-major labels. `labels.len()` must equal
    /// `width * height` and both dimensions must be positive.
    pub fn new(width: u32, height: u32, labels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Format(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        if labels.len() != (width as usize) * (height as usize) {
            return Err(Error::Format(format!(
                "label grid has {} entries, expected {}",
                labels.len(),
                (width as usize) * (height as usize)
            )));
        }
        Ok(Self { width, height, labels })
    }

    /// An all-background mask.
    pub fn zeros(width: u32, height: u32) -> Result<Self> {
        Self::new(width, height, vec![0; (width as usize) * (height as usize)])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Row-major label grid.
    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    /// Label at (row, col). Panics if out of bounds.
    #[inline]
    pub fn get(&self, row: u32, col: u32) -> u16 {
        debug_assert!(row < self.height && col < self.width);
        self.labels[row as usize * self.width as usize + col as usize]
    }

    /// True if `other` has the same dimensions.
    pub fn same_shape(&self, other: &LabelMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_shape(&self, other: &LabelMask) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ))
        }
    }

    /// Number of foreground (nonzero) pixels.
    pub fn foreground_count(&self) -> usize {
        self.labels.iter().filter(|&&v| v != 0).count()
    }

    /// True if the mask contains no foreground pixel.
    pub fn is_empty(&self) -> bool {
        self.labels.iter().all(|&v| v == 0)
    }

    /// Collapses every nonzero label to 1.
    pub fn binarize(&self) -> LabelMask {
        let labels = self
            .labels
            .iter()
            .map(|&v| u16::from(v != 0))
            .collect();
        LabelMask {
            width: self.width,
            height: self.height,
            labels,
        }
    }

    /// One view per distinct nonzero label, ascending by label.
    /// Background-only masks yield an empty list.
    pub fn instances(&self) -> Vec<InstanceView> {
        let mut by_label: BTreeMap<u16, Vec<Pixel>> = BTreeMap::new();
        for row in 0..self.height {
            for col in 0..self.width {
                let v = self.get(row, col);
                if v != 0 {
                    by_label.entry(v).or_default().push((row, col));
                }
            }
        }
        by_label
            .into_iter()
            .map(|(label, pixels)| InstanceView { label, pixels })
            .collect()
    }

    /// Boundary of the mask's foreground: nonzero pixels that are 4-adjacent
    /// to background or lie on the image border. Returned in row-major order.
    pub fn boundary(&self) -> Vec<Pixel> {
        let fg = |r: u32, c: u32| self.get(r, c) != 0;
        boundary_scan(self.width, self.height, fg)
    }
}

/// The pixel set of one instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceView {
    /// Instance id in the parent mask.
    pub label: u16,
    /// Pixels of this instance, row-major order.
    pub pixels: Vec<Pixel>,
}

impl InstanceView {
    /// Renders the view as a binary mask with the parent dimensions.
    pub fn to_mask(&self, width: u32, height: u32) -> Result<LabelMask> {
        let mut mask = LabelMask::zeros(width, height)?;
        for &(r, c) in &self.pixels {
            if r >= height || c >= width {
                return Err(Error::Input(format!(
                    "instance pixel ({r}, {c}) outside {width}x{height} mask"
                )));
            }
            mask.labels[r as usize * width as usize + c as usize] = 1;
        }
        Ok(mask)
    }

    /// Boundary of this instance within a `width` x `height` grid. Pixels of
    /// other instances count as background here, as do the image borders.
    pub fn boundary(&self, width: u32, height: u32) -> Vec<Pixel> {
        let mut grid = vec![false; (width as usize) * (height as usize)];
        for &(r, c) in &self.pixels {
            grid[r as usize * width as usize + c as usize] = true;
        }
        let fg = |r: u32, c: u32| grid[r as usize * width as usize + c as usize];
        boundary_scan(width, height, fg)
    }
}

/// Case-level metadata used by stratified and cross-stage reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseRecord {
    pub case_id: String,
    /// Test stage, 1 to 3.
    pub stage: u8,
    pub surgery_type: String,
    /// Team the record belongs to; empty for team-agnostic metadata.
    pub team: String,
    /// Number of instrument instances in the reference frame.
    pub instrument_count: u32,
}

fn boundary_scan<F: Fn(u32, u32) -> bool>(width: u32, height: u32, fg: F) -> Vec<Pixel> {
    let mut out = Vec::new();
    for r in 0..height {
        for c in 0..width {
            if !fg(r, c) {
                continue;
            }
            let on_border = r == 0 || c == 0 || r == height - 1 || c == width - 1;
            let touches_bg = (r > 0 && !fg(r - 1, c))
                || (r + 1 < height && !fg(r + 1, c))
                || (c > 0 && !fg(r, c - 1))
                || (c + 1 < width && !fg(r, c + 1));
            if on_border || touches_bg {
                out.push((r, c));
            }
        }
    }
    out
}

/// Decodes a mask from bytes. Pixel values become instance ids verbatim.
pub fn load_mask(source: &[u8], format: MaskFormat) -> Result<LabelMask> {
    match format {
        MaskFormat::GrayscaleImage => load_image_mask(source),
        MaskFormat::PlainGridText => load_text_mask(source),
    }
}

/// Encodes a mask into bytes such that [`load_mask`] restores it exactly.
/// Grayscale masks are written as 16-bit PNG.
pub fn encode_mask(mask: &LabelMask, format: MaskFormat) -> Result<Vec<u8>> {
    match format {
        MaskFormat::GrayscaleImage => {
            let img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_raw(
                mask.width,
                mask.height,
                mask.labels.clone(),
            )
            .expect("label grid length matches dimensions");
            let mut bytes = Vec::new();
            img.write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)
                .map_err(|e| Error::Decode(format!("png encode failed: {e}")))?;
            Ok(bytes)
        }
        MaskFormat::PlainGridText => {
            let mut out = format!("{} {}\n", mask.height, mask.width);
            for row in 0..mask.height {
                let line: Vec<String> = (0..mask.width)
                    .map(|col| mask.get(row, col).to_string())
                    .collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            Ok(out.into_bytes())
        }
    }
}

fn load_image_mask(source: &[u8]) -> Result<LabelMask> {
    let img = image::load_from_memory(source)
        .map_err(|e| Error::Decode(format!("image decode failed: {e}")))?;
    match img {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = (buf.width(), buf.height());
            let labels = buf.into_raw().into_iter().map(u16::from).collect();
            LabelMask::new(w, h, labels)
        }
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = (buf.width(), buf.height());
            let labels = buf.into_raw();
            LabelMask::new(w, h, labels)
        }
        other => Err(Error::Format(format!(
            "expected single-channel grayscale image, got {:?}",
            other.color()
        ))),
    }
}

fn load_text_mask(source: &[u8]) -> Result<LabelMask> {
    let text = std::str::from_utf8(source)
        .map_err(|e| Error::Decode(format!("grid text is not UTF-8: {e}")))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Decode("empty grid text".into()))?;
    let mut parts = header.split_whitespace();
    let height: u32 = parse_dim(parts.next(), "height")?;
    let width: u32 = parse_dim(parts.next(), "width")?;
    if parts.next().is_some() {
        return Err(Error::Decode("grid header has trailing tokens".into()));
    }

    let mut labels = Vec::with_capacity((width as usize) * (height as usize));
    for (i, line) in lines.enumerate() {
        if i as u32 >= height {
            return Err(Error::Format(format!("grid has more than {height} rows")));
        }
        let mut count = 0usize;
        for tok in line.split_whitespace() {
            let v: u32 = tok
                .parse()
                .map_err(|_| Error::Decode(format!("invalid grid value {tok:?}")))?;
            let v = u16::try_from(v)
                .map_err(|_| Error::Format(format!("label {v} exceeds 16 bits")))?;
            labels.push(v);
            count += 1;
        }
        if count != width as usize {
            return Err(Error::Format(format!(
                "row {i} has {count} values, expected {width}"
            )));
        }
    }
    LabelMask::new(width, height, labels)
}

fn parse_dim(tok: Option<&str>, name: &str) -> Result<u32> {
    let tok = tok.ok_or_else(|| Error::Decode(format!("grid header missing {name}")))?;
    tok.parse()
        .map_err(|_| Error::Decode(format!("invalid grid {name} {tok:?}")))
}
