//! Minimal RGB raster with binary PPM (P6) export.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geom::PixelBox;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub [u8; 3]);

/// Mid-gray canvas background that detectors treat as non-content.
pub const NULL_BG: Rgb = Rgb([128, 128, 128]);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl Raster {
    pub fn filled(width: u32, height: u32, color: Rgb) -> Self {
        Self {
            width,
            height,
            pixels: vec![color; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Rgb {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: Rgb) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = c;
    }

    /// Fills `b` (clipped to the raster) with `c`.
    pub fn fill_box(&mut self, b: &PixelBox, c: Rgb) {
        let Some(b) = b.intersection(&PixelBox::new(0, 0, self.width as i32, self.height as i32))
        else {
            return;
        };
        for y in b.y_min..b.y_max {
            for x in b.x_min..b.x_max {
                self.set(x as u32, y as u32, c);
            }
        }
    }

    /// True when every pixel inside `b` equals `c`.
    pub fn region_is(&self, b: &PixelBox, c: Rgb) -> bool {
        let Some(b) = b.intersection(&PixelBox::new(0, 0, self.width as i32, self.height as i32))
        else {
            return true;
        };
        (b.y_min..b.y_max).all(|y| (b.x_min..b.x_max).all(|x| self.get(x as u32, y as u32) == c))
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(&p.0);
        }
        out
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&self.to_ppm())?;
        f.flush()?;
        Ok(())
    }
}
