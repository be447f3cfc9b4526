use serde::{Deserialize, Serialize};

/// Grayscale image in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTensor {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl FrameTensor {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0.0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len().max(1) as f64
    }

    pub fn is_valid(&self) -> bool {
        self.pixels.len() == self.width * self.height && self.pixels.iter().all(|v| v.is_finite())
    }
}
