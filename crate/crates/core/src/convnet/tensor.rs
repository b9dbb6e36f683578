use crate::error::{Error, Result};

/// A channels-by-length real tensor stored row-major (channel, then position).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2 {
    channels: usize,
    length: usize,
    data: Vec<f64>,
}

/// Static shape of a [`Tensor2`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub channels: usize,
    pub length: usize,
}

impl Shape {
    pub const fn new(channels: usize, length: usize) -> Self {
        Self { channels, length }
    }

    pub const fn numel(&self) -> usize {
        self.channels * self.length
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.channels, self.length)
    }
}

impl Tensor2 {
    pub fn new(channels: usize, length: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || length == 0 {
            return Err(Error::Shape(format!("empty tensor {channels}x{length}")));
        }
        if data.len() != channels * length {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {channels}x{length} tensor",
                data.len()
            )));
        }
        Ok(Self { channels, length, data })
    }

    pub fn zeros(channels: usize, length: usize) -> Self {
        Self { channels, length, data: vec![0.0; channels * length] }
    }

    /// A single-channel tensor holding `values`.
    pub fn row(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "row tensor must be non-empty");
        Self { channels: 1, length: values.len(), data: values }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let length = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != length) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(rows.len(), length, rows.concat())
    }

    pub fn shape(&self) -> Shape {
        Shape::new(self.channels, self.length)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, channel: usize, pos: usize) -> f64 {
        self.data[channel * self.length + pos]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, pos: usize, value: f64) {
        self.data[channel * self.length + pos] = value;
    }

    pub fn channel(&self, channel: usize) -> &[f64] {
        &self.data[channel * self.length..(channel + 1) * self.length]
    }

    /// Reinterpret the row-major buffer under a new shape.
    pub fn reshaped(self, channels: usize, length: usize) -> Result<Self> {
        Self::new(channels, length, self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
