//! 16-bit single-channel PNG depth images: `value × depth_scale = depth (mm)`.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::{DepthMap, RasterError};

pub fn read_depth_png(path: impl AsRef<Path>, depth_scale: f64) -> Result<DepthMap, RasterError> {
    let path = path.as_ref();
    let png_err = |msg: String| RasterError::Png {
        path: path.display().to_string(),
        message: msg,
    };
    if !(depth_scale > 0.0 && depth_scale.is_finite()) {
        return Err(png_err(format!("invalid depth_scale {depth_scale}")));
    }
    let file = File::open(path).map_err(|e| png_err(e.to_string()))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| png_err(e.to_string()))?;
    let info = reader.info();
    if info.bit_depth != png::BitDepth::Sixteen || info.color_type != png::ColorType::Grayscale {
        return Err(png_err(format!(
            "expected 16-bit grayscale, found {:?} {:?}",
            info.bit_depth, info.color_type
        )));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| png_err("image too large".to_string()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| png_err(e.to_string()))?;
    let bytes = &buf[..frame.buffer_size()];
    let stride = frame.line_size;
    let mut values = Vec::with_capacity(width * height);
    for y in 0..height {
        let row = &bytes[y * stride..y * stride + width * 2];
        values.extend(
            row.chunks_exact(2)
                .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 * depth_scale),
        );
    }
    DepthMap::new(width, height, values)
}

/// Writes `round(depth / depth_scale)` as 16-bit grayscale; values that do
/// not fit are rejected.
pub fn write_depth_png(path: impl AsRef<Path>, depth: &DepthMap, depth_scale: f64) -> Result<(), RasterError> {
    let path = path.as_ref();
    let png_err = |msg: String| RasterError::Png {
        path: path.display().to_string(),
        message: msg,
    };
    let mut data = Vec::with_capacity(depth.values().len() * 2);
    for &v in depth.values() {
        let q = (v / depth_scale).round();
        if q > u16::MAX as f64 {
            return Err(png_err(format!("depth {v} mm overflows 16 bits at scale {depth_scale}")));
        }
        data.extend_from_slice(&(q as u16).to_be_bytes());
    }
    let file = File::create(path).map_err(|e| png_err(e.to_string()))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), depth.width() as u32, depth.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let mut writer = encoder.write_header().map_err(|e| png_err(e.to_string()))?;
    writer.write_image_data(&data).map_err(|e| png_err(e.to_string()))?;
    writer.finish().map_err(|e| png_err(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_is_applied_on_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.png");
        let mut values = vec![0.0; 6];
        values[4] = 500.0;
        let depth = DepthMap::new(3, 2, values).unwrap();
        write_depth_png(&path, &depth, 0.1).unwrap();
        // stored integer is 5000
        let raw = read_depth_png(&path, 1.0).unwrap();
        assert_eq!(raw.get(1, 1), 5000.0);
        let scaled = read_depth_png(&path, 0.1).unwrap();
        assert_eq!(scaled.get(1, 1), 500.0);
        assert_eq!(scaled.get(0, 0), 0.0);
    }

    #[test]
    fn rejects_eight_bit_images() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d8.png");
        let file = File::create(&path).unwrap();
        let mut enc = png::Encoder::new(BufWriter::new(file), 2, 2);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        enc.write_header().unwrap().write_image_data(&[1, 2, 3, 4]).unwrap();
        assert!(matches!(read_depth_png(&path, 1.0), Err(RasterError::Png { .. })));
    }
}
