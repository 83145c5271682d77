use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

/// Binary (P5) 8-bit PGM.
pub fn encode_pgm(width: u32, height: u32, data: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    out
}

pub fn write_pgm(path: &Path, width: u32, height: u32, data: &[u8]) -> Result<()> {
    if data.len() != width as usize * height as usize {
        return Err(Error::BadDimensions {
            width: width as usize,
            height: height as usize,
            got: data.len(),
        });
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_pgm(width, height, data))
        .map_err(|e| Error::io(path, e))
}

/// Map values in `[0, 1]` as bytes: `round(v * 255)`.
pub fn unit_to_bytes<T: crate::Scalar>(vals: &[T]) -> Vec<u8> {
    vals.iter()
        .map(|v| (v.as_f64().clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

pub fn read_gray(path: &Path) -> Result<image::GrayImage> {
    image::open(path)
        .map(|i| i.into_luma8())
        .map_err(|source| Error::Image {
            path: path.to_owned(),
            source,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_roundtrip() {
        let data = [0u8, 128, 255, 7, 9, 11];
        let enc = encode_pgm(3, 2, &data);
        assert!(enc.starts_with(b"P5\n3 2\n255\n"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.pgm");
        write_pgm(&p, 3, 2, &data).unwrap();
        let back = read_gray(&p).unwrap();
        assert_eq!(back.as_raw().as_slice(), &data);
        assert!(write_pgm(&p, 4, 2, &data).is_err());
        assert_eq!(unit_to_bytes(&[0.0f32, 0.5, 1.0, 1.5]), vec![0, 128, 255, 255]);
    }
}
