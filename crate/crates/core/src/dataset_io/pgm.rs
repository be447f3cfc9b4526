use std::fs;
use std::path::Path;

use super::DatasetError;
use crate::predictor::FrameTensor;

/// Writes an 8-bit binary PGM (P5), intensities clamped to [0, 1].
pub fn write_pgm(path: &Path, frame: &FrameTensor) -> Result<(), DatasetError> {
    let mut bytes = format!("P5\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    bytes.extend(frame.pixels.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| DatasetError::io(path, e))
}

/// Reads a binary PGM with maxval up to 255 into [0, 1] intensities.
pub fn read_pgm(path: &Path) -> Result<FrameTensor, DatasetError> {
    let origin = path.display().to_string();
    let bad = |m: &str| DatasetError::Parse {
        path: origin.clone(),
        message: m.to_string(),
    };
    let data = fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < data.len() && (data[pos].is_ascii_whitespace() || data[pos] == b'#') {
            if data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(String::from_utf8_lossy(&data[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(bad("not a binary PGM"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (w, h, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(bad("maxval must be 1..=255"));
    }
    let body = data.get(pos..pos + w * h).ok_or_else(|| bad("truncated pixel data"))?;
    let mut frame = FrameTensor::zeros(w, h);
    for (dst, &b) in frame.pixels.iter_mut().zip(body) {
        *dst = b as f64 / maxval as f64;
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_quantized() {
        let dir = std::env::temp_dir().join(format!("wirerecon-pgm-{}", std::process::id()));
        let path = dir.join("f.pgm");
        let mut f = FrameTensor::zeros(3, 2);
        f.pixels = vec![0.0, 0.5, 1.0, 0.25, 2.0, -1.0];
        write_pgm(&path, &f).unwrap();
        let g = read_pgm(&path).unwrap();
        assert_eq!((g.width, g.height), (3, 2));
        for (a, b) in f.pixels.iter().zip(&g.pixels) {
            assert!((a.clamp(0.0, 1.0) - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
        fs::remove_dir_all(dir).ok();
    }
}
