//! Binary PGM/PPM export for eyeballing decoded frames.

use std::io::{self, Write};

use super::frame::RawFrame;

/// Luma plane as binary PGM (P5).
pub fn write_pgm<W: Write>(frame: &RawFrame, mut out: W) -> io::Result<()> {
    write!(out, "P5\n{} {}\n255\n", frame.width(), frame.height())?;
    let mut plane = Vec::with_capacity((frame.width() * frame.height()) as usize);
    for y in 0..frame.height() {
        plane.extend(frame.row(y).iter().skip(1).step_by(2));
    }
    out.write_all(&plane)
}

/// BT.601 studio-range YCbCr to 8-bit RGB.
pub fn ycbcr_to_rgb(y: u8, cb: u8, cr: u8) -> [u8; 3] {
    let y = 1.164 * (y as f64 - 16.0);
    let cb = cb as f64 - 128.0;
    let cr = cr as f64 - 128.0;
    let clamp = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    [
        clamp(y + 1.596 * cr),
        clamp(y - 0.813 * cr - 0.391 * cb),
        clamp(y + 2.018 * cb),
    ]
}

/// Frame converted to RGB as binary PPM (P6).
pub fn write_ppm<W: Write>(frame: &RawFrame, mut out: W) -> io::Result<()> {
    write!(out, "P6\n{} {}\n255\n", frame.width(), frame.height())?;
    let mut rgb = Vec::with_capacity((frame.width() * frame.height() * 3) as usize);
    for y in 0..frame.height() {
        for x in 0..frame.width() {
            let (luma, cb, cr) = frame.pixel(x, y);
            rgb.extend(ycbcr_to_rgb(luma, cb, cr));
        }
    }
    out.write_all(&rgb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_layout() {
        let f = RawFrame::new(2, 1, vec![0x80, 50, 0x80, 60], vec![0]);
        let mut buf = Vec::new();
        write_pgm(&f, &mut buf).unwrap();
        assert_eq!(buf, b"P5\n2 1\n255\n\x32\x3c");
    }

    #[test]
    fn rgb_reference_points() {
        assert_eq!(ycbcr_to_rgb(16, 128, 128), [0, 0, 0]);
        assert_eq!(ycbcr_to_rgb(235, 128, 128), [255, 255, 255]);
        let red = ycbcr_to_rgb(81, 90, 240);
        assert!(red[0] > 250 && red[1] < 5 && red[2] < 5, "{red:?}");
    }

    #[test]
    fn ppm_size() {
        let f = RawFrame::new(4, 2, vec![0x80; 16], vec![0, 1]);
        let mut buf = Vec::new();
        write_ppm(&f, &mut buf).unwrap();
        assert_eq!(buf.len(), b"P6\n4 2\n255\n".len() + 24);
    }
}
