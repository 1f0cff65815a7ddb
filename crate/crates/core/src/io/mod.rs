//! Stack files, shift logs and mean images.

pub mod raw;
pub mod shiftlog;
pub mod tiff;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom};
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::Stack;

pub use shiftlog::{read_shift_log, write_shift_log, ShiftLog, ShiftRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StackFormat {
    Tiff,
    Raw,
}

impl StackFormat {
    /// `.tif`/`.tiff` or `.raw`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("tif") | Some("tiff") => Ok(StackFormat::Tiff),
            Some("raw") => Ok(StackFormat::Raw),
            _ => Err(Error::UnsupportedFormat(format!(
                "cannot infer a stack format from {}",
                path.display()
            ))),
        }
    }
}

/// Loads a stack, detecting the format from the file's leading bytes.
pub fn load_stack(path: &Path) -> Result<Stack> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    let got = read_prefix(&mut r, &mut magic).map_err(|e| Error::io(path, e))?;
    r.seek(SeekFrom::Start(0)).map_err(|e| Error::io(path, e))?;
    match &magic[..got] {
        m if m == raw::MAGIC => raw::read(r),
        b"II*\0" | b"MM\0*" | b"II+\0" | b"MM\0+" => tiff::read(r),
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: neither a TIFF nor a raw stack",
            path.display()
        ))),
    }
}

fn read_prefix<R: Read>(r: &mut R, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled)
}

/// Writes `stack` at its own bit depth; float values are rounded half-to-even
/// and clipped for integer depths.
pub fn save_stack(stack: &Stack, path: &Path, format: StackFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        StackFormat::Tiff => tiff::write(stack, &mut w)?,
        StackFormat::Raw => raw::write(stack, &mut w).map_err(|e| Error::io(path, e))?,
    }
    use std::io::Write;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pixel-wise mean over the stack, saved as a single float page
/// (format from the file extension).
pub fn write_mean_image(stack: &Stack, path: &Path) -> Result<()> {
    let mean = Stack::new(vec![stack.mean_frame()])?;
    save_stack(&mean, path, StackFormat::from_path(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{BitDepth, Frame};

    #[test]
    fn detects_formats_and_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let s = Stack::new(vec![Frame::zeros(3, 2, BitDepth::U16).unwrap(); 2]).unwrap();
        for name in ["a.tif", "a.raw"] {
            let p = dir.path().join(name);
            save_stack(&s, &p, StackFormat::from_path(&p).unwrap()).unwrap();
            assert_eq!(load_stack(&p).unwrap(), s);
        }
        let junk = dir.path().join("junk.tif");
        std::fs::write(&junk, b"hello world").unwrap();
        assert!(matches!(
            load_stack(&junk),
            Err(Error::UnsupportedFormat(_))
        ));
        let empty = dir.path().join("empty.raw");
        std::fs::write(&empty, b"").unwrap();
        assert!(load_stack(&empty).is_err());
        assert!(StackFormat::from_path(Path::new("x.png")).is_err());
        assert!(matches!(
            load_stack(&dir.path().join("missing.tif")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn mean_image_of_identical_frames() {
        let dir = tempfile::tempdir().unwrap();
        let f = Frame::from_fn(4, 5, BitDepth::U8, |i, j| (i * 5 + j) as f64).unwrap();
        let s = Stack::new(vec![f.clone(); 3]).unwrap();
        let p = dir.path().join("mean.raw");
        write_mean_image(&s, &p).unwrap();
        let m = load_stack(&p).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.frames()[0].pixels(), f.pixels());
        let p = dir.path().join("mean.tif");
        write_mean_image(&s, &p).unwrap();
        assert_eq!(load_stack(&p).unwrap().frames()[0].pixels(), f.pixels());
    }
}
