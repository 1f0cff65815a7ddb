//! Multi-page grayscale TIFF, uncompressed, one sample per pixel.

use std::io::{Read, Seek, Write};

use tiff::decoder::{Decoder, DecodingResult, Limits};
use tiff::encoder::{colortype, TiffEncoder};
use tiff::{ColorType, TiffError};

use crate::error::{Error, Result};
use crate::frame::{BitDepth, Frame, Stack};

fn page_error(page: usize, e: TiffError) -> Error {
    match e {
        TiffError::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::Truncated(format!("page {page}: {io}"))
        }
        TiffError::UnsupportedError(u) => Error::UnsupportedFormat(format!("page {page}: {u}")),
        other => Error::Tiff(other),
    }
}

fn decode_page<R: Read + Seek>(dec: &mut Decoder<R>, page: usize) -> Result<Frame> {
    let (width, height) = dec.dimensions().map_err(|e| page_error(page, e))?;
    let color = dec.colortype().map_err(|e| page_error(page, e))?;
    if !matches!(color, ColorType::Gray(_)) {
        return Err(Error::UnsupportedFormat(format!(
            "page {page} has color type {color:?}; only single-channel grayscale is supported"
        )));
    }
    let (px, depth): (Vec<f64>, BitDepth) =
        match dec.read_image().map_err(|e| page_error(page, e))? {
            DecodingResult::U8(v) => (v.into_iter().map(f64::from).collect(), BitDepth::U8),
            DecodingResult::U16(v) => (v.into_iter().map(f64::from).collect(), BitDepth::U16),
            DecodingResult::F32(v) => (v.into_iter().map(f64::from).collect(), BitDepth::Float),
            DecodingResult::F64(v) => (v, BitDepth::Float),
            _ => {
                return Err(Error::UnsupportedFormat(format!(
                    "page {page}: sample format {color:?} is not 8/16-bit unsigned or float"
                )))
            }
        };
    let (rows, cols) = (height as usize, width as usize);
    if px.len() < rows * cols {
        return Err(Error::Truncated(format!(
            "page {page} decoded {} of {} pixels",
            px.len(),
            rows * cols
        )));
    }
    Frame::new(rows, cols, px[..rows * cols].to_vec(), depth)
}

pub fn read<R: Read + Seek>(r: R) -> Result<Stack> {
    let mut dec = Decoder::new(r)
        .map_err(|e| page_error(0, e))?
        .with_limits(Limits::unlimited());
    let mut frames: Vec<Frame> = Vec::new();
    let mut page = 0;
    loop {
        let f = decode_page(&mut dec, page)?;
        if let Some(first) = frames.first() {
            if f.dims() != first.dims() {
                return Err(Error::InconsistentPages {
                    page,
                    reason: format!("{:?} vs {:?}", f.dims(), first.dims()),
                });
            }
            if f.depth() != first.depth() {
                return Err(Error::InconsistentPages {
                    page,
                    reason: format!("depth {:?} vs {:?}", f.depth(), first.depth()),
                });
            }
        }
        frames.push(f);
        if !dec.more_images() {
            break;
        }
        page += 1;
        dec.next_image().map_err(|e| page_error(page, e))?;
    }
    Stack::new(frames)
}

pub fn write<W: Write + Seek>(stack: &Stack, w: W) -> Result<()> {
    let mut enc = TiffEncoder::new(w)?;
    let (rows, cols) = stack.dims();
    let (width, height) = (cols as u32, rows as u32);
    let depth = stack.depth();
    for f in stack.frames() {
        let q = f.pixels().iter().map(|&v| depth.quantize(v));
        match depth {
            BitDepth::U8 => {
                let data: Vec<u8> = q.map(|v| v as u8).collect();
                enc.write_image::<colortype::Gray8>(width, height, &data)?;
            }
            BitDepth::U16 => {
                let data: Vec<u16> = q.map(|v| v as u16).collect();
                enc.write_image::<colortype::Gray16>(width, height, &data)?;
            }
            BitDepth::Float => {
                let data: Vec<f32> = q.map(|v| v as f32).collect();
                enc.write_image::<colortype::Gray32Float>(width, height, &data)?;
            }
        }
    }
    Ok(())
}
