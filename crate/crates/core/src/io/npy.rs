//! Reading and writing fields in the NumPy `.npy` format.
//!
//! Only C-ordered little-endian `f4`/`f8` arrays of rank 2 `(h, w)` or rank 3
//! `(t, h, w)` are supported. Writing always produces version 1.0 files with
//! `<f4` elements.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{AceError, Result};
use crate::field::ScalarField2D;

pub const MAGIC: [u8; 6] = *b"\x93NUMPY";
const ALIGN: usize = 64;

/// Contents of an array file.
#[derive(Clone, Debug, PartialEq)]
pub enum ArrayData {
    Single(ScalarField2D),
    /// Time-major stack, one field per leading index.
    Stack(Vec<ScalarField2D>),
}

impl ArrayData {
    /// Frames in order; a 2-D file is a stack of one.
    pub fn into_frames(self) -> Vec<ScalarField2D> {
        match self {
            ArrayData::Single(f) => vec![f],
            ArrayData::Stack(fs) => fs,
        }
    }

    pub fn frame_shape(&self) -> Option<(usize, usize)> {
        match self {
            ArrayData::Single(f) => Some(f.shape()),
            ArrayData::Stack(fs) => fs.first().map(|f| f.shape()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dtype {
    F4,
    F8,
}

impl Dtype {
    fn size(self) -> usize {
        match self {
            Dtype::F4 => 4,
            Dtype::F8 => 8,
        }
    }
}

#[derive(Debug)]
struct Header {
    dtype: Dtype,
    shape: Vec<usize>,
    /// Offset of the first payload byte.
    data_offset: u64,
}

fn unsupported(offset: u64, detail: impl Into<String>) -> AceError {
    AceError::UnsupportedDtype {
        offset,
        detail: detail.into(),
    }
}

/// Value following `'key':` in the header dictionary.
fn dict_value<'a>(dict: &'a str, key: &str, offset: u64) -> Result<&'a str> {
    let pattern = format!("'{key}'");
    let start = dict
        .find(&pattern)
        .ok_or_else(|| unsupported(offset, format!("header has no `{key}` entry")))?;
    let rest = dict[start + pattern.len()..].trim_start();
    rest.strip_prefix(':')
        .map(str::trim_start)
        .ok_or_else(|| unsupported(offset, format!("malformed `{key}` entry")))
}

fn parse_header_text(text: &str, text_offset: u64) -> Result<(Dtype, Vec<usize>)> {
    let fortran = dict_value(text, "fortran_order", text_offset)?;
    if fortran.starts_with("True") {
        return Err(AceError::FortranOrderUnsupported {
            offset: text_offset,
        });
    }
    if !fortran.starts_with("False") {
        return Err(unsupported(text_offset, "malformed `fortran_order` entry"));
    }

    let descr = dict_value(text, "descr", text_offset)?;
    let descr = descr
        .strip_prefix('\'')
        .and_then(|d| d.split('\'').next())
        .ok_or_else(|| unsupported(text_offset, "malformed `descr` entry"))?;
    let dtype = match descr {
        "<f4" => Dtype::F4,
        "<f8" => Dtype::F8,
        other => return Err(unsupported(text_offset, format!("element type `{other}`"))),
    };

    let shape = dict_value(text, "shape", text_offset)?;
    let inner = shape
        .strip_prefix('(')
        .and_then(|s| s.split(')').next())
        .ok_or_else(|| unsupported(text_offset, "malformed `shape` entry"))?;
    let dims = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| unsupported(text_offset, format!("malformed shape `({inner})`")))?;
    if !(dims.len() == 2 || dims.len() == 3) {
        return Err(unsupported(
            text_offset,
            format!("rank {} arrays", dims.len()),
        ));
    }
    Ok((dtype, dims))
}

fn read_header<R: Read>(reader: &mut R) -> Result<Header> {
    let mut magic = [0u8; 8];
    read_exact_or_truncated(reader, &mut magic, 0)?;
    if magic[..6] != MAGIC {
        return Err(AceError::BadMagic { offset: 0 });
    }
    let (major, minor) = (magic[6], magic[7]);
    let (len, prefix) = match major {
        1 => {
            let mut b = [0u8; 2];
            read_exact_or_truncated(reader, &mut b, 8)?;
            (u16::from_le_bytes(b) as usize, 10u64)
        }
        2 | 3 => {
            let mut b = [0u8; 4];
            read_exact_or_truncated(reader, &mut b, 8)?;
            (u32::from_le_bytes(b) as usize, 12u64)
        }
        _ => return Err(unsupported(6, format!("format version {major}.{minor}"))),
    };
    let mut text = vec![0u8; len];
    read_exact_or_truncated(reader, &mut text, prefix)?;
    let text = std::str::from_utf8(&text).map_err(|_| unsupported(prefix, "header is not text"))?;
    let (dtype, shape) = parse_header_text(text, prefix)?;
    Ok(Header {
        dtype,
        shape,
        data_offset: prefix + len as u64,
    })
}

fn read_exact_or_truncated<R: Read>(reader: &mut R, buf: &mut [u8], offset: u64) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => {
                return Err(AceError::TruncatedPayload {
                    offset: offset + filled as u64,
                    expected: buf.len() as u64,
                    found: filled as u64,
                })
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

/// Decodes an array from a reader positioned at the start of the file.
pub fn read_array_from<R: Read>(reader: &mut R) -> Result<ArrayData> {
    let header = read_header(reader)?;
    let (frames, h, w) = match header.shape.as_slice() {
        [h, w] => (1, *h, *w),
        [t, h, w] => (*t, *h, *w),
        _ => unreachable!("rank checked while parsing"),
    };
    let count = frames * h * w;
    let mut payload = vec![0u8; count * header.dtype.size()];
    read_exact_or_truncated(reader, &mut payload, header.data_offset)?;

    let values: Vec<f64> = match header.dtype {
        Dtype::F4 => payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F8 => payload
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect(),
    };

    let frame_len = h * w;
    let mut fields = Vec::with_capacity(frames);
    for t in 0..frames {
        let chunk = values[t * frame_len..(t + 1) * frame_len].to_vec();
        let field = ScalarField2D::new(h, w, chunk).map_err(|e| match e {
            AceError::NonFiniteInput { index } => AceError::NonFiniteInput {
                index: t * frame_len + index,
            },
            other => other,
        })?;
        fields.push(field);
    }
    Ok(if header.shape.len() == 2 {
        ArrayData::Single(fields.pop().unwrap())
    } else {
        ArrayData::Stack(fields)
    })
}

pub fn read_array(path: impl AsRef<Path>) -> Result<ArrayData> {
    let path = path.as_ref();
    let run = || -> Result<ArrayData> {
        let mut reader = BufReader::new(File::open(path)?);
        read_array_from(&mut reader)
    };
    run().map_err(|e| e.in_file(path))
}

fn header_bytes(shape: &[usize]) -> Vec<u8> {
    let dims = match shape {
        [n] => format!("({n},)"),
        dims => format!(
            "({})",
            dims.iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    let mut text = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': {dims}, }}");
    // magic + version + u16 length + text + '\n' must land on the alignment
    let unpadded = MAGIC.len() + 2 + 2 + text.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    text.extend(std::iter::repeat_n(' ', pad));
    text.push('\n');

    let mut out = Vec::with_capacity(MAGIC.len() + 4 + text.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(text.len() as u16).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    out
}

/// Encodes fields as `<f4`, narrowing each value to the nearest `f32`.
pub fn write_array_to<W: Write>(writer: &mut W, data: &ArrayData) -> Result<()> {
    let frames: Vec<&ScalarField2D> = match data {
        ArrayData::Single(f) => vec![f],
        ArrayData::Stack(fs) => fs.iter().collect(),
    };
    let (h, w) = match data.frame_shape() {
        Some(s) => s,
        None => {
            return Err(AceError::InvalidParameter {
                name: "stack",
                reason: "cannot write an empty stack".into(),
            })
        }
    };
    for f in &frames {
        f.check_shape((h, w))?;
    }
    let shape = match data {
        ArrayData::Single(_) => vec![h, w],
        ArrayData::Stack(fs) => vec![fs.len(), h, w],
    };
    writer.write_all(&header_bytes(&shape))?;
    for f in frames {
        for &v in f.values() {
            writer.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_array(data: &ArrayData, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let run = || -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        write_array_to(&mut writer, data)?;
        writer.flush()?;
        Ok(())
    };
    run().map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw_file(descr: &str, fortran: &str, shape: &str, payload: &[u8]) -> Vec<u8> {
        let mut text =
            format!("{{'descr': '{descr}', 'fortran_order': {fortran}, 'shape': {shape}, }}");
        let unpadded = 10 + text.len() + 1;
        text.extend(std::iter::repeat_n(' ', (64 - unpadded % 64) % 64));
        text.push('\n');
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&(text.len() as u16).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        out.extend_from_slice(payload);
        out
    }

    fn f4(values: &[f32]) -> Vec<u8> {
        values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    #[test]
    fn decodes_two_by_two() {
        let bytes = raw_file("<f4", "False", "(2, 2)", &f4(&[1.0, 2.0, 3.0, 4.0]));
        let data = read_array_from(&mut bytes.as_slice()).unwrap();
        match data {
            ArrayData::Single(f) => {
                assert_eq!(f.shape(), (2, 2));
                assert_eq!(f.values(), &[1.0, 2.0, 3.0, 4.0]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decodes_f8_stack() {
        let payload: Vec<u8> = (0..12)
            .flat_map(|i| (i as f64 * 0.1).to_le_bytes())
            .collect();
        let bytes = raw_file("<f8", "False", "(3, 2, 2)", &payload);
        let frames = read_array_from(&mut bytes.as_slice())
            .unwrap()
            .into_frames();
        assert_eq!(frames.len(), 3);
        assert_eq!(frames[2].get(1, 1), 11.0 * 0.1);
    }

    #[test]
    fn fortran_order_rejected() {
        let bytes = raw_file("<f4", "True", "(2, 2)", &f4(&[1.0; 4]));
        assert!(matches!(
            read_array_from(&mut bytes.as_slice()),
            Err(AceError::FortranOrderUnsupported { offset: 10 })
        ));
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = raw_file("<f4", "False", "(2, 2)", &f4(&[1.0; 4]));
        bytes[1] = b'X';
        assert!(matches!(
            read_array_from(&mut bytes.as_slice()),
            Err(AceError::BadMagic { offset: 0 })
        ));
    }

    #[test]
    fn unsupported_types_rejected() {
        for descr in ["<i4", ">f4", "<f2"] {
            let bytes = raw_file(descr, "False", "(2, 2)", &[0u8; 32]);
            assert!(matches!(
                read_array_from(&mut bytes.as_slice()),
                Err(AceError::UnsupportedDtype { .. })
            ));
        }
        let bytes = raw_file("<f4", "False", "(4,)", &[0u8; 16]);
        assert!(matches!(
            read_array_from(&mut bytes.as_slice()),
            Err(AceError::UnsupportedDtype { .. })
        ));
    }

    #[test]
    fn truncated_payload_names_offset() {
        let bytes = raw_file("<f4", "False", "(2, 2)", &f4(&[1.0, 2.0, 3.0]));
        match read_array_from(&mut bytes.as_slice()) {
            Err(AceError::TruncatedPayload {
                offset,
                expected,
                found,
            }) => {
                assert_eq!((offset, expected, found), (128 + 12, 16, 12));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_payload_rejected() {
        let bytes = raw_file("<f4", "False", "(2, 2)", &f4(&[1.0, f32::NAN, 3.0, 4.0]));
        assert!(matches!(
            read_array_from(&mut bytes.as_slice()),
            Err(AceError::NonFiniteInput { index: 1 })
        ));
    }

    #[test]
    fn written_header_is_aligned() {
        for shape in [
            vec![2, 2],
            vec![128, 128],
            vec![20, 64, 64],
            vec![100000, 3, 7],
        ] {
            let h = header_bytes(&shape);
            assert_eq!(h.len() % 64, 0);
            assert_eq!(*h.last().unwrap(), b'\n');
        }
    }

    proptest! {
        #[test]
        fn f4_round_trip_is_bit_exact(
            h in 1usize..12,
            w in 1usize..12,
            t in 0usize..3,
            seed in proptest::collection::vec(-1e6f32..1e6, 432),
        ) {
            let frame = |k: usize| ScalarField2D::new(h, w, (0..h * w).map(|i| seed[(k * h * w + i) % seed.len()] as f64).collect()).unwrap();
            let data = if t == 0 { ArrayData::Single(frame(0)) } else { ArrayData::Stack((0..t).map(frame).collect()) };
            let mut buf = Vec::new();
            write_array_to(&mut buf, &data).unwrap();
            let back = read_array_from(&mut buf.as_slice()).unwrap();
            prop_assert_eq!(back, data);
        }
    }
}
