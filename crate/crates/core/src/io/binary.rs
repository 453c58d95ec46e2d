//! Little-endian `f32` matrices: 4-byte magic, `u32` rows, `u32` columns,
//! then row-major values. Row ids live in a sidecar text file, one per line.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{file_err, format_err, read_to_string, IoError};

pub const LABEL_MAGIC: [u8; 4] = *b"SMLB";
pub const EMBEDDING_MAGIC: [u8; 4] = *b"EMBD";

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

pub fn write_matrix(path: &Path, magic: [u8; 4], rows: usize, cols: usize, data: &[f32]) -> Result<(), IoError> {
    if data.len() != rows * cols {
        return Err(format_err(path, format!("{} values for a {rows}x{cols} matrix", data.len())));
    }
    let to_u32 = |v: usize| u32::try_from(v).map_err(|_| format_err(path, format!("dimension {v} exceeds u32")));
    let (r, c) = (to_u32(rows)?, to_u32(cols)?);
    let file = std::fs::File::create(path).map_err(file_err(path))?;
    let mut w = BufWriter::new(file);
    let io = |r: std::io::Result<()>| r.map_err(file_err(path));
    io(w.write_all(&magic))?;
    io(w.write_u32::<LittleEndian>(r))?;
    io(w.write_u32::<LittleEndian>(c))?;
    for &v in data {
        io(w.write_f32::<LittleEndian>(v))?;
    }
    io(w.flush())
}

pub fn read_matrix(path: &Path, magic: [u8; 4]) -> Result<Matrix, IoError> {
    let file = std::fs::File::open(path).map_err(file_err(path))?;
    let mut r = BufReader::new(file);
    let mut head = [0u8; 4];
    r.read_exact(&mut head).map_err(|_| format_err(path, "file too short for a header"))?;
    if head != magic {
        return Err(format_err(
            path,
            format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&head),
                String::from_utf8_lossy(&magic)
            ),
        ));
    }
    let rows = r.read_u32::<LittleEndian>().map_err(|_| format_err(path, "truncated header"))? as usize;
    let cols = r.read_u32::<LittleEndian>().map_err(|_| format_err(path, "truncated header"))? as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(file_err(path))?;
    let expected = rows * cols * 4;
    if bytes.len() != expected {
        return Err(format_err(
            path,
            format!("{rows}x{cols} matrix needs {expected} data bytes, found {}", bytes.len()),
        ));
    }
    let mut data = vec![0f32; rows * cols];
    (&bytes[..]).read_f32_into::<LittleEndian>(&mut data).map_err(file_err(path))?;
    Ok(Matrix { rows, cols, data })
}

pub fn write_ids(path: &Path, ids: &[String]) -> Result<(), IoError> {
    let mut out = String::with_capacity(ids.len() * 8);
    for id in ids {
        if id.contains('\n') {
            return Err(format_err(path, format!("id {id:?} contains a newline")));
        }
        out.push_str(id);
        out.push('\n');
    }
    super::write_string(path, &out)
}

pub fn read_ids(path: &Path) -> Result<Vec<String>, IoError> {
    Ok(read_to_string(path)?.lines().map(str::to_string).collect())
}
