//! Sketch files and point CSVs.
//!
//! A sketch file is a 39-byte little-endian header
//! `"BJLS" | version u16 | M u32 | N u32 | delta f64 | seed u64 | row_model u8 | count u64`
//! followed by `count × M` little-endian `i64` codes. Bit `0x80` of the
//! row-model byte marks one-bit sign sketches, whose codes are 0 or 1.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{projector_id, PointSet, Projector, RowModel, Sketch};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"BJLS";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 39;
const BINARY_FLAG: u8 = 0x80;

/// Header of a sketch file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchHeader {
    pub m: u32,
    pub n: u32,
    pub delta: f64,
    pub seed: u64,
    pub row_model: RowModel,
    pub binary: bool,
    pub count: u64,
}

impl SketchHeader {
    pub fn for_projector(proj: &Projector, binary: bool, count: usize) -> Result<Self> {
        let m = u32::try_from(proj.m()).map_err(|_| Error::invalid("M does not fit in u32"))?;
        let n = u32::try_from(proj.n()).map_err(|_| Error::invalid("N does not fit in u32"))?;
        Ok(Self {
            m,
            n,
            delta: proj.delta(),
            seed: proj.seed(),
            row_model: proj.row_model(),
            binary,
            count: count as u64,
        })
    }

    pub fn projector_id(&self) -> u64 {
        projector_id(
            self.m as usize,
            self.n as usize,
            self.delta,
            self.seed,
            self.row_model,
        )
    }

    fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(MAGIC);
        out[4..6].copy_from_slice(&VERSION.to_le_bytes());
        out[6..10].copy_from_slice(&self.m.to_le_bytes());
        out[10..14].copy_from_slice(&self.n.to_le_bytes());
        out[14..22].copy_from_slice(&self.delta.to_le_bytes());
        out[22..30].copy_from_slice(&self.seed.to_le_bytes());
        out[30] = self.row_model.code() | if self.binary { BINARY_FLAG } else { 0 };
        out[31..39].copy_from_slice(&self.count.to_le_bytes());
        out
    }

    fn decode(buf: &[u8; HEADER_LEN]) -> Result<Self> {
        if &buf[0..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes([buf[4], buf[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let u32_at = |i: usize| u32::from_le_bytes(buf[i..i + 4].try_into().unwrap());
        let u64_at = |i: usize| u64::from_le_bytes(buf[i..i + 8].try_into().unwrap());
        let delta = f64::from_bits(u64_at(14));
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Format(format!("bad delta {delta}")));
        }
        let m = u32_at(6);
        if m == 0 {
            return Err(Error::Format("M = 0".into()));
        }
        Ok(Self {
            m,
            n: u32_at(10),
            delta,
            seed: u64_at(22),
            row_model: RowModel::from_code(buf[30] & !BINARY_FLAG)?,
            binary: buf[30] & BINARY_FLAG != 0,
            count: u64_at(31),
        })
    }
}

/// Contents of a sketch file.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchFile {
    pub header: SketchHeader,
    pub sketches: Vec<Sketch>,
}

impl SketchFile {
    pub fn from_sketches(proj: &Projector, sketches: Vec<Sketch>) -> Result<Self> {
        for s in &sketches {
            if s.projector_id() != proj.id() {
                return Err(Error::ProjectorMismatch(proj.id(), s.projector_id()));
            }
        }
        Ok(Self {
            header: SketchHeader::for_projector(proj, false, sketches.len())?,
            sketches,
        })
    }

    pub fn from_signs(proj: &Projector, signs: &[Vec<bool>]) -> Result<Self> {
        let sketches = signs
            .iter()
            .map(|b| {
                if b.len() != proj.m() {
                    return Err(Error::DimensionMismatch {
                        expected: proj.m(),
                        actual: b.len(),
                    });
                }
                let codes = b.iter().map(|&s| i64::from(s)).collect();
                Ok(Sketch::new(codes, proj.delta(), proj.id()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            header: SketchHeader::for_projector(proj, true, sketches.len())?,
            sketches,
        })
    }

    /// Sign bits of a one-bit file.
    pub fn signs(&self) -> Result<Vec<Vec<bool>>> {
        if !self.header.binary {
            return Err(Error::Format("not a sign-sketch file".into()));
        }
        Ok(self
            .sketches
            .iter()
            .map(|s| s.codes().iter().map(|&c| c != 0).collect())
            .collect())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<sketch stream>", e);
        w.write_all(&self.header.encode()).map_err(io)?;
        let mut buf = Vec::with_capacity(self.header.m as usize * 8);
        for s in &self.sketches {
            buf.clear();
            for c in s.codes() {
                buf.extend_from_slice(&c.to_le_bytes());
            }
            w.write_all(&buf).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Format("truncated file".into())
            } else {
                Error::io("<sketch stream>", e)
            }
        };
        let mut head = [0u8; HEADER_LEN];
        r.read_exact(&mut head).map_err(io)?;
        let header = SketchHeader::decode(&head)?;
        let id = header.projector_id();
        let m = header.m as usize;
        let mut buf = vec![0u8; m * 8];
        let mut sketches = Vec::new();
        for _ in 0..header.count {
            r.read_exact(&mut buf).map_err(io)?;
            let codes = buf
                .chunks_exact(8)
                .map(|b| i64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            sketches.push(Sketch::new(codes, header.delta, id));
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe).map_err(io)? != 0 {
            return Err(Error::Format("trailing bytes after last sketch".into()));
        }
        Ok(Self { header, sketches })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(f))
            .map_err(|e| relabel(e, path))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(f)).map_err(|e| relabel(e, path))
    }
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

/// Reads a headerless CSV with one point per row.
pub fn read_points(path: impl AsRef<Path>) -> Result<PointSet> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let p = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Format(format!("{}: bad number {f:?}", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        points.push(p);
    }
    PointSet::new(points)
}

/// Writes points as a headerless CSV.
pub fn write_points(path: impl AsRef<Path>, points: &PointSet) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    for p in points.points() {
        w.write_record(p.iter().map(|x| x.to_string()))
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
