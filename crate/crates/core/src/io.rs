//! Binary and text serialisation of fields, circle maps, metrics and maps.
//!
//! Field block: magic `HDL1`, `u32 n_r`, `u32 n_theta`, `f32 r_max`, then the
//! node values as little-endian `f64` (complex values as `re, im` pairs).
//! Because the header stores `r_max` in single precision, a grid read back
//! from disk has `r_max` rounded through `f32`; [`canonical_r_max`] gives that
//! value up front.
//!
//! A metric file is a scalar block followed by `PINC` and the `f64` triple
//! `a, b, residual`. A map file is a complex block, a `CMAP` block (`u32 n_s`,
//! `u8` C1 flag, samples, derivatives if C1) and the target metric.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::circle::CircleMap;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, DiskGrid, Field, FieldValue, PinchingBounds, ScalarField};
use crate::harmonic::DiskMap;
use crate::metric::MetricField;

const FIELD_MAGIC: &[u8; 4] = b"HDL1";
const METRIC_MAGIC: &[u8; 4] = b"PINC";
const CIRCLE_MAGIC: &[u8; 4] = b"CMAP";

/// `r_max` as it survives a round trip through the field header.
pub fn canonical_r_max(r_max: f64) -> f64 {
    r_max as f32 as f64
}

/// Values that can be written as a run of `f64`.
pub trait Serial: FieldValue {
    const WIDTH: usize;
    fn push(&self, out: &mut Vec<u8>);
    fn take(words: &[f64]) -> Self;
}

impl Serial for f64 {
    const WIDTH: usize = 1;
    fn push(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn take(words: &[f64]) -> Self {
        words[0]
    }
}

impl Serial for Complex64 {
    const WIDTH: usize = 2;
    fn push(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.re.to_le_bytes());
        out.extend_from_slice(&self.im.to_le_bytes());
    }
    fn take(words: &[f64]) -> Self {
        Complex64::new(words[0], words[1])
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format(format!("unexpected end of data at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn magic(&mut self, m: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != m {
            return Err(Error::Format(format!(
                "expected magic {:?} at byte {}, found {:?}",
                String::from_utf8_lossy(m),
                self.pos - 4,
                String::from_utf8_lossy(got)
            )));
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}

fn push_field<T: Serial>(f: &Field<T>, out: &mut Vec<u8>) {
    let g = f.grid();
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&(g.n_r() as u32).to_le_bytes());
    out.extend_from_slice(&(g.n_theta() as u32).to_le_bytes());
    out.extend_from_slice(&(g.r_max() as f32).to_le_bytes());
    for v in f.values() {
        v.push(out);
    }
}

fn read_field<T: Serial>(r: &mut Reader) -> Result<Field<T>> {
    r.magic(FIELD_MAGIC)?;
    let n_r = r.u32()? as usize;
    let n_theta = r.u32()? as usize;
    let r_max = r.f32()? as f64;
    let grid = DiskGrid::new(n_r, n_theta, r_max)?;
    let words = r.f64s(grid.node_count() * T::WIDTH)?;
    let values = words.chunks(T::WIDTH).map(T::take).collect();
    Field::new(grid, values)
}

pub fn encode_field<T: Serial>(f: &Field<T>) -> Vec<u8> {
    let mut out = Vec::new();
    push_field(f, &mut out);
    out
}

pub fn decode_field<T: Serial>(bytes: &[u8]) -> Result<Field<T>> {
    let mut r = Reader::new(bytes);
    let f = read_field(&mut r)?;
    r.finish()?;
    Ok(f)
}

fn push_metric(m: &MetricField, out: &mut Vec<u8>) {
    push_field(m.u(), out);
    out.extend_from_slice(METRIC_MAGIC);
    for x in [m.bounds().a(), m.bounds().b(), m.residual_norm()] {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn read_metric(r: &mut Reader) -> Result<MetricField> {
    let u: ScalarField = read_field(r)?;
    r.magic(METRIC_MAGIC)?;
    let a = r.f64()?;
    let b = r.f64()?;
    let residual = r.f64()?;
    Ok(MetricField::from_parts(u, PinchingBounds::new(a, b)?, residual))
}

pub fn encode_metric(m: &MetricField) -> Vec<u8> {
    let mut out = Vec::new();
    push_metric(m, &mut out);
    out
}

pub fn decode_metric(bytes: &[u8]) -> Result<MetricField> {
    let mut r = Reader::new(bytes);
    let m = read_metric(&mut r)?;
    r.finish()?;
    Ok(m)
}

fn push_circle(phi: &CircleMap, out: &mut Vec<u8>) {
    out.extend_from_slice(CIRCLE_MAGIC);
    out.extend_from_slice(&(phi.len() as u32).to_le_bytes());
    let derivs = phi.derivatives();
    out.push(derivs.is_some() as u8);
    for s in phi.samples() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    for d in derivs.unwrap_or(&[]) {
        out.extend_from_slice(&d.to_le_bytes());
    }
}

fn read_circle(r: &mut Reader) -> Result<CircleMap> {
    r.magic(CIRCLE_MAGIC)?;
    let n = r.u32()? as usize;
    let c1 = r.u8()?;
    let samples = r.f64s(n)?;
    match c1 {
        0 => CircleMap::from_samples(samples),
        1 => CircleMap::from_samples_and_derivatives(samples, r.f64s(n)?),
        other => Err(Error::Format(format!("bad smoothness flag {other}"))),
    }
}

/// Map file: the map values, its boundary data and its target metric.
pub fn encode_map(h: &DiskMap) -> Result<Vec<u8>> {
    let phi = h.boundary().ok_or_else(|| Error::InvalidArgument("only maps with boundary data can be stored".into()))?;
    let mut out = Vec::new();
    push_field(h.values(), &mut out);
    push_circle(phi, &mut out);
    push_metric(h.target(), &mut out);
    Ok(out)
}

pub fn decode_map(bytes: &[u8]) -> Result<DiskMap> {
    let mut r = Reader::new(bytes);
    let values: ComplexField = read_field(&mut r)?;
    let phi = read_circle(&mut r)?;
    let target = read_metric(&mut r)?;
    r.finish()?;
    DiskMap::from_parts(values, phi, target)
}

/// Plain text: `n_s`, then one lift sample per line.
pub fn circle_to_text(phi: &CircleMap) -> String {
    let mut s = format!("{}\n", phi.len());
    for v in phi.samples() {
        s.push_str(&format!("{v:.17e}\n"));
    }
    s
}

pub fn circle_from_text(text: &str) -> Result<CircleMap> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let n: usize = lines
        .next()
        .ok_or_else(|| Error::Parse("empty circle map file".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("line 1: bad sample count: {e}")))?;
    let samples: Vec<f64> = lines
        .enumerate()
        .map(|(i, l)| l.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", i + 2))))
        .collect::<Result<_>>()?;
    if samples.len() != n {
        return Err(Error::Parse(format!("expected {n} samples, found {}", samples.len())));
    }
    CircleMap::from_samples(samples)
}

/// One CSV row per node: `r,theta,x,y,value` (complex fields end with
/// `value_re,value_im`).
pub fn field_to_csv<T: Serial>(f: &Field<T>) -> String {
    let g = f.grid();
    let mut s = String::from(if T::WIDTH == 1 { "r,theta,x,y,value\n" } else { "r,theta,x,y,value_re,value_im\n" });
    let mut buf = Vec::new();
    for n in 0..g.node_count() {
        let (i, j) = g.ring_angle(n);
        let z = g.z(n);
        s.push_str(&format!("{:.17e},{:.17e},{:.17e},{:.17e}", g.radius(i), g.theta(j), z.re, z.im));
        buf.clear();
        f.get(n).push(&mut buf);
        for w in buf.chunks(8) {
            let v = f64::from_le_bytes(w.try_into().expect("8 bytes"));
            s.push_str(&format!(",{v:.17e}"));
        }
        s.push('\n');
    }
    s
}

/// Reads the value column of a CSV produced by [`field_to_csv`] back onto
/// `grid`.
pub fn scalar_field_from_csv(text: &str, grid: &Arc<DiskGrid>) -> Result<ScalarField> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    if header.trim() != "r,theta,x,y,value" {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    let values: Vec<f64> = lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let last = l.rsplit(',').next().unwrap_or("");
            last.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", i + 2)))
        })
        .collect::<Result<_>>()?;
    ScalarField::new(grid.clone(), values)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    Ok(fs::read(path)?)
}
