//! Varifold files.
//!
//! JSON layout: `{n, k, resolution, flags, domain, samples, oracle?}` where
//! each sample row is `[position (d), frame (n rows of length d), weight,
//! multiplicity]`.
//!
//! Binary layout (little endian): magic `VFLD1`, `u32 n`, `u32 k`,
//! `f64 resolution`, `u8 flags`, `u8 domain tag` (0 ball: center, radius;
//! 1 box: lo, hi), `u64 count`, then `count` rows of f64 in the JSON order.
//! The binary form carries no oracle sidecar.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::Oracle;
use crate::report::write_canonical;
use crate::varifold::{DiscreteVarifold, Domain, Flags, VarifoldSample};

const MAGIC: &[u8; 5] = b"VFLD1";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VarifoldFile {
    n: usize,
    k: usize,
    resolution: f64,
    #[serde(default)]
    flags: Flags,
    domain: Domain,
    samples: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    oracle: Option<Oracle>,
}

fn row_len(n: usize, k: usize) -> usize {
    let d = n + k;
    d + d * n + 2
}

fn sample_row(s: &VarifoldSample) -> Vec<f64> {
    // column-major storage lists the n tangent vectors one after another
    let mut row: Vec<f64> = s.position.iter().cloned().collect();
    row.extend_from_slice(s.frame.as_slice());
    row.push(s.weight);
    row.push(s.multiplicity);
    row
}

fn sample_from_row(row: &[f64], n: usize, k: usize, index: usize) -> Result<VarifoldSample> {
    let d = n + k;
    if row.len() != row_len(n, k) {
        return Err(Error::Format(format!("sample {index} has {} entries, expected {}", row.len(), row_len(n, k))));
    }
    let position = DVector::from_column_slice(&row[..d]);
    let frame = DMatrix::from_column_slice(d, n, &row[d..d + d * n]);
    Ok(VarifoldSample::new(position, frame, row[d + d * n], row[d + d * n + 1]))
}

pub fn to_json_writer<W: Write>(v: &DiscreteVarifold, oracle: Option<&Oracle>, writer: W) -> Result<()> {
    let file = VarifoldFile {
        n: v.n(),
        k: v.k(),
        resolution: v.resolution(),
        flags: v.flags(),
        domain: v.domain().clone(),
        samples: v.samples().iter().map(sample_row).collect(),
        oracle: oracle.filter(|o| !o.is_empty()).cloned(),
    };
    write_canonical(&file, writer)
}

pub fn from_json_reader<R: Read>(reader: R) -> Result<(DiscreteVarifold, Option<Oracle>)> {
    let file: VarifoldFile = serde_json::from_reader(reader)?;
    let samples = file.samples.iter().enumerate().map(|(i, row)| sample_from_row(row, file.n, file.k, i)).collect::<Result<Vec<_>>>()?;
    let v = DiscreteVarifold::new(file.n, file.k, file.resolution, file.domain, file.flags, samples)?;
    Ok((v, file.oracle))
}

pub fn to_binary_writer<W: Write>(v: &DiscreteVarifold, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(v.n() as u32).to_le_bytes())?;
    w.write_all(&(v.k() as u32).to_le_bytes())?;
    w.write_all(&v.resolution().to_le_bytes())?;
    w.write_all(&[v.flags().theta_ge_one as u8])?;
    let (tag, values): (u8, Vec<f64>) = match v.domain() {
        Domain::Ball { center, radius } => (0, center.iter().cloned().chain([*radius]).collect()),
        Domain::Box { lo, hi } => (1, lo.iter().chain(hi.iter()).cloned().collect()),
    };
    w.write_all(&[tag])?;
    for x in values {
        w.write_all(&x.to_le_bytes())?;
    }
    w.write_all(&(v.len() as u64).to_le_bytes())?;
    for s in v.samples() {
        for x in sample_row(s) {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| Error::Format(format!("truncated binary file: {e}")))?;
    Ok(buf)
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    (0..count).map(|_| Ok(f64::from_le_bytes(read_array::<8, _>(r)?))).collect()
}

pub fn from_binary_reader<R: Read>(mut r: R) -> Result<DiscreteVarifold> {
    if &read_array::<5, _>(&mut r)? != MAGIC {
        return Err(Error::Format("bad magic, expected VFLD1".into()));
    }
    let n = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let k = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let d = n + k;
    let resolution = f64::from_le_bytes(read_array(&mut r)?);
    let [flag_bits] = read_array::<1, _>(&mut r)?;
    if flag_bits > 1 {
        return Err(Error::Format(format!("unknown flag bits {flag_bits:#x}")));
    }
    let flags = Flags { theta_ge_one: flag_bits == 1 };
    let domain = match read_array::<1, _>(&mut r)? {
        [0] => {
            let vals = read_f64s(&mut r, d + 1)?;
            Domain::Ball { center: vals[..d].to_vec(), radius: vals[d] }
        }
        [1] => {
            let vals = read_f64s(&mut r, 2 * d)?;
            Domain::Box { lo: vals[..d].to_vec(), hi: vals[d..].to_vec() }
        }
        [t] => return Err(Error::Format(format!("unknown domain tag {t}"))),
    };
    let count = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let len = row_len(n, k);
    let mut samples = Vec::with_capacity(count.min(1 << 24));
    for i in 0..count {
        let row = read_f64s(&mut r, len)?;
        samples.push(sample_from_row(&row, n, k, i)?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after last sample".into()));
    }
    DiscreteVarifold::new(n, k, resolution, domain, flags, samples)
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Reads JSON for `.json` paths and the binary format otherwise.
pub fn read_varifold(path: &Path) -> Result<(DiscreteVarifold, Option<Oracle>)> {
    let reader = BufReader::new(File::open(path)?);
    if is_json(path) {
        from_json_reader(reader)
    } else {
        Ok((from_binary_reader(reader)?, None))
    }
}

pub fn write_varifold(path: &Path, v: &DiscreteVarifold, oracle: Option<&Oracle>) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    if is_json(path) {
        to_json_writer(v, oracle, &mut writer)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        Ok(())
    } else {
        to_binary_writer(v, writer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorSpec, Shape};

    fn sample_varifold() -> (DiscreteVarifold, Oracle) {
        let spec = GeneratorSpec::new(Shape::HoelderGraph { n: 2, amplitude: 0.3, alpha: 0.4 }, 0.1, 1.6).with_jitter(0.5, 4);
        let g = generate(&spec).unwrap();
        (g.varifold, g.oracle)
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let (v, o) = sample_varifold();
        let mut buf = Vec::new();
        to_json_writer(&v, Some(&o), &mut buf).unwrap();
        let (back, oracle) = from_json_reader(buf.as_slice()).unwrap();
        assert_eq!(back.samples(), v.samples());
        assert_eq!(back.domain(), v.domain());
        assert_eq!(oracle.unwrap(), o);
        let mut again = Vec::new();
        to_json_writer(&back, oracle_ref(&o), &mut again).unwrap();
        assert_eq!(buf, again);
    }

    fn oracle_ref(o: &Oracle) -> Option<&Oracle> {
        Some(o)
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let (v, _) = sample_varifold();
        let mut buf = Vec::new();
        to_binary_writer(&v, &mut buf).unwrap();
        assert_eq!(&buf[..5], b"VFLD1");
        let back = from_binary_reader(buf.as_slice()).unwrap();
        assert_eq!(back.samples(), v.samples());
        assert_eq!(back.flags(), v.flags());
        assert_eq!(back.resolution().to_bits(), v.resolution().to_bits());
    }

    #[test]
    fn malformed_input_is_a_format_error() {
        let (v, _) = sample_varifold();
        let mut buf = Vec::new();
        to_binary_writer(&v, &mut buf).unwrap();
        assert!(matches!(from_binary_reader(&buf[..buf.len() - 3]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(from_binary_reader(bad.as_slice()), Err(Error::Format(_))));
        let json = r#"{"n":1,"k":1,"resolution":0.1,"domain":{"kind":"ball","center":[0,0],"radius":1},"samples":[[0,0,1,0]]}"#;
        assert!(matches!(from_json_reader(json.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn path_dispatch() {
        let dir = tempfile::tempdir().unwrap();
        let (v, o) = sample_varifold();
        for name in ["v.json", "v.vfld"] {
            let p = dir.path().join(name);
            write_varifold(&p, &v, Some(&o)).unwrap();
            let (back, oracle) = read_varifold(&p).unwrap();
            assert_eq!(back.samples(), v.samples());
            assert_eq!(oracle.is_some(), name.ends_with("json"));
        }
    }
}
