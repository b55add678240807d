//! Convergence tables as CSV and time-slice cell means as legacy VTK.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{invalid, Error, Result};
use crate::mesh::Mesh4;
use crate::scenarios::{cell_averages, ConvergenceRecord};

pub const CSV_HEADER: &str = "N,h,E,rate";

/// Environment variable that redirects relative output paths.
pub const OUTPUT_DIR_VAR: &str = "HODGE4D_OUT";

/// Resolves a relative output path against `HODGE4D_OUT` when it is set.
pub fn output_path(path: impl AsRef<Path>) -> PathBuf {
    let path = path.as_ref();
    match std::env::var_os(OUTPUT_DIR_VAR) {
        Some(dir) if path.is_relative() && !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => invalid(format!("csv: {other:?}")),
    }
}

pub fn format_csv(records: &[ConvergenceRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(invalid("no records to write"));
    }
    if records
        .windows(2)
        .any(|w| w[1].n <= w[0].n || w[1].h >= w[0].h)
    {
        return Err(invalid("records are not in refinement order"));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(',')).map_err(csv_error)?;
    for r in records {
        let rate = r.rate.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([r.n.to_string(), r.h.to_string(), r.e.to_string(), rate])
            .map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("ascii output"))
}

pub fn write_csv(records: &[ConvergenceRecord], path: &Path) -> Result<()> {
    write_file(path, &format_csv(records)?)
}

pub fn parse_csv(text: &str) -> Result<Vec<ConvergenceRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut rows = r.records();
    match rows.next() {
        Some(Ok(h)) if h.iter().eq(CSV_HEADER.split(',')) => {}
        _ => return Err(invalid(format!("expected header `{CSV_HEADER}`"))),
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| invalid(format!("bad number `{s}`: {e}")))
    };
    rows.map(|row| {
        let f = row.map_err(csv_error)?;
        if f.len() != 4 {
            return Err(invalid(format!("expected 4 fields, got {}", f.len())));
        }
        Ok(ConvergenceRecord {
            n: f[0]
                .parse()
                .map_err(|e| invalid(format!("bad count `{}`: {e}", &f[0])))?,
            h: num(&f[1])?,
            e: num(&f[2])?,
            rate: if f[3].is_empty() {
                None
            } else {
                Some(num(&f[3])?)
            },
        })
    })
    .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<ConvergenceRecord>> {
    parse_csv(&fs::read_to_string(path)?)
}

/// A spatial cell layer at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceSpec {
    /// Spatial axis normal to the slice: 1 = x, 2 = y, 3 = z.
    pub axis: usize,
    pub coordinate: f64,
    pub time: f64,
}

impl SliceSpec {
    /// Parses `z=0.5,t=0`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut axis = None;
        let mut time = None;
        for part in text.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| invalid(format!("bad slice item `{part}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| invalid(format!("bad slice value `{v}`")))?;
            match k.trim() {
                "x" | "y" | "z" if axis.is_some() => {
                    return Err(invalid("slice has two spatial axes"))
                }
                "x" => axis = Some((1, v)),
                "y" => axis = Some((2, v)),
                "z" => axis = Some((3, v)),
                "t" => time = Some(v),
                other => return Err(invalid(format!("unknown slice axis `{other}`"))),
            }
        }
        let (axis, coordinate) = axis.ok_or_else(|| invalid("slice needs one of x, y, z"))?;
        Ok(Self {
            axis,
            coordinate,
            time: time.unwrap_or(0.0),
        })
    }

    pub fn label(&self) -> String {
        format!(
            "{}={},t={}",
            ["t", "x", "y", "z"][self.axis],
            self.coordinate,
            self.time
        )
    }

    /// Cell layer index along `axis` and time slab index.
    pub fn locate(&self, mesh: &Mesh4) -> Result<(usize, usize)> {
        if !(1..=3).contains(&self.axis) {
            return Err(invalid("slice axis must be spatial"));
        }
        let layer = |axis: usize, v: f64| {
            let (n, ext) = (mesh.divisions()[axis], mesh.extents()[axis]);
            let tol = 1e-12 * ext;
            if !(v >= -tol && v <= ext + tol) {
                return Err(invalid(format!("slice coordinate {v} misses the mesh")));
            }
            Ok(((v / mesh.spacings()[axis]).floor().max(0.0) as usize).min(n - 1))
        };
        Ok((layer(self.axis, self.coordinate)?, layer(0, self.time)?))
    }
}

/// Legacy VTK text of the cell means `phi_avg` and `A_avg` on one layer.
pub fn format_vtk_slice(mesh: &Mesh4, u: &[f64], slice: &SliceSpec) -> Result<String> {
    let (layer, slab) = slice.locate(mesh)?;
    let avg = cell_averages(mesh, u)?;
    let div = mesh.divisions();
    let s = mesh.spacings();

    let mut dims = [0usize; 3];
    let mut origin = [0.0f64; 3];
    let mut ranges = [(0usize, 0usize); 3];
    for k in 0..3 {
        let axis = k + 1;
        if axis == slice.axis {
            dims[k] = 2;
            origin[k] = layer as f64 * s[axis];
            ranges[k] = (layer, layer + 1);
        } else {
            dims[k] = div[axis] + 1;
            ranges[k] = (0, div[axis]);
        }
    }
    let n_cells: usize = ranges.iter().map(|(a, b)| b - a).product();

    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    writeln!(
        out,
        "hodge4d slice {} layer {layer} slab {slab}",
        slice.label()
    )
    .unwrap();
    out.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    writeln!(out, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2]).unwrap();
    writeln!(out, "ORIGIN {} {} {}", origin[0], origin[1], origin[2]).unwrap();
    writeln!(out, "SPACING {} {} {}", s[1], s[2], s[3]).unwrap();
    writeln!(out, "CELL_DATA {n_cells}").unwrap();

    let mut cells = Vec::with_capacity(n_cells);
    for z in ranges[2].0..ranges[2].1 {
        for y in ranges[1].0..ranges[1].1 {
            for x in ranges[0].0..ranges[0].1 {
                cells.push(
                    mesh.entity_id(4, 0, [slab, x, y, z])
                        .expect("cell in range"),
                );
            }
        }
    }
    out.push_str("SCALARS phi_avg double 1\nLOOKUP_TABLE default\n");
    for &c in &cells {
        writeln!(out, "{:e}", avg[c].0).unwrap();
    }
    out.push_str("VECTORS A_avg double\n");
    for &c in &cells {
        let a = avg[c].1;
        writeln!(out, "{:e} {:e} {:e}", a[0], a[1], a[2]).unwrap();
    }
    Ok(out)
}

pub fn write_vtk_slice(mesh: &Mesh4, u: &[f64], slice: &SliceSpec, path: &Path) -> Result<()> {
    write_file(path, &format_vtk_slice(mesh, u, slice)?)
}

/// Writes `key=value` lines.
pub fn write_report(entries: &[(String, String)], path: &Path) -> Result<()> {
    let mut s = String::new();
    for (k, v) in entries {
        writeln!(s, "{k}={v}").unwrap();
    }
    write_file(path, &s)
}
