//! Long-format CSV and the `VFLD1` binary block.
//!
//! Binary layout (little endian): magic `VFLD1`, then `u64` d, N, mode count,
//! time count, `f64` h and t_max, the modes as `i64` tuples, and per time
//! `t, X_0, X¹(modes), X²(modes)` as `f64`.

use std::fmt::Write as _;
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Result, VflError};
use crate::grid::TimeGrid;

use super::{format_mode, FieldPath, FieldSnapshot};

const MAGIC: &[u8; 5] = b"VFLD1";

impl FieldSnapshot {
    /// Rows `t,n,x1,x2`, zero mode first with `n = 0;…;0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,n,x1,x2\n");
        self.write_rows(&mut out);
        out
    }

    fn write_rows(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{},{},{:.17e},{:.17e}",
            self.t,
            format_mode(&vec![0; self.d]),
            self.x0,
            0.0
        );
        for ((n, a), b) in self.modes.iter().zip(&self.x1).zip(&self.x2) {
            let _ = writeln!(out, "{},{},{:.17e},{:.17e}", self.t, format_mode(n), a, b);
        }
    }
}

impl FieldPath {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,n,x1,x2\n");
        for i in 0..self.grid.len() {
            self.snapshot(i).write_rows(&mut out);
        }
        out
    }
}

/// Coefficient block as read back from `VFLD1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldBlock {
    pub d: usize,
    pub n_max: usize,
    pub grid: TimeGrid,
    pub modes: Vec<Vec<i64>>,
    pub snapshots: Vec<FieldSnapshot>,
}

pub fn write_vfld<W: Write>(path: &FieldPath, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    for v in [path.d, path.n_max, path.modes.len(), path.grid.len()] {
        w.write_u64::<LittleEndian>(v as u64)?;
    }
    w.write_f64::<LittleEndian>(path.grid.h())?;
    w.write_f64::<LittleEndian>(path.grid.t_max())?;
    for n in &path.modes {
        for &c in n {
            w.write_i64::<LittleEndian>(c)?;
        }
    }
    for i in 0..path.grid.len() {
        w.write_f64::<LittleEndian>(path.grid.t(i))?;
        w.write_f64::<LittleEndian>(path.x0[i])?;
        for p in path.x1.iter().chain(&path.x2) {
            w.write_f64::<LittleEndian>(p[i])?;
        }
    }
    Ok(())
}

pub fn read_vfld<R: Read>(mut r: R) -> Result<FieldBlock> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(VflError::Format("missing VFLD1 magic".into()));
    }
    let mut header = [0usize; 4];
    for h in header.iter_mut() {
        *h = usize::try_from(r.read_u64::<LittleEndian>()?)
            .map_err(|_| VflError::Format("header overflow".into()))?;
    }
    let [d, n_max, count, times] = header;
    if d == 0 || d > 16 || times < 2 {
        return Err(VflError::Format(format!(
            "implausible header d={d} times={times}"
        )));
    }
    let h = r.read_f64::<LittleEndian>()?;
    let t_max = r.read_f64::<LittleEndian>()?;
    let grid = TimeGrid::new(t_max, h)?;
    let mut modes = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let mut n = Vec::with_capacity(d);
        for _ in 0..d {
            n.push(r.read_i64::<LittleEndian>()?);
        }
        modes.push(n);
    }
    let mut snapshots = Vec::with_capacity(times.min(1 << 20));
    for _ in 0..times {
        let t = r.read_f64::<LittleEndian>()?;
        let x0 = r.read_f64::<LittleEndian>()?;
        let mut x1 = vec![0.0; count];
        let mut x2 = vec![0.0; count];
        r.read_f64_into::<LittleEndian>(&mut x1)?;
        r.read_f64_into::<LittleEndian>(&mut x2)?;
        snapshots.push(FieldSnapshot {
            t,
            d,
            modes: modes.clone(),
            x0,
            x1,
            x2,
        });
    }
    Ok(FieldBlock {
        d,
        n_max,
        grid,
        modes,
        snapshots,
    })
}
