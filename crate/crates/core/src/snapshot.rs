//! Snapshot I/O: a plain-text header followed by binary little-endian
//! doubles in row-major cell order (`.snap`), plus a CSV export with one
//! row per cell.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{ConservedField, Field, Grid};
use crate::state::{CompVec, ConservedState};

/// Variable names in the conserved layout: `rho1..rhon, m1..mdim, E`.
pub fn variable_names(n_species: usize, dim: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=n_species).map(|i| format!("rho{i}")).collect();
    names.extend((1..=dim).map(|d| format!("m{d}")));
    names.push("E".to_string());
    names
}

/// Write a `.snap` file: header lines
/// `mcfv-snap 1 / dim / cells / box / time / species / variables / data`,
/// then `n_cells * ncomp` little-endian doubles, cell-major with the
/// variables interleaved per cell.
pub fn write_snapshot(path: &Path, field: &ConservedField, time: f64) -> Result<()> {
    let grid = field.grid();
    let probe = field[0];
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "mcfv-snap 1")?;
    writeln!(w, "dim {}", grid.dim())?;
    let cells: Vec<String> = grid.cells_per_dim().iter().map(|c| c.to_string()).collect();
    writeln!(w, "cells {}", cells.join(" "))?;
    let mut bounds = Vec::new();
    for d in 0..grid.dim() {
        bounds.push(format!(
            "{:.17e} {:.17e}",
            grid.box_lo()[d],
            grid.box_hi()[d]
        ));
    }
    writeln!(w, "box {}", bounds.join(" "))?;
    writeln!(w, "time {time:.17e}")?;
    writeln!(w, "species {}", probe.n_species())?;
    writeln!(
        w,
        "variables {}",
        variable_names(probe.n_species(), grid.dim()).join(" ")
    )?;
    writeln!(w, "data")?;
    for state in field.iter() {
        for k in 0..state.ncomp() {
            w.write_all(&state.comp(k).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a `.snap` file back into a field and its time stamp.
pub fn read_snapshot(path: &Path) -> Result<(ConservedField, f64)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = String::new();
    r.read_line(&mut magic)?;
    if magic.trim() != "mcfv-snap 1" {
        return Err(Error::Snapshot(format!("bad magic line {magic:?}")));
    }
    let mut dim = 0usize;
    let mut cells: Vec<usize> = Vec::new();
    let mut lo: Vec<f64> = Vec::new();
    let mut hi: Vec<f64> = Vec::new();
    let mut time = f64::NAN;
    let mut species = 0usize;
    loop {
        let mut line = String::new();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Snapshot("truncated header".into()));
        }
        let line = line.trim_end();
        if line == "data" {
            break;
        }
        let (key, rest) = line
            .split_once(' ')
            .ok_or_else(|| Error::Snapshot(format!("malformed header line {line:?}")))?;
        let parse_err = |e| Error::Snapshot(format!("bad value in {key:?}: {e}"));
        match key {
            "dim" => dim = rest.parse().map_err(|e| parse_err(format!("{e}")))?,
            "cells" => {
                cells = rest
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|e| parse_err(format!("{e}"))))
                    .collect::<Result<_>>()?;
            }
            "box" => {
                let vals: Vec<f64> = rest
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|e| parse_err(format!("{e}"))))
                    .collect::<Result<_>>()?;
                for pair in vals.chunks(2) {
                    lo.push(pair[0]);
                    hi.push(pair[1]);
                }
            }
            "time" => time = rest.parse().map_err(|e| parse_err(format!("{e}")))?,
            "species" => species = rest.parse().map_err(|e| parse_err(format!("{e}")))?,
            "variables" => {}
            _ => return Err(Error::Snapshot(format!("unknown header key {key:?}"))),
        }
    }
    if dim == 0 || cells.len() != dim || species == 0 {
        return Err(Error::Snapshot("incomplete header".into()));
    }
    let grid = Grid::new(&cells, &lo, &hi)?;
    let ncomp = species + dim + 1;
    let mut buf = vec![0u8; grid.n_cells() * ncomp * 8];
    r.read_exact(&mut buf)?;
    let mut data = Vec::with_capacity(grid.n_cells());
    for cell in 0..grid.n_cells() {
        let mut v = CompVec::zeros(ncomp);
        for k in 0..ncomp {
            let at = (cell * ncomp + k) * 8;
            v[k] = f64::from_le_bytes(buf[at..at + 8].try_into().unwrap());
        }
        data.push(ConservedState::from_comps(&v, species, dim));
    }
    Ok((Field::from_vec(grid, data)?, time))
}

/// CSV export: one row per cell with the index tuple, the cell-center
/// coordinates and all conserved variables.
pub fn write_csv(path: &Path, field: &ConservedField) -> Result<()> {
    let grid = field.grid();
    let probe = field[0];
    let mut w = BufWriter::new(File::create(path)?);
    let mut header: Vec<String> = (1..=grid.dim()).map(|d| format!("i{d}")).collect();
    header.extend((1..=grid.dim()).map(|d| format!("x{d}")));
    header.extend(variable_names(probe.n_species(), grid.dim()));
    writeln!(w, "{}", header.join(","))?;
    for k in 0..grid.n_cells() {
        let idx = grid.unflat(k);
        let x = grid.cell_center(k);
        let mut row: Vec<String> = idx[..grid.dim()].iter().map(|i| i.to_string()).collect();
        row.extend(x[..grid.dim()].iter().map(|v| format!("{v:.17e}")));
        let state = &field[k];
        row.extend((0..state.ncomp()).map(|c| format!("{:.17e}", state.comp(c))));
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}
