//! Plain-text scenario files.
//!
//! ```text
//! [system]
//! observable = pauli-z
//! psi_i = 1, 1
//! psi_f = 1, i
//!
//! [pointer]
//! sigma = 1
//! chirp = 0.5
//! mass = 1
//!
//! [grid]
//! n_points = 1024
//! length = 80
//!
//! [coupling]
//! g = 1e-3
//! backend = exact
//! ```
//!
//! Complex entries are written `a+bi`; `observable` is a name or a matrix with
//! rows separated by `;` (`1, 0; 0, -1`). Comments take whole lines. `[pointer]` takes either the Gaussian
//! keys `sigma`, `chirp`, `q0`, `p0` or `state = <file>` naming a wavefunction
//! dump; `potential = <file>` adds a tabulated potential. Relative paths are
//! resolved against the scenario file's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ini::Ini;
use num_complex::Complex64;
use weakshift_core::harness::{Backend, PointerRecipe, Scenario};
use weakshift_core::linalg::CMatrix;
use weakshift_core::measurement::CouplingSpec;
use weakshift_core::pointer::{build_grid, GaussianSpec};
use weakshift_core::system::{make_state, Observable, SystemState};

use crate::wavefunction::{read_potential, read_wavefunction};
use crate::{Error, Result};

const SECTIONS: [(&str, &[&str]); 4] = [
    ("system", &["observable", "psi_i", "psi_f"]),
    ("pointer", &["sigma", "chirp", "q0", "p0", "mass", "state", "potential"]),
    ("grid", &["n_points", "length"]),
    ("coupling", &["g", "backend", "overlap_threshold", "id", "seed"]),
];

pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let t = t.replace('j', "i");
    Complex64::from_str(&t).map_err(|_| Error::invalid(format!("not a complex number: {s:?}")))
}

/// Comma-separated complex entries, optionally wrapped in brackets.
pub fn parse_vector(s: &str) -> Result<Vec<Complex64>> {
    let t = s.trim().trim_start_matches('[').trim_end_matches(']');
    t.split(',').map(parse_complex).collect()
}

/// Rows separated by `;` or newlines, entries by commas.
pub fn parse_matrix(s: &str) -> Result<CMatrix> {
    let rows = s
        .split([';', '\n'])
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .map(parse_vector)
        .collect::<Result<Vec<_>>>()?;
    CMatrix::from_rows(&rows).ok_or_else(|| Error::invalid("matrix must be square"))
}

/// A named observable (`pauli-x`, `pauli-y`, `pauli-z`, `identity`) or an
/// explicit matrix.
pub fn parse_observable(s: &str, dim: usize) -> Result<Observable> {
    let name = s.trim().to_ascii_lowercase().replace('_', "-");
    if name.chars().all(|c| c.is_ascii_alphabetic() || c == '-') {
        return Observable::named(&name, dim)
            .ok_or_else(|| Error::invalid(format!("unknown observable {s:?} for dimension {dim}")));
    }
    let obs = Observable::new(parse_matrix(s)?)?;
    if obs.dim() != dim {
        return Err(Error::invalid(format!(
            "observable has dimension {}, states have {dim}",
            obs.dim()
        )));
    }
    Ok(obs)
}

pub fn parse_state(s: &str) -> Result<SystemState> {
    Ok(make_state(&parse_vector(s)?)?)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario> {
    let ini = Ini::load_from_str_noescape(text).map_err(|e| Error::invalid(format!("scenario file: {e}")))?;
    let mut table: BTreeMap<(&str, &str), &str> = BTreeMap::new();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((key, _)) = props.iter().next() {
                return Err(Error::invalid(format!("key {key:?} outside any section")));
            }
            continue;
        };
        let (name, keys) = SECTIONS
            .iter()
            .find(|(name, _)| *name == section)
            .ok_or_else(|| Error::invalid(format!("unknown section [{section}]")))?;
        for (key, value) in props.iter() {
            let key = keys
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| Error::invalid(format!("unknown key {key:?} in [{name}]")))?;
            table.insert((name, key), value);
        }
    }
    Fields { table, base_dir }.build()
}

struct Fields<'a> {
    table: BTreeMap<(&'a str, &'a str), &'a str>,
    base_dir: &'a Path,
}

impl Fields<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.table.get(&(section, key)).copied()
    }

    fn required(&self, section: &str, key: &str) -> Result<&str> {
        self.raw(section, key)
            .ok_or_else(|| Error::invalid(format!("missing {key} in [{section}]")))
    }

    fn parsed<T: FromStr>(&self, section: &str, key: &str, default: Option<T>) -> Result<T> {
        match self.raw(section, key) {
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad value for {key} in [{section}]: {v:?}"))),
            None => default.ok_or_else(|| Error::invalid(format!("missing {key} in [{section}]"))),
        }
    }

    fn build(&self) -> Result<Scenario> {
        let psi_i = parse_state(self.required("system", "psi_i")?)?;
        let psi_f = parse_state(self.required("system", "psi_f")?)?;
        if psi_i.dim() != psi_f.dim() {
            return Err(Error::invalid("psi_i and psi_f have different dimensions"));
        }
        let observable = parse_observable(self.required("system", "observable")?, psi_i.dim())?;

        let grid = build_grid(
            self.parsed("grid", "n_points", None)?,
            self.parsed("grid", "length", None)?,
        )?;

        let mass = self.parsed("pointer", "mass", Some(1.0))?;
        let pointer = match self.raw("pointer", "state") {
            Some(file) => {
                if ["sigma", "chirp", "q0", "p0"]
                    .iter()
                    .any(|k| self.raw("pointer", k).is_some())
                {
                    return Err(Error::invalid(
                        "[pointer] takes either state or Gaussian keys, not both",
                    ));
                }
                let (positions, amplitudes) = read_wavefunction(&self.base_dir.join(file.trim()))?;
                check_positions(&grid.positions(), &positions, grid.dq())?;
                PointerRecipe::Tabulated(amplitudes)
            }
            None => PointerRecipe::Gaussian(GaussianSpec {
                q0: self.parsed("pointer", "q0", Some(0.0))?,
                p0: self.parsed("pointer", "p0", Some(0.0))?,
                sigma: self.parsed("pointer", "sigma", Some(1.0))?,
                chirp: self.parsed("pointer", "chirp", Some(0.0))?,
            }),
        };
        let potential = match self.raw("pointer", "potential") {
            Some(file) => {
                let (positions, values) = read_potential(&self.base_dir.join(file.trim()))?;
                check_positions(&grid.positions(), &positions, grid.dq())?;
                Some(values)
            }
            None => None,
        };

        let g = self.parsed("coupling", "g", None)?;
        let mut coupling = CouplingSpec::new(g, observable, psi_i, psi_f, mass)?;
        if let Some(t) = self.raw("coupling", "overlap_threshold") {
            let t: f64 = t
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad overlap_threshold {t:?}")))?;
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::invalid("overlap_threshold must lie in (0, 1)"));
            }
            coupling = coupling.with_overlap_threshold(t);
        }
        let backend = match self.raw("coupling", "backend") {
            Some(b) => b
                .trim()
                .parse::<Backend>()
                .map_err(|_| Error::invalid(format!("unknown backend {b:?}")))?,
            None => Backend::Exact,
        };

        let mut scenario = Scenario::new(self.parsed("coupling", "id", Some(0))?, coupling, pointer, grid);
        scenario.backend = backend;
        scenario.seed = self.parsed("coupling", "seed", Some(0))?;
        scenario.potential = potential;
        // Surface tail and normalization problems now rather than mid-run.
        scenario.pointer_state()?;
        Ok(scenario)
    }
}

fn check_positions(expected: &[f64], found: &[f64], dq: f64) -> Result<()> {
    if expected.len() != found.len() {
        return Err(Error::invalid(format!(
            "tabulated file has {} rows, grid has {} points",
            found.len(),
            expected.len()
        )));
    }
    let off = expected
        .iter()
        .zip(found)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if off > 1e-6 * dq {
        return Err(Error::invalid(format!(
            "tabulated positions do not match the grid (off by {off:e})"
        )));
    }
    Ok(())
}
