//! Plain-text run configuration: `[section]` headers and `key = value`
//! lines, `#` comments. No physical parameter has a hidden default: every
//! species must state `gamma` and one of `r` or `c_v`.
//!
//! Grammar (one statement per line):
//!
//! ```text
//! [case]
//! type = manufactured            # or khi, uniform
//! background = 2.0               # manufactured: density offset
//! amplitude = 0.1                #   wave amplitude
//! energy_profile = rho2          #   rho2 (default) or rho
//! fractions = 0.25 0.75          #   optional composition split
//! projected_init = false         #   cell averages instead of point values
//! seed = 1                       # khi: PRNG seed
//! epsilon = 0.01                 #   interface perturbation amplitude
//! pressure = 2.5                 #   khi/uniform pressure
//! rho = 0.5 0.5                  # uniform: partial densities
//! velocity = 0.1 0.0             #   velocity
//!
//! [mixture]
//! species = 2
//! species1.gamma = 1.4
//! species1.r = 0.4               # or species1.c_v = 1.0
//! species1.e0 = 0.0              # optional, defaults to 0
//! species2.gamma = 1.4
//! species2.r = 0.4
//!
//! [grid]
//! dim = 2
//! cells = 64                     # one value, or one per dimension
//! box = -1 1                     # lo hi, or one pair per dimension
//!
//! [solver]
//! cfl = 0.5
//! t_end = 0.4
//! integrator = ssprk3            # or euler
//! viscosity = local              # or global
//! snapshot_times = 0.0 0.2 0.4   # optional
//! check_entropy_residual = true  # optional, default true
//! quadrature_order = 3           # Gauss points per dimension, 1..=5
//!
//! [output]
//! dir = runs/example             # optional
//!
//! [study]                        # for eoc / cesaro / consistency
//! meshes = 16 32 64 128
//! reference = 256                # cesaro only, defaults to the last mesh
//! times = 21                     # cesaro snapshot count in [0, t_end]
//! test_function = coscos         # consistency
//! snapshot_stride = 1            # consistency: keep every k-th step
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::cases::KhiConfig;
use crate::error::{Error, Result};
use crate::mesh::Grid;
use crate::solver::{Integrator, SolverConfig, ViscosityMode};
use crate::thermo::{GasMixture, SpeciesParams};

/// FNV-1a 64-bit hash of the config text; recorded in every artifact so
/// reports can refuse to mix incompatible runs.
pub fn config_hash(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[derive(Clone, Debug)]
pub enum CaseSpec {
    Manufactured {
        background: f64,
        amplitude: f64,
        profile: crate::cases::EnergyProfile,
        fractions: Option<Vec<f64>>,
        projected_init: bool,
    },
    Khi(KhiConfig),
    Uniform {
        rho: Vec<f64>,
        velocity: Vec<f64>,
        pressure: f64,
    },
}

impl CaseSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CaseSpec::Manufactured { .. } => "manufactured",
            CaseSpec::Khi(_) => "khi",
            CaseSpec::Uniform { .. } => "uniform",
        }
    }
}

#[derive(Clone, Debug)]
pub struct StudySpec {
    pub meshes: Vec<usize>,
    pub reference: Option<usize>,
    pub times: usize,
    pub test_function: String,
    pub snapshot_stride: usize,
}

/// Gauss points per dimension used for cell-average projections.
pub const DEFAULT_QUADRATURE_ORDER: usize = 3;

/// A fully validated run description.
#[derive(Clone, Debug)]
pub struct RunSpec {
    /// Raw config text, echoed into run directories.
    pub text: String,
    pub hash: u64,
    pub case: CaseSpec,
    pub mixture: GasMixture,
    pub grid: Grid,
    pub cfl: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub viscosity: ViscosityMode,
    pub snapshot_times: Vec<f64>,
    pub check_entropy_residual: bool,
    /// Gauss points per dimension for projections (initial data and
    /// consistency assembly).
    pub quadrature_order: usize,
    pub output: Option<PathBuf>,
    pub study: Option<StudySpec>,
}

impl RunSpec {
    /// Solver configuration for this spec (without case source terms).
    pub fn solver_config(&self) -> Result<SolverConfig> {
        Ok(SolverConfig::new(self.cfl, self.t_end)?
            .with_integrator(self.integrator)
            .with_viscosity(self.viscosity)
            .with_snapshot_times(self.snapshot_times.clone())?
            .with_entropy_residual_check(self.check_entropy_residual))
    }

    /// One-line mixture description for metadata files.
    pub fn mixture_line(&self) -> String {
        self.mixture
            .species()
            .iter()
            .map(|s| {
                format!(
                    "gamma:{:.17e} r:{:.17e} e0:{:.17e}",
                    s.gamma(),
                    s.r(),
                    s.e0()
                )
            })
            .collect::<Vec<_>>()
            .join(" | ")
    }
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if stripped.is_empty() {
                continue;
            }
            if let Some(name) = stripped.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(Error::Config {
                    line,
                    msg: format!("malformed section header {stripped:?}"),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or(Error::Config {
                line,
                msg: format!("expected `key = value`, got {stripped:?}"),
            })?;
            if section.is_empty() {
                return Err(Error::Config {
                    line,
                    msg: "key outside of any [section]".into(),
                });
            }
            let full = format!("{section}.{}", key.trim());
            if map
                .insert(full.clone(), (line, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::Config {
                    line,
                    msg: format!("duplicate key {full:?}"),
                });
            }
        }
        Ok(Entries { map })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<(usize, String)> {
        self.take(key).ok_or(Error::Config {
            line: 0,
            msg: format!("missing required key {key:?}"),
        })
    }

    fn f64(&mut self, key: &str) -> Result<f64> {
        let (line, v) = self.require(key)?;
        v.parse().map_err(|e| Error::Config {
            line,
            msg: format!("bad float for {key:?}: {e}"),
        })
    }

    fn f64_opt(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|e| Error::Config {
                line,
                msg: format!("bad float for {key:?}: {e}"),
            }),
        }
    }

    fn usize_opt(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|e| Error::Config {
                line,
                msg: format!("bad integer for {key:?}: {e}"),
            }),
        }
    }

    fn string_opt(&mut self, key: &str, default: &str) -> String {
        self.take(key)
            .map_or_else(|| default.to_string(), |(_, v)| v)
    }

    fn list_f64(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => {
                let vals: std::result::Result<Vec<f64>, _> = v
                    .split([' ', ','])
                    .filter(|t| !t.is_empty())
                    .map(str::parse)
                    .collect();
                vals.map(Some).map_err(|e| Error::Config {
                    line,
                    msg: format!("bad float list for {key:?}: {e}"),
                })
            }
        }
    }

    fn list_usize(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => {
                let vals: std::result::Result<Vec<usize>, _> = v
                    .split([' ', ','])
                    .filter(|t| !t.is_empty())
                    .map(str::parse)
                    .collect();
                vals.map(Some).map_err(|e| Error::Config {
                    line,
                    msg: format!("bad integer list for {key:?}: {e}"),
                })
            }
        }
    }

    fn bool_opt(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => match v.as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                other => Err(Error::Config {
                    line,
                    msg: format!("bad boolean for {key:?}: {other:?}"),
                }),
            },
        }
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (line, _))) = self.map.into_iter().next() {
            return Err(Error::Config {
                line,
                msg: format!("unknown key {key:?}"),
            });
        }
        Ok(())
    }
}

fn parse_mixture(e: &mut Entries) -> Result<GasMixture> {
    let (line, count) = e.require("mixture.species")?;
    let n: usize = count.parse().map_err(|err| Error::Config {
        line,
        msg: format!("bad species count: {err}"),
    })?;
    let mut species = Vec::with_capacity(n);
    for i in 1..=n {
        let gamma = e.f64(&format!("mixture.species{i}.gamma"))?;
        let r = e.take(&format!("mixture.species{i}.r"));
        let c_v = e.take(&format!("mixture.species{i}.c_v"));
        let e0 = e.f64_opt(&format!("mixture.species{i}.e0"), 0.0)?;
        let params = match (r, c_v) {
            (Some((line, r)), None) => {
                let r: f64 = r.parse().map_err(|err| Error::Config {
                    line,
                    msg: format!("bad r: {err}"),
                })?;
                SpeciesParams::from_gamma_r(gamma, r, e0)
            }
            (None, Some((line, c_v))) => {
                let c_v: f64 = c_v.parse().map_err(|err| Error::Config {
                    line,
                    msg: format!("bad c_v: {err}"),
                })?;
                SpeciesParams::new(gamma, c_v, e0)
            }
            (Some(_), Some((line, _))) => {
                return Err(Error::Config {
                    line,
                    msg: format!("species{i}: give either r or c_v, not both"),
                })
            }
            (None, None) => {
                return Err(Error::Config {
                    line: 0,
                    msg: format!("species{i}: one of r or c_v is required"),
                })
            }
        }
        .map_err(|err| Error::Config {
            line: 0,
            msg: format!("species{i}: {err}"),
        })?;
        species.push(params);
    }
    GasMixture::new(species).map_err(|err| Error::Config {
        line: 0,
        msg: format!("{err}"),
    })
}

fn parse_grid(e: &mut Entries) -> Result<Grid> {
    let dim = e.usize_opt("grid.dim", 2)?;
    let cells = e.list_usize("grid.cells")?.ok_or(Error::Config {
        line: 0,
        msg: "missing required key \"grid.cells\"".into(),
    })?;
    let cells = match cells.len() {
        1 => vec![cells[0]; dim],
        len if len == dim => cells,
        _ => {
            return Err(Error::Config {
                line: 0,
                msg: format!("grid.cells needs 1 or {dim} entries"),
            })
        }
    };
    let bounds = e.list_f64("grid.box")?.ok_or(Error::Config {
        line: 0,
        msg: "missing required key \"grid.box\"".into(),
    })?;
    let (lo, hi): (Vec<f64>, Vec<f64>) = match bounds.len() {
        2 => (vec![bounds[0]; dim], vec![bounds[1]; dim]),
        len if len == 2 * dim => {
            let mut lo = Vec::new();
            let mut hi = Vec::new();
            for pair in bounds.chunks(2) {
                lo.push(pair[0]);
                hi.push(pair[1]);
            }
            (lo, hi)
        }
        _ => {
            return Err(Error::Config {
                line: 0,
                msg: format!("grid.box needs 2 or {} entries", 2 * dim),
            })
        }
    };
    Grid::new(&cells, &lo, &hi).map_err(|err| Error::Config {
        line: 0,
        msg: format!("{err}"),
    })
}

fn parse_case(e: &mut Entries) -> Result<CaseSpec> {
    let (line, kind) = e.require("case.type")?;
    match kind.as_str() {
        "manufactured" => {
            let background = e.f64_opt("case.background", 2.0)?;
            let amplitude = e.f64_opt("case.amplitude", 0.1)?;
            let profile = match e.string_opt("case.energy_profile", "rho2").as_str() {
                "rho2" => crate::cases::EnergyProfile::RhoSquared,
                "rho" => crate::cases::EnergyProfile::Rho,
                other => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown energy profile {other:?} (rho2, rho)"),
                    })
                }
            };
            let fractions = e.list_f64("case.fractions")?;
            let projected_init = e.bool_opt("case.projected_init", false)?;
            Ok(CaseSpec::Manufactured {
                background,
                amplitude,
                profile,
                fractions,
                projected_init,
            })
        }
        "khi" => {
            let seed = e.usize_opt("case.seed", 1)? as u64;
            let epsilon = e.f64_opt("case.epsilon", 0.01)?;
            let pressure = e.f64_opt("case.pressure", 2.5)?;
            let interfaces = e.list_f64("case.interfaces")?;
            let interface_positions = match interfaces {
                None => [0.25, 0.5, 0.75],
                Some(v) if v.len() == 3 => [v[0], v[1], v[2]],
                Some(_) => {
                    return Err(Error::Config {
                        line,
                        msg: "case.interfaces needs exactly 3 entries".into(),
                    })
                }
            };
            Ok(CaseSpec::Khi(KhiConfig {
                seed,
                epsilon,
                interface_positions,
                pressure,
            }))
        }
        "uniform" => {
            let rho = e.list_f64("case.rho")?.ok_or(Error::Config {
                line,
                msg: "uniform case needs case.rho".into(),
            })?;
            let velocity = e.list_f64("case.velocity")?.ok_or(Error::Config {
                line,
                msg: "uniform case needs case.velocity".into(),
            })?;
            let pressure = e.f64("case.pressure")?;
            Ok(CaseSpec::Uniform {
                rho,
                velocity,
                pressure,
            })
        }
        other => Err(Error::Config {
            line,
            msg: format!("unknown case type {other:?} (manufactured, khi, uniform)"),
        }),
    }
}

/// Parse and validate a config text.
pub fn parse(text: &str) -> Result<RunSpec> {
    let mut e = Entries::parse(text)?;

    let mixture = parse_mixture(&mut e)?;
    let grid = parse_grid(&mut e)?;
    let case = parse_case(&mut e)?;

    let cfl = e.f64("solver.cfl")?;
    let t_end = e.f64("solver.t_end")?;
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::Config {
            line: 0,
            msg: format!("solver.cfl = {cfl} must lie in (0, 1]"),
        });
    }
    if !(t_end > 0.0) {
        return Err(Error::Config {
            line: 0,
            msg: format!("solver.t_end = {t_end} must be positive"),
        });
    }
    let integrator = match e.string_opt("solver.integrator", "ssprk3").as_str() {
        "ssprk3" => Integrator::Ssprk3,
        "euler" => Integrator::Euler,
        other => {
            return Err(Error::Config {
                line: 0,
                msg: format!("unknown integrator {other:?} (ssprk3, euler)"),
            })
        }
    };
    let viscosity = match e.string_opt("solver.viscosity", "local").as_str() {
        "local" => ViscosityMode::Local,
        "global" => ViscosityMode::Global,
        other => {
            return Err(Error::Config {
                line: 0,
                msg: format!("unknown viscosity mode {other:?} (local, global)"),
            })
        }
    };
    let snapshot_times = e.list_f64("solver.snapshot_times")?.unwrap_or_default();
    for &t in &snapshot_times {
        if t < 0.0 || t > t_end * (1.0 + 1e-12) {
            return Err(Error::Config {
                line: 0,
                msg: format!("snapshot time {t} outside [0, t_end]"),
            });
        }
    }
    let check_entropy_residual = e.bool_opt("solver.check_entropy_residual", true)?;
    let quadrature_order = e.usize_opt("solver.quadrature_order", DEFAULT_QUADRATURE_ORDER)?;
    if !(1..=5).contains(&quadrature_order) {
        return Err(Error::Config {
            line: 0,
            msg: format!("quadrature_order = {quadrature_order} outside the tabulated range 1..=5"),
        });
    }

    let output = e.take("output.dir").map(|(_, v)| PathBuf::from(v));

    let study = if let Some(meshes) = e.list_usize("study.meshes")? {
        let reference = e.list_usize("study.reference")?.map(|v| v[0]);
        let times = e.usize_opt("study.times", 21)?;
        if times < 2 {
            return Err(Error::Config {
                line: 0,
                msg: "study.times must be at least 2".into(),
            });
        }
        let test_function = e.string_opt("study.test_function", "coscos");
        let snapshot_stride = e.usize_opt("study.snapshot_stride", 1)?;
        if snapshot_stride == 0 {
            return Err(Error::Config {
                line: 0,
                msg: "study.snapshot_stride must be positive".into(),
            });
        }
        if meshes.is_empty() {
            return Err(Error::Config {
                line: 0,
                msg: "study.meshes must not be empty".into(),
            });
        }
        Some(StudySpec {
            meshes,
            reference,
            times,
            test_function,
            snapshot_stride,
        })
    } else {
        None
    };

    e.finish()?;

    Ok(RunSpec {
        text: text.to_string(),
        hash: config_hash(text),
        case,
        mixture,
        grid,
        cfl,
        t_end,
        integrator,
        viscosity,
        snapshot_times,
        check_entropy_residual,
        quadrature_order,
        output,
        study,
    })
}

/// Parse a config file.
pub fn load(path: &std::path::Path) -> Result<RunSpec> {
    parse(&std::fs::read_to_string(path)?)
}
