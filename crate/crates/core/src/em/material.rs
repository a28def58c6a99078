//! Dielectric functions. Frequencies are angular (rad/s); the time convention
//! `exp(-iωt)` makes passive media have `Im ε ≥ 0`.

use crate::numerics::Real;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// `ħ` in eV·s (CODATA 2018, exact-derived).
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;

/// Environment variable naming a directory that replaces the bundled tables.
pub const MATERIAL_DIR_ENV: &str = "HOTSPOT_MATERIAL_DIR";

/// File name of the bundled silver table inside the material directory.
pub const SILVER_TABLE_FILE: &str = "silver_johnson_christy.csv";

const BUNDLED_SILVER: &str = include_str!("../../data/silver_johnson_christy.csv");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MaterialError {
    #[error("frequency {omega:e} rad/s outside tabulated range [{lo:e}, {hi:e}]")]
    OutOfRange { omega: f64, lo: f64, hi: f64 },
    #[error("material table {source_name}: line {line}: {message}")]
    Parse { source_name: String, line: usize, message: String },
    #[error("material table {0}: frequencies must be strictly increasing")]
    NotIncreasing(String),
    #[error("cannot read material table {path}: {message}")]
    Io { path: String, message: String },
}

/// One tabulated sample: angular frequency and permittivity `(re, im)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub omega: f64,
    pub eps_re: f64,
    pub eps_im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Material {
    Constant { eps_re: f64, eps_im: f64 },
    Drude { eps_inf: f64, omega_p: f64, gamma: f64 },
    Tabulated { name: String, table: Vec<TableEntry> },
}

impl Material {
    pub fn vacuum() -> Self {
        Material::Constant { eps_re: 1.0, eps_im: 0.0 }
    }

    pub fn constant(eps: Complex<f64>) -> Self {
        Material::Constant { eps_re: eps.re, eps_im: eps.im }
    }

    /// Build from `energy_ev,n,k` CSV text, `ε = (n + ik)²`, `ω = E/ħ`.
    pub fn from_nk_csv(name: &str, text: &str) -> Result<Self, MaterialError> {
        let mut table = Vec::new();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "energy_ev,n,k" => {}
            _ => {
                return Err(MaterialError::Parse {
                    source_name: name.into(),
                    line: 1,
                    message: "expected header `energy_ev,n,k`".into(),
                })
            }
        }
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| MaterialError::Parse {
                    source_name: name.into(),
                    line: i + 1,
                    message: format!("{s:?}: {e}"),
                })
            };
            if fields.len() != 3 {
                return Err(MaterialError::Parse {
                    source_name: name.into(),
                    line: i + 1,
                    message: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let (e, n, k) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
            let eps = Complex::new(n, k).powi(2);
            table.push(TableEntry { omega: e / HBAR_EV_S, eps_re: eps.re, eps_im: eps.im });
        }
        if table.windows(2).any(|w| w[1].omega <= w[0].omega) || table.is_empty() {
            return Err(MaterialError::NotIncreasing(name.into()));
        }
        Ok(Material::Tabulated { name: name.into(), table })
    }

    /// Johnson–Christy silver, from `$HOTSPOT_MATERIAL_DIR` when set, else the
    /// copy compiled into the library.
    pub fn silver() -> Result<Self, MaterialError> {
        match std::env::var_os(MATERIAL_DIR_ENV) {
            Some(dir) => Self::silver_from_dir(Path::new(&dir)),
            None => Self::from_nk_csv("silver_johnson_christy (bundled)", BUNDLED_SILVER),
        }
    }

    pub fn silver_from_dir(dir: &Path) -> Result<Self, MaterialError> {
        let path: PathBuf = dir.join(SILVER_TABLE_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| MaterialError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_nk_csv(&path.display().to_string(), &text)
    }

    /// Human-readable origin of the data, recorded in output sidecars.
    pub fn provenance(&self) -> String {
        match self {
            Material::Constant { eps_re, eps_im } => format!("constant eps = {eps_re} + {eps_im}i"),
            Material::Drude { eps_inf, omega_p, gamma } => {
                format!("drude eps_inf = {eps_inf}, omega_p = {omega_p:e} rad/s, gamma = {gamma:e} rad/s")
            }
            Material::Tabulated { name, table } => format!("table {name} ({} rows)", table.len()),
        }
    }

    /// Frequency interval where the permittivity is defined.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Material::Tabulated { table, .. } => (table[0].omega, table[table.len() - 1].omega),
            _ => (0.0, f64::INFINITY),
        }
    }

    /// True when the permittivity is the same at every frequency.
    pub fn is_dispersionless(&self) -> bool {
        matches!(self, Material::Constant { .. })
    }

    /// Complex permittivity at angular frequency `omega`.
    pub fn permittivity<T: Real>(&self, omega: T) -> Result<Complex<T>, MaterialError> {
        let w = omega.to_f64().unwrap_or(f64::NAN);
        let eps = match self {
            Material::Constant { eps_re, eps_im } => Complex::new(*eps_re, *eps_im),
            Material::Drude { eps_inf, omega_p, gamma } => {
                Complex::new(*eps_inf, 0.0) - omega_p * omega_p / Complex::new(w * w, gamma * w)
            }
            Material::Tabulated { table, .. } => {
                let (lo, hi) = self.range();
                if !(w >= lo && w <= hi) {
                    return Err(MaterialError::OutOfRange { omega: w, lo, hi });
                }
                let j = table.partition_point(|e| e.omega <= w);
                if j == 0 {
                    Complex::new(table[0].eps_re, table[0].eps_im)
                } else if j == table.len() || table[j - 1].omega == w {
                    let e = &table[j - 1];
                    Complex::new(e.eps_re, e.eps_im)
                } else {
                    let (a, b) = (&table[j - 1], &table[j]);
                    let t = (w - a.omega) / (b.omega - a.omega);
                    Complex::new(a.eps_re + t * (b.eps_re - a.eps_re), a.eps_im + t * (b.eps_im - a.eps_im))
                }
            }
        };
        Ok(Complex::new(T::lit(eps.re), T::lit(eps.im)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_is_one() {
        let e = Material::vacuum().permittivity(3.3e15).unwrap();
        assert_eq!(e, Complex::new(1.0, 0.0));
    }

    #[test]
    fn drude_vanishes_at_plasma_frequency() {
        let m = Material::Drude { eps_inf: 1.0, omega_p: 1.4e16, gamma: 0.0 };
        assert!(m.permittivity(1.4e16).unwrap().norm() < 1e-15);
    }

    #[test]
    fn silver_table_nodes_are_exact() {
        let m = Material::from_nk_csv("ag", BUNDLED_SILVER).unwrap();
        // 3.00 eV row: n = 0.05, k = 2.275
        let w = 3.00 / HBAR_EV_S;
        let e = m.permittivity(w).unwrap();
        let want = Complex::new(0.05, 2.275).powi(2);
        assert_eq!(e, want);
        assert!(e.im >= 0.0);
        let (lo, hi) = m.range();
        assert!(matches!(m.permittivity(lo * 0.99), Err(MaterialError::OutOfRange { .. })));
        assert!(matches!(m.permittivity(hi * 1.01), Err(MaterialError::OutOfRange { .. })));
    }

    #[test]
    fn silver_interpolates_linearly_in_omega() {
        let m = Material::from_nk_csv("ag", BUNDLED_SILVER).unwrap();
        let (a, b) = (3.00 / HBAR_EV_S, 3.12 / HBAR_EV_S);
        let mid = m.permittivity(0.5 * (a + b)).unwrap();
        let want = (m.permittivity(a).unwrap() + m.permittivity(b).unwrap()) * 0.5;
        assert!((mid - want).norm() < 1e-12);
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(matches!(
            Material::from_nk_csv("x", "energy_ev,n,k\n1.0,0.1\n"),
            Err(MaterialError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Material::from_nk_csv("x", "energy_ev,n,k\n2.0,0.1,1\n1.0,0.1,1\n"),
            Err(MaterialError::NotIncreasing(_))
        ));
        assert!(Material::from_nk_csv("x", "e,n,k\n").is_err());
    }
}
