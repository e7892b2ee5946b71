//! Subcommand bodies. Each fills a [`Report`] and writes its artifacts into the output directory.

use std::fmt;
use std::io;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsym_core::Vec3;

use crate::config::Sampling;
use crate::output::Format;

pub mod flux;
pub mod gs;
pub mod orbit;
pub mod verify;

pub struct Context {
    pub out: PathBuf,
    pub format: Format,
    pub seed: u64,
    pub pool: rayon::ThreadPool,
}

#[derive(Debug)]
pub enum RunError {
    /// The config is valid TOML but lacks what this subcommand needs.
    Config(String),
    Compute(qsym_core::Error),
    Io(io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config: {m}"),
            RunError::Compute(e) => write!(f, "{}: {e}", error_name(e)),
            RunError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<qsym_core::Error> for RunError {
    fn from(e: qsym_core::Error) -> Self {
        RunError::Compute(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Variant name of a core error, e.g. `DegenerateBpar`.
pub fn error_name(e: &qsym_core::Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}

/// Uniform samples in the cylindrical box of `s`, in a fixed order for a given seed.
pub fn sample_points(s: &Sampling, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..s.points)
        .map(|_| {
            let r = rng.gen_range(s.r[0]..s.r[1]);
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let z = rng.gen_range(s.z[0]..s.z[1]);
            Vec3::from_cylindrical(r, phi, z)
        })
        .collect()
}

/// Largest |x| in an iterator, NaN-propagating.
pub(crate) fn max_abs<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |m, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_seeded() {
        let s = Sampling { points: 5, ..Sampling::default() };
        assert_eq!(sample_points(&s, 3), sample_points(&s, 3));
        assert_ne!(sample_points(&s, 3), sample_points(&s, 4));
        for p in sample_points(&s, 9) {
            let r = p.cyl_r();
            assert!(r >= s.r[0] && r < s.r[1] && p.z >= s.z[0] && p.z < s.z[1]);
        }
    }

    #[test]
    fn error_names() {
        let e = qsym_core::Error::DegenerateBpar { bpar: 0.0, floor: 1.0 };
        assert_eq!(error_name(&e), "DegenerateBpar");
        assert_eq!(error_name(&qsym_core::Error::ZeroField), "ZeroField");
        assert!(max_abs([1.0, f64::NAN, 2.0]).is_nan());
        assert_eq!(max_abs([-3.0, 2.0]), 3.0);
    }
}
