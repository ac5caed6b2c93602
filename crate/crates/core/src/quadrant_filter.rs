//! Relative-pose state table and the pair filter built on it.
//!
//! Each candidate pair is reduced to a 6-bit [`StateCode`] and looked up in a
//! 64-row table carrying one admissibility flag per mode. Strict mode keeps
//! only configurations where the two views clearly face a common region;
//! loose mode also keeps the borderline ones with slight view intersection.
//! Under uniformly random poses every code is equally likely, so the filtered
//! fraction is `1 - admissible / 64`: 13/16 strict and 6/16 loose for the
//! shipped table.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    labels, orientation_code, position_code, CameraPose, OrientationCode, PoseSet, PositionCode,
    StateCode,
};
use crate::pairing::PairSet;

/// Pairs closer than this are treated as coincident and always kept.
pub const COINCIDENT_DISTANCE: f64 = 1e-9;

/// Smallest sample count accepted by [`monte_carlo_filter_rate`].
pub const MIN_MONTE_CARLO_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    Strict,
    Loose,
}

impl FilterMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterMode::Strict => "strict",
            FilterMode::Loose => "loose",
        }
    }
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(FilterMode::Strict),
            "loose" => Ok(FilterMode::Loose),
            other => Err(Error::InvalidParams(format!(
                "unknown filter mode {other:?}"
            ))),
        }
    }
}

/// One row of the label-level table: position octant, then the admissible
/// orientation octants in strict and loose mode.
pub type LabelRow = (u8, &'static [u8], &'static [u8]);

/// Admissible orientation octants per position octant, by octant label
/// (see [`labels`]).
pub const LABEL_TABLE: [LabelRow; 8] = [
    (1, &[7], &[2, 3, 6, 7]),
    (2, &[7, 8], &[2, 3, 4, 6, 7, 8]),
    (3, &[5, 6], &[1, 2, 3, 5, 6, 7]),
    (4, &[6], &[2, 3, 6, 7]),
    (5, &[3], &[2, 3, 6, 7]),
    (6, &[3, 4], &[2, 3, 4, 6, 7, 8]),
    (7, &[1, 2], &[1, 2, 3, 5, 6, 7]),
    (8, &[2], &[2, 3, 6, 7]),
];

const SHIPPED_TABLE: &str = include_str!("../data/state_table.txt");

/// Per-code admissibility for both modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateTable {
    strict: [bool; 64],
    loose: [bool; 64],
}

impl Default for StateTable {
    fn default() -> Self {
        Self::builtin()
    }
}

impl StateTable {
    /// The table shipped in `data/state_table.txt`.
    pub fn builtin() -> Self {
        Self::parse(SHIPPED_TABLE).expect("shipped state table is valid")
    }

    /// Expands octant-label rows into bit-level codes.
    pub fn from_labels(rows: &[LabelRow]) -> Result<Self> {
        let mut strict = [false; 64];
        let mut loose = [false; 64];
        for &(pos_label, strict_labels, loose_labels) in rows {
            let pos = labels::position_from_label(pos_label)?;
            for &l in strict_labels {
                strict[StateCode::new(pos, labels::orientation_from_label(l)?).value() as usize] =
                    true;
            }
            for &l in loose_labels {
                loose[StateCode::new(pos, labels::orientation_from_label(l)?).value() as usize] =
                    true;
            }
        }
        let table = Self { strict, loose };
        table.check_nested()?;
        Ok(table)
    }

    fn check_nested(&self) -> Result<()> {
        for code in StateCode::all() {
            let i = code.value() as usize;
            if self.strict[i] && !self.loose[i] {
                let (p, o) = code.split();
                return Err(Error::InvalidInput(format!(
                    "state {p} {o} is strict-admissible but not loose-admissible"
                )));
            }
        }
        Ok(())
    }

    /// Parses `POS_BITS ORI_BITS STRICT LOOSE` rows; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        const CTX: &str = "state table";
        let mut strict = [false; 64];
        let mut loose = [false; 64];
        let mut seen = [false; 64];
        let mut rows = 0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::parse(CTX, lineno + 1, "expected 4 fields"));
            }
            let pos: PositionCode = fields[0]
                .parse()
                .map_err(|e: Error| Error::parse(CTX, lineno + 1, e.to_string()))?;
            let ori: OrientationCode = fields[1]
                .parse()
                .map_err(|e: Error| Error::parse(CTX, lineno + 1, e.to_string()))?;
            let flag = |s: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(Error::parse(
                    CTX,
                    lineno + 1,
                    format!("flag must be 0 or 1, got {s:?}"),
                )),
            };
            let idx = StateCode::new(pos, ori).value() as usize;
            if seen[idx] {
                return Err(Error::parse(
                    CTX,
                    lineno + 1,
                    format!("duplicate state {pos} {ori}"),
                ));
            }
            seen[idx] = true;
            strict[idx] = flag(fields[2])?;
            loose[idx] = flag(fields[3])?;
            rows += 1;
        }
        if rows != 64 {
            return Err(Error::parse(
                CTX,
                0,
                format!("expected 64 rows, found {rows}"),
            ));
        }
        let table = Self { strict, loose };
        table.check_nested()?;
        Ok(table)
    }

    /// Serialises to the row format read by [`StateTable::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::from("# POS_BITS ORI_BITS STRICT LOOSE\n");
        for code in StateCode::all() {
            let (p, o) = code.split();
            let i = code.value() as usize;
            out.push_str(&format!(
                "{p} {o} {} {}\n",
                u8::from(self.strict[i]),
                u8::from(self.loose[i])
            ));
        }
        out
    }

    pub fn admits(&self, mode: FilterMode, code: StateCode) -> bool {
        let i = code.value() as usize;
        match mode {
            FilterMode::Strict => self.strict[i],
            FilterMode::Loose => self.loose[i],
        }
    }

    pub fn admissible_count(&self, mode: FilterMode) -> usize {
        StateCode::all().filter(|c| self.admits(mode, *c)).count()
    }

    /// Admissible orientation codes for one position code.
    pub fn admissible_orientations(
        &self,
        mode: FilterMode,
        position: PositionCode,
    ) -> Vec<OrientationCode> {
        OrientationCode::all()
            .filter(|o| self.admits(mode, StateCode::new(position, *o)))
            .collect()
    }

    /// Filtered fraction under uniformly distributed state codes.
    pub fn expected_filter_rate(&self, mode: FilterMode) -> f64 {
        1.0 - self.admissible_count(mode) as f64 / 64.0
    }
}

/// State code of `(i, j)` from raw vectors.
#[inline]
pub fn state_code_of(
    p_i: &nalgebra::Vector3<f64>,
    d_i: &nalgebra::Vector3<f64>,
    p_j: &nalgebra::Vector3<f64>,
    d_j: &nalgebra::Vector3<f64>,
) -> StateCode {
    StateCode::new(position_code(p_i, p_j), orientation_code(d_i, d_j))
}

pub fn state_code(ci: &CameraPose, cj: &CameraPose) -> StateCode {
    state_code_of(&ci.position, &ci.direction, &cj.position, &cj.direction)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FilterReport {
    pub mode: FilterMode,
    pub input_pairs: usize,
    pub kept: usize,
    pub filtered: usize,
    /// Connection pairs, kept without a table lookup.
    pub bypass: usize,
    /// Coincident cameras, kept without a table lookup.
    pub coincident: usize,
    /// Occurrences of each 6-bit state among looked-up pairs.
    pub histogram: Vec<u64>,
}

#[derive(Debug, Clone, Copy)]
enum Verdict {
    Bypass,
    Coincident,
    Looked(StateCode, bool),
}

/// Drops pairs whose state is not admissible in `mode`.
///
/// Pairs are encoded from the lower id to the higher one. Connection pairs
/// and coincident cameras are always kept.
pub fn filter_pairs(
    poses: &PoseSet,
    pairs: &PairSet,
    table: &StateTable,
    mode: FilterMode,
) -> Result<(PairSet, FilterReport)> {
    let list: Vec<_> = pairs.iter().collect();
    let verdicts: Vec<Verdict> = list
        .par_iter()
        .map(|&((a, b), origin)| -> Result<Verdict> {
            let ci = poses.require(a)?;
            let cj = poses.require(b)?;
            if origin.is_connection() {
                return Ok(Verdict::Bypass);
            }
            if (cj.position - ci.position).norm() < COINCIDENT_DISTANCE {
                return Ok(Verdict::Coincident);
            }
            let code = state_code(ci, cj);
            Ok(Verdict::Looked(code, table.admits(mode, code)))
        })
        .collect::<Result<_>>()?;

    let mut report = FilterReport {
        mode,
        input_pairs: list.len(),
        kept: 0,
        filtered: 0,
        bypass: 0,
        coincident: 0,
        histogram: vec![0; 64],
    };
    let mut kept = PairSet::new();
    for (&((a, b), origin), verdict) in list.iter().zip(verdicts) {
        let keep = match verdict {
            Verdict::Bypass => {
                report.bypass += 1;
                true
            }
            Verdict::Coincident => {
                report.coincident += 1;
                true
            }
            Verdict::Looked(code, admitted) => {
                report.histogram[code.value() as usize] += 1;
                admitted
            }
        };
        if keep {
            report.kept += 1;
            kept.insert(a, b, origin)?;
        } else {
            report.filtered += 1;
        }
    }
    Ok((kept, report))
}

/// Position and unit direction of a sampled camera.
pub type SampledCamera = (nalgebra::Vector3<f64>, nalgebra::Vector3<f64>);

/// Uniform position in the unit cube, uniform direction on the sphere.
pub fn sample_uniform_camera<R: Rng + ?Sized>(rng: &mut R) -> SampledCamera {
    let p = nalgebra::Vector3::new(rng.random(), rng.random(), rng.random());
    loop {
        let d = nalgebra::Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let n = d.norm();
        if n > 1e-12 {
            return (p, d / n);
        }
    }
}

/// Filtered fraction of `n_samples` pairs drawn by `sampler`. No connection
/// bypass applies; coincident pairs are kept.
pub fn filter_rate_with<F>(
    table: &StateTable,
    mode: FilterMode,
    n_samples: usize,
    seed: u64,
    mut sampler: F,
) -> Result<f64>
where
    F: FnMut(&mut ChaCha8Rng) -> (SampledCamera, SampledCamera),
{
    if n_samples < MIN_MONTE_CARLO_SAMPLES {
        return Err(Error::InvalidParams(format!(
            "need at least {MIN_MONTE_CARLO_SAMPLES} samples, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut filtered = 0usize;
    for _ in 0..n_samples {
        let ((p_i, d_i), (p_j, d_j)) = sampler(&mut rng);
        if (p_j - p_i).norm() < COINCIDENT_DISTANCE {
            continue;
        }
        if !table.admits(mode, state_code_of(&p_i, &d_i, &p_j, &d_j)) {
            filtered += 1;
        }
    }
    Ok(filtered as f64 / n_samples as f64)
}

/// Filtered fraction for i.i.d. uniform camera pairs.
pub fn monte_carlo_filter_rate(
    table: &StateTable,
    mode: FilterMode,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    filter_rate_with(table, mode, n_samples, seed, |rng| {
        (sample_uniform_camera(rng), sample_uniform_camera(rng))
    })
}
