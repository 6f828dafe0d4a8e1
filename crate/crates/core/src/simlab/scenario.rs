use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::coda::{
    balances_to_composition, sbp_to_contrast, CompositionMatrix, PairIndex, SbpSignMatrix,
};
use crate::error::{CodaError, Result};

/// Correlation between any two relevant balances.
pub const RELEVANT_CORRELATION: f64 = 0.7;
/// Noise balances are uniform on `[-NOISE_BOUND, NOISE_BOUND]`.
pub const NOISE_BOUND: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    A,
    B,
    C,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 3] = [ScenarioId::A, ScenarioId::B, ScenarioId::C];
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScenarioId::A => "A",
            ScenarioId::B => "B",
            ScenarioId::C => "C",
        };
        f.write_str(s)
    }
}

impl FromStr for ScenarioId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(ScenarioId::A),
            "B" | "b" => Ok(ScenarioId::B),
            "C" | "c" => Ok(ScenarioId::C),
            other => Err(format!("unknown scenario `{other}` (expected A, B or C)")),
        }
    }
}

/// How a logratio is classed as important given the relevant balances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportanceRule {
    /// Important iff the logratio does not load on any noise balance.
    Strict,
    /// Important iff the logratio loads on at least one relevant balance.
    Lax,
}

impl fmt::Display for ImportanceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImportanceRule::Strict => "strict",
            ImportanceRule::Lax => "lax",
        })
    }
}

impl FromStr for ImportanceRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "strict" => Ok(ImportanceRule::Strict),
            "lax" => Ok(ImportanceRule::Lax),
            other => Err(format!("unknown importance rule `{other}` (expected strict or lax)")),
        }
    }
}

// Sign matrices. The first balance contrasts the block of parts carried by
// the relevant balances with the rest; the relevant block is then split off
// one part at a time from the right, the noise block one part at a time from
// the left. The D = 10 tables are the published ones; D = 20 follows the
// same pattern.

const A10: [&str; 9] = [
    "+++++-----",
    "++++-00000",
    "+++-000000",
    "++-0000000",
    "+-00000000",
    "00000+----",
    "000000+---",
    "0000000+--",
    "00000000+-",
];

const B10: [&str; 9] = [
    "+++++++---",
    "++++++-000",
    "+++++-0000",
    "++++-00000",
    "+++-000000",
    "++-0000000",
    "+-00000000",
    "0000000+--",
    "00000000+-",
];

const C10: [&str; 9] = [
    "++--------",
    "+-00000000",
    "00+-------",
    "000+------",
    "0000+-----",
    "00000+----",
    "000000+---",
    "0000000+--",
    "00000000+-",
];

const A20: [&str; 19] = [
    "++++++++++----------",
    "+++++++++-0000000000",
    "++++++++-00000000000",
    "+++++++-000000000000",
    "++++++-0000000000000",
    "+++++-00000000000000",
    "++++-000000000000000",
    "+++-0000000000000000",
    "++-00000000000000000",
    "+-000000000000000000",
    "0000000000+---------",
    "00000000000+--------",
    "000000000000+-------",
    "0000000000000+------",
    "00000000000000+-----",
    "000000000000000+----",
    "0000000000000000+---",
    "00000000000000000+--",
    "000000000000000000+-",
];

const B20: [&str; 19] = [
    "+++++++++++++++-----",
    "++++++++++++++-00000",
    "+++++++++++++-000000",
    "++++++++++++-0000000",
    "+++++++++++-00000000",
    "++++++++++-000000000",
    "+++++++++-0000000000",
    "++++++++-00000000000",
    "+++++++-000000000000",
    "++++++-0000000000000",
    "+++++-00000000000000",
    "++++-000000000000000",
    "+++-0000000000000000",
    "++-00000000000000000",
    "+-000000000000000000",
    "000000000000000+----",
    "0000000000000000+---",
    "00000000000000000+--",
    "000000000000000000+-",
];

const C20: [&str; 19] = [
    "++++----------------",
    "+++-0000000000000000",
    "++-00000000000000000",
    "+-000000000000000000",
    "0000+---------------",
    "00000+--------------",
    "000000+-------------",
    "0000000+------------",
    "00000000+-----------",
    "000000000+----------",
    "0000000000+---------",
    "00000000000+--------",
    "000000000000+-------",
    "0000000000000+------",
    "00000000000000+-----",
    "000000000000000+----",
    "0000000000000000+---",
    "00000000000000000+--",
    "000000000000000000+-",
];

/// A simulation design: partition, and which balances (0-based) carry
/// structure and which are noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: ScenarioId,
    pub d: usize,
    pub sbp: SbpSignMatrix,
    pub relevant: Vec<usize>,
    pub noise: Vec<usize>,
    pub rho: f64,
    pub noise_bound: f64,
}

pub fn build_scenario(id: ScenarioId, d: usize) -> Result<Scenario> {
    let (rows, n_relevant): (&[&str], usize) = match (id, d) {
        (ScenarioId::A, 10) => (&A10, 5),
        (ScenarioId::B, 10) => (&B10, 7),
        (ScenarioId::C, 10) => (&C10, 2),
        (ScenarioId::A, 20) => (&A20, 10),
        (ScenarioId::B, 20) => (&B20, 15),
        (ScenarioId::C, 20) => (&C20, 4),
        _ => return Err(CodaError::UnsupportedDimension(d)),
    };
    let sbp = SbpSignMatrix::from_rows(rows)?;
    Ok(Scenario {
        id,
        d,
        sbp,
        relevant: (0..n_relevant).collect(),
        noise: (n_relevant..d - 1).collect(),
        rho: RELEVANT_CORRELATION,
        noise_bound: NOISE_BOUND,
    })
}

/// `n × (D-1)` balance coordinates: the relevant block from a zero-mean
/// equicorrelated normal (unit variances, correlation `rho`) through the
/// Cholesky factor of its correlation matrix, the noise block i.i.d.
/// uniform. Each row draws its relevant block first, then its noise block.
pub fn sample_balances<R: Rng + ?Sized>(sc: &Scenario, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let r = sc.relevant.len();
    let corr = DMatrix::from_fn(r, r, |i, j| if i == j { 1.0 } else { sc.rho });
    let chol = corr
        .cholesky()
        .ok_or_else(|| CodaError::InvalidConfig(format!("correlation {} is not positive definite", sc.rho)))?;
    let factor = chol.l();
    let uniform = Uniform::new_inclusive(-sc.noise_bound, sc.noise_bound)
        .map_err(|e| CodaError::InvalidConfig(e.to_string()))?;

    let mut out = DMatrix::zeros(n, sc.d - 1);
    for i in 0..n {
        let z = DVector::from_fn(r, |_, _| rng.sample::<f64, _>(StandardNormal));
        let correlated = &factor * z;
        for (slot, &b) in sc.relevant.iter().enumerate() {
            out[(i, b)] = correlated[slot];
        }
        for &b in &sc.noise {
            out[(i, b)] = rng.sample(uniform);
        }
    }
    Ok(out)
}

/// Simulated compositions for a scenario; deterministic given `seed`.
pub fn generate_dataset(sc: &Scenario, n: usize, seed: u64) -> Result<CompositionMatrix> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    generate_dataset_with(sc, n, &mut rng)
}

pub fn generate_dataset_with<R: Rng + ?Sized>(
    sc: &Scenario,
    n: usize,
    rng: &mut R,
) -> Result<CompositionMatrix> {
    if n < 2 {
        return Err(CodaError::DegenerateSample(n));
    }
    let balances = sample_balances(sc, n, rng)?;
    balances_to_composition(&balances, &sbp_to_contrast(&sc.sbp))
}

/// Logratios designated important for a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Sorted logratio columns.
    pub important: Vec<usize>,
    pub rule: ImportanceRule,
    /// Number of candidate logratios.
    pub m: usize,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.important.len()
    }

    pub fn is_empty(&self) -> bool {
        self.important.is_empty()
    }

    pub fn flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.m];
        for &c in &self.important {
            f[c] = true;
        }
        f
    }
}

/// A pair's logratio loads on balance `k` exactly when its two parts sit
/// in different positions of row `k` of the partition, i.e. when their
/// balance contrasts differ.
pub fn important_plrs(sc: &Scenario, rule: ImportanceRule) -> GroundTruth {
    let index = PairIndex::new(sc.d);
    let loads = |i: usize, j: usize, k: usize| sc.sbp.sign(k, i) != sc.sbp.sign(k, j);
    let important = index
        .pairs()
        .iter()
        .enumerate()
        .filter(|(_, &(i, j))| match rule {
            ImportanceRule::Strict => !sc.noise.iter().any(|&k| loads(i, j, k)),
            ImportanceRule::Lax => sc.relevant.iter().any(|&k| loads(i, j, k)),
        })
        .map(|(c, _)| c)
        .collect();
    GroundTruth {
        important,
        rule,
        m: index.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coda::composition_to_balances;

    #[test]
    fn table_rows() {
        let a = build_scenario(ScenarioId::A, 10).unwrap();
        assert_eq!(a.sbp.row(0), &[1, 1, 1, 1, 1, -1, -1, -1, -1, -1]);
        let c = build_scenario(ScenarioId::C, 10).unwrap();
        assert_eq!(c.relevant, vec![0, 1]);
        assert_eq!(c.noise, (2..9).collect::<Vec<_>>());
        for (id, d, r) in [
            (ScenarioId::A, 20, 10),
            (ScenarioId::B, 20, 15),
            (ScenarioId::C, 20, 4),
            (ScenarioId::B, 10, 7),
        ] {
            let s = build_scenario(id, d).unwrap();
            assert_eq!(s.relevant.len(), r);
            assert_eq!(s.relevant.len() + s.noise.len(), d - 1);
        }
        assert_eq!(
            build_scenario(ScenarioId::A, 12),
            Err(CodaError::UnsupportedDimension(12))
        );
    }

    #[test]
    fn strict_truth_sets() {
        let idx = PairIndex::new(10);
        let a = important_plrs(&build_scenario(ScenarioId::A, 10).unwrap(), ImportanceRule::Strict);
        assert_eq!(a.len(), 10);
        assert!(a.important.iter().all(|&c| {
            let (i, j) = idx.pair(c);
            i < 5 && j < 5
        }));
        let c = important_plrs(&build_scenario(ScenarioId::C, 10).unwrap(), ImportanceRule::Strict);
        assert_eq!(c.important, vec![idx.position(0, 1).unwrap()]);
        let b = important_plrs(&build_scenario(ScenarioId::B, 10).unwrap(), ImportanceRule::Strict);
        assert_eq!(b.len(), 21);
    }

    #[test]
    fn lax_truth_is_a_superset() {
        for id in ScenarioId::ALL {
            let sc = build_scenario(id, 10).unwrap();
            let strict = important_plrs(&sc, ImportanceRule::Strict);
            let lax = important_plrs(&sc, ImportanceRule::Lax);
            assert!(strict.important.iter().all(|c| lax.important.contains(c)));
        }
        let a = important_plrs(&build_scenario(ScenarioId::A, 10).unwrap(), ImportanceRule::Lax);
        assert_eq!(a.len(), 35);
    }

    #[test]
    fn generated_data_round_trips_through_balances() {
        let sc = build_scenario(ScenarioId::B, 10).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let b = sample_balances(&sc, 50, &mut rng).unwrap();
        let v = sbp_to_contrast(&sc.sbp);
        let x = balances_to_composition(&b, &v).unwrap();
        let back = composition_to_balances(&x, &v).unwrap();
        assert!((back - b).abs().max() < 1e-10);
    }

    #[test]
    fn generation_is_seeded() {
        let sc = build_scenario(ScenarioId::A, 10).unwrap();
        let x1 = generate_dataset(&sc, 20, 9).unwrap();
        let x2 = generate_dataset(&sc, 20, 9).unwrap();
        let x3 = generate_dataset(&sc, 20, 10).unwrap();
        assert_eq!(x1, x2);
        assert_ne!(x1, x3);
        assert!(generate_dataset(&sc, 1, 9).is_err());
    }

    #[test]
    fn parse_ids_and_rules() {
        assert_eq!("b".parse::<ScenarioId>().unwrap(), ScenarioId::B);
        assert!("D".parse::<ScenarioId>().is_err());
        assert_eq!("lax".parse::<ImportanceRule>().unwrap(), ImportanceRule::Lax);
        assert!("loose".parse::<ImportanceRule>().is_err());
    }
}
