//! Randomized single-qubit measurements ("classical shadows") and the
//! unbiased state-overlap kernel they induce.
//!
//! Each snapshot draws an independent uniform basis from {X, Y, Z} per
//! qubit, measures the state once, and stores a (basis, bit) pair per qubit.
//! For two *independent* snapshots the inverted measurement channel gives a
//! per-qubit factor
//!
//! ```text
//! tr[(3|a⟩⟨a|−I)(3|b⟩⟨b|−I)] =  5    same basis, same bit
//!                              −4    same basis, different bit
//!                               0.5  different bases
//! ```
//!
//! whose product across qubits is an unbiased one-pair estimate of
//! tr(ρ_a ρ_b). `K_ij` averages this over all snapshot pairs of samples i
//! and j; the diagonal averages over *distinct* snapshot pairs only (a
//! U-statistic), because a snapshot paired with itself is biased. The
//! normalized kernel `K̃_ij = K_ij/√(K_ii K_jj)` then has a unit diagonal by
//! construction. At small snapshot counts a purity estimate `K_ii` can come
//! out nonpositive; such samples have no real normalization scale, so they
//! are excluded and reported instead of silently clamped.

use std::collections::HashMap;

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::statevector::{Circuit, Gate, StateVector};

/// Measurement basis tag of one qubit in one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasBasis {
    X,
    Y,
    Z,
}

/// One randomized measurement: a basis tag and an outcome bit per qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub bases: Vec<MeasBasis>,
    pub bits: Vec<bool>,
}

/// All snapshots collected from one state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShadowSet {
    pub n_qubits: usize,
    pub snapshots: Vec<Snapshot>,
}

/// Collect `n_snapshots` randomized measurements of `state`.
///
/// Per snapshot the generator is consumed in a fixed order: one basis draw
/// per qubit (ascending), then the measurement itself, so a seeded run is
/// reproducible.
pub fn shadow_collect<R: Rng + ?Sized>(
    state: &StateVector,
    n_snapshots: usize,
    rng: &mut R,
) -> Result<ShadowSet> {
    if n_snapshots == 0 {
        return Err(Error::ZeroShots);
    }
    let n = state.n_qubits();
    let mut snapshots = Vec::with_capacity(n_snapshots);
    for _ in 0..n_snapshots {
        let bases: Vec<MeasBasis> = (0..n)
            .map(|_| match rng.gen_range(0..3u8) {
                0 => MeasBasis::X,
                1 => MeasBasis::Y,
                _ => MeasBasis::Z,
            })
            .collect();
        let mut rotate = Circuit::new(n);
        for (q, basis) in bases.iter().enumerate() {
            match basis {
                MeasBasis::X => {
                    rotate.push(Gate::H(q));
                }
                MeasBasis::Y => {
                    // S† then H maps the Y eigenbasis onto the Z basis.
                    rotate.push(Gate::Rz(q, -std::f64::consts::FRAC_PI_2));
                    rotate.push(Gate::H(q));
                }
                MeasBasis::Z => {}
            }
        }
        let rotated = state.run_circuit(&rotate)?;
        let bits = rotated
            .sample_counts(1, rng)?
            .z_estimates()
            .iter()
            .map(|&z| z < 0.0)
            .collect();
        snapshots.push(Snapshot { bases, bits });
    }
    Ok(ShadowSet {
        n_qubits: n,
        snapshots,
    })
}

/// Overlap-kernel estimate over a batch of shadow sets.
#[derive(Debug, Clone)]
pub struct GramEstimate {
    /// `K̃` over the retained samples: symmetric, diagonal exactly 1.
    pub normalized: Array2<f64>,
    /// Unbiased `tr(ρ_i ρ_j)` estimates over the retained samples.
    pub raw: Array2<f64>,
    /// Original sample indices behind the matrix rows.
    pub retained: Vec<usize>,
    /// Samples dropped for nonpositive purity estimates.
    pub excluded: Vec<usize>,
}

/// Pack a snapshot into 3 bits per qubit: basis tag (2 bits) and outcome.
fn pack(snapshot: &Snapshot) -> u64 {
    let mut key = 0u64;
    for (q, (basis, &bit)) in snapshot.bases.iter().zip(&snapshot.bits).enumerate() {
        let tag = match basis {
            MeasBasis::X => 0u64,
            MeasBasis::Y => 1,
            MeasBasis::Z => 2,
        };
        key |= (tag << 1 | u64::from(bit)) << (3 * q);
    }
    key
}

/// Distinct snapshot types with multiplicities, sorted by key so every
/// accumulation below runs in a fixed order.
fn type_counts(set: &ShadowSet) -> Vec<(u64, f64)> {
    let mut map: HashMap<u64, u64> = HashMap::new();
    for snapshot in &set.snapshots {
        *map.entry(pack(snapshot)).or_insert(0) += 1;
    }
    let mut counts: Vec<(u64, f64)> = map.into_iter().map(|(k, c)| (k, c as f64)).collect();
    counts.sort_unstable_by_key(|&(k, _)| k);
    counts
}

/// Product of per-qubit channel-inversion factors for one snapshot pair.
fn pair_factor(ka: u64, kb: u64, n_qubits: usize) -> f64 {
    let mut product = 1.0;
    for q in 0..n_qubits {
        let ea = (ka >> (3 * q)) & 7;
        let eb = (kb >> (3 * q)) & 7;
        product *= if ea >> 1 != eb >> 1 {
            0.5
        } else if ea == eb {
            5.0
        } else {
            -4.0
        };
    }
    product
}

/// Σ over all snapshot pairs of the factor product, counted with type
/// multiplicities.
fn pair_sum(a: &[(u64, f64)], b: &[(u64, f64)], n_qubits: usize) -> f64 {
    let mut total = 0.0;
    for &(ka, ca) in a {
        let mut row = 0.0;
        for &(kb, cb) in b {
            row += cb * pair_factor(ka, kb, n_qubits);
        }
        total += ca * row;
    }
    total
}

/// Unbiased overlap kernel of the batch, with nonpositive-purity samples
/// excluded (listed in the result) rather than normalized by an imaginary
/// scale. All sets must share the qubit count and snapshot count, and at
/// least two snapshots per set are needed for the diagonal U-statistic.
pub fn shadow_gram(sets: &[ShadowSet]) -> Result<GramEstimate> {
    if sets.is_empty() {
        return Err(Error::Config("shadow gram needs at least one sample".into()));
    }
    let n_qubits = sets[0].n_qubits;
    let count = sets[0].snapshots.len();
    for set in sets {
        if set.n_qubits != n_qubits {
            return Err(Error::Dimension {
                context: "shadow qubit count",
                expected: n_qubits,
                actual: set.n_qubits,
            });
        }
        if set.snapshots.len() != count {
            return Err(Error::Dimension {
                context: "snapshot count",
                expected: count,
                actual: set.snapshots.len(),
            });
        }
        for snapshot in &set.snapshots {
            if snapshot.bases.len() != n_qubits || snapshot.bits.len() != n_qubits {
                return Err(Error::Dimension {
                    context: "snapshot width",
                    expected: n_qubits,
                    actual: snapshot.bases.len().min(snapshot.bits.len()),
                });
            }
        }
    }
    if count < 2 {
        return Err(Error::Config(
            "purity estimation needs at least two snapshots per sample".into(),
        ));
    }

    let types: Vec<Vec<(u64, f64)>> = sets.iter().map(type_counts).collect();
    let nf = count as f64;
    // A snapshot against itself always scores 5 per qubit; removing those
    // terms leaves the distinct-pair (unbiased) diagonal sum.
    let self_term = nf * 5f64.powi(n_qubits as i32);
    let purity: Vec<f64> = types
        .iter()
        .map(|t| (pair_sum(t, t, n_qubits) - self_term) / (nf * (nf - 1.0)))
        .collect();

    let (mut retained, mut excluded) = (Vec::new(), Vec::new());
    for (i, &p) in purity.iter().enumerate() {
        if p > 0.0 {
            retained.push(i);
        } else {
            excluded.push(i);
        }
    }
    if retained.is_empty() {
        return Err(Error::Numeric(format!(
            "all {} samples have nonpositive purity estimates; increase the snapshot count",
            sets.len()
        )));
    }

    let m = retained.len();
    let mut raw = Array2::zeros((m, m));
    for (a, &i) in retained.iter().enumerate() {
        raw[[a, a]] = purity[i];
        for (b, &j) in retained.iter().enumerate().skip(a + 1) {
            let k = pair_sum(&types[i], &types[j], n_qubits) / (nf * nf);
            raw[[a, b]] = k;
            raw[[b, a]] = k;
        }
    }
    let scale: Vec<f64> = retained.iter().map(|&i| purity[i].sqrt()).collect();
    let mut normalized = Array2::zeros((m, m));
    for a in 0..m {
        normalized[[a, a]] = 1.0;
        for b in a + 1..m {
            let v = raw[[a, b]] / (scale[a] * scale[b]);
            normalized[[a, b]] = v;
            normalized[[b, a]] = v;
        }
    }
    Ok(GramEstimate {
        normalized,
        raw,
        retained,
        excluded,
    })
}
