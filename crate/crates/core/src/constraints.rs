//! Projections onto the non-convex constraint sets used by both solvers:
//! k-sparse vectors, block-sparse vectors and finite unions of subspaces.
//!
//! All three sets admit exact nearest-point projections, computed here with
//! deterministic tie-breaking so solver traces are reproducible.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::signal::{ensure_finite, Signal};

/// Maximum allowed deviation of a basis Gram matrix from the identity.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Slack allowed in the squared projection distance.
///
/// The built-in sets all attain the infimum, so their slack is zero. The
/// type exists so approximate projectors can be added later without touching
/// the solver API.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionSlack {
    epsilon: f64,
}

impl ProjectionSlack {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::InvalidInput(
                "projection slack must be finite and >= 0".into(),
            ));
        }
        Ok(Self { epsilon })
    }

    pub fn exact() -> Self {
        Self { epsilon: 0.0 }
    }

    pub fn epsilon(self) -> f64 {
        self.epsilon
    }
}

impl Default for ProjectionSlack {
    fn default() -> Self {
        Self::exact()
    }
}

/// Which atoms of a constraint set an iterate occupies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActiveSet {
    /// Kept coordinate indices, ascending.
    Support(Vec<usize>),
    /// Kept block indices, ascending.
    Blocks(Vec<usize>),
    /// Index of the selected subspace.
    Subspace(usize),
}

impl std::fmt::Display for ActiveSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ActiveSet::Support(idx) => {
                for (i, v) in idx.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            ActiveSet::Blocks(idx) => {
                write!(f, "b:")?;
                for (i, v) in idx.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            ActiveSet::Subspace(i) => write!(f, "u:{i}"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum ConstraintKind {
    /// Vectors of length `dim` with at most `k` non-zero entries.
    KSparse { dim: usize, k: usize },
    /// At most `k_blocks` of the given blocks active. The blocks partition
    /// the index set `0..dim` exactly.
    BlockSparse {
        dim: usize,
        blocks: Vec<Vec<usize>>,
        k_blocks: usize,
    },
    /// Finite union of subspaces, each described by an orthonormal basis
    /// (`dim × d_i` matrix).
    UnionOfSubspaces { bases: Vec<DMatrix<f64>> },
}

/// A validated constraint set with an exact projection rule.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    kind: ConstraintKind,
}

impl ConstraintSet {
    pub fn k_sparse(dim: usize, k: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        if k == 0 || k > dim {
            return Err(Error::InvalidInput(format!(
                "sparsity k={k} must satisfy 1 <= k <= {dim}"
            )));
        }
        Ok(Self {
            kind: ConstraintKind::KSparse { dim, k },
        })
    }

    pub fn block_sparse(blocks: Vec<Vec<usize>>, k_blocks: usize) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("block list must be non-empty".into()));
        }
        if k_blocks == 0 || k_blocks > blocks.len() {
            return Err(Error::InvalidInput(format!(
                "k_blocks={k_blocks} must satisfy 1 <= k_blocks <= {}",
                blocks.len()
            )));
        }
        let dim: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = vec![false; dim];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidInput("blocks must be non-empty".into()));
            }
            for &i in block {
                if i >= dim || seen[i] {
                    return Err(Error::InvalidInput(
                        "blocks must partition the index set exactly".into(),
                    ));
                }
                seen[i] = true;
            }
        }
        Ok(Self {
            kind: ConstraintKind::BlockSparse {
                dim,
                blocks,
                k_blocks,
            },
        })
    }

    pub fn union_of_subspaces(bases: Vec<DMatrix<f64>>) -> Result<Self> {
        validate_bases(&bases)?;
        Ok(Self {
            kind: ConstraintKind::UnionOfSubspaces { bases },
        })
    }

    pub fn kind(&self) -> &ConstraintKind {
        &self.kind
    }

    /// Ambient dimension N.
    pub fn dim(&self) -> usize {
        match &self.kind {
            ConstraintKind::KSparse { dim, .. } => *dim,
            ConstraintKind::BlockSparse { dim, .. } => *dim,
            ConstraintKind::UnionOfSubspaces { bases } => bases[0].nrows(),
        }
    }

    /// Built-in sets project exactly.
    pub fn slack(&self) -> ProjectionSlack {
        ProjectionSlack::exact()
    }

    /// Short descriptor used in reports.
    pub fn description(&self) -> String {
        match &self.kind {
            ConstraintKind::KSparse { dim, k } => format!("ksparse(dim={dim},k={k})"),
            ConstraintKind::BlockSparse {
                dim,
                blocks,
                k_blocks,
            } => format!(
                "blocksparse(dim={dim},blocks={},k_blocks={k_blocks})",
                blocks.len()
            ),
            ConstraintKind::UnionOfSubspaces { bases } => format!(
                "union(dim={},subspaces={})",
                bases[0].nrows(),
                bases.len()
            ),
        }
    }
}

fn validate_bases(bases: &[DMatrix<f64>]) -> Result<()> {
    if bases.is_empty() {
        return Err(Error::InvalidInput("subspace list must be non-empty".into()));
    }
    let dim = bases[0].nrows();
    if dim == 0 {
        return Err(Error::InvalidInput("ambient dimension must be >= 1".into()));
    }
    for (i, basis) in bases.iter().enumerate() {
        if basis.nrows() != dim {
            return Err(Error::InvalidInput(format!(
                "basis {i} has {} rows, expected {dim}",
                basis.nrows()
            )));
        }
        if basis.ncols() == 0 || basis.ncols() > dim {
            return Err(Error::InvalidInput(format!(
                "basis {i} must have between 1 and {dim} columns"
            )));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "basis {i} contains a non-finite entry"
            )));
        }
        let gram = basis.tr_mul(basis);
        let deviation = (gram - DMatrix::identity(basis.ncols(), basis.ncols())).amax();
        if deviation > ORTHONORMALITY_TOL {
            return Err(Error::InvalidInput(format!(
                "basis {i} is not orthonormal (Gram deviation {deviation:.2e})"
            )));
        }
    }
    Ok(())
}

/// Nearest point of the constraint set, together with the atoms it occupies.
pub fn project_with_active_set(x: &Signal, set: &ConstraintSet) -> Result<(Signal, ActiveSet)> {
    ensure_finite("x", x)?;
    if x.len() != set.dim() {
        return Err(Error::InvalidInput(format!(
            "signal has length {}, constraint set expects {}",
            x.len(),
            set.dim()
        )));
    }
    match set.kind() {
        ConstraintKind::KSparse { k, .. } => Ok(project_k_sparse(x, *k)),
        ConstraintKind::BlockSparse {
            blocks, k_blocks, ..
        } => Ok(project_block_sparse(x, blocks, *k_blocks)),
        ConstraintKind::UnionOfSubspaces { bases } => {
            let (projected, index) = union_projection(x, bases);
            Ok((projected, ActiveSet::Subspace(index)))
        }
    }
}

/// Nearest point of the constraint set.
pub fn project(x: &Signal, set: &ConstraintSet) -> Result<Signal> {
    project_with_active_set(x, set).map(|(p, _)| p)
}

/// Orthogonal projection onto the closest subspace of the union, ties broken
/// by the lowest subspace index. Validates the bases on every call; inside a
/// solver loop use a [`ConstraintSet`], which validates once.
pub fn project_union(x: &Signal, bases: &[DMatrix<f64>]) -> Result<Signal> {
    validate_bases(bases)?;
    ensure_finite("x", x)?;
    if x.len() != bases[0].nrows() {
        return Err(Error::InvalidInput(format!(
            "signal has length {}, bases expect {}",
            x.len(),
            bases[0].nrows()
        )));
    }
    Ok(union_projection(x, bases).0)
}

/// Euclidean distance from `x` to the set; zero exactly when `x` is a member
/// (up to roundoff in the subspace case).
pub fn distance_to_set(x: &Signal, set: &ConstraintSet) -> Result<f64> {
    let projected = project(x, set)?;
    Ok((x - projected).norm())
}

fn project_k_sparse(x: &Signal, k: usize) -> (Signal, ActiveSet) {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Descending magnitude; equal magnitudes keep the lower index.
    order.sort_by(|&a, &b| {
        x[b].abs()
            .partial_cmp(&x[a].abs())
            .expect("entries are finite")
            .then(a.cmp(&b))
    });
    let mut kept = order[..k].to_vec();
    kept.sort_unstable();
    let mut out = Signal::zeros(n);
    for &i in &kept {
        out[i] = x[i];
    }
    (out, ActiveSet::Support(kept))
}

fn project_block_sparse(x: &Signal, blocks: &[Vec<usize>], k_blocks: usize) -> (Signal, ActiveSet) {
    let energies: Vec<f64> = blocks
        .iter()
        .map(|block| block.iter().map(|&i| x[i] * x[i]).sum::<f64>())
        .collect();
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_by(|&a, &b| {
        energies[b]
            .partial_cmp(&energies[a])
            .expect("entries are finite")
            .then(a.cmp(&b))
    });
    let mut kept = order[..k_blocks].to_vec();
    kept.sort_unstable();
    let mut out = Signal::zeros(x.len());
    for &b in &kept {
        for &i in &blocks[b] {
            out[i] = x[i];
        }
    }
    (out, ActiveSet::Blocks(kept))
}

fn union_projection(x: &Signal, bases: &[DMatrix<f64>]) -> (Signal, usize) {
    let mut best: Option<(f64, usize, Signal)> = None;
    for (i, basis) in bases.iter().enumerate() {
        let coefficients = basis.tr_mul(x);
        let projected = basis * coefficients;
        let residual = (x - &projected).norm_squared();
        // Strict comparison keeps the first (lowest-index) minimiser.
        if best.as_ref().map_or(true, |(r, _, _)| residual < *r) {
            best = Some((residual, i, projected));
        }
    }
    let (_, index, projected) = best.expect("bases list is non-empty");
    (projected, index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn sig(values: &[f64]) -> Signal {
        DVector::from_column_slice(values)
    }

    #[test]
    fn k_sparse_keeps_largest_magnitudes() {
        let set = ConstraintSet::k_sparse(3, 2).unwrap();
        let p = project(&sig(&[3.0, -1.0, 2.0]), &set).unwrap();
        assert_eq!(p, sig(&[3.0, 0.0, 2.0]));
    }

    #[test]
    fn zero_is_already_sparse() {
        let set = ConstraintSet::k_sparse(3, 1).unwrap();
        let p = project(&sig(&[0.0, 0.0, 0.0]), &set).unwrap();
        assert_eq!(p, sig(&[0.0, 0.0, 0.0]));
    }

    #[test]
    fn magnitude_tie_keeps_lower_index() {
        let set = ConstraintSet::k_sparse(2, 1).unwrap();
        let p = project(&sig(&[1.0, -1.0]), &set).unwrap();
        assert_eq!(p, sig(&[1.0, 0.0]));
    }

    #[test]
    fn block_projection_selects_highest_energy_block() {
        let set = ConstraintSet::block_sparse(vec![vec![0, 1], vec![2, 3]], 1).unwrap();
        let p = project(&sig(&[1.0, 2.0, 3.0, 4.0]), &set).unwrap();
        // Block energies 5 vs 25; brute force over both blocks agrees.
        assert_eq!(p, sig(&[0.0, 0.0, 3.0, 4.0]));
    }

    #[test]
    fn union_projection_examples() {
        let e1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let e2 = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let bases = vec![e1, e2];

        let p = project_union(&sig(&[1.0, 0.0]), &bases).unwrap();
        assert_eq!(p, sig(&[1.0, 0.0]));

        // Equal distances: lowest-index subspace wins.
        let p = project_union(&sig(&[1.0, 1.0]), &bases).unwrap();
        assert_eq!(p, sig(&[1.0, 0.0]));

        let span12 = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let span3 = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]);
        let p = project_union(&sig(&[1.0, 2.0, 0.0]), &[span12, span3]).unwrap();
        assert_eq!(p, sig(&[1.0, 2.0, 0.0]));
    }

    #[test]
    fn empty_basis_list_is_rejected() {
        assert!(matches!(
            project_union(&sig(&[1.0]), &[]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn non_orthonormal_basis_is_rejected() {
        let bad = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        assert!(ConstraintSet::union_of_subspaces(vec![bad]).is_err());
    }

    #[test]
    fn distance_examples() {
        let set = ConstraintSet::k_sparse(3, 2).unwrap();
        let d = distance_to_set(&sig(&[3.0, -1.0, 2.0]), &set).unwrap();
        assert!((d - 1.0).abs() < 1e-15);

        let set = ConstraintSet::k_sparse(2, 1).unwrap();
        let d = distance_to_set(&sig(&[1.0, 1.0]), &set).unwrap();
        assert!((d - 1.0).abs() < 1e-15);

        // Membership: a 2-sparse vector has distance zero.
        let set = ConstraintSet::k_sparse(4, 2).unwrap();
        let d = distance_to_set(&sig(&[0.0, 5.0, 0.0, -2.0]), &set).unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_invalid_input() {
        let set = ConstraintSet::k_sparse(3, 2).unwrap();
        assert!(matches!(
            project(&sig(&[1.0, 2.0]), &set),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn block_partition_must_be_exact() {
        assert!(ConstraintSet::block_sparse(vec![vec![0, 1], vec![1, 2]], 1).is_err());
        assert!(ConstraintSet::block_sparse(vec![vec![0, 2]], 1).is_err());
        assert!(ConstraintSet::block_sparse(vec![], 1).is_err());
    }

    #[test]
    fn invalid_sparsity_is_rejected() {
        assert!(ConstraintSet::k_sparse(3, 0).is_err());
        assert!(ConstraintSet::k_sparse(3, 4).is_err());
        assert!(ProjectionSlack::new(-1.0).is_err());
        assert_eq!(ProjectionSlack::default().epsilon(), 0.0);
    }

    #[test]
    fn union_matches_exhaustive_per_subspace_minimum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 6;
        let bases: Vec<DMatrix<f64>> = (0..16)
            .map(|_| {
                let cols = rng.gen_range(1..=3);
                let raw = DMatrix::from_fn(n, cols, |_, _| {
                    rng.sample::<f64, _>(rand_distr::StandardNormal)
                });
                let qr = raw.qr();
                qr.q()
            })
            .collect();
        let set = ConstraintSet::union_of_subspaces(bases.clone()).unwrap();
        for _ in 0..20 {
            let x = Signal::from_fn(n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let (p, active) = project_with_active_set(&x, &set).unwrap();
            // Exhaustive comparison of per-subspace residuals.
            let residuals: Vec<f64> = bases
                .iter()
                .map(|b| (&x - b * b.tr_mul(&x)).norm_squared())
                .collect();
            let best = residuals
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(((&x - &p).norm_squared() - best).abs() < 1e-12);
            if let ActiveSet::Subspace(i) = active {
                assert!(residuals[i] <= best + 1e-12);
            } else {
                panic!("union projection must report a subspace");
            }
        }
    }

    #[test]
    fn active_set_formatting() {
        assert_eq!(ActiveSet::Support(vec![0, 3, 7]).to_string(), "0|3|7");
        assert_eq!(ActiveSet::Blocks(vec![1, 2]).to_string(), "b:1|2");
        assert_eq!(ActiveSet::Subspace(4).to_string(), "u:4");
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(
            values in prop::collection::vec(-100.0f64..100.0, 1..16),
            k_raw in 0usize..16,
        ) {
            let k = 1 + k_raw % values.len();
            let set = ConstraintSet::k_sparse(values.len(), k).unwrap();
            let x = sig(&values);
            let once = project(&x, &set).unwrap();
            let twice = project(&once, &set).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn projection_attains_enumerated_minimum(
            values in prop::collection::vec(-10.0f64..10.0, 2..13),
            k_raw in 0usize..13,
        ) {
            let n = values.len();
            let k = 1 + k_raw % n;
            let set = ConstraintSet::k_sparse(n, k).unwrap();
            let x = sig(&values);
            let projected = project(&x, &set).unwrap();
            let achieved = (&x - projected).norm_squared();
            // Oracle: enumerate every support of size k; optimal coefficients
            // on a support are the entries themselves.
            let best = (0..n)
                .combinations(k)
                .map(|support| {
                    let mut kept = Signal::zeros(n);
                    for &i in &support {
                        kept[i] = x[i];
                    }
                    (&x - kept).norm_squared()
                })
                .fold(f64::INFINITY, f64::min);
            prop_assert!((achieved - best).abs() <= 1e-12);
        }

        #[test]
        fn members_are_fixed_points(
            values in prop::collection::vec(-100.0f64..100.0, 1..16),
            k_raw in 0usize..16,
        ) {
            let n = values.len();
            let k = 1 + k_raw % n;
            // Build a member: keep only the first k coordinates.
            let mut member = Signal::zeros(n);
            for i in 0..k {
                member[i] = values[i];
            }
            let set = ConstraintSet::k_sparse(n, k).unwrap();
            let p = project(&member, &set).unwrap();
            prop_assert_eq!(p, member);
        }
    }
}
