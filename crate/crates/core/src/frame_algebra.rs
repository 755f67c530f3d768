//! Dense multilinear algebra over a fixed frame.
//!
//! All components live in the working frame `{e_0, ..., e_{dim-1}}` of a model,
//! never in coordinates. Rank-2 and rank-1 objects that act as linear maps
//! (metrics, endomorphisms, vectors) are plain `nalgebra` matrices; higher-rank
//! arrays use [`FrameTensor`].

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};

/// Determinant threshold below which a metric is treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Symmetry tolerance for metric components.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Index position of a tensor slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Covariant,
    Contravariant,
}

/// Signs `ε_i = sign g(e_i, e_i)` of an adapted orthonormal frame
/// `{ξ, e_1..e_n, φe_1..φe_n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    epsilons: Vec<i8>,
}

impl Signature {
    /// `ε_0 = .. = ε_n = +1`, `ε_{n+1} = .. = ε_{2n} = -1`.
    pub fn standard(n: usize) -> Self {
        let mut epsilons = vec![1i8; n + 1];
        epsilons.extend(std::iter::repeat_n(-1i8, n));
        Signature { epsilons }
    }

    pub fn new(epsilons: Vec<i8>) -> Result<Self> {
        let dim = epsilons.len();
        if dim.is_multiple_of(2) {
            return Err(GeometryError::BadParams(format!(
                "signature length {dim} must be odd"
            )));
        }
        let n = dim / 2;
        let pos = epsilons.iter().filter(|&&e| e == 1).count();
        let neg = epsilons.iter().filter(|&&e| e == -1).count();
        if pos != n + 1 || neg != n || epsilons[0] != 1 {
            return Err(GeometryError::BadSignature {
                pos,
                neg,
                want_pos: n + 1,
                want_neg: n,
            });
        }
        Ok(Signature { epsilons })
    }

    pub fn dim(&self) -> usize {
        self.epsilons.len()
    }

    pub fn epsilon(&self, i: usize) -> f64 {
        f64::from(self.epsilons[i])
    }

    pub fn epsilons(&self) -> &[i8] {
        &self.epsilons
    }
}

/// Symmetric nondegenerate frame metric with its cached inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    components: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl MetricMatrix {
    pub fn new(components: DMatrix<f64>) -> Result<Self> {
        if components.nrows() != components.ncols() {
            return Err(GeometryError::DimMismatch {
                left: components.nrows(),
                right: components.ncols(),
            });
        }
        let defect = (&components - components.transpose()).amax();
        if defect > SYMMETRY_TOLERANCE * components.amax().max(1.0) {
            return Err(GeometryError::NotSymmetric { defect });
        }
        let lu = components.clone().lu();
        let det = lu.determinant();
        if det.abs() <= DEGENERACY_THRESHOLD || !det.is_finite() {
            return Err(GeometryError::DegenerateMetric { det });
        }
        let inverse = lu
            .try_inverse()
            .ok_or(GeometryError::DegenerateMetric { det })?;
        Ok(MetricMatrix {
            components,
            inverse,
        })
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn inverse_components(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.components[(i, j)]
    }

    /// `g(x, y)` for frame-component vectors.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.components * y))
    }

    /// Lowers a vector: `x ↦ g(x, ·)`.
    pub fn lower(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.components * x
    }

    /// Raises a covector: `α ↦ g^{-1} α`.
    pub fn raise(&self, alpha: &DVector<f64>) -> DVector<f64> {
        &self.inverse * alpha
    }

    /// Numbers of positive and negative eigenvalues.
    pub fn signature_counts(&self) -> (usize, usize) {
        let eig = self.components.clone().symmetric_eigen();
        let pos = eig.eigenvalues.iter().filter(|&&l| l > 0.0).count();
        (pos, self.dim() - pos)
    }

    pub fn expect_signature(&self, pos: usize, neg: usize) -> Result<()> {
        let (p, q) = self.signature_counts();
        if p == pos && q == neg {
            Ok(())
        } else {
            Err(GeometryError::BadSignature {
                pos: p,
                neg: q,
                want_pos: pos,
                want_neg: neg,
            })
        }
    }

    pub fn as_tensor(&self) -> FrameTensor {
        FrameTensor::from_matrix(&self.components)
    }
}

/// Returns the inverse metric `g^{ij}` as a metric in its own right.
pub fn metric_inverse(m: &MetricMatrix) -> Result<MetricMatrix> {
    MetricMatrix::new(m.inverse.clone())
}

/// Dense array of frame components `T_{i_0 .. i_{r-1}}`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTensor {
    dim: usize,
    valence: Vec<Slot>,
    components: Vec<f64>,
}

impl FrameTensor {
    pub fn zeros(dim: usize, valence: Vec<Slot>) -> Self {
        let len = dim.pow(valence.len() as u32);
        FrameTensor {
            dim,
            valence,
            components: vec![0.0; len],
        }
    }

    pub fn covariant(dim: usize, rank: usize) -> Self {
        Self::zeros(dim, vec![Slot::Covariant; rank])
    }

    pub fn from_fn(dim: usize, valence: Vec<Slot>, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(dim, valence);
        let rank = t.rank();
        for (flat, idx) in MultiIndex::new(dim, rank).enumerate() {
            t.components[flat] = f(&idx);
        }
        t
    }

    pub fn covariant_from_fn(dim: usize, rank: usize, f: impl FnMut(&[usize]) -> f64) -> Self {
        Self::from_fn(dim, vec![Slot::Covariant; rank], f)
    }

    pub fn from_components(dim: usize, valence: Vec<Slot>, components: Vec<f64>) -> Result<Self> {
        let len = dim.pow(valence.len() as u32);
        if components.len() != len {
            return Err(GeometryError::DimMismatch {
                left: components.len(),
                right: len,
            });
        }
        Ok(FrameTensor {
            dim,
            valence,
            components,
        })
    }

    /// Covariant rank-2 tensor from a matrix, `T_{ij} = m[(i, j)]`.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let dim = m.nrows();
        Self::covariant_from_fn(dim, 2, |ix| m[(ix[0], ix[1])])
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.rank(), 2, "to_matrix needs a rank-2 tensor");
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(&[i, j]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.valence.len()
    }

    pub fn valence(&self) -> &[Slot] {
        &self.valence
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.components[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.components[o] = value;
    }

    pub fn add_to(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.components[o] += value;
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn check_same_shape(&self, other: &FrameTensor) -> Result<()> {
        if self.dim != other.dim {
            return Err(GeometryError::DimMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        if self.rank() != other.rank() {
            return Err(GeometryError::DimMismatch {
                left: self.rank(),
                right: other.rank(),
            });
        }
        Ok(())
    }

    pub fn sub(&self, other: &FrameTensor) -> Result<FrameTensor> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &FrameTensor) -> Result<FrameTensor> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &FrameTensor, f: impl Fn(f64, f64) -> f64) -> Result<FrameTensor> {
        self.check_same_shape(other)?;
        Ok(FrameTensor {
            dim: self.dim,
            valence: self.valence.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, s: f64) -> FrameTensor {
        FrameTensor {
            dim: self.dim,
            valence: self.valence.clone(),
            components: self.components.iter().map(|x| x * s).collect(),
        }
    }

    /// Largest componentwise difference to `other`.
    pub fn max_diff(&self, other: &FrameTensor) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// Substitutes a linear map into one slot:
    /// `T'(.., e_i, ..) = T(.., A e_i, ..) = Σ_a A[(a, i)] T(.., e_a, ..)`.
    pub fn map_slot(&self, slot: usize, a: &DMatrix<f64>) -> FrameTensor {
        let rank = self.rank();
        let dim = self.dim;
        let mut idx_src = vec![0usize; rank];
        FrameTensor::from_fn(dim, self.valence.clone(), |idx| {
            idx_src.copy_from_slice(idx);
            let i = idx[slot];
            let mut acc = 0.0;
            for k in 0..dim {
                let coef = a[(k, i)];
                if coef != 0.0 {
                    idx_src[slot] = k;
                    acc += coef * self.get(&idx_src);
                }
            }
            acc
        })
    }

    /// Feeds a fixed vector into one slot, lowering the rank by one.
    pub fn insert_vector(&self, slot: usize, v: &DVector<f64>) -> FrameTensor {
        let rank = self.rank();
        let dim = self.dim;
        let mut valence = self.valence.clone();
        valence.remove(slot);
        let mut full = vec![0usize; rank];
        FrameTensor::from_fn(dim, valence, |idx| {
            full[..slot].copy_from_slice(&idx[..slot]);
            full[slot + 1..].copy_from_slice(&idx[slot..]);
            let mut acc = 0.0;
            for (k, &c) in v.iter().enumerate() {
                if c != 0.0 {
                    full[slot] = k;
                    acc += c * self.get(&full);
                }
            }
            acc
        })
    }

    /// Slot permutation: `result[i_0, .., i_{r-1}] = self[i_{perm[0]}, .., i_{perm[r-1]}]`.
    pub fn permute(&self, perm: &[usize]) -> FrameTensor {
        assert_eq!(perm.len(), self.rank());
        let mut src = vec![0usize; self.rank()];
        let valence = perm.iter().map(|&p| self.valence[p]).collect();
        FrameTensor::from_fn(self.dim, valence, |idx| {
            for (s, &p) in src.iter_mut().zip(perm) {
                *s = idx[p];
            }
            self.get(&src)
        })
    }

    /// Full multilinear evaluation on frame-component vectors.
    pub fn eval(&self, args: &[&DVector<f64>]) -> f64 {
        assert_eq!(args.len(), self.rank());
        MultiIndex::new(self.dim, self.rank())
            .zip(&self.components)
            .map(|(idx, &c)| {
                if c == 0.0 {
                    0.0
                } else {
                    c * idx.iter().zip(args).map(|(&i, v)| v[i]).product::<f64>()
                }
            })
            .sum()
    }

    /// Largest defect of `T(.., x, .., y, ..) = sign · T(.., y, .., x, ..)`.
    pub fn pair_symmetry_defect(&self, s1: usize, s2: usize, sign: f64) -> f64 {
        let mut perm: Vec<usize> = (0..self.rank()).collect();
        perm.swap(s1, s2);
        let swapped = self.permute(&perm);
        self.components
            .iter()
            .zip(&swapped.components)
            .fold(0.0, |m, (a, b)| m.max((a - sign * b).abs()))
    }
}

/// Row-major iterator over all multi-indices in `{0..dim}^rank`.
#[derive(Debug, Clone)]
pub struct MultiIndex {
    dim: usize,
    current: Vec<usize>,
    done: bool,
}

impl MultiIndex {
    pub fn new(dim: usize, rank: usize) -> Self {
        MultiIndex {
            dim,
            current: vec![0; rank],
            done: dim == 0 && rank > 0,
        }
    }
}

impl Iterator for MultiIndex {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut pos = self.current.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.current[pos] += 1;
            if self.current[pos] < self.dim {
                break;
            }
            self.current[pos] = 0;
        }
        Some(out)
    }
}

fn check_bilinear(t: &FrameTensor) -> Result<()> {
    if t.rank() != 2 {
        return Err(GeometryError::DimMismatch {
            left: t.rank(),
            right: 2,
        });
    }
    Ok(())
}

/// Kulkarni–Nomizu product of two symmetric (0,2) tensors:
/// `(a⊙b)(x,y,z,u) = a(y,z)b(x,u) − a(x,z)b(y,u) + b(y,z)a(x,u) − b(x,z)a(y,u)`.
pub fn kulkarni_nomizu(a: &FrameTensor, b: &FrameTensor) -> Result<FrameTensor> {
    check_bilinear(a)?;
    check_bilinear(b)?;
    if a.dim() != b.dim() {
        return Err(GeometryError::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let am = a.to_matrix();
    let bm = b.to_matrix();
    Ok(FrameTensor::covariant_from_fn(a.dim(), 4, |ix| {
        let (x, y, z, u) = (ix[0], ix[1], ix[2], ix[3]);
        am[(y, z)] * bm[(x, u)] - am[(x, z)] * bm[(y, u)] + bm[(y, z)] * am[(x, u)]
            - bm[(x, z)] * am[(y, u)]
    }))
}

/// `Σ_i ε_i t(e_i, e_i)` for an orthonormal frame with signs `sig`.
pub fn trace_with_signature(t: &FrameTensor, sig: &Signature) -> f64 {
    (0..sig.dim())
        .map(|i| sig.epsilon(i) * t.get(&[i, i]))
        .sum()
}

/// Frame-independent trace `g^{ij} t(e_i, e_j)`.
pub fn trace_with_metric(t: &FrameTensor, g: &MetricMatrix) -> f64 {
    let inv = g.inverse_components();
    let n = t.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += inv[(i, j)] * t.get(&[i, j]);
        }
    }
    acc
}

/// Standard basis vector `e_i` in frame components.
pub fn basis(dim: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(dim);
    v[i] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym2(dim: usize, seed: u64) -> FrameTensor {
        // small deterministic pseudo-random symmetric tensor
        let mut s = seed;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = next();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        FrameTensor::from_matrix(&m)
    }

    #[test]
    fn diagonal_sign_metric_is_self_inverse() {
        let m = MetricMatrix::diagonal(&[1.0, 1.0, -1.0]).unwrap();
        let inv = metric_inverse(&m).unwrap();
        assert_eq!(inv.components(), m.components());
        let id = MetricMatrix::diagonal(&[1.0; 5]).unwrap();
        assert_eq!(
            metric_inverse(&id).unwrap().components(),
            &DMatrix::identity(5, 5)
        );
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            MetricMatrix::new(m),
            Err(GeometryError::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn asymmetric_metric_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, -1.0]);
        assert!(matches!(
            MetricMatrix::new(m),
            Err(GeometryError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn inverse_is_an_involution() {
        let t = sym2(4, 7);
        let m =
            t.to_matrix() + DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 3.0, -3.0, -3.0]));
        let g = MetricMatrix::new(m).unwrap();
        let back = metric_inverse(&metric_inverse(&g).unwrap()).unwrap();
        assert!((back.components() - g.components()).amax() < 1e-9);
        assert_eq!(g.signature_counts(), (2, 2));
    }

    #[test]
    fn signature_validation() {
        assert!(Signature::new(vec![1, 1, -1]).is_ok());
        assert!(Signature::new(vec![-1, 1, 1]).is_err());
        assert!(Signature::new(vec![1, -1, -1]).is_err());
        assert_eq!(Signature::standard(2).epsilons(), &[1, 1, 1, -1, -1]);
    }

    #[test]
    fn kulkarni_nomizu_of_diagonal_metric() {
        let h = FrameTensor::from_matrix(&DMatrix::from_diagonal(&DVector::from_vec(vec![
            1.0, 2.0, -3.0,
        ])));
        let hh = kulkarni_nomizu(&h, &h).unwrap();
        assert_eq!(hh.get(&[1, 2, 2, 1]), 2.0 * (-3.0) * 2.0);
        // pi_1 = 1/2 h.h with h = diag(1,-1)
        let h2 =
            FrameTensor::from_matrix(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])));
        let pi1 = kulkarni_nomizu(&h2, &h2).unwrap().scale(0.5);
        assert_eq!(pi1.get(&[0, 1, 1, 0]), -1.0);
    }

    #[test]
    fn kulkarni_nomizu_rejects_mismatched_dims() {
        let a = FrameTensor::covariant(2, 2);
        let b = FrameTensor::covariant(3, 2);
        assert!(kulkarni_nomizu(&a, &b).is_err());
    }

    #[test]
    fn traces() {
        let sig = Signature::standard(1);
        let g = FrameTensor::from_matrix(&DMatrix::from_diagonal(&DVector::from_vec(vec![
            1.0, 1.0, -1.0,
        ])));
        // Σ ε_i g(e_i, e_i) = dim
        assert_eq!(trace_with_signature(&g, &sig), 3.0);
        let eta = basis(3, 0);
        let etaeta = FrameTensor::from_matrix(&(&eta * eta.transpose()));
        assert_eq!(trace_with_signature(&etaeta, &sig), 1.0);
        let gm = MetricMatrix::new(g.to_matrix()).unwrap();
        assert_eq!(trace_with_metric(&g, &gm), 3.0);
    }

    #[test]
    fn map_slot_and_insert_vector() {
        let t = FrameTensor::covariant_from_fn(2, 2, |ix| (ix[0] * 2 + ix[1]) as f64);
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let m = t.map_slot(0, &swap);
        assert_eq!(m.get(&[0, 1]), t.get(&[1, 1]));
        let v = DVector::from_vec(vec![2.0, -1.0]);
        let r = t.insert_vector(1, &v);
        assert_eq!(r.get(&[1]), 2.0 * t.get(&[1, 0]) - t.get(&[1, 1]));
        assert_eq!(t.eval(&[&v, &v]), r.eval(&[&v]));
    }

    #[test]
    fn multi_index_enumerates_row_major() {
        let all: Vec<_> = MultiIndex::new(2, 2).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(MultiIndex::new(3, 0).count(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn symmetric(dim: usize) -> impl Strategy<Value = FrameTensor> {
            prop::collection::vec(-2.0f64..2.0, dim * dim).prop_map(move |v| {
                let m = DMatrix::from_fn(dim, dim, |i, j| {
                    let (a, b) = if i <= j { (i, j) } else { (j, i) };
                    v[a * dim + b]
                });
                FrameTensor::from_matrix(&m)
            })
        }

        proptest! {
            #[test]
            fn kn_square_has_curvature_symmetries(a in symmetric(4)) {
                let t = kulkarni_nomizu(&a, &a).unwrap();
                prop_assert!(t.pair_symmetry_defect(0, 1, -1.0) < 1e-12);
                prop_assert!(t.pair_symmetry_defect(2, 3, -1.0) < 1e-12);
                let interchanged = t.permute(&[2, 3, 0, 1]);
                prop_assert!(t.max_diff(&interchanged).unwrap() < 1e-12);
            }

            #[test]
            fn trace_is_linear(a in symmetric(3), b in symmetric(3), s in -3.0f64..3.0) {
                let sig = Signature::standard(1);
                let lhs = trace_with_signature(&a.add(&b.scale(s)).unwrap(), &sig);
                let rhs = trace_with_signature(&a, &sig) + s * trace_with_signature(&b, &sig);
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }
}
