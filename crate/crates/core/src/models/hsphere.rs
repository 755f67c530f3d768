//! Holomorphic complex Riemannian bases: flat `ℝ^{2n}` and the h-sphere.
//!
//! Identify `ℝ^{2n+2}` with `ℂ^{n+1}` through `Z^k = x^k + i x^{n+1+k}`. The
//! canonical Norden metrics are then `h' − i h̃' = Σ Z^k W^k`, and the h-sphere
//! with parameters `(a, b)` is the complex quadric `Σ (Z^k)² = a − i b`. It is
//! charted by `w ∈ ℂ^n` with `Z = (w, √(a − ib − Σ w²))`, which is holomorphic,
//! so the induced complex metric is `G_{jk} = δ_{jk} + w_j w_k / (a − ib − Σ w²)`.
//! Real coordinates are ordered `(Re w_1..Re w_n, Im w_1..Im w_n)` and `J` is
//! multiplication by `i`, i.e. `J ∂u_j = ∂v_j`.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};

use super::{chart_model, FdConfig, Field, HolomorphicBase};
use crate::error::{GeometryError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsphereParams {
    pub n: usize,
    pub a: f64,
    pub b: f64,
}

impl HsphereParams {
    pub fn new(n: usize, a: f64, b: f64) -> Result<Self> {
        if a == 0.0 && b == 0.0 {
            return Err(GeometryError::DegenerateParameters);
        }
        if n == 0 {
            return Err(GeometryError::BadParams("h-sphere needs n >= 1".into()));
        }
        Ok(HsphereParams { n, a, b })
    }

    fn quadric_value(&self) -> Complex<f64> {
        Complex::new(self.a, -self.b)
    }
}

/// Canonical complex structure on `ℝ^{2n}`: `J e_j = e_{n+j}`, `J e_{n+j} = −e_j`.
pub fn canonical_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(n + k, k)] = 1.0;
        j[(k, n + k)] = -1.0;
    }
    j
}

/// Real `2n × 2n` Gram matrix of the real part of a complex symmetric form
/// in the real coordinates `(Re w, Im w)`.
fn realify(g: &[Complex<f64>], n: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let z = g[j * n + k];
            h[(j, k)] = z.re;
            h[(j, n + k)] = -z.im;
            h[(n + j, k)] = -z.im;
            h[(n + j, n + k)] = -z.re;
        }
    }
    h
}

fn hsphere_metric(params: HsphereParams, x: &[f64]) -> DMatrix<f64> {
    let n = params.n;
    let w: Vec<Complex<f64>> = (0..n).map(|k| Complex::new(x[k], x[n + k])).collect();
    let sum_sq: Complex<f64> = w.iter().map(|z| z * z).sum();
    let denom = params.quadric_value() - sum_sq;
    let mut g = vec![Complex::new(0.0, 0.0); n * n];
    for j in 0..n {
        for k in 0..n {
            let delta = if j == k { 1.0 } else { 0.0 };
            g[j * n + k] = Complex::new(delta, 0.0) + w[j] * w[k] / denom;
        }
    }
    realify(&g, n)
}

/// Point of `ℝ^{2n+2}` on the h-sphere (centred at the origin) for chart
/// coordinates `x`.
pub fn hsphere_embedding(params: HsphereParams, x: &[f64]) -> DVector<f64> {
    let n = params.n;
    let w: Vec<Complex<f64>> = (0..n).map(|k| Complex::new(x[k], x[n + k])).collect();
    let c = params.quadric_value();
    let sum_sq: Complex<f64> = w.iter().map(|z| z * z).sum();
    // branch chosen continuously around w = 0
    let last = c.sqrt() * (Complex::new(1.0, 0.0) - sum_sq / c).sqrt();
    let mut z = w;
    z.push(last);
    let mut out = DVector::zeros(2 * n + 2);
    for (k, zk) in z.iter().enumerate() {
        out[k] = zk.re;
        out[n + 1 + k] = zk.im;
    }
    out
}

/// Flat `ℝ^{2n}` with `h = Σ ε_i (dx^i)²` and canonical `J`, in coordinates.
pub fn flat_base(n: usize, fd: FdConfig) -> HolomorphicBase {
    let mut diag = vec![1.0; n];
    diag.extend(std::iter::repeat_n(-1.0, n));
    let h = DMatrix::from_diagonal(&DVector::from_vec(diag));
    let model = chart_model(2 * n, Arc::new(move |_| h.clone()), None, fd);
    HolomorphicBase::new(Arc::new(model), Field::from_matrix(&canonical_j(n)), n)
        .expect("flat base dimensions are consistent")
}

/// The h-sphere `S_h^{2n}(0; a, b)` in the holomorphic chart described above.
pub fn hsphere_base(params: HsphereParams, fd: FdConfig) -> Result<HolomorphicBase> {
    let params = HsphereParams::new(params.n, params.a, params.b)?;
    let n = params.n;
    let model = chart_model(
        2 * n,
        Arc::new(move |x: &[f64]| hsphere_metric(params, x)),
        None,
        fd,
    );
    HolomorphicBase::new(Arc::new(model), Field::from_matrix(&canonical_j(n)), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::coordinate_partials;

    /// Canonical Norden metric `h'` on `ℝ^{2n+2}`.
    fn h_prime(n: usize, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (0..=n)
            .map(|i| x[i] * y[i] - x[n + 1 + i] * y[n + 1 + i])
            .sum()
    }

    fn h_tilde_prime(n: usize, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        -(0..=n)
            .map(|i| x[i] * y[n + 1 + i] + x[n + 1 + i] * y[i])
            .sum::<f64>()
    }

    #[test]
    fn embedding_lies_on_the_quadric() {
        let p = HsphereParams::new(2, 3.0, 4.0).unwrap();
        let x = [0.2, -0.1, 0.15, 0.05];
        let z = hsphere_embedding(p, &x);
        assert!((h_prime(2, &z, &z) - 3.0).abs() < 1e-12);
        assert!((h_tilde_prime(2, &z, &z) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn chart_metric_is_the_pullback_of_h_prime() {
        // oracle: numerical Jacobian of the embedding, then pull back h'
        for &(a, b) in &[(1.0, 0.0), (3.0, 4.0), (-1.0, 0.5)] {
            let p = HsphereParams::new(2, a, b).unwrap();
            let x = [0.21, -0.13, 0.07, 0.3];
            let jac = coordinate_partials(&x, 1e-6, &|q| {
                Ok(hsphere_embedding(p, q).iter().copied().collect())
            })
            .unwrap();
            let cols: Vec<DVector<f64>> = jac.into_iter().map(DVector::from_vec).collect();
            let g = hsphere_metric(p, &x);
            for i in 0..4 {
                for j in 0..4 {
                    let pulled = h_prime(2, &cols[i], &cols[j]);
                    assert!((pulled - g[(i, j)]).abs() < 1e-8, "({a},{b}) [{i},{j}]");
                }
            }
        }
    }

    #[test]
    fn j_is_an_anti_isometry() {
        let p = HsphereParams::new(3, 1.0, 0.0).unwrap();
        let x = [0.1, 0.2, -0.1, 0.05, -0.2, 0.1];
        let h = hsphere_metric(p, &x);
        let j = canonical_j(3);
        assert!((j.transpose() * &h * &j + &h).amax() < 1e-14);
        assert!((&j * &j + DMatrix::identity(6, 6)).amax() == 0.0);
    }

    #[test]
    fn zero_parameters_are_rejected() {
        assert_eq!(
            HsphereParams::new(2, 0.0, 0.0),
            Err(GeometryError::DegenerateParameters)
        );
    }
}
