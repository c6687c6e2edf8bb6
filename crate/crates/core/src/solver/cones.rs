//! Per-block Nesterov-Todd scaling and Jordan-algebra operations for the
//! inequality cones (nonnegative orthant, second-order cone, PSD cone).

use crate::linalg::{self, dot, norm2, Matrix};
use crate::model::{smat, svec, svec_len};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Kind {
    Nonneg,
    Soc,
    Psd(usize),
}

#[derive(Clone, Debug)]
pub(crate) struct Block {
    pub kind: Kind,
    pub start: usize,
    pub dim: usize,
}

impl Block {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.dim
    }

    pub fn degree(&self) -> usize {
        match self.kind {
            Kind::Nonneg => self.dim,
            Kind::Soc => 1,
            Kind::Psd(side) => side,
        }
    }
}

/// Scaling `W` with `W z = W⁻ᵀ s = λ`.
#[derive(Clone, Debug)]
pub(crate) enum Scaling {
    /// `W = diag(w)`, `w = sqrt(s / z)`.
    Nonneg { w: Vec<f64> },
    /// `W = η W̄(w̄)` with `w̄ᵀJw̄ = 1`; symmetric.
    Soc { eta: f64, wbar: Vec<f64> },
    /// `W(V) = Rᵀ V R`.
    Psd {
        r: Matrix,
        r_inv: Matrix,
        lambda: Vec<f64>,
    },
}

#[derive(Debug)]
pub(crate) struct ScalingFailure;

fn soc_jnorm(x: &[f64]) -> Option<f64> {
    let x1 = norm2(&x[1..]);
    let prod = (x[0] - x1) * (x[0] + x1);
    if x[0] <= x1 || prod <= 0.0 {
        None
    } else {
        Some(prod.sqrt())
    }
}

/// `W̄ v` for `w̄ = (w0, w1)`.
fn soc_apply_wbar(wbar: &[f64], v: &[f64], out: &mut [f64]) {
    let w0 = wbar[0];
    let w1 = &wbar[1..];
    let dot1 = dot(w1, &v[1..]);
    out[0] = w0 * v[0] + dot1;
    let coef = v[0] + dot1 / (1.0 + w0);
    for i in 1..v.len() {
        out[i] = v[i] + coef * w1[i - 1];
    }
}

impl Scaling {
    pub fn compute(block: &Block, s: &[f64], z: &[f64]) -> Result<Scaling, ScalingFailure> {
        match block.kind {
            Kind::Nonneg => {
                if s.iter().chain(z).any(|&v| !(v > 0.0)) {
                    return Err(ScalingFailure);
                }
                Ok(Scaling::Nonneg {
                    w: s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect(),
                })
            }
            Kind::Soc => {
                let sn = soc_jnorm(s).ok_or(ScalingFailure)?;
                let zn = soc_jnorm(z).ok_or(ScalingFailure)?;
                let sbar: Vec<f64> = s.iter().map(|v| v / sn).collect();
                let zbar: Vec<f64> = z.iter().map(|v| v / zn).collect();
                let gamma = ((1.0 + dot(&zbar, &sbar)) / 2.0).sqrt();
                let mut wbar = Vec::with_capacity(s.len());
                wbar.push((sbar[0] + zbar[0]) / (2.0 * gamma));
                for i in 1..s.len() {
                    wbar.push((sbar[i] - zbar[i]) / (2.0 * gamma));
                }
                // renormalise so that w0 = sqrt(1 + ‖w1‖²) exactly
                wbar[0] = (1.0 + dot(&wbar[1..], &wbar[1..])).sqrt();
                let eta = (sn / zn).sqrt();
                if !eta.is_finite() || wbar.iter().any(|v| !v.is_finite()) {
                    return Err(ScalingFailure);
                }
                Ok(Scaling::Soc { eta, wbar })
            }
            Kind::Psd(side) => {
                let sm = smat(s, side);
                let zm = smat(z, side);
                let ls = linalg::cholesky(&sm).map_err(|_| ScalingFailure)?;
                let lz = linalg::cholesky(&zm).map_err(|_| ScalingFailure)?;
                let prod = lz.transpose().matmul(&ls).map_err(|_| ScalingFailure)?;
                let dec = linalg::svd(&prod).map_err(|_| ScalingFailure)?;
                let lambda: Vec<f64> = dec.singular_values.to_vec();
                if lambda.iter().any(|&l| !(l > 0.0)) {
                    return Err(ScalingFailure);
                }
                // R = L_s V Λ^{-1/2}
                let v_scaled = Matrix::from_fn(side, side, |i, j| dec.v[(i, j)] / lambda[j].sqrt());
                let r = ls.matmul(&v_scaled).map_err(|_| ScalingFailure)?;
                // R⁻¹ = Λ^{1/2} Vᵀ L_s⁻¹
                let ls_inv = lower_inverse(&ls);
                let vt_ls_inv = dec
                    .v
                    .transpose()
                    .matmul(&ls_inv)
                    .map_err(|_| ScalingFailure)?;
                let r_inv =
                    Matrix::from_fn(side, side, |i, j| lambda[i].sqrt() * vt_ls_inv[(i, j)]);
                Ok(Scaling::Psd { r, r_inv, lambda })
            }
        }
    }

    /// `out = W v`.
    pub fn apply_w(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Nonneg { w } => {
                for i in 0..v.len() {
                    out[i] = w[i] * v[i];
                }
            }
            Scaling::Soc { eta, wbar } => {
                soc_apply_wbar(wbar, v, out);
                out.iter_mut().for_each(|o| *o *= eta);
            }
            Scaling::Psd { r, .. } => {
                let side = r.rows();
                let m = smat(v, side);
                let res = r.transpose().matmul(&m.matmul(r).unwrap()).unwrap();
                out.copy_from_slice(&svec(&res));
            }
        }
    }

    /// `out = Wᵀ v`.
    #[cfg(test)]
    pub fn apply_wt(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Psd { r, .. } => {
                let side = r.rows();
                let m = smat(v, side);
                let res = r.matmul(&m.matmul(&r.transpose()).unwrap()).unwrap();
                out.copy_from_slice(&svec(&res));
            }
            _ => self.apply_w(v, out),
        }
    }

    /// `out = W⁻ᵀ v`.
    pub fn apply_winv_t(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Nonneg { w } => {
                for i in 0..v.len() {
                    out[i] = v[i] / w[i];
                }
            }
            Scaling::Soc { eta, wbar } => {
                // W̄⁻¹ = J W̄ J
                let mut jv = v.to_vec();
                jv[1..].iter_mut().for_each(|x| *x = -*x);
                soc_apply_wbar(wbar, &jv, out);
                out[0] /= eta;
                out[1..].iter_mut().for_each(|x| *x = -*x / eta);
            }
            Scaling::Psd { r_inv, .. } => {
                let side = r_inv.rows();
                let m = smat(v, side);
                let res = r_inv
                    .matmul(&m.matmul(&r_inv.transpose()).unwrap())
                    .unwrap();
                out.copy_from_slice(&svec(&res));
            }
        }
    }

    /// `out = W⁻¹ v`.
    pub fn apply_winv(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Psd { r_inv, .. } => {
                let side = r_inv.rows();
                let m = smat(v, side);
                let res = r_inv.transpose().matmul(&m.matmul(r_inv).unwrap()).unwrap();
                out.copy_from_slice(&svec(&res));
            }
            _ => self.apply_winv_t(v, out),
        }
    }

    /// `λ` for this block.
    pub fn lambda(&self, z: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Psd { lambda, .. } => {
                let side = lambda.len();
                out.iter_mut().for_each(|o| *o = 0.0);
                for (i, &l) in lambda.iter().enumerate() {
                    out[crate::model::svec_index(side, i, i)] = l;
                }
            }
            _ => self.apply_w(z, out),
        }
    }
}

fn lower_inverse(l: &Matrix) -> Matrix {
    let n = l.rows();
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = 1.0 / l[(j, j)];
        for i in (j + 1)..n {
            let mut s = 0.0;
            for k in j..i {
                s += l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -s / l[(i, i)];
        }
    }
    inv
}

/// Identity element.
pub(crate) fn identity(kind: Kind, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    match kind {
        Kind::Nonneg => out.iter_mut().for_each(|o| *o = 1.0),
        Kind::Soc => out[0] = 1.0,
        Kind::Psd(side) => {
            for i in 0..side {
                out[crate::model::svec_index(side, i, i)] = 1.0;
            }
        }
    }
}

/// Jordan product `x ∘ y`.
pub(crate) fn jordan_product(kind: Kind, x: &[f64], y: &[f64], out: &mut [f64]) {
    match kind {
        Kind::Nonneg => {
            for i in 0..x.len() {
                out[i] = x[i] * y[i];
            }
        }
        Kind::Soc => {
            out[0] = dot(x, y);
            for i in 1..x.len() {
                out[i] = x[0] * y[i] + y[0] * x[i];
            }
        }
        Kind::Psd(side) => {
            let xm = smat(x, side);
            let ym = smat(y, side);
            let xy = xm.matmul(&ym).unwrap();
            let sym = Matrix::from_fn(side, side, |i, j| 0.5 * (xy[(i, j)] + xy[(j, i)]));
            out.copy_from_slice(&svec(&sym));
        }
    }
}

/// Solves `λ ∘ x = d` for `x`.
pub(crate) fn jordan_divide(
    kind: Kind,
    scaling: &Scaling,
    lambda: &[f64],
    d: &[f64],
    out: &mut [f64],
) {
    match kind {
        Kind::Nonneg => {
            for i in 0..d.len() {
                out[i] = d[i] / lambda[i];
            }
        }
        Kind::Soc => {
            let l0 = lambda[0];
            let l1 = &lambda[1..];
            let l1n = norm2(l1);
            let det = (l0 - l1n) * (l0 + l1n);
            let x0 = (l0 * d[0] - dot(l1, &d[1..])) / det;
            out[0] = x0;
            for i in 1..d.len() {
                out[i] = (d[i] - x0 * lambda[i]) / l0;
            }
        }
        Kind::Psd(side) => {
            let lam = match scaling {
                Scaling::Psd { lambda, .. } => lambda,
                _ => unreachable!(),
            };
            let dm = smat(d, side);
            let xm = Matrix::from_fn(side, side, |i, j| 2.0 * dm[(i, j)] / (lam[i] + lam[j]));
            out.copy_from_slice(&svec(&xm));
        }
    }
}

/// Largest `α` with `λ + α Δ` in the cone (infinite if unbounded).
pub(crate) fn max_step(kind: Kind, scaling: &Scaling, lambda: &[f64], delta: &[f64]) -> f64 {
    match kind {
        Kind::Nonneg => {
            let mut a = f64::INFINITY;
            for i in 0..delta.len() {
                if delta[i] < 0.0 {
                    a = a.min(-lambda[i] / delta[i]);
                }
            }
            a
        }
        Kind::Soc => soc_max_step(lambda, delta),
        Kind::Psd(side) => {
            let lam = match scaling {
                Scaling::Psd { lambda, .. } => lambda,
                _ => unreachable!(),
            };
            let dm = smat(delta, side);
            let scaled = Matrix::from_fn(side, side, |i, j| dm[(i, j)] / (lam[i] * lam[j]).sqrt());
            match linalg::sym_eigs(&scaled) {
                Ok(e) if e[0] < 0.0 => -1.0 / e[0],
                Ok(_) => f64::INFINITY,
                Err(_) => 0.0,
            }
        }
    }
}

/// Smallest positive root of `(x0 + α d0)² − ‖x1 + α d1‖²` for `x` strictly inside the cone.
pub(crate) fn soc_max_step(x: &[f64], d: &[f64]) -> f64 {
    let x1n = norm2(&x[1..]);
    let c = (x[0] - x1n) * (x[0] + x1n);
    let d1n = norm2(&d[1..]);
    let a = (d[0] - d1n) * (d[0] + d1n);
    let b = x[0] * d[0] - dot(&x[1..], &d[1..]);
    if c <= 0.0 {
        return 0.0;
    }
    if a == 0.0 {
        return if b < 0.0 {
            -c / (2.0 * b)
        } else {
            f64::INFINITY
        };
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let sq = disc.sqrt();
    let q = -(b + b.signum() * sq);
    let mut best = f64::INFINITY;
    for root in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
        if root > 0.0 && root < best {
            best = root;
        }
    }
    best
}

/// Dimension check helper used in tests and assembly.
#[allow(dead_code)]
pub(crate) fn block_dim(kind: Kind, dim: usize) -> usize {
    match kind {
        Kind::Psd(side) => svec_len(side),
        _ => dim,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_soc(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        v[0] = norm2(&v[1..]) + rng.random_range(0.01..1.0);
        v
    }

    fn random_pd(rng: &mut ChaCha8Rng, side: usize) -> Vec<f64> {
        let g = Matrix::from_fn(side, side, |_, _| rng.random_range(-1.0..1.0));
        let m = g
            .transpose()
            .matmul(&g)
            .unwrap()
            .add(&Matrix::identity(side).scale(0.1))
            .unwrap();
        svec(&m)
    }

    fn check_scaling(block: &Block, s: &[f64], z: &[f64]) {
        let sc = Scaling::compute(block, s, z).unwrap();
        let d = s.len();
        let mut lam = vec![0.0; d];
        sc.lambda(z, &mut lam);
        let mut wz = vec![0.0; d];
        sc.apply_w(z, &mut wz);
        // W z = λ and Wᵀ λ = s
        for i in 0..d {
            assert!(
                (wz[i] - lam[i]).abs() <= 1e-9 * (1.0 + lam[i].abs()),
                "Wz != lambda"
            );
        }
        let mut wtl = vec![0.0; d];
        sc.apply_wt(&lam, &mut wtl);
        for i in 0..d {
            assert!(
                (wtl[i] - s[i]).abs() <= 1e-9 * (1.0 + s[i].abs()),
                "W^T lambda != s"
            );
        }
        let mut back = vec![0.0; d];
        sc.apply_winv_t(&wtl, &mut back);
        for i in 0..d {
            assert!(
                (back[i] - lam[i]).abs() <= 1e-8 * (1.0 + lam[i].abs()),
                "W^-T s != lambda"
            );
        }
        // W⁻¹ W v = v
        let v: Vec<f64> = (0..d).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut wv = vec![0.0; d];
        sc.apply_w(&v, &mut wv);
        sc.apply_winv(&wv, &mut back);
        for i in 0..d {
            assert!((back[i] - v[i]).abs() <= 1e-8, "W^-1 W v != v");
        }
    }

    #[test]
    fn scalings_satisfy_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let nn = Block {
            kind: Kind::Nonneg,
            start: 0,
            dim: 4,
        };
        check_scaling(&nn, &[1.0, 2.0, 0.5, 3.0], &[0.2, 1.0, 4.0, 0.1]);
        for d in [2, 3, 6] {
            let b = Block {
                kind: Kind::Soc,
                start: 0,
                dim: d,
            };
            check_scaling(&b, &random_soc(&mut rng, d), &random_soc(&mut rng, d));
        }
        for side in [1, 2, 4] {
            let b = Block {
                kind: Kind::Psd(side),
                start: 0,
                dim: svec_len(side),
            };
            check_scaling(&b, &random_pd(&mut rng, side), &random_pd(&mut rng, side));
        }
    }

    #[test]
    fn jordan_division_inverts_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_soc(&mut rng, 4);
        let z = random_soc(&mut rng, 4);
        let b = Block {
            kind: Kind::Soc,
            start: 0,
            dim: 4,
        };
        let sc = Scaling::compute(&b, &s, &z).unwrap();
        let mut lam = vec![0.0; 4];
        sc.lambda(&z, &mut lam);
        let d = [0.3, -0.2, 0.5, 0.1];
        let mut x = vec![0.0; 4];
        jordan_divide(Kind::Soc, &sc, &lam, &d, &mut x);
        let mut back = vec![0.0; 4];
        jordan_product(Kind::Soc, &lam, &x, &mut back);
        for i in 0..4 {
            assert!((back[i] - d[i]).abs() < 1e-12);
        }

        let side = 3;
        let b = Block {
            kind: Kind::Psd(side),
            start: 0,
            dim: 6,
        };
        let sc =
            Scaling::compute(&b, &random_pd(&mut rng, side), &random_pd(&mut rng, side)).unwrap();
        let mut lam = vec![0.0; 6];
        sc.lambda(&[0.0; 6], &mut lam);
        let d = svec(
            &Matrix::from_rows(&[
                vec![1.0, 0.2, -0.3],
                vec![0.2, 0.5, 0.1],
                vec![-0.3, 0.1, 2.0],
            ])
            .unwrap(),
        );
        let mut x = vec![0.0; 6];
        jordan_divide(Kind::Psd(side), &sc, &lam, &d, &mut x);
        let mut back = vec![0.0; 6];
        jordan_product(Kind::Psd(side), &lam, &x, &mut back);
        for i in 0..6 {
            assert!((back[i] - d[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn soc_step_hits_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = random_soc(&mut rng, 4);
            let d: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let a = soc_max_step(&x, &d);
            if a.is_finite() {
                let p: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + a * di).collect();
                let margin = p[0] - norm2(&p[1..]);
                assert!(margin.abs() <= 1e-9 * (1.0 + norm2(&p)), "{margin}");
                let inside: Vec<f64> = x
                    .iter()
                    .zip(&d)
                    .map(|(xi, di)| xi + 0.99 * a * di)
                    .collect();
                assert!(inside[0] > norm2(&inside[1..]));
            } else {
                let p: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + 1e6 * di).collect();
                assert!(p[0] >= norm2(&p[1..]) - 1e-6 * norm2(&p));
            }
        }
    }
}
