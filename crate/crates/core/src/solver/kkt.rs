//! Reduced KKT system `[[G̃ᵀG̃, Aᵀ], [A, 0]]` with `G̃ = W⁻ᵀG`, equilibrated,
//! regularised by `±δ` on the diagonal and factored by dense LDLᵀ.

use super::cones::{Block, Kind, Scaling};

pub(crate) const STATIC_REG: f64 = 1e-14;
const DYNAMIC_EPS: f64 = 1e-13;
const DYNAMIC_REG: f64 = 1e-7;
const REFINE_STEPS: usize = 8;

/// Row-compressed sparse matrix.
#[derive(Clone, Debug)]
pub(crate) struct SparseRows {
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseRows {
    pub fn from_rows<'a>(ncols: usize, rows: impl Iterator<Item = &'a [f64]>) -> Self {
        let mut indptr = vec![0];
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    idx.push(j);
                    val.push(v);
                }
            }
            indptr.push(idx.len());
        }
        Self {
            ncols,
            indptr,
            idx,
            val,
        }
    }

    pub fn nrows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.idx[span.clone()], &self.val[span])
    }

    /// `out = M x`.
    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let (idx, val) = self.row(r);
            *o = idx.iter().zip(val).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// `out += Mᵀ y`.
    pub fn tr_mul_add(&self, y: &[f64], out: &mut [f64]) {
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            let (idx, val) = self.row(r);
            for (&j, &v) in idx.iter().zip(val) {
                out[j] += v * yr;
            }
        }
    }

    /// Sorted union of column indices over a row range.
    pub fn support(&self, rows: std::ops::Range<usize>) -> Vec<usize> {
        let mut s: Vec<usize> = rows.flat_map(|r| self.row(r).0.iter().copied()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

#[derive(Debug)]
pub(crate) struct FactorFailure {
    pub pivot: usize,
    pub value: f64,
}

/// Block rows of `G̃ = W⁻ᵀ G`.
enum ScaledBlock {
    Nonneg {
        start: usize,
        inv_w: Vec<f64>,
    },
    /// Row-major `dim × support.len()` restriction to the block's column support.
    Dense {
        start: usize,
        dim: usize,
        support: Vec<usize>,
        mat: Vec<f64>,
    },
}

pub(crate) struct Kkt {
    nx: usize,
    ny: usize,
    dim: usize,
    /// Lower triangle (row-major) of the matrix, overwritten by `L` and `D`.
    data: Vec<f64>,
    diag: Vec<f64>,
    scale: Vec<f64>,
    col: Vec<f64>,
    supports: Vec<Vec<usize>>,
    scaled: Vec<ScaledBlock>,
    pub dynamic_pivots: usize,
}

impl Kkt {
    pub fn new(g: &SparseRows, a: &SparseRows, blocks: &[Block]) -> Self {
        let nx = g.ncols;
        let ny = a.nrows();
        let dim = nx + ny;
        let supports = blocks
            .iter()
            .map(|b| match b.kind {
                Kind::Nonneg => Vec::new(),
                _ => g.support(b.range()),
            })
            .collect();
        Self {
            nx,
            ny,
            dim,
            data: vec![0.0; dim * dim],
            diag: vec![0.0; dim],
            scale: vec![1.0; dim],
            col: vec![0.0; dim],
            supports,
            scaled: Vec::new(),
            dynamic_pivots: 0,
        }
    }

    /// Forms `G̃ = W⁻ᵀ G`, the regularised matrix `[[G̃ᵀG̃, Aᵀ], [A, 0]]`, and factors it.
    pub fn factor(
        &mut self,
        g: &SparseRows,
        a: &SparseRows,
        blocks: &[Block],
        scalings: &[Scaling],
    ) -> Result<(), FactorFailure> {
        let n = self.dim;
        self.data.iter_mut().for_each(|v| *v = 0.0);
        self.scaled.clear();
        for (k, (block, sc)) in blocks.iter().zip(scalings).enumerate() {
            match (block.kind, sc) {
                (Kind::Nonneg, Scaling::Nonneg { w }) => {
                    let inv_w: Vec<f64> = w.iter().map(|v| 1.0 / v).collect();
                    for (off, r) in block.range().enumerate() {
                        let (idx, val) = g.row(r);
                        let wt = inv_w[off] * inv_w[off];
                        for p in 0..idx.len() {
                            let wp = wt * val[p];
                            let row = idx[p] * n;
                            for q in 0..=p {
                                self.data[row + idx[q]] += wp * val[q];
                            }
                        }
                    }
                    self.scaled.push(ScaledBlock::Nonneg {
                        start: block.start,
                        inv_w,
                    });
                }
                _ => {
                    let support = self.supports[k].clone();
                    let d = block.dim;
                    let ns = support.len();
                    let mut cols = vec![0.0; d * ns];
                    for (off, r) in block.range().enumerate() {
                        let (idx, val) = g.row(r);
                        for (&j, &v) in idx.iter().zip(val) {
                            let c = support.binary_search(&j).unwrap();
                            cols[c * d + off] = v;
                        }
                    }
                    let mut mat = vec![0.0; d * ns];
                    let mut buf = vec![0.0; d];
                    for c in 0..ns {
                        sc.apply_winv_t(&cols[c * d..(c + 1) * d], &mut buf);
                        for i in 0..d {
                            mat[i * ns + c] = buf[i];
                        }
                    }
                    let mut gram = vec![0.0; ns * ns];
                    for i in 0..d {
                        let r = &mat[i * ns..(i + 1) * ns];
                        for p in 0..ns {
                            let rp = r[p];
                            if rp == 0.0 {
                                continue;
                            }
                            for (gv, rq) in gram[p * ns..p * ns + p + 1].iter_mut().zip(&r[..=p]) {
                                *gv += rp * rq;
                            }
                        }
                    }
                    for p in 0..ns {
                        let row = support[p] * n;
                        for q in 0..=p {
                            self.data[row + support[q]] += gram[p * ns + q];
                        }
                    }
                    self.scaled.push(ScaledBlock::Dense {
                        start: block.start,
                        dim: d,
                        support,
                        mat,
                    });
                }
            }
        }
        for r in 0..self.ny {
            let (idx, val) = a.row(r);
            let row = (self.nx + r) * n;
            for (&j, &v) in idx.iter().zip(val) {
                self.data[row + j] = v;
            }
        }
        self.equilibrate();
        for i in 0..self.nx {
            self.data[i * n + i] += STATIC_REG;
        }
        for r in self.nx..n {
            self.data[r * n + r] = -STATIC_REG;
        }
        self.ldl()
    }

    /// `out = G̃ x`.
    pub fn scaled_mul(&self, g: &SparseRows, x: &[f64], out: &mut [f64]) {
        for b in &self.scaled {
            match b {
                ScaledBlock::Nonneg { start, inv_w } => {
                    for (off, w) in inv_w.iter().enumerate() {
                        let (idx, val) = g.row(start + off);
                        out[start + off] =
                            w * idx.iter().zip(val).map(|(&j, &v)| v * x[j]).sum::<f64>();
                    }
                }
                ScaledBlock::Dense {
                    start,
                    dim,
                    support,
                    mat,
                } => {
                    let ns = support.len();
                    for i in 0..*dim {
                        let r = &mat[i * ns..(i + 1) * ns];
                        out[start + i] = r.iter().zip(support).map(|(m, &j)| m * x[j]).sum();
                    }
                }
            }
        }
    }

    /// `out += G̃ᵀ y`.
    pub fn scaled_tr_mul_add(&self, g: &SparseRows, y: &[f64], out: &mut [f64]) {
        for b in &self.scaled {
            match b {
                ScaledBlock::Nonneg { start, inv_w } => {
                    for (off, w) in inv_w.iter().enumerate() {
                        let yr = w * y[start + off];
                        let (idx, val) = g.row(start + off);
                        for (&j, &v) in idx.iter().zip(val) {
                            out[j] += v * yr;
                        }
                    }
                }
                ScaledBlock::Dense {
                    start,
                    dim,
                    support,
                    mat,
                } => {
                    let ns = support.len();
                    for i in 0..*dim {
                        let yi = y[start + i];
                        if yi == 0.0 {
                            continue;
                        }
                        let r = &mat[i * ns..(i + 1) * ns];
                        for (m, &j) in r.iter().zip(support) {
                            out[j] += m * yi;
                        }
                    }
                }
            }
        }
    }

    /// Symmetric diagonal scaling: unit diagonal on the `x` block, unit
    /// max-norm rows on the equality block.
    fn equilibrate(&mut self) {
        let n = self.dim;
        for i in 0..self.nx {
            let d = self.data[i * n + i];
            self.scale[i] = if d > 0.0 && d.is_finite() {
                1.0 / d.sqrt()
            } else {
                1.0
            };
        }
        for r in self.nx..n {
            let m = (0..self.nx).fold(0.0f64, |m, j| {
                m.max((self.data[r * n + j] * self.scale[j]).abs())
            });
            self.scale[r] = if m > 0.0 { 1.0 / m } else { 1.0 };
        }
        for i in 0..n {
            let si = self.scale[i];
            let row = &mut self.data[i * n..i * n + i + 1];
            for (v, sj) in row.iter_mut().zip(&self.scale) {
                *v *= si * sj;
            }
        }
    }

    fn ldl(&mut self) -> Result<(), FactorFailure> {
        let n = self.dim;
        self.dynamic_pivots = 0;
        for k in 0..n {
            let mut d = self.data[k * n + k];
            if !d.is_finite() {
                return Err(FactorFailure { pivot: k, value: d });
            }
            let sign = if k < self.nx { 1.0 } else { -1.0 };
            if sign * d <= DYNAMIC_EPS {
                d = sign * DYNAMIC_REG;
                self.dynamic_pivots += 1;
            }
            self.diag[k] = d;
            for i in (k + 1)..n {
                let v = self.data[i * n + k];
                self.col[i] = v;
                self.data[i * n + k] = v / d;
            }
            for i in (k + 1)..n {
                let lik = self.data[i * n + k];
                if lik == 0.0 {
                    continue;
                }
                let (head, tail) = self.data.split_at_mut(i * n);
                let _ = head;
                let row = &mut tail[k + 1..=i];
                let col = &self.col[k + 1..=i];
                for (r, c) in row.iter_mut().zip(col) {
                    *r -= lik * c;
                }
            }
        }
        Ok(())
    }

    /// Solves with the factored (regularised) matrix, in place.
    fn back_solve(&self, b: &mut [f64]) {
        let n = self.dim;
        for (v, s) in b.iter_mut().zip(&self.scale) {
            *v *= s;
        }
        for i in 0..n {
            let row = &self.data[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(l, x)| l * x).sum();
            b[i] -= s;
        }
        for i in 0..n {
            b[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let bi = b[i];
            if bi == 0.0 {
                continue;
            }
            let row = &self.data[i * n..i * n + i];
            for (x, l) in b[..i].iter_mut().zip(row) {
                *x -= l * bi;
            }
        }
        for (v, s) in b.iter_mut().zip(&self.scale) {
            *v *= s;
        }
    }
}

/// Solves `[[0, Aᵀ, G̃ᵀ], [A, 0, 0], [G̃, 0, −I]] (dx, dy, dz̃) = (r1, r2, r3)`
/// with iterative refinement; `dz̃ = W dz`.
pub(crate) struct Reduced<'a> {
    pub g: &'a SparseRows,
    pub a: &'a SparseRows,
    pub kkt: &'a Kkt,
}

impl Reduced<'_> {
    fn dz_from(&self, dx: &[f64], r3: &[f64], dz: &mut [f64]) {
        self.kkt.scaled_mul(self.g, dx, dz);
        for (v, r) in dz.iter_mut().zip(r3) {
            *v -= r;
        }
    }

    pub fn solve(&self, r1: &[f64], r2: &[f64], r3: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let nx = r1.len();
        let ny = r2.len();
        let mut rhs = vec![0.0; nx + ny];
        rhs[..nx].copy_from_slice(r1);
        self.kkt.scaled_tr_mul_add(self.g, r3, &mut rhs[..nx]);
        rhs[nx..].copy_from_slice(r2);
        let rhs_norm = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));

        let mut sol = rhs.clone();
        self.kkt.back_solve(&mut sol);
        let mut dz = vec![0.0; r3.len()];
        let mut best_err = f64::INFINITY;
        let mut best = sol.clone();
        for _ in 0..REFINE_STEPS {
            self.dz_from(&sol[..nx], r3, &mut dz);
            let mut err = vec![0.0; nx + ny];
            err[..nx].copy_from_slice(r1);
            let neg_dy: Vec<f64> = sol[nx..].iter().map(|v| -v).collect();
            self.a.tr_mul_add(&neg_dy, &mut err[..nx]);
            let neg_dz: Vec<f64> = dz.iter().map(|v| -v).collect();
            self.kkt.scaled_tr_mul_add(self.g, &neg_dz, &mut err[..nx]);
            let mut ax = vec![0.0; ny];
            self.a.mul(&sol[..nx], &mut ax);
            for i in 0..ny {
                err[nx + i] = r2[i] - ax[i];
            }
            let e = err.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(e < best_err) {
                break;
            }
            best_err = e;
            best.copy_from_slice(&sol);
            if e <= 1e-15 * (1.0 + rhs_norm) {
                break;
            }
            self.kkt.back_solve(&mut err);
            for (s, c) in sol.iter_mut().zip(&err) {
                *s += c;
            }
        }
        self.dz_from(&best[..nx], r3, &mut dz);
        let dy = best[nx..].to_vec();
        best.truncate(nx);
        (best, dy, dz)
    }
}
