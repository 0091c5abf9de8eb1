//! Banded LU with partial pivoting and a bordered solve for nearly singular systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Square band matrix with room for pivoting fill.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        (i < self.n && j < self.n && off >= 0 && (off as usize) < self.width).then(|| i * self.width + off as usize)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Adds `value` at `(i, j)`; the entry must lie inside the declared band.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.slot(i, j).expect("in band");
        self.data[k] += value;
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.slot(i, j).expect("in band");
        self.data[k] = value;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + 1).min(self.n);
                (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, xi) in x.iter().enumerate().take(self.n) {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + 1).min(self.n);
            for (j, o) in out.iter_mut().enumerate().take(hi).skip(lo) {
                *o += self.get(i, j) * xi;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// LU factorization of the row-equilibrated matrix.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, reach) = (self.kl, self.kl + self.ku);
        let mut rows = vec![0.0; n];
        for (i, r) in rows.iter_mut().enumerate() {
            let slice = &mut self.data[i * self.width..(i + 1) * self.width];
            let m = slice.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::SingularLinearization);
            }
            slice.iter_mut().for_each(|v| *v /= m);
            *r = 1.0 / m;
        }
        let scale = 1.0;
        let mut piv = vec![0; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let p = (k..=last).max_by(|&a, &b| self.get(a, k).abs().total_cmp(&self.get(b, k).abs())).unwrap_or(k);
            if !(self.get(p, k).abs() > 1e-14 * scale) {
                return Err(Error::SingularLinearization);
            }
            piv[k] = p;
            let jmax = (k + reach).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.slot(k, j).expect("band"), self.slot(p, j).expect("band"));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last {
                let li = self.slot(i, k).expect("band");
                let l = self.data[li] / pivot;
                self.data[li] = l;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        let (src, dst) = (self.slot(k, j).expect("band"), self.slot(i, j).expect("band"));
                        self.data[dst] -= l * self.data[src];
                    }
                }
            }
        }
        Ok(BandLu { m: self, piv, rows })
    }
}

/// Factored band matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
    rows: Vec<f64>,
}

impl BandLu {
    pub fn len(&self) -> usize {
        self.m.n
    }

    pub fn is_empty(&self) -> bool {
        self.m.n == 0
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = &self.m;
        let n = m.n;
        let mut x: Vec<f64> = b.iter().zip(&self.rows).map(|(v, r)| v * r).collect();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            for (i, xi) in x.iter_mut().enumerate().take((k + m.kl + 1).min(n)).skip(k + 1) {
                *xi -= m.get(i, k) * xk;
            }
        }
        let reach = m.kl + m.ku;
        for k in (0..n).rev() {
            let jmax = (k + reach).min(n - 1);
            let s: f64 = (k + 1..=jmax).map(|j| m.get(k, j) * x[j]).sum();
            x[k] = (x[k] - s) / m.get(k, k);
        }
        x
    }
}

/// Solves `[A C; Dᵀ 0] [x; λ] = [r; s]` for an `A` that may be singular on a small subspace.
///
/// `A + β Σ e_p e_pᵀ` over the pin nodes is factored in band form and the small coupled system
/// for `λ` and the pinned values is solved densely.
#[derive(Debug, Clone)]
pub struct BorderedSolver {
    lu: BandLu,
    pins: Vec<usize>,
    beta: f64,
    d: Vec<Vec<f64>>,
    b_inv_pins: Vec<Vec<f64>>,
    b_inv_c: Vec<Vec<f64>>,
    small: DMatrix<f64>,
}

impl BorderedSolver {
    pub fn new(a: &BandMatrix, c: Vec<Vec<f64>>, d: Vec<Vec<f64>>, pins: Vec<usize>) -> Result<Self> {
        let k = c.len();
        if d.len() != k || pins.len() != k || k == 0 {
            return Err(Error::InvalidInput("bordered solve needs matching border and pin counts".into()));
        }
        let n = a.len();
        let beta = (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max).max(1.0);
        let mut b = a.clone();
        for &p in &pins {
            b.add(p, p, beta);
        }
        let lu = b.factor()?;
        let unit = |p: usize| {
            let mut e = vec![0.0; n];
            e[p] = 1.0;
            e
        };
        let b_inv_pins: Vec<Vec<f64>> = pins.iter().map(|&p| lu.solve(&unit(p))).collect();
        let b_inv_c: Vec<Vec<f64>> = c.iter().map(|ci| lu.solve(ci)).collect();
        // Unknowns (λ, μ): x = B⁻¹(r + β P μ - C λ), with Pᵀx = μ and Dᵀx = s.
        let mut small = DMatrix::zeros(2 * k, 2 * k);
        for row in 0..k {
            for col in 0..k {
                small[(row, col)] = -b_inv_c[col][pins[row]];
                small[(row, k + col)] = beta * b_inv_pins[col][pins[row]] - if row == col { 1.0 } else { 0.0 };
                small[(k + row, col)] = -dot(&d[row], &b_inv_c[col]);
                small[(k + row, k + col)] = beta * dot(&d[row], &b_inv_pins[col]);
            }
        }
        if small.clone().try_inverse().is_none() {
            return Err(Error::SingularLinearization);
        }
        Ok(Self { lu, pins, beta, d, b_inv_pins, b_inv_c, small })
    }

    /// Returns `(x, λ)`.
    pub fn solve(&self, r: &[f64], s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.pins.len();
        let y = self.lu.solve(r);
        let mut rhs = DVector::zeros(2 * k);
        for i in 0..k {
            rhs[i] = -y[self.pins[i]];
            rhs[k + i] = s[i] - dot(&self.d[i], &y);
        }
        let sol = self.small.clone().lu().solve(&rhs).ok_or(Error::SingularLinearization)?;
        let mut x = y;
        for j in 0..k {
            let (lam, mu) = (sol[j], sol[k + j]);
            for (xi, (c, p)) in x.iter_mut().zip(self.b_inv_c[j].iter().zip(&self.b_inv_pins[j])) {
                *xi += self.beta * mu * p - lam * c;
            }
        }
        Ok((x, (0..k).map(|j| sol[j]).collect()))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
