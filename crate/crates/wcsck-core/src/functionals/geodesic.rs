//! Toric geodesics as straight lines of Legendre-dual symplectic potentials.

use serde::{Deserialize, Serialize};

use crate::background::{BackgroundMetric, FubiniStudy};
use crate::error::{Error, Result};
use crate::state::ToricKahlerState;

/// Off-grid evaluation of a state's potential and moment.
///
/// `phi` is extended beyond `[-L, L]` with exponentially decaying slope.
pub(crate) struct Interpolant<'a> {
    profile: FubiniStudy,
    x0: f64,
    h: f64,
    phi: &'a [f64],
    dphi: &'a [f64],
    ddphi: &'a [f64],
}

fn lagrange6(values: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    let pos = (x - x0) / h;
    let start = (pos.floor() as isize - 2).clamp(0, n as isize - 6) as usize;
    let mut acc = 0.0;
    for j in 0..6 {
        let xj = (start + j) as f64;
        let mut l = 1.0;
        for k in 0..6 {
            if k != j {
                let xk = (start + k) as f64;
                l *= (pos - xk) / (xj - xk);
            }
        }
        acc += l * values[start + j];
    }
    acc
}

impl<'a> Interpolant<'a> {
    pub(crate) fn new(state: &'a ToricKahlerState) -> Self {
        let g = state.grid();
        Self {
            profile: state.background().profile(),
            x0: -g.half_width(),
            h: g.spacing(),
            phi: state.phi(),
            dphi: state.phi_derivative(1),
            ddphi: state.phi_derivative(2),
        }
    }

    /// Distance beyond the grid end and the end index, if outside.
    fn outside(&self, x: f64) -> Option<(f64, usize)> {
        if x < self.x0 {
            Some((self.x0 - x, 0))
        } else if x > -self.x0 {
            Some((x + self.x0, self.phi.len() - 1))
        } else {
            None
        }
    }

    /// Beyond the grid `phi'` decays like `exp(-|x|)`, matching value and slope at the end.
    pub(crate) fn phi(&self, x: f64) -> f64 {
        match self.outside(x) {
            None => lagrange6(self.phi, self.x0, self.h, x),
            Some((d, i)) => self.phi[i] + self.dphi[i] * (1.0 - (-d).exp()) * if i == 0 { -1.0 } else { 1.0 },
        }
    }

    fn dphi(&self, x: f64) -> f64 {
        match self.outside(x) {
            None => lagrange6(self.dphi, self.x0, self.h, x),
            Some((d, i)) => self.dphi[i] * (-d).exp(),
        }
    }

    fn ddphi(&self, x: f64) -> f64 {
        match self.outside(x) {
            None => lagrange6(self.ddphi, self.x0, self.h, x),
            Some((d, i)) => self.dphi[i] * (-d).exp() * if i == 0 { 1.0 } else { -1.0 },
        }
    }

    /// Full potential `f0 + 2 phi`.
    pub(crate) fn potential(&self, x: f64) -> f64 {
        self.profile.jet(x)[0] + 2.0 * self.phi(x)
    }

    /// Solve `m(X) = m_ω(zeta)` for `X`.
    fn inverse_moment(&self, zeta: f64) -> Result<f64> {
        let target = self.profile.jet(zeta)[1];
        let resid = |x: f64| {
            let j = self.profile.jet(x);
            (j[1] - target) + 2.0 * self.dphi(x)
        };
        let slope = |x: f64| self.profile.jet(x)[2] + 2.0 * self.ddphi(x);
        let mut x = zeta;
        for _ in 0..30 {
            let (r, d) = (resid(x), slope(x));
            if !(d > 0.0) {
                break;
            }
            let step = (r / d).clamp(-1.0, 1.0);
            x -= step;
            if step.abs() < 1e-13 * (1.0 + x.abs()) {
                return Ok(x);
            }
        }
        bisect(resid, zeta - 40.0, zeta + 40.0).ok_or_else(|| Error::LegendreFailure(format!("moment inversion failed at zeta = {zeta:.4}")))
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> Option<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * (1.0 + mid.abs()) {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Potential at parameter `t` on the toric geodesic from `phi0` to `phi1`.
pub fn toric_geodesic(s0: &ToricKahlerState, s1: &ToricKahlerState, t: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("geodesic parameter must lie in [0, 1], got {t}")));
    }
    if s0.len() != s1.len() {
        return Err(Error::GridMismatch { expected: s0.len(), found: s1.len() });
    }
    if t == 0.0 {
        return Ok(s0.phi().to_vec());
    }
    if t == 1.0 {
        return Ok(s1.phi().to_vec());
    }
    let (i0, i1) = (Interpolant::new(s0), Interpolant::new(s1));
    let profile = s0.background().profile();
    let mut out = Vec::with_capacity(s0.len());
    let mut guess = None;
    for &x in s0.grid().nodes() {
        let coords = |zeta: f64| -> Result<(f64, f64)> { Ok((i0.inverse_moment(zeta)?, i1.inverse_moment(zeta)?)) };
        let g = |zeta: f64| coords(zeta).map(|(a, b)| (1.0 - t) * a + t * b - x);
        let mut zeta: f64 = guess.unwrap_or(x);
        let mut converged = false;
        for _ in 0..50 {
            let r = g(zeta)?;
            let e = 1e-6;
            let d = (g(zeta + e)? - g(zeta - e)?) / (2.0 * e);
            if !(d > 0.0) {
                break;
            }
            let step = (r / d).clamp(-2.0, 2.0);
            zeta -= step;
            if step.abs() < 1e-12 * (1.0 + zeta.abs()) {
                converged = true;
                break;
            }
        }
        if !converged {
            let f = |z: f64| g(z).unwrap_or(f64::NAN);
            zeta = bisect(f, x - 40.0, x + 40.0)
                .ok_or_else(|| Error::LegendreFailure(format!("dual coordinate not found at x = {x:.4}")))?;
        }
        let (a, b) = coords(zeta)?;
        let psi = (1.0 - t) * i0.potential(a) + t * i1.potential(b);
        out.push(0.5 * (psi - profile.jet(x)[0]));
        guess = Some(zeta);
    }
    Ok(out)
}

/// Ray `u_s = u_FS + s g` with `g(y) = k (y - c)^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymplecticRay {
    pub center: f64,
    pub stiffness: f64,
}

/// Potential on the background grid whose symplectic potential is `u_FS + s g`.
pub fn legendre_ray(background: &BackgroundMetric, ray: SymplecticRay, s: f64) -> Result<Vec<f64>> {
    if !(ray.stiffness >= 0.0 && s >= 0.0) {
        return Err(Error::LegendreFailure("ray needs a convex perturbation and s >= 0".into()));
    }
    let p = background.profile();
    let g = |y: f64| 0.5 * ray.stiffness * (y - ray.center).powi(2);
    let dg = |y: f64| ray.stiffness * (y - ray.center);
    background
        .grid()
        .nodes()
        .iter()
        .map(|&x| {
            let f = |z: f64| z + s * dg(p.jet(z)[1]) - x;
            let mut z = x;
            for _ in 0..60 {
                let j = p.jet(z);
                let step = f(z) / (1.0 + s * ray.stiffness * j[2]);
                z -= step;
                if step.abs() < 1e-14 * (1.0 + z.abs()) {
                    break;
                }
            }
            if f(z).abs() > 1e-9 {
                return Err(Error::LegendreFailure(format!("ray inversion failed at x = {x:.4}")));
            }
            let y = p.jet(z)[1];
            let psi = p.jet(z)[0] + s * (dg(y) * y - g(y));
            Ok(0.5 * (psi - p.jet(x)[0]))
        })
        .collect()
}
