use rayon::prelude::*;

use crate::error::Result;
use crate::grid::Grid;
use crate::linalg::BandMatrix;
use crate::state::ToricKahlerState;

use super::residual::{end_scales, row_scale, system_residual, NodeData, END_ROWS};
use super::PathResidualConfig;

/// Half-bandwidth of the discrete system: two chained fourth-order stencils with closures.
pub const JACOBIAN_BANDWIDTH: usize = 8;

const COLORS: usize = 2 * JACOBIAN_BANDWIDTH + 1;

/// Per-node difference steps: a relative density change of about `1e-6`.
fn fd_steps(config: &PathResidualConfig) -> Vec<f64> {
    let bg = &config.context.background;
    let h = bg.grid().spacing();
    bg.density().iter().map(|r| 1e-6 * h * h * r).collect()
}

fn groups(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..COLORS).map(move |c| (c..n).step_by(COLORS).collect())
}

/// Central-difference Jacobian of the scaled system, probing columns in interleaved groups.
///
/// Entries carry independent rounding errors, so products with smooth vectors lose accuracy
/// through cancellation; the Newton iteration uses [`chain_rule_jacobian`] instead.
pub fn fd_jacobian(phi: &[f64], config: &PathResidualConfig) -> Result<BandMatrix> {
    let bg = &config.context.background;
    bg.grid().check_len(phi)?;
    let scale = row_scale(config);
    let n = phi.len();
    let steps = fd_steps(config);
    let eval = |cols: &[usize], sign: f64| -> Result<Vec<f64>> {
        let mut p = phi.to_vec();
        for &j in cols {
            p[j] += sign * steps[j];
        }
        let st = ToricKahlerState::build(bg.clone(), p)?;
        Ok(system_residual(&st, config, &scale))
    };
    let columns: Vec<(Vec<usize>, Vec<f64>)> = groups(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|cols| {
            let plus = eval(&cols, 1.0)?;
            let minus = eval(&cols, -1.0)?;
            let diff = plus.iter().zip(&minus).enumerate().map(|(i, (a, b))| (a - b) / (2.0 * steps[owner(&cols, i)])).collect();
            Ok((cols, diff))
        })
        .collect::<Result<_>>()?;
    Ok(scatter(n, columns))
}

/// Column of a group whose band covers row `i`.
fn owner(cols: &[usize], i: usize) -> usize {
    cols.iter().copied().min_by_key(|&j| j.abs_diff(i)).unwrap_or(0)
}

fn scatter(n: usize, columns: Vec<(Vec<usize>, Vec<f64>)>) -> BandMatrix {
    let bw = JACOBIAN_BANDWIDTH;
    let mut out = BandMatrix::zeros(n, bw, bw);
    for (cols, values) in columns {
        for j in cols {
            for i in j.saturating_sub(bw)..(j + bw + 1).min(n) {
                if values[i] != 0.0 {
                    out.set(i, j, values[i]);
                }
            }
        }
    }
    out
}

/// Stencil matrices of `d/dx`, `d²/dx²`, `d³/dx³ = D1 D2` and `d⁴/dx⁴ = D2 D2`.
pub(crate) fn stencils(grid: &Grid) -> [BandMatrix; 4] {
    let n = grid.len();
    let ops: [&dyn Fn(&[f64]) -> Vec<f64>; 4] =
        [&|f| grid.d1(f), &|f| grid.d2(f), &|f| grid.d1(&grid.d2(f)), &|f| grid.d2(&grid.d2(f))];
    ops.map(|op| {
        let columns = groups(n)
            .map(|cols| {
                let mut e = vec![0.0; n];
                for &j in &cols {
                    e[j] = 1.0;
                }
                (cols, op(&e))
            })
            .collect();
        scatter(n, columns)
    })
}

/// Exact Jacobian of the discrete scaled system: pointwise partial derivatives with respect to
/// `(m, ρ, ρ', ρ'')` composed with the stencil matrices.
pub fn chain_rule_jacobian(phi: &[f64], config: &PathResidualConfig) -> Result<BandMatrix> {
    let st = config.context.state(phi.to_vec())?;
    Ok(chain_rule_with(&st, config, &row_scale(config), &stencils(st.grid())))
}

pub(crate) fn chain_rule_with(st: &ToricKahlerState, config: &PathResidualConfig, scale: &[f64], d: &[BandMatrix; 4]) -> BandMatrix {
    let n = st.len();
    let bw = JACOBIAN_BANDWIDTH;
    let mut jac = BandMatrix::zeros(n, bw, bw);
    for i in END_ROWS..n - END_ROWS {
        let partials = NodeData::at(st, config, i).partials(config);
        for j in i.saturating_sub(bw)..(i + bw + 1).min(n) {
            let v: f64 = (0..4).map(|k| 2.0 * partials[k] * d[k].get(i, j)).sum();
            if v != 0.0 {
                jac.set(i, j, scale[i] * v);
            }
        }
    }
    let (left, right) = end_scales(config);
    for k in 0..END_ROWS {
        for (row, node, sign, weight) in [(k, 0, -1.0, left), (n - 1 - k, n - 1, 1.0, right)] {
            for j in node.saturating_sub(bw)..(node + bw + 1).min(n) {
                let v = weight * (d[k + 1].get(node, j) + sign * d[k].get(node, j));
                if v != 0.0 {
                    jac.set(row, j, v);
                }
            }
        }
    }
    jac
}
