//! Complex band structure of an infinitely repeated slice along the stacking
//! direction.
//!
//! With forward/backward amplitudes `(f, b)` on the two faces of the slice
//! and the Bloch condition `(f, b)_right = λ (f, b)_left`, the slice
//! S-matrix gives the pencil
//! `[[Tpp, 0], [-Rpm, I]] x = λ [[I, -Rmp], [0, Tmm]] x`,
//! solved without inverting any block. `kz = -i ln(λ) / d`.

use crate::error::{Error, Result};
use crate::lattice::Vec2;
use crate::layer::LayerS;
use crate::mie::Material;
use crate::numeric::{generalized_eigen, one_norm, CMat, C64, I, ZERO};
use crate::stack::{elements_smatrix, stack_beams, Element, Exit, NumericalControls, StackDescription};

/// Eigenvalues with `| |λ| - 1 |` below this are propagating modes.
pub const PROPAGATING_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BandPoint {
    pub omega: f64,
    pub kpar: Vec2,
    pub period: f64,
    /// Bloch wavevectors with `Im kz >= 0`; `Re kz` in `(-π/d, π/d]`.
    pub kz: Vec<C64>,
    pub propagating: Vec<bool>,
    /// Eigenvectors (columns) matching `kz`.
    pub modes: CMat,
}

impl BandPoint {
    pub fn has_propagating(&self) -> bool {
        self.propagating.iter().any(|p| *p)
    }

    /// Smallest decay rate `Im kz` among the evanescent modes.
    pub fn min_decay(&self) -> Option<f64> {
        self.kz
            .iter()
            .zip(&self.propagating)
            .filter(|(_, p)| !**p)
            .map(|(k, _)| k.im)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
    }
}

/// All finite, nonzero eigenvalues `λ` of the slice pencil with their
/// eigenvectors.
pub fn transfer_eigenvalues(unit: &LayerS) -> Result<(Vec<C64>, CMat)> {
    if unit.left.eps != unit.right.eps {
        return Err(Error::invalid("band slice must have the same medium on both sides"));
    }
    let n = unit.dim();
    let mut a = CMat::zeros(2 * n, 2 * n);
    let mut b = CMat::zeros(2 * n, 2 * n);
    a.view_mut((0, 0), (n, n)).copy_from(&unit.tpp);
    a.view_mut((n, 0), (n, n)).copy_from(&(-&unit.rpm));
    b.view_mut((0, n), (n, n)).copy_from(&(-&unit.rmp));
    b.view_mut((n, n), (n, n)).copy_from(&unit.tmm);
    for i in 0..n {
        a[(n + i, n + i)] += C64::new(1.0, 0.0);
        b[(i, i)] += C64::new(1.0, 0.0);
    }
    let (alpha, beta, vr) = generalized_eigen(&a, &b).map_err(|e| {
        Error::Eigen(format!(
            "{e}; block norms |Tpp| = {:.3e}, |Tmm| = {:.3e}, |Rpm| = {:.3e}, |Rmp| = {:.3e}",
            one_norm(&unit.tpp),
            one_norm(&unit.tmm),
            one_norm(&unit.rpm),
            one_norm(&unit.rmp)
        ))
    })?;
    let scale = one_norm(&a).max(one_norm(&b)).max(1.0);
    let mut lam = Vec::new();
    let mut cols = Vec::new();
    for i in 0..2 * n {
        if beta[i].norm() <= 1e-14 * scale || alpha[i].norm() <= 1e-14 * scale {
            continue;
        }
        lam.push(alpha[i] / beta[i]);
        cols.push(i);
    }
    let vecs = CMat::from_fn(2 * n, cols.len(), |r, c| vr[(r, cols[c])]);
    Ok((lam, vecs))
}

/// `kz = -i ln(λ) / d` on the principal branch.
pub fn bloch_kz(lambda: C64, period: f64) -> C64 {
    -I * lambda.ln() / period
}

pub fn complex_bands(unit: &LayerS, period: f64, omega: f64, kpar: Vec2) -> Result<BandPoint> {
    if !(period > 0.0) {
        return Err(Error::invalid(format!("period {period} must be > 0")));
    }
    let (lam, vecs) = transfer_eigenvalues(unit)?;
    let mut kz = Vec::new();
    let mut propagating = Vec::new();
    let mut keep = Vec::new();
    for (i, l) in lam.iter().enumerate() {
        let prop = (l.norm() - 1.0).abs() < PROPAGATING_TOL;
        let k = bloch_kz(*l, period);
        // of each decaying/growing pair keep the decaying member
        if prop || k.im > 0.0 {
            kz.push(if prop { C64::new(k.re, 0.0) } else { k });
            propagating.push(prop);
            keep.push(i);
        }
    }
    let modes = CMat::from_fn(vecs.nrows(), keep.len(), |r, c| vecs[(r, keep[c])]);
    Ok(BandPoint {
        omega,
        kpar,
        period,
        kz,
        propagating,
        modes,
    })
}

/// Bands of the slice `els` repeated inside `host`, at `(omega, kpar)`.
pub fn slice_bands(
    els: &[Element],
    host: Material,
    period: f64,
    omega: f64,
    kpar: Vec2,
    controls: &NumericalControls,
) -> Result<BandPoint> {
    let desc = StackDescription {
        incident: host,
        elements: els.to_vec(),
        exit: Exit::HalfSpace(host),
    };
    let beams = stack_beams(&desc, omega, kpar, controls)?;
    let (unit, _) = elements_smatrix(&desc, els, &beams, controls)?;
    complex_bands(&unit, period, omega, beams.kpar)
}

/// Maximal frequency intervals of a monotone scan without propagating
/// modes, each edge refined by bisection to `tol` using `eval`.
pub fn gap_edges(scan: &[BandPoint], eval: &dyn Fn(f64) -> Result<BandPoint>, tol: f64) -> Result<Vec<(f64, f64)>> {
    for w in scan.windows(2) {
        if !(w[1].omega > w[0].omega) {
            return Err(Error::invalid("band scan must be strictly increasing in omega"));
        }
    }
    let refine = |mut inside: f64, mut outside: f64| -> Result<f64> {
        while (outside - inside).abs() > tol {
            let mid = 0.5 * (inside + outside);
            if eval(mid)?.has_propagating() {
                outside = mid;
            } else {
                inside = mid;
            }
        }
        Ok(0.5 * (inside + outside))
    };
    let mut gaps = Vec::new();
    let mut i = 0;
    while i < scan.len() {
        if scan[i].has_propagating() {
            i += 1;
            continue;
        }
        let start = i;
        while i < scan.len() && !scan[i].has_propagating() {
            i += 1;
        }
        let end = i - 1;
        let lo = if start > 0 {
            refine(scan[start].omega, scan[start - 1].omega)?
        } else {
            scan[start].omega
        };
        let hi = if i < scan.len() {
            refine(scan[end].omega, scan[i].omega)?
        } else {
            scan[end].omega
        };
        gaps.push((lo, hi));
    }
    Ok(gaps)
}

/// Orders the modes of each scan point to follow the previous point by
/// maximal eigenvector overlap. Returns, per point, the permutation into
/// `kz`; points whose basis size changes start a fresh ordering.
pub fn connect_bands(scan: &[BandPoint]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(scan.len());
    for (p, pt) in scan.iter().enumerate() {
        let n = pt.kz.len();
        let fresh: Vec<usize> = (0..n).collect();
        if p == 0 {
            out.push(fresh);
            continue;
        }
        let prev = &scan[p - 1];
        if prev.modes.nrows() != pt.modes.nrows() || prev.kz.len() != n {
            out.push(fresh);
            continue;
        }
        let prev_order = &out[p - 1];
        let norm = |m: &CMat, c: usize| m.column(c).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        let mut score = vec![vec![0.0; n]; n];
        for (slot, &a) in prev_order.iter().enumerate() {
            for b in 0..n {
                let mut s = ZERO;
                for r in 0..pt.modes.nrows() {
                    s += prev.modes[(r, a)].conj() * pt.modes[(r, b)];
                }
                score[slot][b] = s.norm() / (norm(&prev.modes, a) * norm(&pt.modes, b));
            }
        }
        // greedy assignment by descending overlap
        let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|s| (0..n).map(move |b| (s, b))).collect();
        pairs.sort_by(|x, y| score[y.0][y.1].partial_cmp(&score[x.0][x.1]).unwrap());
        let mut order = vec![usize::MAX; n];
        let mut used = vec![false; n];
        for (s, b) in pairs {
            if order[s] == usize::MAX && !used[b] {
                order[s] = b;
                used[b] = true;
            }
        }
        out.push(order);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{beam_set, BeamSet, Lattice2D};
    use crate::layer::gap_smatrix;
    use crate::mie::Material;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn beams(omega: f64, m: &Material) -> Arc<BeamSet> {
        Arc::new(beam_set(&Lattice2D::square(1.0), omega, [0.0, 0.0], m, 14.0).unwrap())
    }

    #[test]
    fn free_space_dispersion() {
        let vac = Material::vacuum();
        let (omega, d) = (0.8, 1.0);
        let b = beams(omega, &vac);
        let bp = complex_bands(&gap_smatrix(d, &b, &vac).unwrap(), d, omega, [0.0, 0.0]).unwrap();
        let prop: Vec<f64> = bp
            .kz
            .iter()
            .zip(&bp.propagating)
            .filter(|(_, p)| **p)
            .map(|(k, _)| k.re)
            .collect();
        assert_eq!(prop.len(), 4);
        for k in prop {
            assert!((k.abs() - omega).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_medium_folds() {
        let m = Material::real(4.0);
        let (omega, d) = (2.0, 1.0);
        let b = beams(omega, &m);
        let bp = complex_bands(&gap_smatrix(d, &b, &m).unwrap(), d, omega, [0.0, 0.0]).unwrap();
        let want = 2.0 * omega - 2.0 * PI / d;
        let hits = bp
            .kz
            .iter()
            .filter(|k| (k.re.abs() - want.abs()).abs() < 1e-10 && k.im.abs() < 1e-12)
            .count();
        assert_eq!(hits, 4);
    }

    #[test]
    fn free_space_has_no_gap() {
        let vac = Material::vacuum();
        let eval = |w: f64| {
            let b = beams(w, &vac);
            complex_bands(&gap_smatrix(1.0, &b, &vac).unwrap(), 1.0, w, [0.0, 0.0])
        };
        let scan: Vec<BandPoint> = (1..20).map(|i| eval(0.2 * i as f64).unwrap()).collect();
        assert!(gap_edges(&scan, &eval, 1e-4).unwrap().is_empty());
    }
}
