use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::lti::StateSpace;

pub const HINF_REL_TOL: f64 = 1e-7;
/// Default frequency window for responses, in rad/s.
pub const DEFAULT_GRID: (f64, f64, usize) = (1e-2, 1e2, 400);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HinfResult {
    pub value: f64,
    pub peak_frequency: f64,
    pub iterations: usize,
}

/// `‖G‖_∞` of a stable strictly proper system by the level-set (Hamiltonian) iteration.
pub fn hinf_norm(sys: &StateSpace) -> Result<f64> {
    Ok(hinf_norm_detailed(sys, HINF_REL_TOL)?.value)
}

pub fn hinf_norm_detailed(sys: &StateSpace, tol: f64) -> Result<HinfResult> {
    let n = sys.order();
    if n == 0 || sys.b.amax() == 0.0 || sys.c.amax() == 0.0 {
        return Ok(HinfResult { value: 0.0, peak_frequency: 0.0, iterations: 0 });
    }
    let poles = linalg::eigenvalues(&sys.a)?;
    let abscissa = poles.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if abscissa >= 0.0 {
        return Err(Error::Unstable(format!("spectral abscissa {abscissa:e}")));
    }
    let mut lb = 0.0;
    let mut peak = 0.0;
    let consider = |w: f64, lb: &mut f64, peak: &mut f64| -> Result<()> {
        let s = sys.sigma_max(w)?;
        if s > *lb {
            *lb = s;
            *peak = w;
        }
        Ok(())
    };
    consider(0.0, &mut lb, &mut peak)?;
    for p in &poles {
        consider(p.norm(), &mut lb, &mut peak)?;
        consider(p.im.abs(), &mut lb, &mut peak)?;
    }
    if lb == 0.0 {
        return Ok(HinfResult { value: 0.0, peak_frequency: 0.0, iterations: 0 });
    }
    // a gain at rounding level of ‖B‖‖C‖/min|Re λ| is a numerically zero system
    let decay = poles.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min);
    if lb <= 100.0 * f64::EPSILON * linalg::norm2(&sys.b) * linalg::norm2(&sys.c) / decay {
        return Ok(HinfResult { value: lb, peak_frequency: peak, iterations: 0 });
    }
    let bbt = &sys.b * sys.b.transpose();
    let ctc = sys.c.transpose() * &sys.c;
    let at = sys.a.transpose();
    let mut iterations = 0;
    for _ in 0..100 {
        iterations += 1;
        let g = (1.0 + 2.0 * tol) * lb;
        let mut h = Mat::zeros(2 * n, 2 * n);
        h.view_mut((0, 0), (n, n)).copy_from(&sys.a);
        h.view_mut((0, n), (n, n)).copy_from(&(&bbt / g));
        h.view_mut((n, 0), (n, n)).copy_from(&(-&ctc / g));
        h.view_mut((n, n), (n, n)).copy_from(&(-&at));
        let hn = h.norm();
        let mut omegas: Vec<f64> =
            linalg::eigenvalues(&h)?.iter().filter(|z| z.re.abs() <= 1e-8 * (hn + z.norm())).map(|z| z.im).collect();
        if omegas.is_empty() {
            break;
        }
        omegas.sort_by(f64::total_cmp);
        let before = lb;
        for w in omegas.windows(2) {
            consider(0.5 * (w[0] + w[1]).abs(), &mut lb, &mut peak)?;
        }
        for &w in &omegas {
            consider(w.abs(), &mut lb, &mut peak)?;
        }
        if lb <= before * (1.0 + 0.5 * tol) {
            break;
        }
    }
    Ok(HinfResult { value: lb, peak_frequency: peak, iterations })
}

/// `points` logarithmically spaced frequencies in `[wmin, wmax]`.
pub fn log_grid(wmin: f64, wmax: f64, points: usize) -> Result<Vec<f64>> {
    if !(wmin > 0.0) || !wmax.is_finite() || points == 0 {
        return Err(Error::Dimension("frequency grid needs 0 < wmin, finite wmax and at least one point".into()));
    }
    if points == 1 {
        return Ok(vec![wmin]);
    }
    if !(wmin < wmax) {
        return Err(Error::Dimension("wmin must be smaller than wmax".into()));
    }
    let (a, b) = (wmin.log10(), wmax.log10());
    Ok((0..points).map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)).collect())
}

/// `σ_max(G(jω))` on the given grid.
pub fn frequency_response(sys: &StateSpace, omegas: &[f64]) -> Result<Vec<f64>> {
    omegas.iter().map(|&w| sys.sigma_max(w)).collect()
}

/// Largest `σ_max(G(jω))` over a grid; a lower bound on the H∞ norm.
pub fn grid_peak(sys: &StateSpace, omegas: &[f64]) -> Result<f64> {
    Ok(frequency_response(sys, omegas)?.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;

    #[test]
    fn first_order_lag() {
        let s = StateSpace::new(from_rows(&[&[-1.0]]), from_rows(&[&[1.0]]), from_rows(&[&[1.0]])).unwrap();
        assert!((hinf_norm(&s).unwrap() - 1.0).abs() < 1e-9);
        assert!((frequency_response(&s, &[1.0]).unwrap()[0] - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn band_pass_peak() {
        // 2s / (s^2 + 4s + 2)
        let s = StateSpace::new(
            from_rows(&[&[0.0, 1.0], &[-2.0, -4.0]]),
            from_rows(&[&[0.0], &[1.0]]),
            from_rows(&[&[0.0, 2.0]]),
        )
        .unwrap();
        let r = hinf_norm_detailed(&s, HINF_REL_TOL).unwrap();
        assert!((r.value - 0.5).abs() < 1e-7, "{r:?}");
        assert!((r.peak_frequency - 2f64.sqrt()).abs() < 1e-2, "{r:?}");
    }

    #[test]
    fn resonant_peak_matches_grid() {
        // lightly damped oscillator 1 / (s^2 + 0.02 s + 1), peak ~ 50 near ω = 1
        let s = StateSpace::new(
            from_rows(&[&[0.0, 1.0], &[-1.0, -0.02]]),
            from_rows(&[&[0.0], &[1.0]]),
            from_rows(&[&[1.0, 0.0]]),
        )
        .unwrap();
        let h = hinf_norm(&s).unwrap();
        let grid: Vec<f64> = (0..200001).map(|i| 0.9 + 0.2 * i as f64 / 200000.0).collect();
        let g = grid_peak(&s, &grid).unwrap();
        assert!(h >= g * (1.0 - 1e-9) && h <= g * (1.0 + 1e-6), "{h} {g}");
    }

    #[test]
    fn unstable_rejected() {
        let s = StateSpace::new(from_rows(&[&[1.0]]), from_rows(&[&[1.0]]), from_rows(&[&[1.0]])).unwrap();
        assert!(hinf_norm(&s).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(log_grid(1.0, 0.5, 10).is_err());
        assert_eq!(log_grid(1.0, 10.0, 1).unwrap(), vec![1.0]);
        let g = log_grid(1e-2, 1e2, 5).unwrap();
        assert!((g[2] - 1.0).abs() < 1e-12);
    }
}
