//! Weighted orthogonal distance regression for straight lines, and the
//! dispersion-track fit built on it.

use crate::dispersion::DispersionConstant;

/// Scatter matrices whose eigenvalues agree to this relative precision have
/// no preferred direction.
pub const ISOTROPY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

impl LineFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Weighted second moments of a point cloud about its weighted centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatter {
    pub weight: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub sxx: f64,
    pub syy: f64,
    pub sxy: f64,
}

impl Scatter {
    pub fn of(points: &[(f64, f64)], weights: &[f64]) -> Option<Self> {
        if points.len() != weights.len() || points.len() < 2 {
            return None;
        }
        let weight: f64 = weights.iter().sum();
        if !(weight > 0.0) || weights.iter().any(|&w| w < 0.0) {
            return None;
        }
        let (mut mx, mut my) = (0.0, 0.0);
        for (&(x, y), &w) in points.iter().zip(weights) {
            mx += w * x;
            my += w * y;
        }
        mx /= weight;
        my /= weight;
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for (&(x, y), &w) in points.iter().zip(weights) {
            let (dx, dy) = (x - mx, y - my);
            sxx += w * dx * dx;
            syy += w * dy * dy;
            sxy += w * dx * dy;
        }
        Some(Self { weight, mean_x: mx, mean_y: my, sxx, syy, sxy })
    }
}

/// Line minimizing the weighted sum of squared perpendicular distances.
///
/// The line passes through the weighted centroid along the principal
/// eigenvector of the 2x2 scatter matrix. Returns `None` when fewer than two
/// distinct points carry weight, when the scatter is isotropic (no preferred
/// direction), or when the best line is vertical.
pub fn linear_odr(points: &[(f64, f64)], weights: &[f64]) -> Option<LineFit> {
    let s = Scatter::of(points, weights)?;
    let trace = s.sxx + s.syy;
    if !(trace > 0.0) {
        return None;
    }
    if (s.sxx - s.syy).abs() <= ISOTROPY_TOL * trace && s.sxy.abs() <= ISOTROPY_TOL * trace {
        return None;
    }
    let half_diff = 0.5 * (s.sxx - s.syy);
    let root = half_diff.hypot(s.sxy);
    // Principal eigenvector (sxy, lambda - sxx) ~ (lambda - syy, sxy); pick the
    // form whose difference does not cancel.
    let slope = if s.syy >= s.sxx {
        if s.sxy == 0.0 {
            return None;
        }
        (root - half_diff) / s.sxy
    } else {
        s.sxy / (root + half_diff)
    };
    if !slope.is_finite() {
        return None;
    }
    Some(LineFit { slope, intercept: s.mean_y - slope * s.mean_x })
}

/// Sum of weighted squared perpendicular distances from `points` to the line.
pub fn orthogonal_residual(line: &LineFit, points: &[(f64, f64)], weights: &[f64]) -> f64 {
    let norm = 1.0 + line.slope * line.slope;
    points
        .iter()
        .zip(weights)
        .map(|(&(x, y), &w)| {
            let r = y - line.eval(x);
            w * r * r / norm
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmFit {
    /// Dispersion measure, pc cm^-3.
    pub dm: f64,
    /// Arrival time extrapolated to infinite frequency.
    pub t_ref_s: f64,
}

impl DmFit {
    pub fn eval(&self, f_mhz: f64, k: DispersionConstant) -> f64 {
        self.t_ref_s + k.k_dm() * self.dm / (f_mhz * f_mhz)
    }
}

/// Fits `t = t_ref + k_dm * dm / f^2` to `(f_mhz, t_s)` points by running
/// [`linear_odr`] in the coordinate `x = f^-2`.
pub fn quadratic_dm_fit(points: &[(f64, f64)], weights: &[f64], k: DispersionConstant) -> Option<DmFit> {
    let first_f = points.first()?.0;
    if points.iter().all(|p| p.0 == first_f) || points.iter().any(|p| !(p.0 > 0.0)) {
        return None;
    }
    let transformed: Vec<(f64, f64)> = points.iter().map(|&(f, t)| (1.0 / (f * f), t)).collect();
    let line = linear_odr(&transformed, weights)?;
    Some(DmFit { dm: line.slope / k.k_dm(), t_ref_s: line.intercept })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Vec<f64> {
        vec![1.0; n]
    }

    #[test]
    fn exact_line() {
        let pts: Vec<_> = (0..6).map(|i| (i as f64, 3.0 * i as f64 + 1.0)).collect();
        let fit = linear_odr(&pts, &unit(6)).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-9);
        assert!((fit.intercept - 1.0).abs() < 1e-9);
    }

    #[test]
    fn isotropic_cross_is_degenerate() {
        let pts = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)];
        assert_eq!(linear_odr(&pts, &unit(4)), None);
    }

    #[test]
    fn coincident_and_short_inputs() {
        assert_eq!(linear_odr(&[(1.0, 2.0), (1.0, 2.0)], &unit(2)), None);
        assert_eq!(linear_odr(&[(1.0, 2.0)], &unit(1)), None);
        assert_eq!(linear_odr(&[(1.0, 2.0), (2.0, 3.0)], &[0.0, 0.0]), None);
        assert_eq!(linear_odr(&[(1.0, 2.0), (2.0, 3.0)], &unit(3)), None);
    }

    #[test]
    fn vertical_line_is_degenerate_and_horizontal_is_not() {
        assert_eq!(linear_odr(&[(2.0, 0.0), (2.0, 1.0), (2.0, 5.0)], &unit(3)), None);
        let flat = linear_odr(&[(0.0, 4.0), (1.0, 4.0), (5.0, 4.0)], &unit(3)).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert_eq!(flat.intercept, 4.0);
    }

    #[test]
    fn weights_pull_the_line() {
        let pts = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (1.0, 3.0)];
        let light = linear_odr(&pts, &[1.0, 1.0, 1.0, 0.01]).unwrap();
        let heavy = linear_odr(&pts, &[1.0, 1.0, 1.0, 10.0]).unwrap();
        assert!((light.slope - 1.0).abs() < (heavy.slope - 1.0).abs());
    }

    #[test]
    fn flat_dispersion_track() {
        let pts: Vec<_> = [4000.0, 5000.0, 6000.0, 8000.0].iter().map(|&f| (f, 0.25)).collect();
        let fit = quadratic_dm_fit(&pts, &unit(4), DispersionConstant::default()).unwrap();
        assert_eq!(fit.dm, 0.0);
        assert!((fit.t_ref_s - 0.25).abs() < 1e-15);
    }

    #[test]
    fn two_point_dm() {
        let k = DispersionConstant::default();
        let dt = k.k_dm() * 321.0 * (1.0 / 4000.0f64.powi(2) - 1.0 / 8000.0f64.powi(2));
        let fit = quadratic_dm_fit(&[(4000.0, 1.0 + dt), (8000.0, 1.0)], &unit(2), k).unwrap();
        assert!((fit.dm - 321.0).abs() < 1e-9 * 321.0);
    }

    #[test]
    fn single_frequency_is_degenerate() {
        let pts = [(5000.0, 0.1), (5000.0, 0.2)];
        assert_eq!(quadratic_dm_fit(&pts, &unit(2), DispersionConstant::default()), None);
    }
}
