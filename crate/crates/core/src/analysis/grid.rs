use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logarithmic frequency grid with local refinement around maxima.
///
/// Each refinement level rescans one old grid step on either side of a
/// local maximum at an eight times finer spacing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points_per_decade: usize,
    pub refinement_depth: usize,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        FrequencyGrid {
            omega_min: 1e-4,
            omega_max: 1e4,
            points_per_decade: 64,
            refinement_depth: 3,
        }
    }
}

/// Number of local maxima that get refined.
const MAX_REFINED: usize = 8;
/// Each refinement level resamples the neighbourhood of a maximum this much finer.
const SUBDIVISION: usize = 8;

impl FrequencyGrid {
    pub fn new(omega_min: f64, omega_max: f64, points_per_decade: usize, refinement_depth: usize) -> Result<Self> {
        let g = FrequencyGrid {
            omega_min,
            omega_max,
            points_per_decade,
            refinement_depth,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_min > 0.0 && self.omega_min < self.omega_max && self.omega_max.is_finite()) {
            return Err(Error::Precondition(format!(
                "grid needs 0 < omega_min < omega_max, got [{}, {}]",
                self.omega_min, self.omega_max
            )));
        }
        if self.points_per_decade == 0 {
            return Err(Error::Precondition("points_per_decade must be >= 1".into()));
        }
        Ok(())
    }

    /// Same density and depth on another band.
    pub fn with_range(&self, omega_min: f64, omega_max: f64) -> Result<Self> {
        Self::new(omega_min, omega_max, self.points_per_decade, self.refinement_depth)
    }

    /// Grid spacing in decades.
    pub fn step(&self) -> f64 {
        1.0 / self.points_per_decade as f64
    }

    /// Base points, both ends included.
    pub fn points(&self) -> Vec<f64> {
        let lo = self.omega_min.log10();
        let hi = self.omega_max.log10();
        let n = ((hi - lo) * self.points_per_decade as f64).ceil().max(1.0) as usize;
        (0..=n)
            .map(|k| {
                if k == n {
                    self.omega_max
                } else {
                    10f64.powf(lo + (hi - lo) * k as f64 / n as f64)
                }
            })
            .collect()
    }

    /// Sup of `f` over the grid. `None` values (e.g. points next to a pole)
    /// are skipped; the count is returned in [`Peak::skipped`].
    pub fn maximize<F>(&self, f: F) -> Peak
    where
        F: Fn(f64) -> Option<f64> + Sync,
    {
        let pts = self.points();
        let vals: Vec<Option<f64>> = pts.par_iter().map(|&w| f(w)).collect();
        let skipped = vals.iter().filter(|v| v.is_none()).count();
        let mut best = Peak {
            value: f64::NEG_INFINITY,
            omega: f64::NAN,
            skipped,
        };
        for (w, v) in pts.iter().zip(&vals) {
            if let Some(v) = v {
                if *v > best.value {
                    best.value = *v;
                    best.omega = *w;
                }
            }
        }
        if self.refinement_depth == 0 {
            return best;
        }
        // Local maxima of the sampled curve, largest first.
        let get = |i: usize| vals[i].unwrap_or(f64::NEG_INFINITY);
        let mut maxima: Vec<usize> = (0..pts.len())
            .filter(|&i| {
                let v = get(i);
                v.is_finite() && (i == 0 || v >= get(i - 1)) && (i + 1 == pts.len() || v >= get(i + 1))
            })
            .collect();
        maxima.sort_by(|&a, &b| get(b).total_cmp(&get(a)));
        maxima.truncate(MAX_REFINED);
        let step = if pts.len() > 1 {
            (pts[1] / pts[0]).log10()
        } else {
            self.step()
        };
        let lo = self.omega_min.log10();
        let hi = self.omega_max.log10();
        let refined: Vec<(f64, f64)> = maxima
            .par_iter()
            .map(|&i| {
                let mut c = pts[i].log10();
                let mut v = get(i);
                let mut h = step;
                for _ in 0..self.refinement_depth {
                    let center = c;
                    let sub = h / SUBDIVISION as f64;
                    for k in 1..=SUBDIVISION {
                        for cand in [center - sub * k as f64, center + sub * k as f64] {
                            if cand < lo || cand > hi {
                                continue;
                            }
                            if let Some(fv) = f(10f64.powf(cand)) {
                                if fv > v {
                                    v = fv;
                                    c = cand;
                                }
                            }
                        }
                    }
                    h = sub;
                }
                (v, 10f64.powf(c))
            })
            .collect();
        for (v, w) in refined {
            if v > best.value {
                best.value = v;
                best.omega = w;
            }
        }
        best
    }
}

/// Result of a sup over frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub value: f64,
    pub omega: f64,
    pub skipped: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_log_spaced_and_cover_the_range() {
        let g = FrequencyGrid::new(1e-2, 1e2, 10, 0).unwrap();
        let p = g.points();
        assert_eq!(p.len(), 41);
        assert_eq!(p[0], 1e-2);
        assert_eq!(*p.last().unwrap(), 1e2);
        let r = p[1] / p[0];
        for w in p.windows(2) {
            assert!((w[1] / w[0] - r).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(FrequencyGrid::new(0.0, 1.0, 10, 0).is_err());
        assert!(FrequencyGrid::new(2.0, 1.0, 10, 0).is_err());
        assert!(FrequencyGrid::new(1.0, 2.0, 0, 0).is_err());
    }

    #[test]
    fn refinement_sharpens_the_peak() {
        // Narrow resonance at w = 1.2345.
        let f = |w: f64| Some(1.0 / ((w - 1.2345).powi(2) + 1e-6));
        let coarse = FrequencyGrid::new(1e-2, 1e2, 16, 0).unwrap().maximize(f);
        let fine = FrequencyGrid::new(1e-2, 1e2, 16, 4).unwrap().maximize(f);
        assert!(fine.value > coarse.value);
        assert!((fine.omega - 1.2345).abs() < 2e-3);
    }

    #[test]
    fn skipped_points_are_counted() {
        let g = FrequencyGrid::new(0.1, 10.0, 4, 1).unwrap();
        let p = g.maximize(|w| (w < 1.0).then_some(w));
        assert!(p.skipped > 0);
        assert!(p.value < 1.0);
    }
}
