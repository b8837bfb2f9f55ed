use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::surface::RateSurface;

/// `p(l1, l2) = 2^{-max(B1bar l1 / 2 + B2bar l2 / 2 + c1, B3bar l2 + c2)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFit {
    #[serde(rename = "B1bar")]
    pub b1: f64,
    #[serde(rename = "B2bar")]
    pub b2: f64,
    #[serde(rename = "B3bar")]
    pub b3: f64,
    pub c1: f64,
    pub c2: f64,
    pub dominates: bool,
}

impl SurfaceFit {
    /// `-log2 p`.
    pub fn exponent(&self, l1: usize, l2: usize) -> f64 {
        let (a, b) = (l1 as f64, l2 as f64);
        (self.b1 * a / 2.0 + self.b2 * b / 2.0 + self.c1).max(self.b3 * b + self.c2)
    }

    pub fn eval(&self, l1: usize, l2: usize) -> f64 {
        (-self.exponent(l1, l2)).exp2()
    }
}

/// Slope and intercept of the least-squares line through `pts`.
pub fn least_squares_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Least squares for `y = a x1 + b x2 + c`.
fn fit_plane(pts: &[(f64, f64, f64)]) -> Option<[f64; 3]> {
    if pts.len() < 3 {
        return None;
    }
    let mut m = [[0.0; 4]; 3];
    for &(x1, x2, y) in pts {
        let row = [x1, x2, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            m[i][3] += row[i] * y;
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 * (1.0 + m[col][col].abs()) {
            return None;
        }
        m.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..4 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

struct Candidate {
    plane: [f64; 3],
    line: (f64, f64),
    sse: f64,
}

/// Alternating piecewise fit from one initial partition; `second[i]` marks
/// points assigned to the `l2`-only piece.
fn refine(pts: &[(f64, f64, f64)], mut second: Vec<bool>) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    for _ in 0..50 {
        let first_pts: Vec<_> = pts.iter().zip(&second).filter(|(_, s)| !**s).map(|(p, _)| *p).collect();
        let second_pts: Vec<_> = pts.iter().zip(&second).filter(|(_, s)| **s).map(|p| (p.0 .1, p.0 .2)).collect();
        let plane = fit_plane(&first_pts).or_else(|| fit_plane(pts))?;
        let line = least_squares_line(&second_pts)
            .or_else(|| {
                let all: Vec<_> = pts.iter().map(|p| (p.1, p.2)).collect();
                least_squares_line(&all)
            })
            .unwrap_or((0.0, f64::NEG_INFINITY));
        let predict = |p: &(f64, f64, f64)| {
            let a = plane[0] * p.0 + plane[1] * p.1 + plane[2];
            let b = line.0 * p.1 + line.1;
            (a, b)
        };
        let sse: f64 = pts.iter().map(|p| {
            let (a, b) = predict(p);
            (a.max(b) - p.2).powi(2)
        }).sum();
        let next: Vec<bool> = pts.iter().map(|p| {
            let (a, b) = predict(p);
            b > a
        }).collect();
        let improved = best.as_ref().is_none_or(|b| sse < b.sse - 1e-15);
        if improved {
            best = Some(Candidate { plane, line, sse });
        }
        if next == second || !improved {
            break;
        }
        second = next;
    }
    best
}

/// Piecewise least-squares fit of `-log2 e_F` to the max of a plane and an
/// `l2`-only line, with both intercepts lowered until `p >= e_F` holds on
/// every grid point.
pub fn fit_dominating_surface(surface: &RateSurface) -> Result<SurfaceFit> {
    let pts: Vec<(f64, f64, f64)> = surface
        .points
        .iter()
        .filter(|p| p.ef > 0.0 && p.ef.is_finite())
        .map(|p| (p.l1 as f64, p.l2 as f64, -p.ef.log2()))
        .collect();
    if pts.len() < 6 {
        return Err(Error::DegenerateSurface(format!(
            "{} positive points, at least 6 needed",
            pts.len()
        )));
    }
    let mut starts = vec![vec![false; pts.len()]];
    for slope in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
        for offset in [-1.0, 0.0, 1.0, 2.0] {
            starts.push(pts.iter().map(|p| p.0 <= slope * p.1 + offset).collect());
        }
    }
    let best = starts
        .into_iter()
        .filter_map(|s| refine(&pts, s))
        .min_by(|a, b| a.sse.total_cmp(&b.sse))
        .ok_or_else(|| Error::DegenerateSurface("no partition admits a fit".into()))?;
    let [a1, a2, _] = best.plane;
    let b3 = best.line.0;
    let c1 = pts.iter().map(|p| p.2 - a1 * p.0 - a2 * p.1).fold(f64::INFINITY, f64::min);
    let c2 = pts.iter().map(|p| p.2 - b3 * p.1).fold(f64::INFINITY, f64::min);
    let mut fit = SurfaceFit {
        b1: 2.0 * a1,
        b2: 2.0 * a2,
        b3,
        c1,
        c2,
        dominates: false,
    };
    fit.dominates = surface
        .points
        .iter()
        .all(|p| fit.eval(p.l1, p.l2) >= p.ef * (1.0 - 1e-12));
    Ok(fit)
}
