//! Bounded Nelder-Mead simplex minimization with multi-start.
//!
//! Candidates are clipped into the box, so the simplex walk respects bounds
//! without penalty terms of its own; callers add penalties for any other
//! constraints. Multi-start seeds one simplex per point of a coarse grid
//! inside the box and keeps the best converged vertex. Everything is
//! deterministic: identical inputs produce identical evaluation logs.

use crate::error::{Error, Result};

/// Box bounds, one pair per dimension. Equal bounds pin a dimension.
#[derive(Debug, Clone)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::domain("bounds need one (lo, hi) pair per dimension"));
        }
        for (l, h) in lo.iter().zip(hi.iter()) {
            if !(l.is_finite() && h.is_finite() && l <= h) {
                return Err(Error::domain("each bound must satisfy lo <= hi"));
            }
        }
        Ok(Bounds { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn clip(&self, x: &mut [f64]) {
        for ((v, l), h) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*l, *h);
        }
    }
}

/// Termination and budget controls.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// Objective evaluations allowed per start.
    pub max_evals_per_start: usize,
    /// Stop when the simplex objective spread falls below
    /// `f_tol * (1 + |f_best|)`.
    pub f_tol: f64,
    /// Stop when the simplex extent per dimension falls below
    /// `x_tol * (hi - lo)`.
    pub x_tol: f64,
    /// Grid points per dimension for multi-start seeding.
    pub starts_per_dim: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_evals_per_start: 500,
            f_tol: 1e-12,
            x_tol: 1e-10,
            starts_per_dim: 3,
        }
    }
}

/// One recorded objective evaluation.
#[derive(Debug, Clone)]
pub struct EvalRecord {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Best point found by a search.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub log: Vec<EvalRecord>,
}

struct Tracker<'a, F> {
    f: F,
    log: &'a mut Vec<EvalRecord>,
}

impl<'a, F: FnMut(&[f64]) -> f64> Tracker<'a, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        self.log.push(EvalRecord {
            x: x.to_vec(),
            value: v,
        });
        v
    }
}

/// Minimize `f` inside `bounds` starting from `x0`.
pub fn nelder_mead_bounded<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    bounds: &Bounds,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    if x0.len() != bounds.dim() {
        return Err(Error::domain("start point dimension mismatch"));
    }
    let mut log = Vec::new();
    let mut tracker = Tracker { f: &mut f, log: &mut log };
    let best = simplex_search(&mut tracker, x0, bounds, opts);
    let evaluations = log.len();
    Ok(SearchResult {
        x: best.0,
        value: best.1,
        evaluations,
        log,
    })
}

/// Minimize `f` from a grid of `starts_per_dim^dim` start points.
pub fn multi_start_minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    bounds: &Bounds,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    let d = bounds.dim();
    let s = opts.starts_per_dim.max(1);
    let mut log = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let n_starts = s.pow(d as u32);
    for idx in 0..n_starts {
        let mut start = Vec::with_capacity(d);
        let mut rem = idx;
        for k in 0..d {
            let cell = rem % s;
            rem /= s;
            let frac = (cell as f64 + 0.5) / s as f64;
            start.push(bounds.lo[k] + frac * (bounds.hi[k] - bounds.lo[k]));
        }
        let mut tracker = Tracker { f: &mut f, log: &mut log };
        let (x, v) = simplex_search(&mut tracker, &start, bounds, opts);
        if best.as_ref().map_or(true, |(_, bv)| v < *bv) {
            best = Some((x, v));
        }
    }
    let (x, value) = best.expect("at least one start");
    let evaluations = log.len();
    Ok(SearchResult {
        x,
        value,
        evaluations,
        log,
    })
}

fn simplex_search<F: FnMut(&[f64]) -> f64>(
    t: &mut Tracker<'_, F>,
    x0: &[f64],
    bounds: &Bounds,
    opts: &SearchOptions,
) -> (Vec<f64>, f64) {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let d = x0.len();
    let spans: Vec<f64> = bounds
        .lo
        .iter()
        .zip(&bounds.hi)
        .map(|(l, h)| h - l)
        .collect();

    // initial simplex: start point plus one offset vertex per free dimension
    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    let mut start = x0.to_vec();
    bounds.clip(&mut start);
    verts.push(start.clone());
    for k in 0..d {
        let mut v = start.clone();
        let step = 0.10 * spans[k];
        if step > 0.0 {
            v[k] = if v[k] + step <= bounds.hi[k] {
                v[k] + step
            } else {
                v[k] - step
            };
        }
        verts.push(v);
    }
    let mut vals: Vec<f64> = verts.iter().map(|v| t.eval(v)).collect();
    let mut evals = vals.len();

    loop {
        // order ascending by objective
        let mut order: Vec<usize> = (0..verts.len()).collect();
        order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap_or(std::cmp::Ordering::Equal));
        let verts_sorted: Vec<Vec<f64>> = order.iter().map(|&i| verts[i].clone()).collect();
        let vals_sorted: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
        verts = verts_sorted;
        vals = vals_sorted;

        let f_best = vals[0];
        let f_worst = vals[d];
        if (f_worst - f_best).abs() <= opts.f_tol * (1.0 + f_best.abs()) {
            break;
        }
        let mut tiny = true;
        for k in 0..d {
            let extent = verts
                .iter()
                .map(|v| v[k])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                });
            if extent.1 - extent.0 > opts.x_tol * spans[k] && spans[k] > 0.0 {
                tiny = false;
                break;
            }
        }
        if tiny || evals >= opts.max_evals_per_start {
            break;
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; d];
        for v in verts.iter().take(d) {
            for k in 0..d {
                centroid[k] += v[k] / d as f64;
            }
        }

        let blend = |a: &[f64], b: &[f64], w: f64| -> Vec<f64> {
            let mut out: Vec<f64> = a
                .iter()
                .zip(b)
                .map(|(ca, cb)| ca + w * (ca - cb))
                .collect();
            bounds.clip(&mut out);
            out
        };

        let reflected = blend(&centroid, &verts[d], ALPHA);
        let f_refl = t.eval(&reflected);
        evals += 1;

        if f_refl < vals[0] {
            let expanded = blend(&centroid, &verts[d], GAMMA);
            let f_exp = t.eval(&expanded);
            evals += 1;
            if f_exp < f_refl {
                verts[d] = expanded;
                vals[d] = f_exp;
            } else {
                verts[d] = reflected;
                vals[d] = f_refl;
            }
        } else if f_refl < vals[d - 1] {
            verts[d] = reflected;
            vals[d] = f_refl;
        } else {
            // contract toward the better of worst/reflected
            let (anchor, f_anchor) = if f_refl < vals[d] {
                (reflected.clone(), f_refl)
            } else {
                (verts[d].clone(), vals[d])
            };
            let mut contracted: Vec<f64> = centroid
                .iter()
                .zip(&anchor)
                .map(|(c, a)| c + RHO * (a - c))
                .collect();
            bounds.clip(&mut contracted);
            let f_con = t.eval(&contracted);
            evals += 1;
            if f_con < f_anchor {
                verts[d] = contracted;
                vals[d] = f_con;
            } else {
                // shrink toward the best vertex
                for i in 1..=d {
                    let best = verts[0].clone();
                    for k in 0..d {
                        verts[i][k] = best[k] + SIGMA * (verts[i][k] - best[k]);
                    }
                    bounds.clip(&mut verts[i]);
                    vals[i] = t.eval(&verts[i]);
                    evals += 1;
                }
            }
        }
    }

    let mut best_i = 0;
    for i in 1..vals.len() {
        if vals[i] < vals[best_i] {
            best_i = i;
        }
    }
    (verts[best_i].clone(), vals[best_i])
}
