//! Derivative-free simplex descent on the unit cube.
//!
//! Trial points that leave `[0, 1]^D` are projected back onto it, so callers
//! map the cube onto their own box. Objective values may be `+inf` to mark
//! points where the objective is undefined.

/// Stopping rules for [`minimize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iters: usize,
    /// Largest vertex distance from the best vertex (infinity norm) at
    /// which the simplex counts as collapsed.
    pub x_tol: f64,
    /// Relative spread of objective values across the simplex.
    pub f_tol: f64,
    /// Objective spread below which the simplex stops regardless of its
    /// size. Zero disables the check.
    pub f_abs_tol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            x_tol: 1e-9,
            f_tol: 1e-12,
            f_abs_tol: 0.0,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<const D: usize> {
    pub x: [f64; D],
    pub f: f64,
    pub iters: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn project<const D: usize>(mut x: [f64; D]) -> [f64; D] {
    for v in &mut x {
        *v = v.clamp(0.0, 1.0);
    }
    x
}

/// `from + coef * (from - to)`, projected.
fn extrapolate<const D: usize>(from: &[f64; D], to: &[f64; D], coef: f64) -> [f64; D] {
    let mut out = [0.0; D];
    for i in 0..D {
        out[i] = from[i] + coef * (from[i] - to[i]);
    }
    project(out)
}

/// Minimises `objective` starting from `start`.
pub fn minimize<const D: usize, F>(mut objective: F, start: [f64; D], opts: &SimplexOptions) -> Minimum<D>
where
    F: FnMut(&[f64; D]) -> f64,
{
    let start = project(start);
    let mut simplex: Vec<([f64; D], f64)> = Vec::with_capacity(D + 1);
    simplex.push((start, objective(&start)));
    for i in 0..D {
        let mut v = start;
        v[i] = if v[i] + opts.initial_step <= 1.0 {
            v[i] + opts.initial_step
        } else {
            v[i] - opts.initial_step
        };
        simplex.push((v, objective(&v)));
    }

    let mut iters = 0;
    let mut converged = false;
    while iters < opts.max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        if !best.is_finite() {
            break;
        }
        if collapsed(&simplex, opts) {
            converged = true;
            break;
        }
        iters += 1;

        let mut centroid = [0.0; D];
        for (v, _) in &simplex[..D] {
            for i in 0..D {
                centroid[i] += v[i] / D as f64;
            }
        }
        let (worst_x, worst_f) = simplex[D];
        let second_worst = simplex[D - 1].1;

        let reflected = extrapolate(&centroid, &worst_x, REFLECT);
        let fr = objective(&reflected);
        if fr < best {
            let expanded = extrapolate(&centroid, &worst_x, EXPAND);
            let fe = objective(&expanded);
            simplex[D] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < second_worst {
            simplex[D] = (reflected, fr);
            continue;
        }

        let (contracted, fc) = if fr < worst_f {
            let c = extrapolate(&centroid, &worst_x, REFLECT * CONTRACT);
            let fc = objective(&c);
            (c, fc)
        } else {
            let c = extrapolate(&centroid, &worst_x, -CONTRACT);
            let fc = objective(&c);
            (c, fc)
        };
        if fc < worst_f.min(fr) {
            simplex[D] = (contracted, fc);
            continue;
        }

        let anchor = simplex[0].0;
        for vertex in simplex.iter_mut().skip(1) {
            let mut v = vertex.0;
            for i in 0..D {
                v[i] = anchor[i] + SHRINK * (v[i] - anchor[i]);
            }
            *vertex = (v, objective(&v));
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex[0];
    Minimum { x, f, iters, converged }
}

fn collapsed<const D: usize>(simplex: &[([f64; D], f64)], opts: &SimplexOptions) -> bool {
    let (best_x, best_f) = simplex[0];
    let f_spread = simplex[D].1 - best_f;
    if f_spread <= opts.f_abs_tol {
        return true;
    }
    if !(f_spread <= opts.f_tol * best_f.abs()) {
        return false;
    }
    simplex[1..].iter().all(|(v, _)| {
        v.iter()
            .zip(best_x.iter())
            .all(|(a, b)| (a - b).abs() <= opts.x_tol)
    })
}
