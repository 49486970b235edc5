//! Local maximization in the 2-D log-allocation box: a Nelder-Mead simplex
//! search followed by a projected Newton polish on the analytic gradient.

type Point = [f64; 2];

#[derive(Debug, Clone, Copy)]
pub(crate) struct LogBox {
    pub lo: f64,
    pub hi: f64,
}

impl LogBox {
    pub(crate) fn project(&self, z: Point) -> Point {
        [z[0].clamp(self.lo, self.hi), z[1].clamp(self.lo, self.hi)]
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Found {
    pub z: Point,
    pub value: f64,
}

/// Treats NaN as worse than anything.
fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn add(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

pub(crate) fn nelder_mead<F: Fn(Point) -> f64>(
    f: &F,
    start: Point,
    bounds: LogBox,
    step: f64,
    f_tol: f64,
    max_evals: usize,
) -> Found {
    let start = bounds.project(start);
    let mut verts = [start, start, start];
    for (k, v) in verts.iter_mut().skip(1).enumerate() {
        // Step inward when the start sits on the upper bound.
        let dir = if start[k] + step > bounds.hi {
            -step
        } else {
            step
        };
        v[k] += dir;
    }
    let mut vals = verts.map(|v| score(f(v)));
    let mut evals = 3;

    loop {
        // Order best (highest) first.
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        verts = idx.map(|k| verts[k]);
        vals = idx.map(|k| vals[k]);

        let spread = (vals[0] - vals[2]).abs();
        let diam = verts[1..]
            .iter()
            .map(|v| (v[0] - verts[0][0]).abs().max((v[1] - verts[0][1]).abs()))
            .fold(0.0, f64::max);
        let flat = spread <= f_tol * (1.0 + vals[0].abs());
        if (flat && diam <= 1e-4) || diam <= 1e-12 || evals >= max_evals {
            break;
        }

        let centroid = [
            (verts[0][0] + verts[1][0]) / 2.0,
            (verts[0][1] + verts[1][1]) / 2.0,
        ];
        let worst = verts[2];
        let reflected = bounds.project(add(centroid, worst, -1.0));
        let f_r = score(f(reflected));
        evals += 1;

        if f_r > vals[0] {
            let expanded = bounds.project(add(centroid, worst, -2.0));
            let f_e = score(f(expanded));
            evals += 1;
            if f_e > f_r {
                verts[2] = expanded;
                vals[2] = f_e;
            } else {
                verts[2] = reflected;
                vals[2] = f_r;
            }
            continue;
        }
        if f_r > vals[1] {
            verts[2] = reflected;
            vals[2] = f_r;
            continue;
        }
        let outside = f_r > vals[2];
        let contracted = if outside {
            add(centroid, reflected, 0.5)
        } else {
            add(centroid, worst, 0.5)
        };
        let f_c = score(f(contracted));
        evals += 1;
        let accept = if outside { f_c >= f_r } else { f_c > vals[2] };
        if accept {
            verts[2] = contracted;
            vals[2] = f_c;
            continue;
        }
        // Shrink toward the best vertex.
        for k in 1..3 {
            verts[k] = add(verts[0], verts[k], 0.5);
            vals[k] = score(f(verts[k]));
        }
        evals += 2;
    }

    let best = (0..3)
        .max_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    Found {
        z: verts[best],
        value: vals[best],
    }
}

/// Projected Newton ascent from `from`. The Hessian comes from central
/// differences of the analytic gradient. Never returns a worse point.
pub(crate) fn newton_polish<F: Fn(Point) -> (f64, Point)>(
    f: &F,
    from: Found,
    bounds: LogBox,
    max_iters: usize,
) -> Found {
    const H: f64 = 1e-5;
    let mut z = from.z;
    let (mut val, mut g) = f(z);
    if score(val) < from.value {
        return from;
    }

    for _ in 0..max_iters {
        let free = [0, 1].map(|k| {
            let at_lo = z[k] <= bounds.lo && g[k] <= 0.0;
            let at_hi = z[k] >= bounds.hi && g[k] >= 0.0;
            !(at_lo || at_hi)
        });
        let g_norm = (0..2)
            .filter(|&k| free[k])
            .map(|k| g[k].abs())
            .fold(0.0, f64::max);
        if g_norm == 0.0 || !g_norm.is_finite() {
            break;
        }

        let mut hess = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[k] += H;
            zm[k] -= H;
            let gp = f(zp).1;
            let gm = f(zm).1;
            for m in 0..2 {
                hess[m][k] = (gp[m] - gm[m]) / (2.0 * H);
            }
        }
        let off = 0.5 * (hess[0][1] + hess[1][0]);
        hess[0][1] = off;
        hess[1][0] = off;

        let step = newton_step(&hess, &g, free);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = bounds.project([z[0] + t * step[0], z[1] + t * step[1]]);
            let (cv, cg) = f(cand);
            let cg_norm = (0..2)
                .filter(|&k| free[k])
                .map(|k| cg[k].abs())
                .fold(0.0, f64::max);
            let better =
                cv > val || (cv >= val - 4.0 * f64::EPSILON * val.abs() && cg_norm < g_norm);
            if better && cv.is_finite() {
                let moved = (cand[0] - z[0]).abs().max((cand[1] - z[1]).abs());
                z = cand;
                val = cv;
                g = cg;
                accepted = moved > 0.0;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    if val >= from.value {
        Found { z, value: val }
    } else {
        from
    }
}

/// Newton direction on the free coordinates when the Hessian is negative
/// definite there, otherwise a scaled gradient step.
fn newton_step(hess: &[[f64; 2]; 2], g: &Point, free: [bool; 2]) -> Point {
    let mut step = [0.0; 2];
    match free {
        [true, true] => {
            let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
            if hess[0][0] < 0.0 && det > 0.0 {
                step[0] = -(hess[1][1] * g[0] - hess[0][1] * g[1]) / det;
                step[1] = -(-hess[1][0] * g[0] + hess[0][0] * g[1]) / det;
            } else {
                let scale = hess[0][0].abs().max(hess[1][1].abs()).max(1e-12);
                step = [g[0] / scale, g[1] / scale];
            }
        }
        [true, false] | [false, true] => {
            let k = if free[0] { 0 } else { 1 };
            let h = hess[k][k];
            step[k] = if h < 0.0 {
                -g[k] / h
            } else {
                g[k] / h.abs().max(1e-12)
            };
        }
        [false, false] => {}
    }
    // Cap the step at a factor of e^4 in either coordinate.
    let len = step[0].abs().max(step[1].abs());
    if len > 4.0 {
        step = [step[0] * 4.0 / len, step[1] * 4.0 / len];
    }
    step
}
