//! Proximal operator of `τ‖·‖_p` through Moreau's identity and projection
//! onto the unit `ℓ_q` ball.

/// `‖x‖_p`, `p = ∞` allowed.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else if p == 2.0 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else {
        let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Conjugate exponent, `∞ ↔ 1`.
pub fn conjugate(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// Euclidean projection onto `{y : ‖y‖_q ≤ r}` for `q ∈ [1, ∞)`.
pub fn project_lq_ball(x: &[f64], q: f64, r: f64) -> Vec<f64> {
    if lp_norm(x, q) <= r {
        return x.to_vec();
    }
    if q == 2.0 {
        let s = r / lp_norm(x, 2.0);
        return x.iter().map(|v| v * s).collect();
    }
    if q == 1.0 {
        return project_l1_ball(x, r);
    }
    // y_i = sign(x_i) u_i with |x_i| = u_i + μ q u_i^{q−1}; find μ with Σ u^q = r^q.
    let a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let target = r.powf(q);
    let mass = |mu: f64| -> (f64, Vec<f64>) {
        let u: Vec<f64> = a.iter().map(|&ai| solve_coordinate(ai, mu, q)).collect();
        (u.iter().map(|v| v.powf(q)).sum(), u)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while mass(hi).0 > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid).0 > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = mass(hi).1;
    x.iter().zip(u).map(|(v, ui)| v.signum() * ui).collect()
}

/// Root `u ∈ [0, a]` of `u + μ q u^{q−1} = a`.
fn solve_coordinate(a: f64, mu: f64, q: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let h = |u: f64| u + mu * q * u.powf(q - 1.0) - a;
    let (mut lo, mut hi) = (0.0f64, a);
    let mut u = a;
    for _ in 0..200 {
        let hu = h(u);
        if hu > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let dh = 1.0 + mu * q * (q - 1.0) * u.powf(q - 2.0);
        let mut next = u - hu / dh;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 1e-16 * a || hi - lo <= 1e-16 * a {
            return next;
        }
        u = next;
    }
    u
}

/// Projection onto the `ℓ_1` ball of radius `r` by sorting.
pub fn project_l1_ball(x: &[f64], r: f64) -> Vec<f64> {
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    if a.iter().sum::<f64>() <= r {
        return x.to_vec();
    }
    a.sort_by(|p, q| q.total_cmp(p));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in a.iter().enumerate() {
        cum += v;
        let th = (cum - r) / (k + 1) as f64;
        if v > th {
            theta = th;
        } else {
            break;
        }
    }
    x.iter().map(|v| v.signum() * (v.abs() - theta).max(0.0)).collect()
}

/// `argmin_w ½‖w − z‖² + τ‖w‖_p`.
pub fn prox_lp_norm(z: &[f64], p: f64, tau: f64) -> Vec<f64> {
    if tau <= 0.0 {
        return z.to_vec();
    }
    let q = conjugate(p);
    let scaled: Vec<f64> = z.iter().map(|v| v / tau).collect();
    let proj = project_lq_ball(&scaled, q, 1.0);
    z.iter().zip(proj).map(|(zi, pi)| zi - tau * pi).collect()
}
