//! Dormand–Prince 5(4) integrator for small autonomous systems.

/// Step-size control parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step; returns the fifth-order solution and the
/// embedded error estimate (componentwise).
pub fn dp_step<const N: usize, F>(f: &F, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut k = [[0.0; N]; 7];
    k[0] = f(y);
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = f(&ys);
    }
    let mut y5 = *y;
    let mut err = [0.0; N];
    for s in 0..7 {
        for i in 0..N {
            y5[i] += h * B5[s] * k[s][i];
            err[i] += h * (B5[s] - B4[s]) * k[s][i];
        }
    }
    (y5, err)
}

fn error_norm<const N: usize>(y0: &[f64; N], y1: &[f64; N], err: &[f64; N], o: &OdeOptions) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        let sc = o.atol + o.rtol * y0[i].abs().max(y1[i].abs());
        s += (err[i] / sc).powi(2);
    }
    (s / N as f64).sqrt()
}

/// Adaptive driver. `on_step(t0, y0, t1, y1)` is called after every accepted
/// step and returns `false` to stop.  Integration also stops at `t_end`.
/// Returns the final `(t, y)` and whether `on_step` requested the stop.
pub fn integrate<const N: usize, F, G>(
    f: &F,
    y0: [f64; N],
    t_end: f64,
    h0: f64,
    opts: &OdeOptions,
    mut on_step: G,
) -> Option<(f64, [f64; N], bool)>
where
    F: Fn(&[f64; N]) -> [f64; N],
    G: FnMut(f64, &[f64; N], f64, &[f64; N]) -> bool,
{
    let mut t = 0.0;
    let mut y = y0;
    let mut h = h0.min(opts.h_max);
    let mut steps = 0;
    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return None;
        }
        let last = t + h >= t_end;
        let hs = if last { t_end - t } else { h };
        let (y1, err) = dp_step(f, &y, hs);
        let e = error_norm(&y, &y1, &err, opts);
        if !e.is_finite() {
            h *= 0.1;
            if h < 1e-14 * (1.0 + t.abs()) {
                return None;
            }
            continue;
        }
        if e <= 1.0 {
            let t1 = if last { t_end } else { t + hs };
            let go = on_step(t, &y, t1, &y1);
            t = t1;
            y = y1;
            if !go {
                return Some((t, y, true));
            }
        }
        let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
        h = (hs * fac).min(opts.h_max);
        if h < 1e-14 * (1.0 + t.abs()) {
            return None;
        }
    }
    Some((t, y, false))
}

/// Integrates from `y0` at time 0 and returns the state at each of the
/// increasing `targets`, landing exactly on every target.
pub fn integrate_to<const N: usize, F>(f: &F, y0: [f64; N], targets: &[f64], h0: f64, opts: &OdeOptions) -> Option<Vec<[f64; N]>>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut out = Vec::with_capacity(targets.len());
    let mut t = 0.0;
    let mut y = y0;
    let mut h = h0.min(opts.h_max);
    let mut steps = 0;
    let mut idx = 0;
    while idx < targets.len() {
        if t >= targets[idx] {
            out.push(y);
            idx += 1;
            continue;
        }
        steps += 1;
        if steps > opts.max_steps {
            return None;
        }
        let remaining = targets[idx] - t;
        let hit = h >= remaining;
        let hs = if hit { remaining } else { h };
        let (y1, err) = dp_step(f, &y, hs);
        let e = error_norm(&y, &y1, &err, opts);
        if !e.is_finite() {
            h *= 0.1;
            continue;
        }
        let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
        if e <= 1.0 {
            t = if hit { targets[idx] } else { t + hs };
            y = y1;
            if !hit {
                h = (hs * fac).min(opts.h_max);
            }
        } else {
            h = hs * fac;
        }
        if h < 1e-14 * (1.0 + t.abs()) {
            return None;
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_returns_to_start() {
        let f = |y: &[f64; 2]| [y[1], -y[0]];
        let o = OdeOptions { rtol: 1e-12, atol: 1e-12, ..Default::default() };
        let (t, y, stopped) = integrate(&f, [1.0, 0.0], 2.0 * std::f64::consts::PI, 0.01, &o, |_, _, _, _| true).unwrap();
        assert!(!stopped);
        assert!((t - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
    }

    #[test]
    fn exponential_growth() {
        let f = |y: &[f64; 1]| [y[0]];
        let o = OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let ys = integrate_to(&f, [1.0], &[0.5, 1.0, 2.0], 0.1, &o).unwrap();
        assert!((ys[1][0] - 1f64.exp()).abs() < 1e-10);
        assert!((ys[2][0] - 2f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn callback_can_stop() {
        let f = |_: &[f64; 1]| [1.0];
        let (t, _, stopped) = integrate(&f, [0.0], 10.0, 0.1, &OdeOptions::default(), |_, _, t1, _| t1 < 1.0).unwrap();
        assert!(stopped);
        assert!((1.0..10.0).contains(&t));
    }
}
