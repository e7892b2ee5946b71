//! Dormand–Prince 5(4) integrator with PI step control, dense output and event location.
//!
//! State dimension is a const generic so no allocation happens per step.
//! Integration may run backwards in time (`t_end < t0`).

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step magnitude; infinite by default.
    pub max_step: f64,
    /// First trial step magnitude; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-8, atol: 1e-10, max_step: f64::INFINITY, initial_step: None, max_steps: 10_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        OdeOptions { rtol, atol, ..Default::default() }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Right-hand side `dy = f(t, y)`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&mut self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;
}

impl<const N: usize, F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>> OdeSystem<N> for F {
    fn rhs(&mut self, t: f64, y: &[f64; N]) -> Result<[f64; N]> {
        self(t, y)
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    core::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

/// Adaptive stepper. After each accepted step the dense interpolant covers `[t_prev, t]`.
#[derive(Debug, Clone)]
pub struct Dopri5<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub t_prev: f64,
    pub y_prev: [f64; N],
    h: f64,
    k1: [f64; N],
    rcont: [[f64; N]; 5],
    comp: [f64; N],
    fac_old: f64,
    opts: OdeOptions,
    dir: f64,
    pub n_accepted: usize,
    pub n_rejected: usize,
    pub n_rhs: usize,
}

fn sq(v: f64) -> f64 {
    v * v
}

fn err_norm<const N: usize>(y0: &[f64; N], y1: &[f64; N], e: &[f64; N], o: &OdeOptions) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        let sc = o.atol + o.rtol * y0[i].abs().max(y1[i].abs());
        let r = e[i] / sc;
        s += r * r;
    }
    libm::sqrt(s / N as f64)
}

impl<const N: usize> Dopri5<N> {
    /// Start at `(t0, y0)` integrating towards the sign of `direction`.
    pub fn new<S: OdeSystem<N>>(sys: &mut S, t0: f64, y0: [f64; N], direction: f64, opts: OdeOptions) -> Result<Self> {
        if !(opts.rtol > 0.0 && opts.atol >= 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".to_string()));
        }
        if !y0.iter().all(|v| v.is_finite()) || !t0.is_finite() {
            return Err(Error::NonFinite);
        }
        let dir = if direction < 0.0 { -1.0 } else { 1.0 };
        let k1 = sys.rhs(t0, &y0)?;
        let mut s = Dopri5 {
            t: t0,
            y: y0,
            t_prev: t0,
            y_prev: y0,
            h: 0.0,
            k1,
            rcont: [y0, [0.0; N], [0.0; N], [0.0; N], [0.0; N]],
            comp: [0.0; N],
            fac_old: 1e-4,
            opts,
            dir,
            n_accepted: 0,
            n_rejected: 0,
            n_rhs: 1,
        };
        s.h = match opts.initial_step {
            Some(h) => dir * h.abs().min(opts.max_step),
            None => s.initial_step(sys)?,
        };
        Ok(s)
    }

    fn initial_step<S: OdeSystem<N>>(&mut self, sys: &mut S) -> Result<f64> {
        let o = &self.opts;
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..N {
            let sk = o.atol + o.rtol * self.y[i].abs();
            dnf += sq(self.k1[i] / sk);
            dny += sq(self.y[i] / sk);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { libm::sqrt(dny / dnf) * 0.01 };
        h = h.min(o.max_step);
        let y1 = axpy(&self.y, self.dir * h, &[(1.0, &self.k1)]);
        let f1 = sys.rhs(self.t + self.dir * h, &y1)?;
        self.n_rhs += 1;
        let mut der2 = 0.0;
        for i in 0..N {
            let sk = o.atol + o.rtol * self.y[i].abs();
            der2 += sq((f1[i] - self.k1[i]) / sk);
        }
        let der2 = libm::sqrt(der2) / h;
        let der12 = der2.max(libm::sqrt(dnf));
        let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { libm::pow(0.01 / der12, 0.2) };
        Ok(self.dir * (100.0 * h).min(h1).min(o.max_step))
    }

    /// Current trial step (signed).
    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// Take one accepted step, not going past `t_end`.
    pub fn step<S: OdeSystem<N>>(&mut self, sys: &mut S, t_end: f64) -> Result<()> {
        let mut last_err: Option<Error> = None;
        loop {
            if self.n_accepted + self.n_rejected >= self.opts.max_steps {
                return Err(Error::StepFailure { t: self.t, reason: "maximum number of steps exceeded".to_string() });
            }
            let remaining = t_end - self.t;
            let mut h = self.h;
            if (remaining * self.dir) <= 0.0 {
                return Err(Error::InvalidInput("step requested beyond end time".to_string()));
            }
            if h.abs() >= remaining.abs() {
                h = remaining;
            }
            if h.abs() <= 1e-14 * self.t.abs().max(1.0) {
                return Err(last_err.unwrap_or(Error::StepFailure {
                    t: self.t,
                    reason: "step size underflow".to_string(),
                }));
            }
            match self.try_step(sys, h) {
                Ok(true) => return Ok(()),
                Ok(false) => {
                    self.n_rejected += 1;
                }
                Err(e) => {
                    self.n_rejected += 1;
                    self.h = h * 0.25;
                    last_err = Some(e);
                }
            }
        }
    }

    fn try_step<S: OdeSystem<N>>(&mut self, sys: &mut S, h: f64) -> Result<bool> {
        let (t, y, k1) = (self.t, self.y, self.k1);
        let k2 = sys.rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
        let k3 = sys.rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = sys.rhs(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = sys.rhs(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let k6 = sys.rhs(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
        // Compensated update: the increment carries the rounding lost in earlier steps.
        let inc: [f64; N] = core::array::from_fn(|i| {
            h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]) + self.comp[i]
        });
        let y1: [f64; N] = core::array::from_fn(|i| y[i] + inc[i]);
        let k7 = sys.rhs(t + h, &y1)?;
        self.n_rhs += 6;
        let e: [f64; N] =
            core::array::from_fn(|i| h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]));
        let err = err_norm(&y, &y1, &e, &self.opts);
        if !err.is_finite() || !y1.iter().all(|v| v.is_finite()) {
            self.h = h * 0.25;
            return Ok(false);
        }
        let fac11 = libm::pow(err, 0.2 - BETA * 0.75);
        if err <= 1.0 {
            let fac = (fac11 / libm::pow(self.fac_old, BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut hnew = h / fac;
            if hnew.abs() > self.opts.max_step {
                hnew = self.dir * self.opts.max_step;
            }
            self.fac_old = err.max(1e-4);
            let ydiff: [f64; N] = core::array::from_fn(|i| y1[i] - y[i]);
            let bspl: [f64; N] = core::array::from_fn(|i| h * k1[i] - ydiff[i]);
            self.rcont = [
                y,
                ydiff,
                bspl,
                core::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]),
                core::array::from_fn(|i| {
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                }),
            ];
            self.t_prev = t;
            self.y_prev = y;
            self.t = t + h;
            self.y = y1;
            self.comp = core::array::from_fn(|i| inc[i] - (y1[i] - y[i]));
            self.k1 = k7;
            self.h = hnew;
            self.n_accepted += 1;
            Ok(true)
        } else {
            self.h = h / (fac11 / SAFE).min(1.0 / FAC_MIN);
            Ok(false)
        }
    }

    /// Dense output at `t` within the last accepted step.
    pub fn dense(&self, t: f64) -> [f64; N] {
        let h = self.t - self.t_prev;
        if h == 0.0 {
            return self.y;
        }
        let th = (t - self.t_prev) / h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        core::array::from_fn(|i| r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i]))))
    }

    /// Locate a sign change of `g` inside the last step by bisection on the dense output.
    ///
    /// Returns the crossing time once the bracket is below `t_tol`.
    pub fn locate<G: FnMut(f64, &[f64; N]) -> f64>(&self, mut g: G, t_tol: f64) -> Option<(f64, [f64; N])> {
        let mut a = self.t_prev;
        let mut b = self.t;
        let mut ga = g(a, &self.y_prev);
        let gb = g(b, &self.y);
        if ga == 0.0 {
            return None;
        }
        if ga * gb > 0.0 || !(ga.is_finite() && gb.is_finite()) {
            return None;
        }
        for _ in 0..200 {
            if (b - a).abs() <= t_tol {
                break;
            }
            let m = 0.5 * (a + b);
            let gm = g(m, &self.dense(m));
            if gm == 0.0 {
                return Some((m, self.dense(m)));
            }
            if ga * gm < 0.0 {
                b = m;
            } else {
                a = m;
                ga = gm;
            }
        }
        let t = 0.5 * (a + b);
        Some((t, self.dense(t)))
    }
}

/// Samples of a solution at requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub n_steps: usize,
    pub n_rhs: usize,
}

/// Integrate from `t0` to `t_end` and sample at `times` (monotone in the integration direction,
/// all within the span). The final state is always the last sample when `times` is empty.
pub fn integrate<const N: usize, S: OdeSystem<N>>(
    sys: &mut S,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    times: &[f64],
    opts: OdeOptions,
) -> Result<Solution<N>> {
    let (sol, status) = integrate_partial(sys, t0, y0, t_end, times, opts);
    status.map(|_| sol)
}

/// As [`integrate`], but keeps the samples reached before a failure.
pub fn integrate_partial<const N: usize, S: OdeSystem<N>>(
    sys: &mut S,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    times: &[f64],
    opts: OdeOptions,
) -> (Solution<N>, Result<()>) {
    let mut out = Solution { t: Vec::new(), y: Vec::new(), n_steps: 0, n_rhs: 0 };
    let dir = if t_end < t0 { -1.0 } else { 1.0 };
    if times.windows(2).any(|w| (w[1] - w[0]) * dir < 0.0) {
        return (out, Err(Error::InvalidInput("sample times must be monotone".to_string())));
    }
    let mut next = 0;
    while next < times.len() && (times[next] - t0) * dir <= 0.0 {
        out.t.push(times[next]);
        out.y.push(y0);
        next += 1;
    }
    if t_end == t0 {
        if times.is_empty() {
            out.t.push(t0);
            out.y.push(y0);
        }
        return (out, Ok(()));
    }
    let mut st = match Dopri5::new(sys, t0, y0, dir, opts) {
        Ok(st) => st,
        Err(e) => return (out, Err(e)),
    };
    while (t_end - st.t) * dir > 0.0 {
        if let Err(e) = st.step(sys, t_end) {
            out.n_steps = st.n_accepted;
            out.n_rhs = st.n_rhs;
            return (out, Err(e));
        }
        while next < times.len() && (times[next] - st.t) * dir <= 0.0 {
            out.t.push(times[next]);
            out.y.push(st.dense(times[next]));
            next += 1;
        }
    }
    if times.is_empty() {
        out.t.push(st.t);
        out.y.push(st.y);
    }
    out.n_steps = st.n_accepted;
    out.n_rhs = st.n_rhs;
    (out, Ok(()))
}

/// Evenly spaced sample times from `t0` to `t1` inclusive.
pub fn linspace(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![t1],
        _ => (0..n).map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64).collect(),
    }
}
