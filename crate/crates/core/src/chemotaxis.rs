//! Time integration of `u_t = Δu - ∇·(u f(|∇v|²) ∇v)` in radial flux form.
//!
//! Cell `i` changes by `(Φ_{i+1/2} - Φ_{i-1/2}) / V_i` with face fluxes
//!
//! ```text
//! Φ_{i+1/2} = ω_N r_{i+1/2}^{N-1} [ (u_{i+1} - u_i)/h - ũ f(v_r²) v_r ]
//! ```
//!
//! where `ũ` is the upwind cell for the drift `f(v_r²) v_r`, and the fluxes through
//! `r = 0` and `r = R` are identically zero. The gradient `v_r` is recomputed from the
//! elliptic identity at every stage. Steps are explicit Heun (SSP-RK2) with CFL-limited
//! step sizes; a step producing a negative density is rejected and retried at half size.

use std::sync::Arc;

use crate::elliptic::{face_gradient_into, inverse_face_powers};
use crate::error::{Error, Result};
use crate::radial::{FieldKind, RadialField, RadialGrid};

/// `f(ξ) = k_f (1+ξ)^{-α}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxLimiter {
    pub k_f: f64,
    pub alpha: f64,
}

impl FluxLimiter {
    /// `k_f = 0` gives the pure heat equation.
    pub fn new(k_f: f64, alpha: f64) -> Result<Self> {
        if !(k_f.is_finite() && k_f >= 0.0) {
            return Err(Error::InvalidParameter(format!("k_f must be finite and >= 0, got {k_f}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        Ok(FluxLimiter { k_f, alpha })
    }

    #[inline]
    pub fn value(&self, xi: f64) -> f64 {
        self.k_f * (1.0 + xi).powf(-self.alpha)
    }

    #[inline]
    pub fn derivative(&self, xi: f64) -> f64 {
        -self.alpha * self.k_f * (1.0 + xi).powf(-self.alpha - 1.0)
    }

    /// Drift velocity `f(v_r²) v_r`.
    #[inline]
    fn drift(&self, v_r: f64) -> f64 {
        if self.k_f == 0.0 || v_r == 0.0 {
            0.0
        } else if self.alpha == 0.0 {
            self.k_f * v_r
        } else {
            self.value(v_r * v_r) * v_r
        }
    }
}

/// Numerical controls for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepController {
    pub cfl_diffusion: f64,
    pub cfl_advection: f64,
    pub dt_min: f64,
    /// Blow-up is declared once `‖u‖_∞ ≥ blowup_factor · μ`.
    pub blowup_factor: f64,
    pub t_end: f64,
    /// Regular sampling interval; `t_end / 200` by default.
    pub sample_interval: f64,
    /// Extra samples whenever `‖u‖_∞` has grown by this factor since the last one.
    pub sample_growth: f64,
    pub max_steps: u64,
}

impl StepController {
    pub fn new(t_end: f64) -> Self {
        StepController {
            cfl_diffusion: 0.9,
            cfl_advection: 0.5,
            dt_min: 1e-14,
            blowup_factor: 1e6,
            t_end,
            sample_interval: t_end / 200.0,
            sample_growth: 1.1,
            max_steps: 50_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, x: f64| {
            if x > 0.0 && x <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must lie in (0, 1], got {x}")))
            }
        };
        unit("cfl_diffusion", self.cfl_diffusion)?;
        unit("cfl_advection", self.cfl_advection)?;
        for (name, x) in [
            ("dt_min", self.dt_min),
            ("blowup_factor", self.blowup_factor),
            ("t_end", self.t_end),
            ("sample_interval", self.sample_interval),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")));
            }
        }
        if !(self.sample_growth > 1.0) {
            return Err(Error::InvalidParameter("sample_growth must exceed 1".into()));
        }
        Ok(())
    }
}

/// Density, time, and step bookkeeping of a simulation.
#[derive(Debug, Clone)]
pub struct ChemoState {
    pub t: f64,
    pub u: RadialField,
    /// Size of the last accepted step (0 before the first step).
    pub dt: f64,
    pub step_count: u64,
    /// Mean of the initial density; constant along the run.
    pub mu: f64,
}

impl ChemoState {
    pub fn new(u0: RadialField) -> Result<Self> {
        if u0.kind() != FieldKind::Density {
            return Err(Error::InvalidParameter("initial data must be a density field".into()));
        }
        let mu = u0.mean();
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter("initial data must carry positive mass".into()));
        }
        Ok(ChemoState { t: 0.0, u: u0, dt: 0.0, step_count: 0, mu })
    }
}

/// Preallocated buffers and geometric factors for one grid.
#[derive(Debug, Clone)]
pub struct Integrator {
    grid: Arc<RadialGrid>,
    limiter: FluxLimiter,
    area: Vec<f64>,
    inv_h: Vec<f64>,
    inv_vol: Vec<f64>,
    inv_face_pow: Vec<f64>,
    dt_diffusion: f64,
    v_r: Vec<f64>,
    drift: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    stage: Vec<f64>,
    next: Vec<f64>,
    pub rejections: u64,
}

/// Result of one attempted step.
#[derive(Debug, Clone)]
pub enum StepOutcome {
    Accepted(ChemoState),
    /// Halving could not produce a nonnegative update above `dt_min`.
    Underflow {
        dt: f64,
    },
}

impl Integrator {
    pub fn new(grid: Arc<RadialGrid>, limiter: FluxLimiter) -> Self {
        let n = grid.n_cells();
        let area: Vec<f64> = (0..=n).map(|f| grid.face_area(f)).collect();
        let c = grid.centers();
        let mut inv_h = vec![0.0; n + 1];
        for f in 1..n {
            inv_h[f] = 1.0 / (c[f] - c[f - 1]);
        }
        let inv_vol: Vec<f64> = grid.volumes().iter().map(|v| 1.0 / v).collect();
        // explicit diffusion limit V_i / Σ_faces A/h; equals Δr²/2 in the interior of a uniform grid
        let dt_diffusion = (0..n)
            .map(|i| 1.0 / (inv_vol[i] * (area[i] * inv_h[i] + area[i + 1] * inv_h[i + 1])))
            .fold(f64::INFINITY, f64::min);
        let inv_face_pow = inverse_face_powers(&grid);
        Integrator {
            grid,
            limiter,
            area,
            inv_h,
            inv_vol,
            inv_face_pow,
            dt_diffusion,
            v_r: vec![0.0; n + 1],
            drift: vec![0.0; n + 1],
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            stage: vec![0.0; n],
            next: vec![0.0; n],
            rejections: 0,
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Evaluates `du/dt` for `u` into `out`, leaving face drifts in `self.drift`.
    fn assemble(&mut self, u: &[f64], mu: f64, out: &mut [f64]) -> Result<()> {
        let n = u.len();
        face_gradient_into(self.grid.shells(), &self.inv_face_pow, u, mu, &mut self.v_r);
        let (v_r, drift) = (&self.v_r[..=n], &mut self.drift[..=n]);
        let (area, inv_h, inv_vol) = (&self.area[..=n], &self.inv_h[..=n], &self.inv_vol[..n]);
        let out = &mut out[..n];
        drift[0] = 0.0;
        drift[n] = 0.0;
        let mut prev_flux = 0.0;
        for f in 1..n {
            let a = self.limiter.drift(v_r[f]);
            drift[f] = a;
            let upwind = if a > 0.0 { u[f - 1] } else { u[f] };
            let flux = area[f] * ((u[f] - u[f - 1]) * inv_h[f] - upwind * a);
            out[f - 1] = (flux - prev_flux) * inv_vol[f - 1];
            prev_flux = flux;
        }
        out[n - 1] = -prev_flux * inv_vol[n - 1];
        if let Some(cell) = out.iter().position(|x| !x.is_finite()) {
            return Err(Error::NumericalFailure { cell, reason: format!("non-finite rate {}", out[cell]) });
        }
        Ok(())
    }

    /// Stable step size for the drift currently stored in `self.drift`.
    fn stable_dt(&self, ctrl: &StepController) -> f64 {
        let n = self.inv_vol.len();
        let mut dt_adv = f64::INFINITY;
        for i in 0..n {
            let outer = self.drift[i + 1].max(0.0) * self.area[i + 1];
            let inner = (-self.drift[i]).max(0.0) * self.area[i];
            let out_rate = (outer + inner) * self.inv_vol[i];
            if out_rate > 0.0 {
                dt_adv = dt_adv.min(1.0 / out_rate);
            }
        }
        (ctrl.cfl_diffusion * self.dt_diffusion).min(ctrl.cfl_advection * dt_adv)
    }

    /// `du/dt` at `u`.
    pub fn rhs(&mut self, u: &RadialField, mu: f64) -> Result<RadialField> {
        u.same_grid(&self.grid)?;
        let mut out = vec![0.0; u.values().len()];
        self.assemble(u.values(), mu, &mut out)?;
        Ok(RadialField::from_parts_unchecked(self.grid.clone(), out, FieldKind::Signed))
    }

    /// One Heun step, halving on negativity until `dt_min`.
    pub fn step(&mut self, state: &ChemoState, ctrl: &StepController) -> Result<StepOutcome> {
        state.u.same_grid(&self.grid)?;
        let u = state.u.values();
        let mu = state.mu;
        let mut k1 = std::mem::take(&mut self.k1);
        self.assemble(u, mu, &mut k1)?;
        let remaining = ctrl.t_end - state.t;
        let dt_stable = self.stable_dt(ctrl);
        // finish exactly at t_end instead of leaving a sliver for one more step
        let mut dt = if remaining <= dt_stable * (1.0 + 1e-6) { remaining } else { dt_stable };
        let result = loop {
            if dt < ctrl.dt_min && dt != remaining {
                break Ok(StepOutcome::Underflow { dt });
            }
            let mut stage_ok = true;
            for i in 0..u.len() {
                self.stage[i] = u[i] + dt * k1[i];
                stage_ok &= self.stage[i] >= 0.0;
            }
            if !stage_ok {
                self.rejections += 1;
                dt *= 0.5;
                continue;
            }
            let stage = std::mem::take(&mut self.stage);
            let mut k2 = std::mem::take(&mut self.k2);
            let assembled = self.assemble(&stage, mu, &mut k2);
            self.stage = stage;
            if let Err(e) = assembled {
                self.k2 = k2;
                break Err(e);
            }
            let half = 0.5 * dt;
            let mut ok = true;
            for i in 0..u.len() {
                let x = u[i] + half * (k1[i] + k2[i]);
                ok &= x >= 0.0;
                self.next[i] = x;
            }
            self.k2 = k2;
            if !ok {
                self.rejections += 1;
                dt *= 0.5;
                continue;
            }
            let t = if dt == remaining { ctrl.t_end } else { state.t + dt };
            let u_next = RadialField::from_parts_unchecked(self.grid.clone(), self.next.clone(), FieldKind::Density);
            break Ok(StepOutcome::Accepted(ChemoState { t, u: u_next, dt, step_count: state.step_count + 1, mu }));
        };
        self.k1 = k1;
        result
    }
}

/// `du/dt` for the state's density.
pub fn rhs(state: &ChemoState, limiter: FluxLimiter) -> Result<RadialField> {
    Integrator::new(state.u.grid().clone(), limiter).rhs(&state.u, state.mu)
}

/// Advances `state` by one accepted Heun step (or reports step-size underflow).
pub fn step(state: &ChemoState, limiter: FluxLimiter, ctrl: &StepController) -> Result<StepOutcome> {
    Integrator::new(state.u.grid().clone(), limiter).step(state, ctrl)
}

/// One recorded diagnostic row.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub mass: f64,
    pub linf: f64,
    /// `‖u‖_{L^p}` per probe exponent.
    pub lp: Vec<f64>,
    /// `Ψ_p = ‖u‖_p^p / p` per probe exponent.
    pub psi: Vec<f64>,
    /// Last accepted step size (0 for the initial row).
    pub dt: f64,
}

/// What ended a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupTrigger {
    Threshold,
    DtUnderflow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    ReachedHorizon,
    /// `t_detect` is a lower estimate of the maximal existence time.
    BlowupDetected {
        t_detect: f64,
        trigger: BlowupTrigger,
    },
    StepFailure {
        t: f64,
        reason: String,
    },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::ReachedHorizon => "ReachedHorizon",
            Verdict::BlowupDetected { .. } => "BlowupDetected",
            Verdict::StepFailure { .. } => "StepFailure",
        }
    }

    pub fn t_detect(&self) -> Option<f64> {
        match self {
            Verdict::BlowupDetected { t_detect, .. } => Some(*t_detect),
            _ => None,
        }
    }
}

/// Fit of `‖u‖_∞ ≈ C (T - t)^{-κ}` over the final decade of growth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub t_max: f64,
    pub exponent: f64,
    pub coefficient: f64,
    /// Samples used.
    pub points: usize,
}

/// Time series and outcome of one simulation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub probes: Vec<f64>,
    pub samples: Vec<Sample>,
    pub verdict: Verdict,
    pub extrapolation: Option<PowerLawFit>,
    pub initial_mass: f64,
    pub u_blow: f64,
    pub steps: u64,
    pub rejections: u64,
    pub final_state: ChemoState,
}

impl Trajectory {
    /// Largest relative mass drift over the recorded samples.
    pub fn max_mass_drift(&self) -> f64 {
        self.samples.iter().map(|s| ((s.mass - self.initial_mass) / self.initial_mass).abs()).fold(0.0, f64::max)
    }

    /// Column of `Ψ_p` for probe `k`, with the sample times.
    pub fn psi_series(&self, k: usize) -> (Vec<f64>, Vec<f64>) {
        self.samples.iter().map(|s| (s.t, s.psi[k])).unzip()
    }

    pub fn probe_index(&self, p: f64) -> Option<usize> {
        self.probes.iter().position(|&q| q == p)
    }
}

fn sample(state: &ChemoState, probes: &[f64]) -> Sample {
    let lp_int: Vec<f64> = probes.iter().map(|&p| state.u.lp_integral(p).unwrap_or(f64::NAN)).collect();
    Sample {
        t: state.t,
        mass: state.u.integrate(),
        linf: state.u.sup_norm(),
        lp: lp_int.iter().zip(probes).map(|(s, p)| s.powf(1.0 / p)).collect(),
        psi: lp_int.iter().zip(probes).map(|(s, p)| s / p).collect(),
        dt: state.dt,
    }
}

/// Integrates from `u0` until `t_end`, blow-up detection, or failure.
pub fn run(u0: RadialField, limiter: FluxLimiter, ctrl: &StepController, probes: &[f64]) -> Result<Trajectory> {
    ctrl.validate()?;
    if let Some(p) = probes.iter().find(|&&p| !(p >= 1.0 && p.is_finite())) {
        return Err(Error::InvalidParameter(format!("probe exponent {p} must be >= 1")));
    }
    let mut state = ChemoState::new(u0)?;
    let initial_mass = state.u.integrate();
    let u_blow = ctrl.blowup_factor * state.mu;
    let mut integrator = Integrator::new(state.u.grid().clone(), limiter);

    let mut samples = vec![sample(&state, probes)];
    let mut next_sample = ctrl.sample_interval;
    let mut last_linf = samples[0].linf;

    let verdict = loop {
        if state.t >= ctrl.t_end {
            break Verdict::ReachedHorizon;
        }
        if state.step_count >= ctrl.max_steps {
            break Verdict::StepFailure { t: state.t, reason: format!("step budget of {} exhausted", ctrl.max_steps) };
        }
        match integrator.step(&state, ctrl) {
            Ok(StepOutcome::Accepted(next)) => state = next,
            Ok(StepOutcome::Underflow { .. }) => {
                break Verdict::BlowupDetected { t_detect: state.t, trigger: BlowupTrigger::DtUnderflow };
            }
            Err(e) => break Verdict::StepFailure { t: state.t, reason: e.to_string() },
        }
        let linf = state.u.sup_norm();
        if linf >= u_blow {
            break Verdict::BlowupDetected { t_detect: state.t, trigger: BlowupTrigger::Threshold };
        }
        if state.t >= next_sample || linf >= last_linf * ctrl.sample_growth || state.t >= ctrl.t_end {
            samples.push(sample(&state, probes));
            last_linf = linf;
            while next_sample <= state.t {
                next_sample += ctrl.sample_interval;
            }
        }
    };
    if samples.last().map(|s| s.t) != Some(state.t) {
        samples.push(sample(&state, probes));
    }
    let extrapolation = match verdict {
        Verdict::BlowupDetected { .. } => fit_power_law(&samples),
        _ => None,
    };
    Ok(Trajectory {
        probes: probes.to_vec(),
        samples,
        verdict,
        extrapolation,
        initial_mass,
        u_blow,
        steps: state.step_count,
        rejections: integrator.rejections,
        final_state: state,
    })
}

/// Least-squares fit of `ln ‖u‖_∞ = ln C - κ ln(T - t)` over the samples within one
/// decade of the final `‖u‖_∞`, minimizing the residual over `T > t_last`.
pub fn fit_power_law(samples: &[Sample]) -> Option<PowerLawFit> {
    let last = samples.last()?;
    let floor = last.linf / 10.0;
    let start = samples.iter().rposition(|s| s.linf < floor).map_or(0, |k| k + 1);
    let tail = &samples[start..];
    if tail.len() < 4 {
        return None;
    }
    let t_last = last.t;
    let span = t_last - tail[0].t;
    if !(span > 0.0) {
        return None;
    }
    let ys: Vec<f64> = tail.iter().map(|s| s.linf.ln()).collect();
    let fit = |delta: f64| {
        let xs: Vec<f64> = tail.iter().map(|s| (t_last + delta - s.t).ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let icpt = my - slope * mx;
        let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
        (ssr, slope, icpt)
    };
    // coarse scan in ln δ, then golden-section refinement around the best bracket
    let (lo, hi) = ((1e-9 * span).ln(), (100.0 * span).ln());
    let m = 240;
    let grid: Vec<f64> = (0..=m).map(|k| lo + (hi - lo) * k as f64 / m as f64).collect();
    let best = (0..=m).min_by(|&a, &b| fit(grid[a].exp()).0.total_cmp(&fit(grid[b].exp()).0)).unwrap();
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(m)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if fit(c.exp()).0 < fit(d.exp()).0 {
            b = d;
        } else {
            a = c;
        }
    }
    let delta = (0.5 * (a + b)).exp();
    let (_, slope, icpt) = fit(delta);
    Some(PowerLawFit { t_max: t_last + delta, exponent: -slope, coefficient: icpt.exp(), points: tail.len() })
}
