use crate::error::{Error, Result};

use super::ledger::{EnergyMeter, EnergyReport, LedgerRow};
use super::params::{InitialData, State};
use super::regularized::rk4_step;
use super::viscous::{check_state, ViscousStepper};
use super::Model;

/// A field norm above this multiple of its initial scale aborts the run.
pub const GROWTH_LIMIT: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    BackwardEuler,
    RungeKutta4,
}

/// Receives states at saved steps (step 0, every `stride`-th step, and the last step).
pub trait Saver {
    fn stride(&self) -> usize {
        1
    }

    fn save(&mut self, step: usize, state: &State) -> Result<()>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NullSaver;

impl Saver for NullSaver {
    fn stride(&self) -> usize {
        usize::MAX
    }

    fn save(&mut self, _: usize, _: &State) -> Result<()> {
        Ok(())
    }
}

/// Keeps saved states in memory.
#[derive(Clone, Debug)]
pub struct MemorySaver {
    pub stride: usize,
    pub states: Vec<State>,
}

impl MemorySaver {
    pub fn new(stride: usize) -> Self {
        MemorySaver {
            stride: stride.max(1),
            states: Vec::new(),
        }
    }
}

impl Saver for MemorySaver {
    fn stride(&self) -> usize {
        self.stride
    }

    fn save(&mut self, _: usize, state: &State) -> Result<()> {
        self.states.push(state.clone());
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub final_state: State,
    pub report: EnergyReport,
    pub steps: usize,
    /// Total inner sweeps (backward Euler only).
    pub inner_iterations: usize,
}

fn scale(s: &State) -> [f64; 3] {
    [s.mu.max_abs(), s.phi.max_abs(), s.sigma.max_abs()].map(|v| v.max(1.0))
}

/// Integrates from `init` over `[0, t_end]` with the chosen scheme, recording
/// the energy ledger every step.
pub fn run_system(model: &Model, init: &InitialData, scheme: Scheme, saver: &mut dyn Saver) -> Result<RunOutput> {
    model.params.validate()?;
    let mut state = init.prepare(&model.plan, &model.graph)?;
    check_state(model, &state)?;
    let meter = EnergyMeter::new(model);
    let mut stepper = ViscousStepper::new(model);
    let steps = model.params.step_sizes();
    let stride = saver.stride().max(1);
    let initial_scale = scale(&state);
    let initial_residual = state
        .phi
        .values()
        .iter()
        .zip(state.xi.values())
        .map(|(&r, &x)| {
            let g = model.graph.graph(r)?;
            Ok(g.distance(x) / (1.0 + g.lo.abs().max(g.hi.abs())))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut report = EnergyReport::default();
    report.rows.push(LedgerRow {
        step: 0,
        t: 0.0,
        energy: meter.energy(&state)?,
        dissipation: 0.0,
        mass: meter.mass(&state),
        zeta_increment: 0.0,
        xi_residual: initial_residual,
    });
    saver.save(0, &state)?;
    let mut dissipation = 0.0;
    let mut inner = 0;
    let t0 = state.t;
    for (n, &dt) in steps.iter().enumerate() {
        let step = n + 1;
        let (mut next, xi_residual) = match scheme {
            Scheme::BackwardEuler => {
                let out = stepper.step(&state, dt, step)?;
                inner += out.iterations;
                (out.state, out.xi_residual)
            }
            Scheme::RungeKutta4 => (rk4_step(model, &state, dt)?, 0.0),
        };
        if step == steps.len() {
            next.t = t0 + model.params.t_end;
        }
        let now = scale(&next);
        let growth = (0..3).map(|i| now[i] / initial_scale[i]).fold(0.0, f64::max);
        if !next.is_finite() || growth > GROWTH_LIMIT {
            return Err(Error::Unstable {
                t: next.t,
                growth: if growth.is_finite() { growth } else { f64::INFINITY },
            });
        }
        dissipation += meter.dissipation_increment(&state, &next, dt);
        report.rows.push(LedgerRow {
            step,
            t: next.t,
            energy: meter.energy(&next)?,
            dissipation,
            mass: meter.mass(&next),
            zeta_increment: meter.zeta_increment(&state, &next, dt)?,
            xi_residual,
        });
        if step % stride == 0 || step == steps.len() {
            saver.save(step, &next)?;
        }
        state = next;
    }
    Ok(RunOutput {
        final_state: state,
        report,
        steps: steps.len(),
        inner_iterations: inner,
    })
}
