//! Benchmark fixtures shared by the criterion targets.

use std::sync::Arc;

use tumorch_core::dynamics::{InitialData, Model, State, SystemParams};
use tumorch_core::{Field, Grid, PotentialSpec, SpectralPlan};

pub fn plan(dims: &[usize]) -> Arc<SpectralPlan> {
    Arc::new(SpectralPlan::new(Arc::new(Grid::unit(dims).unwrap())))
}

/// Smooth field with a few active modes on every axis.
pub fn smooth_field(grid: &Arc<Grid>) -> Field {
    let pi = std::f64::consts::PI;
    Field::from_fn(grid.clone(), |x| 0.8 * (2.0 * pi * x[0]).cos() + 0.3 * (pi * x[1]).cos() * (3.0 * pi * x[2]).cos()).unwrap()
}

/// Quartic reference model and its prepared initial state.
pub fn reference_model(n: usize, beta: f64) -> (Model, State) {
    let plan = plan(&[n]);
    let g = plan.grid().clone();
    let params = SystemParams { alpha: 0.1, beta, p: 0.5, t_end: 0.5, dt: 1e-3, ..Default::default() };
    let model = Model::new(plan, PotentialSpec::quartic(0.2).unwrap(), params).unwrap();
    let pi = std::f64::consts::PI;
    let init = InitialData::new(
        Field::from_fn(g.clone(), |x| (3.0 * pi * x[0]).cos()).unwrap(),
        Field::from_fn(g.clone(), |x| 0.8 * (2.0 * pi * x[0]).cos()).unwrap(),
        Field::from_fn(g, |x| 0.5 + 0.3 * (pi * x[0]).cos()).unwrap(),
    )
    .unwrap();
    let state = init.prepare(&model.plan, &model.graph).unwrap();
    (model, state)
}
