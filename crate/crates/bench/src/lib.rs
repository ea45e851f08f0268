//! Shared fixtures for the engine benchmarks: one small dissipative grid
//! with every precomputed stage exposed, so each benchmark times exactly
//! one pipeline step.

use anneal_core::{
    build_column, AnnealingSchedule, BathSpec, BoundaryMps, ColumnTensor, CoreError,
    InfluenceBuilder, InfluenceMps, KernelTable, Result, Side, TimeGrid,
};

pub struct Fixture {
    pub grid: TimeGrid,
    pub sched: AnnealingSchedule,
    pub kernel: KernelTable,
    pub chi_t: usize,
    pub chi_s: usize,
    pub svd_tol: f64,
}

impl Fixture {
    /// Dissipative chain on a 20-step grid: t_a = 1, dt = 0.05, eta = 0.18.
    pub fn desk(chi_t: usize, chi_s: usize) -> Result<Self> {
        let grid = TimeGrid::new(1.0, 0.05, 10.0)?;
        let sched = AnnealingSchedule::new(1.0)?;
        let bath = BathSpec::new(0.18, 5.0, 1.0)?;
        let kernel = KernelTable::build(&grid, &bath)?;
        Ok(Fixture { grid, sched, kernel, chi_t, chi_s, svd_tol: 1e-10 })
    }

    pub fn influence(&self, upto_step: usize) -> Result<InfluenceMps> {
        let mut b = InfluenceBuilder::new(&self.kernel, self.chi_t, self.svd_tol)?;
        for _ in 0..=upto_step {
            b.grow()?;
        }
        b.finish()
    }

    pub fn column(&self, upto_step: usize) -> Result<ColumnTensor> {
        let infl = self.influence(upto_step)?;
        build_column(&infl, &self.grid, &self.sched, upto_step)
    }

    pub fn boundary(&self, col: &ColumnTensor) -> Result<BoundaryMps> {
        BoundaryMps::product(col, self.chi_s, Side::Left, 7)
    }

    /// Boundary evolved a few absorptions in, so benchmark inputs have
    /// realistic bond dimensions instead of the rank-1 start.
    pub fn warm_boundary(&self, col: &ColumnTensor, steps: usize) -> Result<BoundaryMps> {
        let mut b = self.boundary(col)?;
        for _ in 0..steps {
            let step = b.absorb(col, anneal_core::Cap::Trace)?;
            if step.weight == 0.0 {
                return Err(CoreError::Numerical("warmup annihilated the boundary".into()));
            }
            b = step.boundary;
        }
        Ok(b)
    }
}
