/// Numerical thresholds shared by the factorization, solution and rank tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    /// Zeros with `| |z| - 1 | <= boundary` count as lying on the unit circle.
    pub boundary: f64,
    /// Relative bound on the max-abs residual of `B - B_minus * B_plus`.
    pub reconstruction: f64,
    /// Relative threshold below which a coefficient matrix is treated as zero.
    pub trim: f64,
    /// Relative singular-value cutoff for numerical rank.
    pub rank: f64,
    /// Relative bound for the observational-equivalence kernel residual.
    pub equivalence: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { boundary: 1e-9, reconstruction: 1e-8, trim: 1e-12, rank: 1e-10, equivalence: 1e-8 }
    }
}

impl ToleranceConfig {
    pub fn with_rank(mut self, rank: f64) -> Self {
        self.rank = rank;
        self
    }
}
