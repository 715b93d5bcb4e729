//! Default numerical thresholds. Every value here can be overridden per run
//! through the `[tolerances]` table of a run config.

/// Nodes with `|lambda - mu| < TOL_COLLISION` are treated as eigenvalue
/// crossings and dropped from sweeps.
pub const TOL_COLLISION: f64 = 1e-8;

/// Relative gap below which adjacent eigenvalues join one cluster.
pub const CLUSTER_TOL: f64 = 1e-6;

/// Pass threshold for the Codazzi identity residual.
pub const CODAZZI_TOL: f64 = 1e-8;

/// Pass threshold for the eigendistribution lemma residuals. These consume
/// finite-difference derivatives of eigen-data.
pub const LEMMA_TOL: f64 = 1e-6;

/// Pass threshold for each of the four characterizing conditions.
pub const COND_TOL: f64 = 1e-5;

/// Pointwise residual of `A v = kappa g v` and of the eigen reconstruction.
pub const EIGEN_TOL: f64 = 1e-9;

/// Numerical kernel: singular values below `SIGMA_REL_TOL * sigma_max`.
pub const SIGMA_REL_TOL: f64 = 1e-6;

/// Dimensionless gradient threshold for the warped-product verdict: a kernel
/// potential normalized to unit RMS counts as non-constant when
/// `diameter * |grad f|_g` exceeds this value at the probe.
pub const GRAD_TOL: f64 = 1e-3;

/// Pass threshold for exact (AD-based) candidate certificates.
pub const CANDIDATE_TOL: f64 = 1e-10;

/// Pass threshold for the characteristics PDE residual.
pub const CHARACTERISTICS_TOL: f64 = 1e-10;

/// Pass threshold for the warp-extraction checks.
pub const WARP_TOL: f64 = 1e-5;

/// Base step for finite differences of eigen-data; Richardson extrapolation
/// combines steps `h` and `h/2`.
pub const FD_STEP: f64 = 1e-3;

/// Reduced systems with more unknowns than this use the iterative kernel
/// solver instead of a dense SVD.
pub const DENSE_SVD_LIMIT: usize = 10_000;

/// Run-time thresholds, defaulting to the constants above.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub collision: f64,
    pub cluster: f64,
    pub codazzi: f64,
    pub lemma: f64,
    pub cond: f64,
    pub eigen: f64,
    pub sigma_rel: f64,
    pub grad: f64,
    pub candidate: f64,
    pub characteristics: f64,
    pub warp: f64,
    pub fd_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            collision: TOL_COLLISION,
            cluster: CLUSTER_TOL,
            codazzi: CODAZZI_TOL,
            lemma: LEMMA_TOL,
            cond: COND_TOL,
            eigen: EIGEN_TOL,
            sigma_rel: SIGMA_REL_TOL,
            grad: GRAD_TOL,
            candidate: CANDIDATE_TOL,
            characteristics: CHARACTERISTICS_TOL,
            warp: WARP_TOL,
            fd_step: FD_STEP,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 12] = [
        "collision",
        "cluster",
        "codazzi",
        "lemma",
        "cond",
        "eigen",
        "sigma_rel",
        "grad",
        "candidate",
        "characteristics",
        "warp",
        "fd_step",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "collision" => &mut self.collision,
            "cluster" => &mut self.cluster,
            "codazzi" => &mut self.codazzi,
            "lemma" => &mut self.lemma,
            "cond" => &mut self.cond,
            "eigen" => &mut self.eigen,
            "sigma_rel" => &mut self.sigma_rel,
            "grad" => &mut self.grad,
            "candidate" => &mut self.candidate,
            "characteristics" => &mut self.characteristics,
            "warp" => &mut self.warp,
            "fd_step" => &mut self.fd_step,
            _ => return None,
        })
    }

    /// Overrides one threshold by name; values must be positive and finite.
    pub fn set(&mut self, name: &str, value: f64) -> crate::Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(crate::Error::Config(format!("tolerance `{name}` must be positive, got {value}")));
        }
        let slot = self.slot(name).ok_or_else(|| {
            crate::Error::Config(format!(
                "unknown tolerance `{name}` (expected one of {})",
                Self::NAMES.join(", ")
            ))
        })?;
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> crate::Result<()> {
        let mut copy = self.clone();
        for name in Self::NAMES {
            let v = *copy.slot(name).expect("listed name");
            copy.set(name, v)?;
        }
        Ok(())
    }
}
