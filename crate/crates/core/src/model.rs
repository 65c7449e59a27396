use crate::couplings::CouplingFamily;
use crate::error::{MkgError, Result};
use crate::kahler::KahlerFamily;
use crate::potential::PotentialFamily;

/// Largest supported number of complex scalars.
pub const MAX_SCALAR: usize = 8;

/// Charges plus the coupling, target-space and potential families.
#[derive(Clone, Debug)]
pub struct Model {
    /// q_Γ, one per gauge field, shared by every scalar.
    pub charges: Vec<f64>,
    pub couplings: CouplingFamily,
    pub kahler: KahlerFamily,
    pub potential: PotentialFamily,
    n_scalar: usize,
}

impl Model {
    pub fn new(
        charges: Vec<f64>,
        couplings: CouplingFamily,
        kahler: KahlerFamily,
        potential: PotentialFamily,
        n_scalar: usize,
    ) -> Result<Self> {
        if charges.len() != couplings.n_gauge {
            return Err(MkgError::Shape(format!("{} charges for {} gauge fields", charges.len(), couplings.n_gauge)));
        }
        if n_scalar == 0 || n_scalar > MAX_SCALAR {
            return Err(MkgError::Shape(format!("n_scalar must be in 1..={MAX_SCALAR}")));
        }
        if charges.iter().any(|q| !q.is_finite()) {
            return Err(MkgError::Shape("non-finite charge".into()));
        }
        Ok(Self { charges, couplings, kahler, potential, n_scalar })
    }

    /// q = 0, h = δ, k = 0, flat target, V = 0.
    pub fn free(n_gauge: usize, n_scalar: usize) -> Self {
        Self::new(
            vec![0.0; n_gauge],
            CouplingFamily::trivial(n_gauge),
            KahlerFamily::flat(),
            PotentialFamily::zero(),
            n_scalar,
        )
        .expect("free model is valid")
    }

    pub fn n_gauge(&self) -> usize {
        self.charges.len()
    }

    pub fn n_scalar(&self) -> usize {
        self.n_scalar
    }
}
