use super::{BlockTracker, Curvature, KroneckerH, QuadraticTracker, SmoothObjective};
use crate::{Error, Mat, Result};

/// `f(X) = ½ tr(XᵀCXD)` with symmetric `C`, `D`; `H = D ⊗ C` exactly.
#[derive(Debug, Clone)]
pub struct Quadratic {
    c: Mat,
    d: Mat,
    lipschitz: f64,
}

/// Builds the quadratic trace objective, rejecting asymmetric factors.
pub fn quadratic_objective(c: Mat, d: Mat) -> Result<Quadratic> {
    let n = c.nrows();
    for (name, m) in [("C", &c), ("D", &d)] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Dimension(format!("{name} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols())));
        }
        let asym = (m - m.transpose()).amax();
        if asym > 1e-12 * m.amax().max(1.0) {
            return Err(Error::Parameter(format!("{name} is not symmetric (defect {asym:.3e})")));
        }
    }
    let spectral = |m: &Mat| m.clone().symmetric_eigenvalues().amax();
    let lipschitz = spectral(&c) * spectral(&d);
    Ok(Quadratic { c, d, lipschitz })
}

impl Quadratic {
    pub fn c(&self) -> &Mat {
        &self.c
    }

    pub fn d(&self) -> &Mat {
        &self.d
    }
}

impl SmoothObjective for Quadratic {
    fn dim(&self) -> usize {
        self.c.nrows()
    }

    fn value(&self, x: &Mat) -> f64 {
        0.5 * x.dot(&(&self.c * x * &self.d))
    }

    fn gradient(&self, x: &Mat) -> Mat {
        &self.c * x * &self.d
    }

    fn curvature(&self) -> Curvature {
        Curvature::Kronecker(KroneckerH::Factors { c: self.c.clone(), d: self.d.clone() })
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn tracker(&self, x: &Mat) -> Option<Box<dyn BlockTracker + '_>> {
        Some(Box::new(QuadraticTracker::new(&self.c, Some(&self.d), x)))
    }
}
