//! Descent directions, selectable by name.

use std::sync::Arc;

use crate::field::Field;
use crate::registry::Registry;
use crate::spectral::sobolev_inverse;

/// Maps an L2 gradient to a descent direction (the step is `u - tau * d`).
pub trait DescentDirection: Send + Sync {
    fn name(&self) -> &'static str;
    fn direction(&self, gradient: &Field) -> Field;
}

/// H1 gradient: `(-Delta)^{-1}` on the oscillatory part, identity on the mean.
pub struct Sobolev;

impl DescentDirection for Sobolev {
    fn name(&self) -> &'static str {
        "sobolev"
    }

    fn direction(&self, gradient: &Field) -> Field {
        sobolev_inverse(gradient)
    }
}

/// Plain L2 gradient. Mesh dependent; kept as a baseline.
pub struct L2;

impl DescentDirection for L2 {
    fn name(&self) -> &'static str {
        "l2"
    }

    fn direction(&self, gradient: &Field) -> Field {
        gradient.clone()
    }
}

pub fn directions() -> Registry<dyn DescentDirection> {
    let mut r: Registry<dyn DescentDirection> = Registry::new("descent direction");
    r.register("sobolev", Arc::new(Sobolev));
    r.register("l2", Arc::new(L2));
    r
}
