use crate::scalar::Real;

/// Validation thresholds for density matrices and related objects.
///
/// The defaults are used by every constructor that does not take an explicit
/// record; pass a custom record to the `*_with` constructors to override.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Max entrywise deviation `|ρ - ρ†|`.
    pub hermitian: T,
    /// Lowest admissible eigenvalue is `-psd`.
    pub psd: T,
    /// Admissible `|Tr ρ - 1|`.
    pub trace: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            hermitian: T::lit(1e-12),
            psd: T::lit(1e-10),
            trace: T::lit(1e-10),
        }
    }
}

impl<T: Real> Tolerances<T> {
    /// Scales all thresholds by `factor`, e.g. to accept states accumulated
    /// over many steps.
    pub fn relaxed(self, factor: T) -> Self {
        Self {
            hermitian: self.hermitian * factor,
            psd: self.psd * factor,
            trace: self.trace * factor,
        }
    }
}
