use super::params::{Family, ModelParams};
use super::ModelName;
use crate::scalar::{l2_norm, Scalar};

/// Rows within this many ulps of the target norm count as satisfying it.
/// Rescaling such rows again could flip low bits, so they are left alone;
/// this keeps constraint application idempotent.
fn tolerance<S: Scalar>() -> S {
    S::epsilon() * S::lit(8.0)
}

/// Outcome of one constraint pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConstraintReport {
    /// Rows that were rescaled.
    pub rescaled: usize,
    /// Zero rows that should have been normalized but cannot be.
    pub zero_rows: usize,
}

/// Scales `row` to unit L2 norm. Zero rows are left unchanged (returns false).
pub(crate) fn normalize<S: Scalar>(row: &mut [S]) -> bool {
    let n = l2_norm(row);
    if n == S::zero() {
        return false;
    }
    if (n - S::one()).abs() > tolerance() {
        row.iter_mut().for_each(|x| *x /= n);
    }
    true
}

/// Projects `row` onto the closed unit ball; returns whether it moved.
pub(crate) fn project_unit_ball<S: Scalar>(row: &mut [S]) -> bool {
    let n = l2_norm(row);
    if n > S::one() + tolerance() {
        row.iter_mut().for_each(|x| *x /= n);
        true
    } else {
        false
    }
}

impl<S: Scalar> ModelParams<S> {
    /// Enforces the model's norm constraints:
    ///
    /// * TransE: entity rows have unit L2 norm
    /// * TransH: normal vectors have unit L2 norm
    /// * TransR, TransD: entity and relation rows lie in the unit ball
    ///
    /// Other models have no constraints.
    pub fn apply_constraints(&mut self) -> ConstraintReport {
        let mut report = ConstraintReport::default();
        let (unit, ball): (&[Family], &[Family]) = match self.spec().name {
            ModelName::TransE => (&[Family::EntityEmbeddings], &[]),
            ModelName::TransH => (&[Family::NormalVectors], &[]),
            ModelName::TransR | ModelName::TransD => {
                (&[], &[Family::EntityEmbeddings, Family::RelationEmbeddings])
            }
            _ => (&[], &[]),
        };
        for &family in unit {
            let m = self.tensor_mut(family).expect("family in layout");
            for i in 0..m.rows() {
                let row = m.row_mut(i);
                let before = l2_norm(row);
                if !normalize(row) {
                    report.zero_rows += 1;
                } else if l2_norm(row) != before {
                    report.rescaled += 1;
                }
            }
        }
        for &family in ball {
            let m = self.tensor_mut(family).expect("family in layout");
            for i in 0..m.rows() {
                if project_unit_ball(m.row_mut(i)) {
                    report.rescaled += 1;
                }
            }
        }
        if report.zero_rows > 0 {
            log::warn!(
                "{}: {} zero row(s) cannot be normalized and were left unchanged",
                self.spec().name,
                report.zero_rows
            );
        }
        report
    }
}
